import json
from fractions import Fraction

import numpy as np

from hypergrid import report


def test_int_rule():
    assert report.to_jsonable(2 ** 53) == 2 ** 53
    assert report.to_jsonable(2 ** 53 + 1) == str(2 ** 53 + 1)
    assert report.to_jsonable(-(2 ** 60)) == str(-(2 ** 60))
    assert report.to_jsonable(np.int64(7)) == 7


def test_fractions_and_floats():
    assert report.to_jsonable(Fraction(3, 4)) == "3/4"
    assert report.to_jsonable(Fraction(4, 2)) == "2"
    assert report.to_jsonable(float("inf")) == "inf"
    assert report.to_jsonable(np.float64(0.5)) == 0.5


def test_dumps_sorted_and_sets_ordered():
    text = report.dumps_json({"b": {3, 1, 2}, "a": (Fraction(1, 3),)})
    assert text.index('"a"') < text.index('"b"')
    assert json.loads(text) == {"a": ["1/3"], "b": [1, 2, 3]}


def test_csv_and_jsonl():
    rows = [{"x": 1, "y": Fraction(1, 2)}, {"x": 2 ** 70, "y": None}]
    csv_text = report.dumps_csv(rows, ["x", "y"])
    assert csv_text.splitlines() == ["x,y", "1,1/2", f"{2 ** 70},"]
    lines = report.dumps_jsonl(rows).splitlines()
    assert json.loads(lines[1]) == {"x": str(2 ** 70), "y": None}
