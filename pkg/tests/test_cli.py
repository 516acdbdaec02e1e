import json

import pytest

from hypergrid import cli


def run(capsys, *argv):
    rc = cli.dispatch(list(argv))
    out, err = capsys.readouterr()
    return rc, out, err


def test_levels(capsys):
    rc, out, _ = run(capsys, "levels", "--t", "3", "--n", "2")
    assert rc == 0 and json.loads(out) == [1, 2, 3, 2, 1]


def test_flow_weight(capsys):
    rc, out, _ = run(capsys, "flow", "weight", "--t", "4", "--n", "2", "--edge", "0,0:1")
    assert rc == 0 and json.loads(out)["weight"] == "1/2"


def test_count_bounds_csv(capsys):
    rc, out, _ = run(capsys, "count", "bounds", "--t", "3", "--n", "3", "--format", "csv")
    lines = out.splitlines()
    assert rc == 0
    assert lines[0] == "t,n,alpha,A,log2A,ratio,main_rhs,lower_bound"
    assert lines[1].startswith("3,3,7,980,")


def test_count_exact_large_int_is_string(capsys):
    rc, out, _ = run(capsys, "count", "exact", "--t", "2", "--n", "5")
    assert rc == 0
    assert "7581" in out


@pytest.mark.parametrize("argv", [
    ["levels", "--t", "0", "--n", "2"],
    ["flow", "weight", "--t", "3", "--n", "2", "--edge", "2,0:1"],
    ["flow", "weight", "--t", "3", "--n", "2", "--edge", "garbage"],
    ["analytics", "tilt", "--t", "3", "--n", "4", "--k", "8"],
    ["count", "exact", "--t", "4", "--n", "4", "--engine", "downset"],
    ["nonsense"],
])
def test_usage_errors_exit_two(capsys, argv):
    rc, _, err = run(capsys, *argv)
    assert rc == 2 and err


def test_failures_exit_one(capsys, monkeypatch):
    def broken(cfg, args):
        return cli.Result({"ok": False}, [], [], failures=["forced failure"])

    monkeypatch.setitem(cli.COMMANDS, ("levels",), broken)
    rc, out, err = run(capsys, "levels", "--t", "2", "--n", "2")
    assert rc == 1
    assert json.loads(out)["failures"] == ["forced failure"]
    assert "forced failure" in err


def test_output_is_byte_identical(tmp_path):
    args = ["chains", "sample", "--t", "3", "--n", "3", "--samples", "50", "--seed", "11"]
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert cli.dispatch(args + ["--output", str(a)]) == 0
    assert cli.dispatch(args + ["--output", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_figures_written_and_deterministic(tmp_path):
    for d in ("one", "two"):
        rc = cli.dispatch(["levels", "--t", "4", "--n", "3", "--figures", str(tmp_path / d),
                           "--output", str(tmp_path / d / "out.json")])
        assert rc == 0
    png = tmp_path / "one" / "levels_t4_n3.png"
    assert png.exists() and png.stat().st_size > 0
    assert png.read_bytes() == (tmp_path / "two" / "levels_t4_n3.png").read_bytes()


def test_jsonl_records(capsys):
    rc, out, _ = run(capsys, "chains", "sample", "--t", "2", "--n", "3", "--samples", "5",
                     "--format", "jsonl")
    assert rc == 0
    recs = [json.loads(line) for line in out.splitlines()]
    assert len(recs) == 5


def test_analytics_density(capsys):
    rc, out, _ = run(capsys, "analytics", "density", "--t", "2", "--n", "10", "--k", "5",
                     "--x", "0")
    assert rc == 0 and "value" in out
