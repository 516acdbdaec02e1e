"""Command-line front end: ``hypergrid <command> [subcommand] --t T --n N ...``.

Exit codes: 0 success, 1 an asserted invariant failed (listed in the
report), 2 usage error or a size guard tripped.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import analytics, chains, containers, counting, flows, grid, saturation
from .grid import GridShape, GuardError
from .report import dumps_csv, dumps_json, dumps_jsonl

ENV_MAX_POINTS = "HYPERGRID_MAX_POINTS"


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    t: int
    n: int
    seed: int
    fmt: str
    output: Path | None
    figures: Path | None
    max_points: int
    extra: dict = field(default_factory=dict)

    @property
    def shape(self) -> GridShape:
        return GridShape(self.t, self.n)

    def rng_seed(self, *key: int) -> np.random.SeedSequence:
        """Independent stream for a named part of the run."""
        return np.random.SeedSequence(self.seed, spawn_key=key)


@dataclass
class Result:
    payload: Any
    rows: list[dict] | None = None
    columns: list[str] | None = None
    records: list | None = None
    failures: list[str] = field(default_factory=list)


# -- parsing helpers ----------------------------------------------------------

def parse_point(text: str, n: int) -> tuple[int, ...]:
    try:
        pt = tuple(int(v) for v in text.split(","))
    except ValueError:
        raise UsageError(f"bad point {text!r}; expected comma-separated integers")
    if len(pt) != n:
        raise UsageError(f"point {text!r} has {len(pt)} coordinates, expected {n}")
    return pt


def parse_edge(text: str, n: int) -> tuple[tuple[int, ...], int]:
    if ":" not in text:
        raise UsageError(f"bad edge {text!r}; expected x1,...,xn:m")
    pt, _, m = text.rpartition(":")
    try:
        coord = int(m)
    except ValueError:
        raise UsageError(f"bad edge coordinate {m!r}")
    return parse_point(pt, n), coord


def _fig(cfg: RunConfig, name: str) -> Path | None:
    if cfg.figures is None:
        return None
    return cfg.figures / f"{name}_t{cfg.t}_n{cfg.n}.png"


# -- commands -------------------------------------------------------------------

def cmd_levels(cfg: RunConfig, args) -> Result:
    prof = cfg.shape.profile
    if (p := _fig(cfg, "levels")) is not None:
        from .plotting import profile_figure
        profile_figure(prof, cfg.t, cfg.n, p)
    rows = [{"level": i, "size": v} for i, v in enumerate(prof)]
    return Result(list(prof), rows, ["level", "size"])


def cmd_width(cfg: RunConfig, args) -> Result:
    s = cfg.shape
    payload = {"t": s.t, "n": s.n, "m": s.m, "alpha": grid.width(s),
               "log_concave": grid.is_log_concave(s.profile)}
    return Result(payload, [payload], ["t", "n", "m", "alpha", "log_concave"])


def cmd_flow_verify(cfg: RunConfig, args) -> Result:
    s = cfg.shape
    src = args.flow
    if src == "averaged":
        rep = flows.verify_conservation(s, flows.AveragedFlow(s), max_edges=cfg.max_points)
        table = None
    else:
        rep = flows.verify_conservation(s, max_edges=cfg.max_points)
        table = flows.flow_table(s, cfg.max_points) if s.num_edges <= 400 else None
    payload = rep.to_dict()
    payload["flow"] = src
    rows = []
    if table is not None:
        payload["weights"] = [{"x": list(x), "coord": c, "weight": w}
                              for (x, c), w in sorted(table.items())]
        rows = payload["weights"]
        if s.n == 2 and (p := _fig(cfg, "flow")) is not None:
            from .plotting import flow_figure
            flow_figure(s.t, table, p)
    failures = [] if rep.ok else [f"{len(rep.violations)} conservation violations"]
    return Result(payload, rows or [{"edges": rep.edges, "ok": rep.ok}],
                  ["x", "coord", "weight"] if rows else ["edges", "ok"], failures=failures)


def cmd_flow_weight(cfg: RunConfig, args) -> Result:
    if not args.edge:
        raise UsageError("flow weight needs --edge x1,...,xn:m")
    x, c = parse_edge(args.edge, cfg.n)
    w = flows.edge_weight(cfg.shape, x, c)
    payload = {"x": list(x), "coord": c, "weight": w}
    return Result(payload, [payload], ["x", "coord", "weight"])


def cmd_flow_avg(cfg: RunConfig, args) -> Result:
    s = cfg.shape
    mode = "monte_carlo" if args.samples else "exact"
    samples = args.samples or 0
    if args.edge:
        x, c = parse_edge(args.edge, cfg.n)
        w = flows.averaged_edge_weight(s, x, c, mode=mode, samples=samples,
                                       seed=cfg.rng_seed(0))
        payload = {"x": list(x), "coord": c, "mode": mode}
    else:
        mw = flows.max_good_weight(s, mode=mode, samples=samples, seed=cfg.seed,
                                   max_points=cfg.max_points)
        w = mw.value
        payload = {"x": list(mw.edge[0]), "coord": mw.edge[1], "mode": mode, "max_good": True}
    if mode == "exact":
        payload["weight"] = w
    else:
        payload.update(weight=w.mean, stderr=w.stderr, upper=w.upper, samples=w.samples)
    return Result(payload, [payload], sorted(payload))


def _flow_source(shape, name):
    return flows.AveragedFlow(shape) if name == "averaged" else None


MARGINAL_GATE = 1000


def cmd_chains_sample(cfg: RunConfig, args) -> Result:
    s = cfg.shape
    samples = args.samples or 1
    flow = _flow_source(s, args.flow)
    if samples <= args.emit_limit:
        sampler = chains.ChainSampler(s, flow, cfg.rng_seed(0))
        drawn = [sampler.sample() for _ in range(samples)]
    else:
        drawn = []
    marg = chains.sampler_marginals(s, samples, cfg.rng_seed(0), flow)
    payload = {"t": s.t, "n": s.n, "samples": samples, "marginals": marg.to_dict(),
               "chains": [[list(x) for x in c] for c in drawn]}
    rows = [{"sample": i, "chain": [list(x) for x in c]} for i, c in enumerate(drawn)]
    # the z-score test relies on a normal approximation, so small runs only report it
    payload["marginals_gated"] = samples >= MARGINAL_GATE
    failures = []
    if samples >= MARGINAL_GATE and not marg.ok:
        failures.append(f"marginal z-score {marg.max_abs_z:.3f} exceeds 3")
    return Result(payload, rows, ["sample", "chain"], failures=failures)


def cmd_chains_pair(cfg: RunConfig, args) -> Result:
    s = cfg.shape
    flow = _flow_source(s, args.flow)
    if args.x and args.y:
        x, y = parse_point(args.x, cfg.n), parse_point(args.y, cfg.n)
        if not grid.leq(x, y):
            raise UsageError("need x <= y coordinatewise")
        p = chains.pair_probability(s, x, y, flow)
        payload = {"x": list(x), "y": list(y), "probability": p,
                   "interval_mass": chains.interval_mass(s, x, y, flow)}
        return Result(payload, [payload], ["x", "y", "probability", "interval_mass"])
    k = args.k or 1
    rep = chains.pair_bound_check(s, k, max_points=cfg.max_points)
    failures = [] if rep.ok else [f"{len(rep.violations)} pair-bound violations"]
    d = rep.to_dict()
    return Result(d, [{k_: d[k_] for k_ in ("t", "n", "k", "W", "pairs_checked", "max_ratio", "ok")}],
                  ["t", "n", "k", "W", "pairs_checked", "max_ratio", "ok"], failures=failures)


def cmd_saturate(cfg: RunConfig, args) -> Result:
    s = cfg.shape
    out: dict[str, Any] = {"t": s.t, "n": s.n}
    failures: list[str] = []
    if s.size <= cfg.max_points:
        part = saturation.uniform_chain_partition(s, cfg.max_points)
        out["chain_partition"] = {"chains": len(part.chains), "width": grid.width(s),
                                  "min_length": min(part.lengths),
                                  "bound": part.min_length_bound,
                                  "meets_bound": part.meets_bound, "moves": part.moves}
        if not part.is_partition() or not part.chains_valid():
            failures.append("chain partition invalid")
    if s.n >= 2:
        rp = saturation.rectangle_partition(s, args.half_split, cfg.max_points)
        errs = rp.verify() if s.size <= cfg.max_points else []
        out["rectangle_partition"] = {"n1": rp.n1, "count": rp.count, "u": rp.u,
                                      "side_lengths": sorted(set(rp.side_lengths)),
                                      "errors": errs}
        failures += errs
    samples = args.samples if args.samples is not None else 1000
    rng = np.random.Generator(np.random.Philox(cfg.rng_seed(1)))
    if s.n == 2:
        reps = []
        lo = min(16 * s.t, s.size)
        for _ in range(samples):
            size = int(rng.integers(max(lo, s.t + 1), s.size + 1))
            idx = rng.choice(s.size, size=size, replace=False)
            pts = list(s.points())
            reps.append(saturation.check_rectangle_saturation(s.t, [pts[i] for i in idx]))
        bad = sum(not r.ok for r in reps)
        out["rectangle_saturation"] = {"samples": samples, "violations": bad,
                                       "pigeonhole_runs": sum(r.branch == "pigeonhole" for r in reps)}
        if bad:
            failures.append(f"{bad} rectangle-saturation violations")
    if s.n <= 8 and s.size <= cfg.max_points:
        W = flows.max_good_weight(s).value
        bad, checked = 0, 0
        for _ in range(samples):
            A, w = saturation.random_heavy_subset(s, rng)
            k = int(rng.integers(1, math.ceil(w)))
            r = saturation.check_strong_saturation(s, A, k, w - k, W)
            checked += 1
            bad += not r.ok
        out["strong_saturation"] = {"W": W, "samples": checked, "violations": bad}
        if bad:
            failures.append(f"{bad} strong-saturation violations")
    out["ok"] = not failures
    return Result(out, [{"t": s.t, "n": s.n, "ok": not failures}], ["t", "n", "ok"], failures=failures)


def _container_input(cfg: RunConfig, args, graph) -> list:
    s = cfg.shape
    if args.input == "empty":
        return []
    if args.input == "middle":
        return s.level(s.m)
    rng = np.random.Generator(np.random.Philox(cfg.rng_seed(2)))
    return containers.random_antichain(graph, rng)


def cmd_containers_run(cfg: RunConfig, args) -> Result:
    s = cfg.shape
    graph = containers.GoodGraph(s, args.order, cfg.max_points)
    I = _container_input(cfg, args, graph)
    res = containers.run_container(s, I, args.stop_factor, args.order, graph)
    phases = containers.phase_trace(res, s)
    payload = res.to_dict()
    payload.update(input=[list(x) for x in sorted(I)], phases=phases.to_dict(),
                   increments=res.increments)
    ok = (res.fingerprint <= frozenset(map(tuple, I)) <= res.fingerprint | res.body
          and len(res.body) <= res.threshold)
    if (p := _fig(cfg, "containers")) is not None:
        from .plotting import residual_figure
        steps = [0] + [st.index for st in res.trace]
        sizes = [res.initial_size] + [st.remaining for st in res.trace]
        incs = [False] + [st.increment for st in res.trace]
        residual_figure(steps, sizes, incs,
                        {k: float(Fraction(v)) for k, v in phases.thresholds.items()}, p)
    rows = [st.to_dict() for st in res.trace]
    return Result(payload, rows, ["step", "vertex", "increment", "remaining"],
                  records=rows, failures=[] if ok else ["container properties violated"])


def cmd_containers_verify(cfg: RunConfig, args) -> Result:
    s = cfg.shape
    rep = containers.verify_container_properties(
        s, args.samples if args.samples is not None else 1000, cfg.rng_seed(3), args.order,
        args.stop_factor, extra_inputs=[s.level(s.m)] if s.m in grid.good_levels(s) else [])
    d = rep.to_dict()
    failures = [] if rep.ok else ["container properties violated"]
    cols = ["t", "n", "samples", "containment_failures", "size_failures", "antichain_failures",
            "collision_failures", "max_fingerprint", "max_body", "threshold", "ok"]
    return Result(d, [d], cols, failures=failures)


def cmd_count_exact(cfg: RunConfig, args) -> Result:
    s = cfg.shape
    A = counting.count_antichains_exact(s, args.engine, guard=cfg.extra["downset_guard"])
    payload = {"t": s.t, "n": s.n, "A": A, "engine": args.engine}
    return Result(payload, [payload], ["t", "n", "A", "engine"])


def cmd_count_upto(cfg: RunConfig, args) -> Result:
    s = cfg.shape
    size = args.max_size if args.max_size is not None else grid.width(s)
    c = counting.count_antichains_upto(s, size, guard=cfg.extra["downset_guard"])
    payload = {"t": s.t, "n": s.n, "max_size": size, "count": c}
    if args.k:
        payload["sweep"] = [r.to_dict() for r in counting.small_antichain_bound_sweep(
            s, range(1, args.k + 1), guard=cfg.extra["downset_guard"])]
    return Result(payload, [payload], ["t", "n", "max_size", "count"])


def cmd_count_bounds(cfg: RunConfig, args) -> Result:
    s = cfg.shape
    row = counting.bound_report(s, Fraction(args.c), guard=cfg.extra["downset_guard"])
    failures = []
    if row.log2A is not None and row.log2A < row.alpha:
        failures.append("log2 A below the width")
    d = row.to_dict()
    csv_row = dict(zip(counting.BoundRow.CSV_COLUMNS, row.csv_row()))
    return Result(d, [csv_row], list(counting.BoundRow.CSV_COLUMNS), failures=failures)


def _k(cfg: RunConfig, args) -> int:
    return args.k if args.k is not None else cfg.shape.top_rank // 2


def cmd_analytics_tilt(cfg: RunConfig, args) -> Result:
    model = analytics.solve_tilt(cfg.shape, _k(cfg, args))
    d = model.to_dict()
    if model.q != 0:
        d["scaled_deviation"] = analytics.tilt_deviation(cfg.shape, model.k)
    return Result(d, [d], sorted(d))


def cmd_analytics_density(cfg: RunConfig, args) -> Result:
    model = analytics.solve_tilt(cfg.shape, _k(cfg, args))
    top = cfg.shape.top_rank
    rows = []
    worst = 0.0
    total = 0.0
    for s in range(top + 1):
        ev = analytics.density(model, s - model.k)
        ref = analytics.exact_point_mass(model, s)
        rel = abs(ev.value - float(ref)) / float(ref) if ref != 0 else abs(ev.value)
        worst = max(worst, rel)
        total += ev.value
        rows.append({"s": s, "x": s - model.k, "density": ev.value, "exact": float(ref),
                     "rel_error": rel, "error_estimate": ev.abs_error_estimate})
    payload = {"model": model.to_dict(), "points": rows, "max_rel_error": worst,
               "total_mass": total}
    if args.x is not None:
        ev = analytics.density(model, args.x, args.deriv)
        payload["at_x"] = ev.to_dict()
    failures = []
    if worst > 1e-9:
        failures.append(f"relative error {worst:.3e} above 1e-9")
    if abs(total - 1) > 1e-9:
        failures.append(f"total mass off by {abs(total - 1):.3e}")
    if (p := _fig(cfg, "density")) is not None:
        from .plotting import density_figure
        sd = math.sqrt(model.variance * model.n) or 1.0
        lo, hi = max(-model.k, -6 * sd), min(top - model.k, 6 * sd)
        xs = np.linspace(lo, hi, 400)
        density_figure(xs, analytics.density_batch(model, xs), [r["x"] for r in rows],
                       [r["exact"] for r in rows], f"t={cfg.t}, n={cfg.n}, k={model.k}", p)
    return Result(payload, rows, ["s", "x", "density", "exact", "rel_error", "error_estimate"],
                  failures=failures)


def cmd_analytics_lambda(cfg: RunConfig, args) -> Result:
    if args.sweep:
        rows = []
        for n in (16, 32, 64, 128, 256):
            s = GridShape(cfg.t, n)
            r = analytics.lambda_ratio(s, s.top_rank // 2, args.profile)
            rows.append({"t": cfg.t, "n": n, "k": r.k, "ratio": r.ratio,
                         "ratio_times_n": float(r.ratio) * n})
        vals = [r["ratio_times_n"] for r in rows]
        band = max(vals) / min(vals)
        if (p := _fig(cfg, "lambda")) is not None:
            from .plotting import line_figure
            line_figure([r["n"] for r in rows], {f"t={cfg.t}": vals}, "n",
                        "n * Lambda / N_min^2", "window ratio trend", p, logx=True)
        failures = [] if band <= 4 else [f"band {band:.3f} exceeds 4"]
        return Result({"rows": rows, "band": band}, rows, ["t", "n", "k", "ratio", "ratio_times_n"],
                      failures=failures)
    r = analytics.lambda_ratio(cfg.shape, _k(cfg, args), args.profile)
    d = r.to_dict()
    return Result(d, [d], ["t", "n", "k", "profile", "Lambda", "N_min", "ratio"])


def cmd_analytics_claims(cfg: RunConfig, args) -> Result:
    model = analytics.solve_tilt(cfg.shape, _k(cfg, args))
    step = args.grid_step if args.grid_step is not None else 1e-4 * math.pi
    rep = analytics.appendix_inequality_checks(model, grid_step=step)
    d = rep.to_dict()
    rows = [c.to_dict() for c in rep.claims]
    failures = [] if (rep.ok or not rep.asserted) else [c.name for c in rep.claims if not c.passed]
    return Result(d, rows, ["name", "passed", "worst_margin", "worst_at", "failures"],
                  failures=failures)


def cmd_analytics_derivs(cfg: RunConfig, args) -> Result:
    ns = [cfg.n] if not args.sweep else [cfg.n * 2 ** i for i in range(4)]
    rows = [analytics.derivative_norms(GridShape(cfg.t, n)).to_dict() for n in ns]
    if (p := _fig(cfg, "derivs")) is not None and len(rows) > 1:
        from .plotting import line_figure
        line_figure(ns, {"|f'| t^2 n": [r["d1_scaled"] for r in rows],
                         "|f''| t^3 n^1.5": [r["d2_scaled"] for r in rows]},
                    "n", "scaled norm", f"derivative norms, t={cfg.t}", p, logx=True)
    return Result({"rows": rows}, rows, ["t", "n", "k", "d1", "d1_scaled", "d2", "d2_scaled"])


COMMANDS: dict[tuple[str, ...], Callable[[RunConfig, Any], Result]] = {
    ("levels",): cmd_levels,
    ("width",): cmd_width,
    ("flow", "verify"): cmd_flow_verify,
    ("flow", "weight"): cmd_flow_weight,
    ("flow", "avg"): cmd_flow_avg,
    ("chains", "sample"): cmd_chains_sample,
    ("chains", "pair"): cmd_chains_pair,
    ("saturate",): cmd_saturate,
    ("containers", "run"): cmd_containers_run,
    ("containers", "verify"): cmd_containers_verify,
    ("count", "exact"): cmd_count_exact,
    ("count", "upto"): cmd_count_upto,
    ("count", "bounds"): cmd_count_bounds,
    ("analytics", "tilt"): cmd_analytics_tilt,
    ("analytics", "density"): cmd_analytics_density,
    ("analytics", "lambda"): cmd_analytics_lambda,
    ("analytics", "claims"): cmd_analytics_claims,
    ("analytics", "derivs"): cmd_analytics_derivs,
}


def _common(p: argparse.ArgumentParser):
    p.add_argument("--t", type=int, required=True, help="side length of the grid")
    p.add_argument("--n", type=int, required=True, help="dimension")
    p.add_argument("--seed", type=int, default=0, help="64-bit seed for all randomness")
    p.add_argument("--format", dest="fmt", choices=["json", "csv", "jsonl"], default="json")
    p.add_argument("--output", type=Path, help="write the report here instead of stdout")
    p.add_argument("--figures", type=Path, help="directory for PNG figures")
    p.add_argument("--max-points", type=int,
                   default=int(os.environ.get(ENV_MAX_POINTS, "100000")),
                   help=f"size guard (default from ${ENV_MAX_POINTS})")
    p.add_argument("--downset-guard", type=int, default=counting.DEFAULT_DOWNSET_GUARD)
    p.add_argument("--edge", help="edge as x1,...,xn:m with m 1-based")
    p.add_argument("--x", help="point (chains pair) or real abscissa (analytics density)")
    p.add_argument("--y", help="upper point for chains pair")
    p.add_argument("--k", type=int, help="level index or chain-gap parameter")
    p.add_argument("--samples", type=int)
    p.add_argument("--emit-limit", type=int, default=10000,
                   help="largest sample count for which chains are emitted")
    p.add_argument("--flow", choices=["structured", "averaged"], default="structured")
    p.add_argument("--stop-factor", type=Fraction, default=None)
    p.add_argument("--order", choices=sorted(containers.ORDERS), default="lex")
    p.add_argument("--input", choices=["random", "empty", "middle"], default="random")
    p.add_argument("--half-split", type=int, default=None)
    p.add_argument("--engine", choices=["auto", "downset", "transfer", "closed"], default="auto")
    p.add_argument("--max-size", type=int)
    p.add_argument("--c", default="1", help="constant in the main upper bound")
    p.add_argument("--grid-step", type=float)
    p.add_argument("--deriv", type=int, choices=[0, 1, 2], default=0)
    p.add_argument("--profile", choices=["grid", "factor"], default="grid")
    p.add_argument("--sweep", action="store_true", help="run the n-doubling sweep")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hypergrid", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    groups: dict[str, list[str]] = {}
    for key in COMMANDS:
        groups.setdefault(key[0], []).append(key[1] if len(key) > 1 else "")
    for name, subs in groups.items():
        if subs == [""]:
            _common(sub.add_parser(name))
            continue
        p = sub.add_parser(name)
        inner = p.add_subparsers(dest="action", required=True)
        for s in subs:
            _common(inner.add_parser(s))
    return parser


def _render(cfg: RunConfig, res: Result) -> str:
    if cfg.fmt == "csv":
        return dumps_csv(res.rows or [], res.columns)
    if cfg.fmt == "jsonl":
        return dumps_jsonl(res.records if res.records is not None else (res.rows or []))
    payload = res.payload
    if res.failures and isinstance(payload, dict):
        payload = dict(payload, failures=res.failures)
    return dumps_json(payload)


def dispatch(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    key = (args.command,) + ((args.action,) if getattr(args, "action", None) else ())
    try:
        cfg = RunConfig(args.t, args.n, args.seed, args.fmt, args.output, args.figures,
                        args.max_points, {"downset_guard": args.downset_guard})
        if args.seed < 0 or args.seed >= 2 ** 64:
            raise UsageError("seed must be a 64-bit unsigned integer")
        if args.x is not None and key[0] == "analytics":
            args.x = float(args.x)
        cfg.shape  # validates t and n
        res = COMMANDS[key](cfg, args)
    except (UsageError, GuardError, ValueError) as e:
        print(f"hypergrid: error: {e}", file=sys.stderr)
        return 2
    text = _render(cfg, res)
    if cfg.output:
        cfg.output.parent.mkdir(parents=True, exist_ok=True)
        cfg.output.write_text(text)
    else:
        sys.stdout.write(text)
    for f in res.failures:
        print(f"hypergrid: FAILED: {f}", file=sys.stderr)
    return 1 if res.failures else 0


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
