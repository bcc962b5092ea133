"""Command-line entry point: ``phca <command> ...``.

Exit codes: 0 success, 1 validation failure, 2 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .acquisition import AcquisitionConfig
from .distflow import check_limits, solve_distflow
from .fixtures import build_multimodal_scenarios
from .network import NetworkError, load_network, validate
from .report import comparison_rows, format_table, write_history_csv
from .risk import penalized_objective
from .scenario import ScenarioError, SyntheticProfile, generate_synthetic, load_scenarios, write_scenarios
from .solvers import WARPS, SolveConfig, SolveTrace, solve

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


class _Invalid(Exception):
    pass


def _threads(args):
    if getattr(args, "threads", None):
        return args.threads
    try:
        return max(1, int(os.environ.get("PHCA_THREADS", "1")))
    except ValueError:
        return 1


def _floats(text):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _eps_bar(text):
    value = float(text)
    if not 0 < value < 1:
        raise argparse.ArgumentTypeError("eps-bar must lie in (0, 1)")
    return value


def _load_network(path):
    if not Path(path).is_file():
        raise _Invalid(f"network file not found: {path}")
    try:
        net = load_network(path)
    except (NetworkError, json.JSONDecodeError) as exc:
        raise _Invalid(f"{path}: {exc}") from exc
    problems = validate(net)
    if problems:
        raise _Invalid("\n".join(f"{path}: {p}" for p in problems))
    return net


def _load_scenarios(path, net, threads):
    if not Path(path).is_dir():
        raise _Invalid(f"scenario directory not found: {path}")
    try:
        return load_scenarios(path, net, threads=threads)
    except ScenarioError as exc:
        raise _Invalid(str(exc)) from exc


def _write_json(obj, path):
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        json.dump(obj, fh, indent=2)
    os.replace(tmp, path)


def cmd_validate(args):
    problems = []
    try:
        net = load_network(args.network)
    except (OSError, NetworkError, json.JSONDecodeError) as exc:
        print(f"{args.network}: {exc}")
        return EXIT_INVALID
    problems += [f"{args.network}: {p}" for p in validate(net)]
    if args.scenarios and not problems:
        try:
            load_scenarios(args.scenarios, net, threads=_threads(args))
        except (OSError, ScenarioError) as exc:
            problems.append(str(exc))
    for p in problems:
        print(p)
    if problems:
        return EXIT_INVALID
    print("OK")
    return EXIT_OK


def _read_injections(path, n_v):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header = [h.strip() for h in rows[0]]
    want = [f"p_{j}" for j in range(1, n_v + 1)] + [f"q_{j}" for j in range(1, n_v + 1)]
    missing = [c for c in want if c not in header]
    if missing:
        raise _Invalid(f"{path}: missing column(s) {', '.join(missing)}")
    idx = [header.index(c) for c in want]
    snaps = []
    for r, row in enumerate(rows[1:], start=2):
        try:
            vals = np.array([float(row[i]) for i in idx])
        except (ValueError, IndexError):
            raise _Invalid(f"{path}, row {r}: non-numeric injection") from None
        snaps.append((vals[:n_v], vals[n_v:]))
    if not snaps:
        raise _Invalid(f"{path}: no data rows")
    return snaps


def cmd_powerflow(args):
    net = _load_network(args.network)
    out = []
    for p, q in _read_injections(args.injections, net.n_nodes):
        sol = solve_distflow(net, p, q)
        rep = check_limits(net, sol)
        d = sol.to_dict()
        d["feasible"] = rep.feasible
        d["voltage_violations"] = [list(v) for v in rep.voltage_violations]
        d["line_violations"] = [list(v) for v in rep.line_violations]
        out.append(d)
    print(json.dumps(out[0] if len(out) == 1 else out, indent=2))
    return EXIT_OK


def cmd_evaluate(args):
    net = _load_network(args.network)
    scen = _load_scenarios(args.scenarios, net, _threads(args))
    if len(args.psi) != net.n_candidates:
        raise _Invalid(f"--psi needs {net.n_candidates} values, got {len(args.psi)}")
    res = penalized_objective(net, scen, args.psi, args.eps_bar, workers=_threads(args))
    print(json.dumps(res.to_dict(verbose=args.verbose), indent=2))
    return EXIT_OK


def cmd_generate(args):
    if args.fixture == "multimodal":
        write_scenarios(build_multimodal_scenarios(), args.out)
        print(f"wrote multimodal fixture scenarios to {args.out}")
        return EXIT_OK
    net = _load_network(args.network)
    kw = {}
    if args.noise_scale is not None:
        kw = {"amplitude_noise": args.noise_scale, "site_noise": args.noise_scale, "load_noise": args.noise_scale}
    if args.base_load is not None:
        kw["base_load"] = args.base_load
    try:
        scen = generate_synthetic(net, args.days, args.T, args.seed, SyntheticProfile(**kw))
    except ScenarioError as exc:
        raise _Invalid(str(exc)) from exc
    write_scenarios(scen, args.out)
    print(f"wrote {scen.N} days x {scen.T} snapshots to {args.out}")
    return EXIT_OK


def cmd_solve(args):
    net = _load_network(args.network)
    scen = _load_scenarios(args.scenarios, net, _threads(args))
    config = SolveConfig(
        budget=args.budget,
        n_initial=args.n_initial,
        eps_bar=args.eps_bar,
        seed=args.seed,
        method=args.method,
        acquisition=AcquisitionConfig(kind=args.acquisition),
        points_per_dim=args.points_per_dim,
        x0=tuple(args.x0) if args.x0 else None,
        workers=_threads(args),
        surrogate=args.surrogate,
        output_warp=args.warp,
    )
    if args.method == "grid":
        config = replace(config, budget=args.points_per_dim**net.n_candidates)
    try:
        config.check(net.n_candidates)
    except ValueError as exc:
        raise _Invalid(str(exc)) from exc
    kwargs = {"gp_dump": args.dump_gp} if args.dump_gp and args.method == "bayesopt" else {}
    trace = solve(net, scen, config, **kwargs)
    if args.out:
        trace.save(args.out, timing=args.timing)
    best = trace.best_query()
    print(
        format_table(
            ["method", "bestobj", "nfuncall", "best_psi", "1'psi", "eps_hat"],
            [[args.method, trace.best, trace.nfuncall, ",".join(f"{v:.4f}" for v in best.psi), best.raw_capacity, best.eps_hat]],
        )
    )
    return EXIT_OK


def cmd_report(args):
    traces = {}
    for path in args.traces:
        try:
            traces[Path(path).stem] = SolveTrace.load(path)
        except (OSError, ValueError, json.JSONDecodeError) as exc:
            raise _Invalid(f"{path}: {exc}") from exc
    if args.out_dir:
        os.makedirs(args.out_dir, exist_ok=True)
        for name, tr in traces.items():
            write_history_csv(tr, os.path.join(args.out_dir, f"{name}.csv"))
    names = list(traces)
    print(format_table(["trace", "method", "bestobj", "nfuncall"], [[n, traces[n].method, traces[n].best, traces[n].nfuncall] for n in names]))
    if len(names) > 1:
        ref = names[0]
        rows = comparison_rows(traces[ref], {n: traces[n] for n in names[1:]})
        print()
        print(f"improvement of {ref} over others (%)")
        print(format_table(["versus", "bestobj", "nfuncall"], [[r["versus"], r["improvement_bestobj_pct"], r["improvement_nfuncall_pct"]] for r in rows]))
        if args.summary:
            _write_json(rows, args.summary)
    return EXIT_OK


def build_parser():
    ap = argparse.ArgumentParser(prog="phca", description="Probabilistic hosting capacity analysis")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, scenarios=True):
        p.add_argument("--network", required=True)
        if scenarios:
            p.add_argument("--scenarios", required=True)
        p.add_argument("--threads", type=int, default=None, help="worker cap (default: $PHCA_THREADS or 1)")

    p = sub.add_parser("validate", help="check a network and optional scenario directory")
    p.add_argument("--network", required=True)
    p.add_argument("--scenarios")
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("powerflow", help="solve DistFlow for snapshot injections")
    p.add_argument("--network", required=True)
    p.add_argument("--injections", required=True, help="CSV with p_1..p_V,q_1..q_V columns")
    p.set_defaults(func=cmd_powerflow)

    p = sub.add_parser("evaluate", help="violation probability and penalized objective")
    common(p)
    p.add_argument("--psi", type=_floats, required=True)
    p.add_argument("--eps-bar", type=_eps_bar, default=0.05)
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("generate", help="write synthetic day scenarios")
    p.add_argument("--network")
    p.add_argument("--out", required=True)
    p.add_argument("--days", type=int, default=30)
    p.add_argument("--T", type=int, default=24)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--noise-scale", type=float, default=None)
    p.add_argument("--base-load", type=float, default=None)
    p.add_argument("--fixture", choices=["multimodal"], default=None)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("solve", help="maximize hosting capacity")
    common(p)
    p.add_argument("--method", choices=["bayesopt", "pattern", "grid"], default="bayesopt")
    p.add_argument("--eps-bar", type=_eps_bar, default=0.05)
    p.add_argument("--budget", type=int, default=40)
    p.add_argument("--n-initial", type=int, default=None)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--acquisition", choices=["ei", "pi"], default="ei")
    p.add_argument("--surrogate", choices=["risk", "objective"], default="risk",
                   help="GP target: violation probability (default) or the penalized objective")
    p.add_argument("--warp", choices=sorted(WARPS), default="signed_log",
                   help="output warp for --surrogate objective")
    p.add_argument("--points-per-dim", type=int, default=11)
    p.add_argument("--x0", type=_floats, default=None, help="pattern-search start point")
    p.add_argument("--out", default=None, help="trace JSON path")
    p.add_argument("--timing", action="store_true", help="record wall-clock ms per query in the trace")
    p.add_argument("--dump-gp", default=None, help="path prefix for per-iteration GP JSON dumps")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("report", help="compare traces and write convergence CSVs")
    p.add_argument("traces", nargs="+")
    p.add_argument("--out-dir", default=None)
    p.add_argument("--summary", default=None, help="write the improvement table as JSON")
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "generate" and args.fixture is None and not args.network:
        print("generate: --network is required unless --fixture is given", file=sys.stderr)
        return EXIT_INVALID
    try:
        return args.func(args)
    except _Invalid as exc:
        print(exc)
        return EXIT_INVALID
    except (ValueError, NetworkError, ScenarioError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
