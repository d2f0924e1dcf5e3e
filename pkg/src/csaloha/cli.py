"""Command-line front end.

Commands:
  bound       load bound G* for a repetition degree
  thresholds  comparison table: iterative thresholds (block, coupled), MAP
              bound, load bound, efficiency, for d = 2..d_max
  sweep       rate sweep (R = 1/d) of the block/coupled thresholds and G*
  simulate    Monte Carlo packet-loss run (block or coupled), JSON report

Exit codes: 0 success, 2 parameter error, 3 numerical failure.
The CSA_THREADS environment variable caps the worker count used to fan out
independent rows / trial batches (default 1).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

from .core import SchemeParams
from .de_block import (
    BlockDeConfig,
    ThresholdBracketError,
    block_threshold,
    efficiency,
    solve_load_bound,
)
from .de_coupled import coupled_threshold
from .map_bound import AreaSolutionError, map_load_bound
from .sim import run_trials

_THRESH_COLS = ["d", "g_it_block", "g_it_coupled", "g_map_bound", "g_star", "efficiency"]
_SWEEP_COLS = ["rate", "g_it_block", "g_it_coupled", "g_star"]


def _workers() -> int:
    raw = os.environ.get("CSA_THREADS", "")
    try:
        return max(1, int(raw)) if raw else 1
    except ValueError:
        raise ValueError(f"CSA_THREADS must be an integer, got {raw!r}")


def _threshold_row(task):
    d, l, alpha, block_tol, coupled_tol, max_iters = task
    cfg = BlockDeConfig(max_iters=max_iters) if max_iters else BlockDeConfig()
    g_block = block_threshold(d, cfg, block_tol).threshold
    g_coupled = coupled_threshold(d, l, cfg, coupled_tol).threshold
    g_map = map_load_bound(SchemeParams(d, alpha))
    g_star = solve_load_bound(1.0 / d)
    return [d, g_block, g_coupled, g_map, g_star, efficiency(g_coupled, g_star)]


def _sweep_row(task):
    d, l, block_tol, coupled_tol, max_iters = task
    cfg = BlockDeConfig(max_iters=max_iters) if max_iters else BlockDeConfig()
    g_block = block_threshold(d, cfg, block_tol).threshold
    g_coupled = coupled_threshold(d, l, cfg, coupled_tol).threshold
    return [1.0 / d, g_block, g_coupled, solve_load_bound(1.0 / d)]


def _map_rows(fn, tasks, workers):
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, tasks))
    return [fn(t) for t in tasks]


def _emit_table(cols, rows, args) -> str:
    if not rows:
        return ""
    if args.format == "json":
        payload = [dict(zip(cols, row)) for row in rows]
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(cols)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _fmt(v):
    return f"{v:.10g}" if isinstance(v, float) else v


def _write(text: str, out: str | None):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_bound(args) -> int:
    g_star = solve_load_bound(1.0 / args.d)
    if args.format == "json":
        _write(json.dumps({"d": args.d, "g_star": g_star}, sort_keys=True) + "\n", args.out)
    elif args.format == "csv":
        _write(f"d,g_star\n{args.d},{g_star:.6g}\n", args.out)
    else:
        _write(f"{g_star:.6g}\n", args.out)
    return 0


def _cmd_thresholds(args) -> int:
    if not 2 <= args.d_max <= 8:
        raise ValueError(f"d-max must lie in 2..8, got {args.d_max}")
    block_tol = args.tol if args.tol else 1e-5
    coupled_tol = args.tol if args.tol else 1e-4
    tasks = [(d, args.l, args.alpha, block_tol, coupled_tol, args.max_iters) for d in range(2, args.d_max + 1)]
    rows = _map_rows(_threshold_row, tasks, _workers())
    _write(_emit_table(_THRESH_COLS, rows, args), args.out)
    return 0


def _cmd_sweep(args) -> int:
    ds = [int(tok) for tok in args.d_list.split(",") if tok.strip()]
    if any(d < 2 for d in ds):
        raise ValueError(f"sweep needs degrees >= 2, got {ds}")
    block_tol = args.tol if args.tol else 1e-5
    coupled_tol = args.tol if args.tol else 1e-4
    tasks = [(d, args.l, block_tol, coupled_tol, args.max_iters) for d in ds]
    rows = _map_rows(_sweep_row, tasks, _workers())
    _write(_emit_table(_SWEEP_COLS, rows, args), args.out)
    return 0


def _cmd_simulate(args) -> int:
    t0 = time.perf_counter()
    report = run_trials(
        scenario=args.scenario,
        m=args.slots,
        d=args.d,
        g=args.g,
        trials=args.trials,
        seed=args.seed,
        l=args.l,
        alpha=args.alpha,
        decoder=args.decoder,
        workers=_workers(),
    )
    payload = report.to_dict()
    payload["wall_time_s"] = time.perf_counter() - t0
    if args.format == "csv":
        flat = dict(payload)
        if "per_position_plr" in flat:
            flat["per_position_plr"] = " ".join(f"{x:.10g}" for x in flat["per_position_plr"])
        cols = sorted(flat)
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(cols)
        writer.writerow([_fmt(flat[c]) for c in cols])
        _write(buf.getvalue(), args.out)
    else:
        _write(json.dumps(payload, sort_keys=True, indent=2) + "\n", args.out)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="csaloha", description=__doc__,
                                  formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = top.add_subparsers(dest="command", required=True)

    def common(p, formats=("json", "csv")):
        p.add_argument("--format", choices=list(formats), default=None)
        p.add_argument("--out", default=None, help="write output to this path instead of stdout")

    p = sub.add_parser("bound", help="load bound G* for rate R = 1/d")
    p.add_argument("--d", type=int, required=True)
    common(p, formats=("text", "json", "csv"))
    p.set_defaults(fn=_cmd_bound, format_default="text")

    p = sub.add_parser("thresholds", help="threshold comparison table for d = 2..d_max")
    p.add_argument("--d-max", type=int, default=6)
    p.add_argument("--l", type=int, default=200)
    p.add_argument("--alpha", type=float, default=100.0)
    p.add_argument("--tol", type=float, default=None, help="bisection tolerance override")
    p.add_argument("--max-iters", type=int, default=None)
    common(p)
    p.set_defaults(fn=_cmd_thresholds, format_default="csv")

    p = sub.add_parser("sweep", help="rate sweep of thresholds vs the load bound")
    p.add_argument("--d-list", default="", help="comma-separated degrees, e.g. 2,3,4")
    p.add_argument("--l", type=int, default=200)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--max-iters", type=int, default=None)
    common(p)
    p.set_defaults(fn=_cmd_sweep, format_default="csv")

    p = sub.add_parser("simulate", help="Monte Carlo packet-loss run")
    p.add_argument("scenario", choices=["block", "coupled"])
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--g", type=float, required=True)
    p.add_argument("--slots", type=int, required=True, help="slots per frame")
    p.add_argument("--l", type=int, default=None, help="chain length (coupled only)")
    p.add_argument("--alpha", type=float, default=None,
                   help="finite population: binomial arrivals instead of Poisson")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--decoder", choices=["peeling", "gje", "both"], default="peeling")
    common(p)
    p.set_defaults(fn=_cmd_simulate, format_default="json")
    return top


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.format is None:
        args.format = args.format_default
    try:
        return args.fn(args)
    except ValueError as exc:
        print(f"csaloha: parameter error: {exc}", file=sys.stderr)
        return 2
    except (ThresholdBracketError, AreaSolutionError) as exc:
        print(f"csaloha: numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
