"""Command-line driver: code generation, table building, length optimization,
Monte-Carlo simulation and artifact validation.

Exit status is nonzero only for operational errors (bad arguments, missing
or invalid files); decoding failures are ordinary simulation outcomes.
"""

from __future__ import annotations

import argparse
import json
import sys

from .channel import ChannelParams, design_rate
from .code import count_four_cycles, from_alist, generate_regular, to_alist
from .density import build_iteration_tables, build_state_tables, run_de
from .harness import CampaignConfig, run_campaign
from .messages import DEFAULT_L_MAX, W2LTable
from .schedule import LengthSchedule, optimize, tables_for_schedule


def _cmd_make_code(args):
    code = generate_regular(args.n, args.dv, args.dc, args.seed, max_retries=args.max_retries)
    with open(args.out, "w") as f:
        f.write(to_alist(code))
    print(
        f"wrote {args.out}: n={code.n} m={code.m} ({code.dv},{code.dc})-regular, "
        f"{code.num_edges} edges, {count_four_cycles(code)} 4-cycle pairs"
    )


def _cmd_build_tables(args):
    params = ChannelParams(args.snr_db, design_rate(args.dv, args.dc))
    trace = run_de(params, args.dv, args.dc, args.q, args.max_iterations, args.l_max)
    iter_table = build_iteration_tables(trace, args.l_max)
    state_table = build_state_tables(trace, args.bins, args.l_max)
    iter_table.save(args.out_prefix + ".iter.json")
    state_table.save(args.out_prefix + ".state.json")
    if args.with_trace:
        trace.save(args.out_prefix + ".trace.json")
    status = "converged" if trace.converged else "did not converge"
    print(
        f"DE at {args.snr_db} dB, Q={args.q}: {status} after {len(trace.states)} iterations "
        f"(final I_S={trace.states[-1].i_s:.6f}); wrote {args.out_prefix}.iter.json "
        f"({iter_table.num_rows} rows) and {args.out_prefix}.state.json ({args.bins} rows)"
    )


def _cmd_optimize(args):
    params = ChannelParams(args.snr_db, design_rate(args.dv, args.dc))
    schedule = optimize(params, args.dv, args.dc, args.q_max, args.bins, args.max_depth, args.l_max)
    table = tables_for_schedule(schedule, params, args.dv, args.dc, args.l_max)
    schedule.save(args.out_prefix + ".schedule.json")
    table.save(args.out_prefix + ".tables.json")
    status = "" if schedule.converged else " (search did not converge; best-effort path)"
    print(
        f"optimal lengths at {args.snr_db} dB: {schedule.q_star} "
        f"(total {schedule.total_cost} sub-iterations){status}; "
        f"wrote {args.out_prefix}.schedule.json and {args.out_prefix}.tables.json"
    )


def _cmd_simulate(args):
    cfg = {}
    if args.config:
        with open(args.config) as f:
            cfg = json.load(f)
    overrides = {
        "snr_db_grid": args.snr_grid,
        "mode": args.mode,
        "q": args.q,
        "max_frames": args.max_frames,
        "min_frame_errors": args.min_frame_errors,
        "master_seed": args.seed,
        "workers": args.workers,
        "tables_path": args.tables,
        "schedule_path": args.schedule,
        "code_alist": args.code,
        "out_prefix": args.out_prefix,
    }
    for key, value in overrides.items():
        if value is not None:
            cfg[key] = value
    config = CampaignConfig.from_json_dict(cfg)
    result = run_campaign(config)
    for p in result.points:
        print(
            f"snr={p.snr_db:+.2f} dB  frames={p.frames}  ber={p.ber:.3e}  fer={p.fer:.3e}  "
            f"sub-iterations={p.mean_sub_iterations:.1f}"
        )
    if config.out_prefix:
        print(f"wrote {config.out_prefix}.csv and {config.out_prefix}.json")


def _cmd_validate_tables(args):
    failures = 0
    for path in args.tables:
        try:
            table = W2LTable.load(path)
            table.validate()
            print(f"{path}: ok ({table.row_semantics}, {table.num_rows} rows)")
        except (OSError, ValueError, KeyError) as e:
            failures += 1
            print(f"{path}: INVALID ({e})")
    if args.schedule:
        try:
            schedule = LengthSchedule.load(args.schedule)
            print(f"{args.schedule}: ok (total cost {schedule.total_cost})")
        except (OSError, ValueError, KeyError) as e:
            failures += 1
            print(f"{args.schedule}: INVALID ({e})")
    if failures:
        raise SystemExit(1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bvmp", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("make-code", help="generate a regular LDPC code, write alist")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--dv", type=int, required=True)
    p.add_argument("--dc", type=int, required=True)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--max-retries", type=int, default=50)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_make_code)

    p = sub.add_parser("build-tables", help="run density evolution, write W2L tables")
    p.add_argument("--dv", type=int, default=3)
    p.add_argument("--dc", type=int, default=6)
    p.add_argument("--q", type=int, default=10)
    p.add_argument("--snr-db", type=float, required=True)
    p.add_argument("--max-iterations", type=int, default=100)
    p.add_argument("--bins", type=int, default=20)
    p.add_argument("--l-max", type=float, default=DEFAULT_L_MAX)
    p.add_argument("--with-trace", action="store_true")
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(func=_cmd_build_tables)

    p = sub.add_parser("optimize", help="search message-length schedule, write schedule")
    p.add_argument("--dv", type=int, default=3)
    p.add_argument("--dc", type=int, default=6)
    p.add_argument("--q-max", type=int, default=10)
    p.add_argument("--bins", type=int, default=20)
    p.add_argument("--snr-db", type=float, required=True)
    p.add_argument("--max-depth", type=int, default=100)
    p.add_argument("--l-max", type=float, default=DEFAULT_L_MAX)
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(func=_cmd_optimize)

    p = sub.add_parser("simulate", help="run a Monte-Carlo campaign")
    p.add_argument("--config", help="JSON campaign config; flags override")
    p.add_argument("--snr-grid", type=float, nargs="+", dest="snr_grid")
    p.add_argument("--mode")
    p.add_argument("--q", type=int)
    p.add_argument("--code", help="alist file")
    p.add_argument("--tables")
    p.add_argument("--schedule")
    p.add_argument("--max-frames", type=int)
    p.add_argument("--min-frame-errors", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--out-prefix")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("validate-tables", help="re-check table/schedule invariants")
    p.add_argument("tables", nargs="+")
    p.add_argument("--schedule")
    p.set_defaults(func=_cmd_validate_tables)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (OSError, ValueError, RuntimeError) as e:
        print(f"error: {e}", file=sys.stderr)
        raise SystemExit(1)
    return 0
