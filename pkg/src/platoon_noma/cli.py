"""Command-line front end.

Subcommands:
  run           Monte Carlo sweep, records to CSV.
  report        Same sweep plus rendered figures next to the CSV.
  scfp          Super-cluster formation simulation on a random layout.
  oracle-check  Greedy allocator vs exhaustive oracle on small instances.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .allocation import GpaConfig, gpa, pa_oracle
from .channel import PowerConfig, sample_channel
from .harness import (
    BUILTIN_SCENARIOS,
    CHS_METHODS,
    PA_METHODS,
    RunSpec,
    emit_csv,
    load_scenario,
    run,
)
from .scenario import SicConfig
from .scfp import ChAgent, ScfpConfig, run_formation, write_assignment_csv, write_trace_csv
from .topology import front_chs


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(","))


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(","))


def _schemes(text: str) -> tuple[str, ...]:
    return ("oma", "dm", "um", "udm") if text == "all" else tuple(text.split(","))


def _add_run_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scenario", default="4lc-unicast",
                   help=f"builtin name ({', '.join(BUILTIN_SCENARIOS)}) or scenario file")
    p.add_argument("--scheme", type=_schemes, default=("oma", "dm", "um", "udm"),
                   metavar="S[,S...]", help="access schemes or 'all'")
    p.add_argument("--pa", choices=PA_METHODS, default="gpa")
    p.add_argument("--chs", choices=CHS_METHODS, default="exhaustive-fpa")
    p.add_argument("--zeta", type=_floats, default=(0.0, 0.01, 0.1),
                   metavar="Z[,Z...]", help="SIC residual fractions")
    p.add_argument("--snr-db", type=_floats, default=(50.0,), metavar="DB[,DB...]")
    p.add_argument("--q", type=_ints, default=(), metavar="Q[,Q...]",
                   help="grid levels; default N_LC(N_LC-1)")
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)


def _spec_from(args: argparse.Namespace, out: str | None) -> RunSpec:
    return RunSpec(scenario=args.scenario, schemes=args.scheme,
                   pa_method=args.pa, chs_method=args.chs, zeta=args.zeta,
                   snr_db=args.snr_db, q=args.q, trials=args.trials,
                   seed=args.seed, out=out)


def _cmd_run(args: argparse.Namespace) -> int:
    spec = _spec_from(args, args.out)
    records = run(spec, max_workers=args.workers)
    emit_csv(records, args.out)
    n_trials = sum(isinstance(r.trial, int) for r in records)
    print(f"wrote {n_trials} trial records (+summaries) to {args.out}")
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    from .report import render_report

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    spec = _spec_from(args, str(out_dir / "records.csv"))
    records = run(spec, max_workers=args.workers)
    csv_path = out_dir / "records.csv"
    emit_csv(records, csv_path)
    figures = render_report(records, out_dir)
    print(f"wrote {csv_path}")
    for fig in figures:
        print(f"wrote {fig}")
    return 0


def _cmd_scfp(args: argparse.Namespace) -> int:
    rng = np.random.default_rng(args.seed)
    agents = [
        ChAgent(id=i, x_m=float(rng.uniform(0.0, args.span)),
                y_m=float(rng.uniform(0.0, 12.0)))
        for i in range(args.agents)
    ]
    config = ScfpConfig(sc_size_limit=args.limit, comm_range_m=args.range,
                        seed=args.seed)
    result = run_formation(agents, config, duration_s=args.duration)
    write_trace_csv(result, args.out)
    assignment_path = str(Path(args.out).with_suffix(".assignment.csv"))
    write_assignment_csv(result, assignment_path)
    clusters = result.sc_members()
    print(f"{len(clusters)} super cluster(s) formed from {args.agents} heads")
    for head, members in sorted(clusters.items()):
        print(f"  head {head}: members {members}, rb {result.rb_of(head)}")
    print(f"wrote {args.out} and {assignment_path}")
    return 0


def _cmd_oracle_check(args: argparse.Namespace) -> int:
    topology, scenario, params = load_scenario(args.scenario)
    power = PowerConfig.from_snr_db(args.snr_db)
    sic = SicConfig(args.zeta)
    chs = front_chs(topology)
    lines = ["seed,gpa_sum_rate,oracle_sum_rate,ratio"]
    worst = 1.0
    for trial in range(args.seeds):
        channel = sample_channel(topology, params, args.seed ^ trial)
        greedy = gpa(scenario, channel, chs, power, sic, args.scheme,
                     GpaConfig(q_levels=args.q))
        oracle = pa_oracle(scenario, channel, chs, power, sic, args.scheme, args.q)
        ratio = greedy.sum_rate / oracle.sum_rate if oracle.sum_rate > 0 else 1.0
        worst = min(worst, ratio)
        lines.append(f"{args.seed ^ trial},{greedy.sum_rate:.10f},"
                     f"{oracle.sum_rate:.10f},{ratio:.6f}")
        print(f"seed {args.seed ^ trial}: gpa {greedy.sum_rate:.4f}  "
              f"oracle {oracle.sum_rate:.4f}  ratio {ratio:.4f}")
    print(f"worst gpa/oracle ratio over {args.seeds} seeds: {worst:.4f}")
    if args.out:
        Path(args.out).write_text("\n".join(lines) + "\n")
        print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="platoon-noma",
        description="Many-to-many NOMA link-level simulator for vehicular platoons")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="Monte Carlo sweep to CSV")
    _add_run_args(p_run)
    p_run.add_argument("--out", required=True, help="output CSV path")
    p_run.set_defaults(func=_cmd_run)

    p_rep = sub.add_parser("report", help="sweep plus rendered figures")
    _add_run_args(p_rep)
    p_rep.add_argument("--out-dir", required=True, help="output directory")
    p_rep.set_defaults(func=_cmd_report)

    p_scfp = sub.add_parser("scfp", help="super-cluster formation simulation")
    p_scfp.add_argument("--agents", type=int, default=8)
    p_scfp.add_argument("--range", type=float, default=300.0,
                        help="communication range (m)")
    p_scfp.add_argument("--limit", type=int, default=4, help="SC size limit")
    p_scfp.add_argument("--duration", type=float, default=10.0,
                        help="simulated seconds")
    p_scfp.add_argument("--span", type=float, default=600.0,
                        help="road span for random head placement (m)")
    p_scfp.add_argument("--seed", type=int, default=0)
    p_scfp.add_argument("--out", required=True, help="trace CSV path")
    p_scfp.set_defaults(func=_cmd_scfp)

    p_oc = sub.add_parser("oracle-check",
                          help="greedy allocator vs exhaustive oracle")
    p_oc.add_argument("--scenario", default="3lc-unicast")
    p_oc.add_argument("--scheme", choices=("oma", "dm", "um", "udm"), default="udm")
    p_oc.add_argument("--q", type=int, default=6)
    p_oc.add_argument("--zeta", type=float, default=0.01)
    p_oc.add_argument("--snr-db", type=float, default=50.0)
    p_oc.add_argument("--seeds", type=int, default=10)
    p_oc.add_argument("--seed", type=int, default=0)
    p_oc.add_argument("--out", default=None, help="optional CSV path")
    p_oc.set_defaults(func=_cmd_oracle_check)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # surface a clean diagnostic, nonzero exit
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
