"""Command line entry point: ``nfcrb {crb,optimize,sweep,validate}``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from .harness import (SWEEP_VARIABLES, ConfigError, SweepSpec, all_converged, parse_config, records_to_csv,
                      run_point, run_sweep, validate, write_outputs)

EXIT_OK, EXIT_USAGE, EXIT_FAILED = 0, 1, 2


def _values(text):
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _parser():
    p = argparse.ArgumentParser(prog="nfcrb", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true", help="log optimizer progress")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("crb", help="CRB of the initial design at every antenna position")
    c.add_argument("--config", required=True)
    c.add_argument("--seed", type=int)

    o = sub.add_parser("optimize", help="run the joint design once")
    o.add_argument("--config", required=True)
    o.add_argument("--out", required=True)
    o.add_argument("--seed", type=int)
    o.add_argument("--fpa", action="store_true", help="fixed antenna (single position)")
    o.add_argument("--timing", action="store_true", help="fill the wall_ms column")

    s = sub.add_parser("sweep", help="sweep the SINR target or the power budget")
    s.add_argument("--config", required=True)
    s.add_argument("--var", required=True, choices=sorted(SWEEP_VARIABLES))
    s.add_argument("--values", required=True, type=_values)
    s.add_argument("--out", required=True)
    s.add_argument("--fpa", action="store_true")
    s.add_argument("--repeats", type=int, default=1)
    s.add_argument("--seed", type=int)
    s.add_argument("--workers", type=int)
    s.add_argument("--timing", action="store_true")

    v = sub.add_parser("validate", help="run the property suites")
    v.add_argument("--config", required=True)
    v.add_argument("--quick", action="store_true", help="fewer Monte-Carlo trials and search samples")
    return p


def _cmd_crb(rc, args):
    from .fisher import UnidentifiableTargetError, crb_from_fim, fim_blocks
    from .geometry import build_channels
    from .optimizer import initial_state

    sysc = rc.system
    ch = build_channels(sysc)
    st = initial_state(ch, sysc)
    print("position,r_q_m,theta_q_rad,rcrb_range_m,rcrb_angle_rad,trace_crb")
    for i, (r, t) in enumerate(ch.fa_polar):
        q = i - ch.center
        try:
            res = crb_from_fim(fim_blocks(ch, st.stars, st.design.Rx, q, sysc))
            print(f"{q},{r:.10g},{t:.10g},{res.rcrb_range:.10g},{res.rcrb_angle:.10g},{res.trace:.10g}")
        except UnidentifiableTargetError as exc:
            print(f"{q},{r:.10g},{t:.10g},inf,inf,inf  # {exc}")
    return EXIT_OK


def _cmd_optimize(rc, args):
    seed = args.seed if args.seed is not None else rc.system.rng_seed
    rec = run_point(rc, "none", None, seed, args.fpa)
    write_outputs([rec], args.out, args.timing)
    print(records_to_csv([rec], args.timing), end="")
    return EXIT_OK if rec.status == "converged" else EXIT_FAILED


def _cmd_sweep(rc, args):
    seed = args.seed if args.seed is not None else rc.system.rng_seed
    try:
        spec = SweepSpec(SWEEP_VARIABLES[args.var], args.values, args.fpa, args.repeats, seed)
    except ValueError as exc:
        print(f"nfcrb: {exc}", file=sys.stderr)
        return EXIT_USAGE
    records = run_sweep(rc, spec, args.workers)
    plot = write_outputs(records, args.out, args.timing)
    print(records_to_csv(records, args.timing), end="")
    print(f"# plot data: {plot}", file=sys.stderr)
    return EXIT_OK if all_converged(records) else EXIT_FAILED


def _cmd_validate(rc, args):
    results = validate(rc, quick=args.quick)
    for r in results:
        print(f"{r.name:18s} {r.status.upper():13s} {r.detail}")
    return EXIT_FAILED if any(r.status == "fail" for r in results) else EXIT_OK


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        rc = parse_config(args.config)
    except ConfigError as exc:
        print(f"nfcrb: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if getattr(args, "seed", None) is not None and args.command == "crb":
        rc = rc.with_value("none", 0, args.seed)
    handler = {"crb": _cmd_crb, "optimize": _cmd_optimize, "sweep": _cmd_sweep,
               "validate": _cmd_validate}[args.command]
    return handler(rc, args)


if __name__ == "__main__":
    sys.exit(main())
