"""Command line entry point: ``ascvar {run,landscape,plots,gen-instances}``.

Exit codes: 0 success, 1 partial failure (some runs errored), 2 invalid input.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import harness
from .problems import loads_instance

EXIT_OK, EXIT_PARTIAL, EXIT_INVALID = 0, 1, 2


def _out_dir(arg, default):
    return Path(arg or os.environ.get(harness.OUTPUT_DIR_ENV) or default)


def cmd_run(args) -> int:
    spec = harness.ExperimentSpec.load(args.spec)
    result = harness.run_experiment(spec, args.out)
    for row in result.summary:
        iters = "-" if row.average_normalized_iterations is None else f"{row.average_normalized_iterations:.2f}"
        print(f"{row.method:18s} successful={row.successful_instances}/{row.runs} "
              f"avg_overlap={row.average_overlap:.2f}% norm_iters={iters}")
    print(f"outputs in {result.output_dir}")
    if result.failed:
        for o in result.failed:
            print(f"FAILED {o.iid} {o.method}: {o.error}", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_landscape(args) -> int:
    try:
        instance = loads_instance(Path(args.instance).read_text())
    except OSError as exc:
        raise harness.SpecError(str(exc)) from exc
    out = _out_dir(args.out, "landscape")
    res = harness.emit_landscape(instance, args.alphas, args.res, out, layers=args.layers)
    rep = res["report"]
    print(f"max ground-state mass on grid: {rep['max_ground_mass_on_grid']:.4f}")
    for g in rep["grids"]:
        print(f"alpha={g['alpha']:g} min={g['minimum']:.6g} reaches_ground={g['reaches_ground']} -> {out / g['file']}")
    return EXIT_OK


def cmd_plots(args) -> int:
    written = harness.emit_plot_data(args.dir)
    print(f"wrote {len(written)} curve files under {Path(args.dir) / 'curves'}")
    return EXIT_OK


def cmd_gen(args) -> int:
    gen = json.loads(args.generation) if args.generation else {}
    if not isinstance(gen, dict):
        raise harness.SpecError("--generation must be a JSON object")
    out = _out_dir(args.out, "instances")
    paths = harness.generate_instances(args.family, args.count, args.n, args.seed, out, gen)
    for p in paths:
        print(p)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ascvar", description="Ascending-CVaR variational optimisation experiments")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run an experiment spec")
    r.add_argument("spec")
    r.add_argument("--out", help=f"output directory (overrides ${harness.OUTPUT_DIR_ENV} and the spec)")
    r.set_defaults(func=cmd_run)

    ls = sub.add_parser("landscape", help="depth-1 QAOA CVaR landscapes for one instance")
    ls.add_argument("instance")
    ls.add_argument("--alphas", type=float, nargs="+", required=True)
    ls.add_argument("--res", type=int, default=50)
    ls.add_argument("--layers", type=int, default=1)
    ls.add_argument("--out")
    ls.set_defaults(func=cmd_landscape)

    pl = sub.add_parser("plots", help="convergence curves from a finished run directory")
    pl.add_argument("dir")
    pl.set_defaults(func=cmd_plots)

    g = sub.add_parser("gen-instances", help="write random instances as JSON")
    g.add_argument("family", choices=harness.FAMILIES)
    g.add_argument("--count", type=int, default=20)
    g.add_argument("--n", type=int, nargs="+", default=[10, 11, 12], help="sizes, cycled")
    g.add_argument("--seed", type=int, default=2022)
    g.add_argument("--generation", help='family options as JSON, e.g. \'{"q": 0.5}\'')
    g.add_argument("--out")
    g.set_defaults(func=cmd_gen)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (harness.SpecError, ValueError, KeyError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
