"""Command-line entry point.

Four subcommands:

* ``bench-s1``: circle benchmark report (snapshots, conservation series,
  convergence table, product/norm series, figures, manifest).
* ``abc``: three-torus run with spectral vs particle z-marginal comparison.
* ``solve``: one end-time solve of a scenario given via ``--config``.
* ``convergence``: K-sweep error study against the circle benchmark.

Any stage failure prints ``error[stage]: message`` to stderr and exits 2.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from .propagation import SchemeSpec
from .scenarios import (
    Scenario,
    StageError,
    abc_scenario,
    benchmark_scenario,
    run_abc,
    run_benchmark_s1,
    run_convergence,
    run_solve,
)

_SCHEME_MAP = {
    "expm": "dense_expm",
    "cayley": "cayley_midpoint",
    "krylov": "krylov_expm",
    "rk4": "rk4",
}


def _parse_modes(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad mode list {text!r}; expected e.g. 16 or 4,8,12,16")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "-K", "--modes", type=_parse_modes, default=None,
        help="mode cutoff K (comma list for a per-axis cutoff, or for the convergence sweep)",
    )
    common.add_argument("--t-final", dest="t_final", type=float, default=None)
    common.add_argument(
        "--scheme", choices=sorted(_SCHEME_MAP), default=None,
        help="time stepper: expm (dense exact), cayley, krylov, rk4 (non-preserving reference)",
    )
    common.add_argument("--dt", type=float, default=None, help="fixed step for cayley/rk4")
    common.add_argument("--tol", type=float, default=None, help="accuracy target for krylov")
    common.add_argument("--seed", type=int, default=None, help="particle sampler seed")
    common.add_argument("--particles", type=int, default=None, help="particle count")
    common.add_argument("--out", type=str, default=None, help="output directory")
    common.add_argument("--format", choices=("csv", "json"), default=None)
    common.add_argument("--config", type=str, default=None, help="scenario JSON file")

    parser = argparse.ArgumentParser(
        prog="halfspec",
        description="structure-preserving spectral transport on flat tori",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("bench-s1", parents=[common], help="circle benchmark report").set_defaults(
        run=_cmd_bench
    )
    sub.add_parser("abc", parents=[common], help="three-torus ABC-family run").set_defaults(
        run=_cmd_abc
    )
    sub.add_parser("solve", parents=[common], help="single solve from --config").set_defaults(
        run=_cmd_solve
    )
    sub.add_parser(
        "convergence", parents=[common], help="mode-cutoff error sweep (circle benchmark)"
    ).set_defaults(run=_cmd_convergence)
    return parser


def _scheme_from_flags(args, base: SchemeSpec) -> SchemeSpec | None:
    updates = {}
    if args.scheme is not None:
        updates["scheme"] = _SCHEME_MAP[args.scheme]
    if args.dt is not None:
        updates["dt"] = args.dt
    if args.tol is not None:
        updates["tol"] = args.tol
    if not updates:
        return None
    return dataclasses.replace(base, **updates)


def _overrides(args, scheme_base: SchemeSpec) -> dict:
    out: dict = {}
    if args.modes is not None:
        out["modes"] = args.modes
    if args.t_final is not None:
        out["t_final"] = args.t_final
    scheme = _scheme_from_flags(args, scheme_base)
    if scheme is not None:
        out["scheme"] = scheme
    if args.seed is not None:
        out["particle_seed"] = args.seed
    if args.particles is not None:
        out["particle_count"] = args.particles
    if args.out is not None:
        out["out_dir"] = args.out
    if args.format is not None:
        out["out_format"] = args.format
    return out


def _load_or_build(args, factory) -> Scenario:
    if args.config:
        base = Scenario.from_json_file(args.config)
    else:
        base = factory()
    over = _overrides(args, base.scheme)
    return dataclasses.replace(base, **over) if over else base


def _cmd_bench(args) -> dict:
    return run_benchmark_s1(_load_or_build(args, benchmark_scenario))


def _cmd_abc(args) -> dict:
    return run_abc(_load_or_build(args, abc_scenario))


def _cmd_solve(args) -> dict:
    if not args.config:
        raise StageError("cli: solve requires --config FILE")
    return run_solve(_load_or_build(args, None))


def _cmd_convergence(args) -> dict:
    if args.config:
        base = Scenario.from_json_file(args.config)
    else:
        base = benchmark_scenario(name="convergence", out_dir="runs/convergence")
    over = _overrides(args, base.scheme)
    # for this subcommand the mode list and end time configure the sweep itself
    if "modes" in over:
        over["convergence_modes"] = over.pop("modes")
    if "t_final" in over:
        over["convergence_t"] = over.pop("t_final")
    sc = dataclasses.replace(base, **over) if over else base
    return run_convergence(sc)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        paths = args.run(args)
    except StageError as exc:
        stage, sep, msg = str(exc).partition(": ")
        if not sep:
            stage, msg = "run", str(exc)
        print(f"error[{stage}]: {msg}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error[cli]: {exc}", file=sys.stderr)
        return 2
    for name in sorted(paths):
        print(f"{name}: {paths[name]}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
