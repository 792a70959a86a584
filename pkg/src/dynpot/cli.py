"""Command line entry point: ``dynpot run|sweep|correlate|scenario``."""

from __future__ import annotations

import argparse
import dataclasses
import math
import sys
from collections import Counter
from pathlib import Path
from typing import Sequence

from . import engine, harness
from .corridors import build_two_corridor_scenario
from .model import CouplingParams, SpeedDistribution
from .potential import CostModel, Neighborhood, pgm_name, static_field, write_pgm
from .scenario import CellKind, Grid, ScenarioError, load_bundled, load_scenario, serialize_scenario

DEFAULT_SPEEDS_MPS = (1.2, 1.6, 2.0)
DEFAULT_SPEED_PROBS = (0.25, 0.5, 0.25)


class CliError(Exception):
    """User-facing failure: printed as a one-line diagnostic, exit status 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: usage error: {message}\n")


# -- argument types -------------------------------------------------------------

def _number(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"not a finite number: {text!r}")
    return value


def _number_list(text: str) -> list[float]:
    parts = [p for p in text.replace(" ", "").split(",") if p]
    if not parts:
        raise argparse.ArgumentTypeError("empty list")
    return [_number(p) for p in parts]


def _count(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _seed(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"seed must be in [0, 2**64), got {value}")
    return value


# -- helpers ----------------------------------------------------------------

def resolve_scenario(ref: str, cell_size: float | None = None) -> Grid:
    """Load ``ref`` as a file path, falling back to a bundled map of that name."""
    path = Path(ref)
    if path.is_file():
        grid = load_scenario(path)
    else:
        try:
            grid = load_bundled(path.name)
        except ScenarioError:
            raise ScenarioError(f"cannot read scenario file {ref!r}: no such file or bundled map") from None
    if cell_size is not None:
        if not cell_size > 0:
            raise ScenarioError(f"--cell-size must be positive, got {cell_size}")
        grid = dataclasses.replace(grid, cell_size=cell_size)
    return grid


def speeds_for(grid: Grid) -> SpeedDistribution:
    return SpeedDistribution.from_speeds(DEFAULT_SPEEDS_MPS, DEFAULT_SPEED_PROBS, cell_size=grid.cell_size)


def _check_ranges(args) -> None:
    for name in ("sadd",):
        values = getattr(args, name)
        for v in values if isinstance(values, list) else [values]:
            if v < 1:
                raise CliError(f"--sadd must be >= 1, got {v}")
    for name in ("ksdyn", "ks"):
        values = getattr(args, name)
        for v in values if isinstance(values, list) else [values]:
            if v < 0:
                raise CliError(f"--{name} must be >= 0, got {v}")


# -- subcommands -------------------------------------------------------------

def cmd_run(args) -> int:
    _check_ranges(args)
    grid = resolve_scenario(args.scenario, args.cell_size)
    speeds = speeds_for(grid)
    config = engine.RunConfig(
        grid=grid,
        agent_count=args.agents,
        cost=CostModel(args.sadd),
        coupling=CouplingParams(args.ks, args.ksdyn),
        speeds=speeds,
        seed=args.seed,
        t_max=args.tmax,
    )
    sim = engine.Simulation(config)
    on_step = None
    if args.dump_fields:
        dump_dir = Path(args.dump_dir)
        dump_dir.mkdir(parents=True, exist_ok=True)
        write_pgm(static_field(grid), dump_dir / pgm_name("static", 0))

        def on_step(s):
            if s.t % args.dump_every == 0 or s.done:
                field = s.dynamic_grid()
                if field is not None:
                    write_pgm(field, dump_dir / pgm_name("dynamic", s.t))

    metrics = sim.run(on_step)
    print(engine.SUMMARY_HEADER)
    print(engine.summary_line(config, metrics))
    if args.out:
        engine.write_agent_records(metrics, args.out)
    return 0


def cmd_sweep(args) -> int:
    _check_ranges(args)
    grid = resolve_scenario(args.scenario, args.cell_size)
    spec = harness.SweepSpec(
        grid=grid,
        s_add_values=args.sadd,
        k_sdyn_values=args.ksdyn,
        runs_per_point=args.runs,
        base_seed=args.seed,
        agent_count=args.agents,
        k_s=args.ks,
        speeds=speeds_for(grid),
        t_max=args.tmax,
    )
    points = harness.run_sweep(spec, workers=args.workers)
    for p in points:
        if p.failed:
            print(f"dynpot: warning: point s_add={p.s_add}, k_sdyn={p.k_sdyn} failed: {p.error}",
                  file=sys.stderr)
    harness.write_sweep_csv(points, args.out or sys.stdout)
    return 1 if any(p.failed for p in points) else 0


def cmd_correlate(args) -> int:
    points = harness.read_sweep_csv(args.input)
    values = harness.local_correlation(points, Neighborhood(args.neighborhood))
    harness.write_correlation_csv(values, args.out or sys.stdout)
    return 0


def cmd_scenario(args) -> int:
    if args.build is not None:
        grid = build_two_corridor_scenario(args.build)
    else:
        if not args.path:
            raise CliError("scenario: give a map file or --build SCALE")
        grid = resolve_scenario(args.path, args.cell_size)
    grid.check_runnable()
    if args.out:
        Path(args.out).write_text(serialize_scenario(grid), encoding="utf-8")
    counts = Counter(CellKind(int(k)) for k in grid.cells.ravel())
    print(f"name: {grid.name or '-'}")
    print(f"size: {grid.width} x {grid.height} cells, cell size {grid.cell_size} m")
    for kind in CellKind:
        print(f"{kind.name.lower()}: {counts.get(kind, 0)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dynpot", description="Dynamic distance potential pedestrian simulation")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, lists: bool):
        p.add_argument("--scenario", default="two_corridor", help="map file or bundled map name")
        kind = _number_list if lists else _number
        p.add_argument("--sadd", type=kind, default=list(harness.DEFAULT_S_ADD) if lists else 1.0)
        p.add_argument("--ksdyn", type=kind, default=list(harness.DEFAULT_K_SDYN) if lists else 0.0)
        p.add_argument("--ks", type=_number, default=1.0)
        p.add_argument("--seed", type=_seed, default=0)
        p.add_argument("--tmax", type=_count, default=5000)
        p.add_argument("--agents", type=_count, default=4000)
        p.add_argument("--cell-size", type=_number, default=None, help="override the map's cell size (m)")
        p.add_argument("--out", default=None)

    p = sub.add_parser("run", help="single run; prints the summary line")
    common(p, lists=False)
    p.add_argument("--dump-fields", action="store_true", help="write PGM images of the fields")
    p.add_argument("--dump-every", type=_count, default=50)
    p.add_argument("--dump-dir", default=".")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="parameter sweep; emits the sweep CSV")
    common(p, lists=True)
    p.add_argument("--runs", type=_count, default=100)
    p.add_argument("--workers", type=_count, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("correlate", help="local correlation of a sweep CSV")
    p.add_argument("input")
    p.add_argument("--neighborhood", choices=[n.value for n in Neighborhood], default="vn")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("scenario", help="validate and describe a map, or build the two-corridor map")
    p.add_argument("path", nargs="?")
    p.add_argument("--build", type=_number, default=None, metavar="SCALE")
    p.add_argument("--cell-size", type=_number, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_scenario)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CliError, ValueError, OSError) as exc:
        print(f"dynpot: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
