"""Parameter sweeps over (s_add, k_sdyn), aggregation and local correlation analysis."""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence, TextIO

import numpy as np

from .engine import RunConfig, run
from .model import CouplingParams, SpeedDistribution
from .potential import CostModel, Neighborhood
from .scenario import Grid

SWEEP_HEADER = (
    "s_add", "k_sdyn", "runs",
    "total_time_mean", "total_time_std",
    "mean_egress_mean", "mean_egress_std",
    "load_mean", "load_std",
)
CORRELATION_HEADER = ("s_add", "k_sdyn", "corr", "neighborhood", "defined")

DEFAULT_S_ADD = (2.0, 5.0, 10.0, 15.0, 25.0, 35.0, 50.0)
DEFAULT_K_SDYN = (1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0, 5.5)


def _strictly_increasing(name: str, values: Sequence[float]) -> tuple[float, ...]:
    out = tuple(float(v) for v in values)
    if not out:
        raise ValueError(f"{name} must not be empty")
    if any(not math.isfinite(v) for v in out):
        raise ValueError(f"{name} must be finite, got {list(out)}")
    if any(b <= a for a, b in zip(out, out[1:])):
        raise ValueError(f"{name} must be strictly increasing, got {list(out)}")
    return out


@dataclass(frozen=True)
class SweepSpec:
    grid: Grid
    s_add_values: Sequence[float] = DEFAULT_S_ADD
    k_sdyn_values: Sequence[float] = DEFAULT_K_SDYN
    runs_per_point: int = 100
    base_seed: int = 0
    agent_count: int = 4000
    k_s: float = 1.0
    speeds: SpeedDistribution = SpeedDistribution()
    t_max: int = 5000

    def __post_init__(self) -> None:
        object.__setattr__(self, "s_add_values", _strictly_increasing("s_add_values", self.s_add_values))
        object.__setattr__(self, "k_sdyn_values", _strictly_increasing("k_sdyn_values", self.k_sdyn_values))
        if self.runs_per_point < 1:
            raise ValueError(f"runs_per_point must be >= 1, got {self.runs_per_point}")

    def pairs(self) -> list[tuple[float, float]]:
        """Parameter pairs in output order (s_add-major)."""
        return [(s, k) for s in self.s_add_values for k in self.k_sdyn_values]

    def config(self, s_add: float, k_sdyn: float, seed: int) -> RunConfig:
        return RunConfig(
            grid=self.grid,
            agent_count=self.agent_count,
            cost=CostModel(s_add),
            coupling=CouplingParams(self.k_s, k_sdyn),
            speeds=self.speeds,
            timestep=self.speeds.timestep,
            seed=seed,
            t_max=self.t_max,
        )


def run_seed(base_seed: int, pair_index: int, run_index: int) -> int:
    """64-bit seed for one run, derived only from its own coordinates.

    Adding runs or points never changes the seeds of existing ones.
    """
    words = np.random.SeedSequence([base_seed, pair_index, run_index]).generate_state(2, np.uint32)
    return int(words[0]) | (int(words[1]) << 32)


@dataclass(frozen=True)
class RunSample:
    seed: int
    total_time: float
    mean_egress: float
    load: int
    completed: bool


@dataclass
class SweepPoint:
    s_add: float
    k_sdyn: float
    runs: int
    total_time_mean: float = math.nan
    total_time_std: float = math.nan
    mean_egress_mean: float = math.nan
    mean_egress_std: float = math.nan
    load_mean: float = math.nan
    load_std: float = math.nan
    samples: list[RunSample] = field(default_factory=list, repr=False)
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None

    @classmethod
    def from_samples(cls, s_add: float, k_sdyn: float, samples: list[RunSample]) -> "SweepPoint":
        def stats(values):
            arr = np.asarray(values, dtype=float)
            std = float(arr.std(ddof=1)) if len(arr) > 1 else 0.0
            return float(arr.mean()), std

        tt = stats([s.total_time for s in samples])
        eg = stats([s.mean_egress for s in samples])
        ld = stats([s.load for s in samples])
        return cls(s_add, k_sdyn, len(samples), *tt, *eg, *ld, samples=samples)


def _one_run(spec: SweepSpec, s_add: float, k_sdyn: float, seed: int) -> RunSample:
    m = run(spec.config(s_add, k_sdyn, seed))
    return RunSample(seed, m.total_time, m.mean_egress, m.longer_corridor_load, m.completed)


def _point_task(args) -> tuple[list[RunSample] | None, str | None]:
    spec, index, s_add, k_sdyn = args
    try:
        samples = [_one_run(spec, s_add, k_sdyn, run_seed(spec.base_seed, index, r))
                   for r in range(spec.runs_per_point)]
    except (ValueError, ArithmeticError) as exc:
        return None, f"{type(exc).__name__}: {exc}"
    return samples, None


def run_sweep(spec: SweepSpec, workers: int = 1, progress=None) -> list[SweepPoint]:
    """Run every (s_add, k_sdyn) point ``runs_per_point`` times and aggregate.

    A point whose runs raise is returned with ``error`` set and NaN
    statistics; the other points are unaffected.  Output order is s_add-major
    regardless of ``workers``.
    """
    tasks = [(spec, i, s, k) for i, (s, k) in enumerate(spec.pairs())]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_point_task, tasks))
    else:
        results = []
        for task in tasks:
            results.append(_point_task(task))
            if progress is not None:
                progress(task[2], task[3])
    points = []
    for (_, _, s, k), (samples, error) in zip(tasks, results):
        if error is not None:
            points.append(SweepPoint(s, k, 0, error=error))
        else:
            points.append(SweepPoint.from_samples(s, k, samples))
    return points


# -- CSV ---------------------------------------------------------------------

def _num(value) -> str:
    """Shortest text that reads back to the same double."""
    return repr(float(value))


def _open_out(out: str | Path | TextIO):
    if isinstance(out, (str, Path)):
        return open(out, "w", newline="", encoding="utf-8"), True
    return out, False


def write_sweep_csv(points: Iterable[SweepPoint], out: str | Path | TextIO) -> None:
    fh, owned = _open_out(out)
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SWEEP_HEADER)
        for p in points:
            writer.writerow([
                _num(p.s_add), _num(p.k_sdyn), p.runs,
                _num(p.total_time_mean), _num(p.total_time_std),
                _num(p.mean_egress_mean), _num(p.mean_egress_std),
                _num(p.load_mean), _num(p.load_std),
            ])
    finally:
        if owned:
            fh.close()


def read_sweep_csv(source: str | Path | TextIO) -> list[SweepPoint]:
    if isinstance(source, (str, Path)):
        try:
            with open(source, newline="", encoding="utf-8") as fh:
                return read_sweep_csv(fh)
        except OSError as exc:
            raise ValueError(f"cannot read sweep file {source}: {exc.strerror}") from None
    reader = csv.reader(source)
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != SWEEP_HEADER:
        raise ValueError(f"not a sweep CSV: expected header {','.join(SWEEP_HEADER)}")
    points = []
    for line, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(SWEEP_HEADER):
            raise ValueError(f"sweep CSV line {line}: expected {len(SWEEP_HEADER)} fields, got {len(row)}")
        try:
            s, k = float(row[0]), float(row[1])
            runs = int(row[2])
            stats = [float(v) for v in row[3:]]
        except ValueError:
            raise ValueError(f"sweep CSV line {line}: malformed number") from None
        points.append(SweepPoint(s, k, runs, *stats))
    return points


# -- local correlation --------------------------------------------------------

@dataclass(frozen=True)
class CorrelationPoint:
    s_add: float
    k_sdyn: float
    corr: float
    neighborhood: Neighborhood
    defined: bool


def _pearson(x: np.ndarray, y: np.ndarray) -> float | None:
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        return None
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        return None
    dx = x - x.mean()
    dy = y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0 or syy == 0:
        return None
    return float(dx @ dy) / math.sqrt(sxx * syy)


def local_correlation(points: Sequence[SweepPoint],
                      neighborhood: Neighborhood | str = Neighborhood.VON_NEUMANN) -> list[CorrelationPoint]:
    """Pearson correlation of (mean_egress, load) over each point and its grid neighbours.

    Undefined values (a constant or non-finite variable over the set) are
    reported with ``defined=False`` and ``corr=nan``.
    """
    neighborhood = Neighborhood(neighborhood)
    s_vals = sorted({p.s_add for p in points})
    k_vals = sorted({p.k_sdyn for p in points})
    table: dict[tuple[float, float], SweepPoint] = {}
    for p in points:
        key = (p.s_add, p.k_sdyn)
        if key in table:
            raise ValueError(f"duplicate point s_add={p.s_add}, k_sdyn={p.k_sdyn}")
        table[key] = p
    if len(table) != len(s_vals) * len(k_vals):
        missing = [(s, k) for s in s_vals for k in k_vals if (s, k) not in table]
        raise ValueError(f"points do not form a rectangular grid; missing {missing[:3]}")

    egress = np.array([[table[s, k].mean_egress_mean for k in k_vals] for s in s_vals])
    load = np.array([[table[s, k].load_mean for k in k_vals] for s in s_vals])
    if neighborhood is Neighborhood.MOORE:
        offsets = [(di, dj) for di in (-1, 0, 1) for dj in (-1, 0, 1)]
    else:
        offsets = [(0, 0), (-1, 0), (1, 0), (0, -1), (0, 1)]
    out = []
    for i, s in enumerate(s_vals):
        for j, k in enumerate(k_vals):
            idx = [(i + di, j + dj) for di, dj in offsets
                   if 0 <= i + di < len(s_vals) and 0 <= j + dj < len(k_vals)]
            rows, cols = zip(*idx)
            r = _pearson(egress[rows, cols], load[rows, cols])
            out.append(CorrelationPoint(s, k, math.nan if r is None else r, neighborhood, r is not None))
    return out


def write_correlation_csv(values: Iterable[CorrelationPoint], out: str | Path | TextIO) -> None:
    fh, owned = _open_out(out)
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CORRELATION_HEADER)
        for c in values:
            writer.writerow([_num(c.s_add), _num(c.k_sdyn), _num(c.corr), c.neighborhood.value,
                             str(c.defined).lower()])
    finally:
        if owned:
            fh.close()
