"""Cellular-automaton pedestrian model: candidate cells, move weights, sampling.

An agent may jump to any visible, free cell within Chebyshev distance
``v_max`` (or stay).  Candidates are weighted by
``exp(-k_s * S0) * exp(-k_sdyn * S_dyn)`` and sampled by inverse CDF over
row-major candidate order.  The engine runs the same rule through the batch
kernels in ``_ckernels``/``_pykernels``; the functions here are the
per-agent reference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .scenario import CellKind, Grid, Occupancy

Cell = tuple[int, int]


@dataclass
class Agent:
    id: int
    position: Cell
    v_max: int
    injected_at: int = 0
    arrived_at: int | None = None
    passed_measurement: bool = False
    measured_at: int | None = None

    @property
    def in_system(self) -> bool:
        return self.arrived_at is None


@dataclass(frozen=True)
class SpeedDistribution:
    """Discrete distribution of maximum speeds in cells per step."""

    support: tuple[tuple[int, float], ...] = ((3, 0.25), (4, 0.5), (5, 0.25))
    cell_size: float = 0.4
    timestep: float = 1.0

    def __post_init__(self) -> None:
        if not self.support:
            raise ValueError("speed distribution needs at least one value")
        speeds = [v for v, _ in self.support]
        probs = [p for _, p in self.support]
        if any(v < 1 or int(v) != v for v in speeds):
            raise ValueError(f"maximum speeds must be positive integers (cells/step), got {speeds}")
        if speeds != sorted(set(speeds)):
            raise ValueError("speed support must be strictly increasing")
        if any(p < 0 for p in probs) or not math.isclose(sum(probs), 1.0, abs_tol=1e-12):
            raise ValueError(f"speed probabilities must be nonnegative and sum to 1, got {probs}")
        if not (self.cell_size > 0 and self.timestep > 0):
            raise ValueError("cell size and timestep must be positive")

    @classmethod
    def from_speeds(cls, speeds_mps: Sequence[float] = (1.2, 1.6, 2.0),
                    probs: Sequence[float] = (0.25, 0.5, 0.25),
                    cell_size: float = 0.4, timestep: float = 1.0) -> "SpeedDistribution":
        cells = [int(round(s * timestep / cell_size)) for s in speeds_mps]
        return cls(tuple(zip(cells, map(float, probs))), cell_size, timestep)

    @property
    def max_v(self) -> int:
        return self.support[-1][0]

    @property
    def median_cells(self) -> int:
        acc = 0.0
        for v, p in self.support:
            acc += p
            if acc >= 0.5 - 1e-12:
                return v
        return self.support[-1][0]

    @property
    def median_speed(self) -> float:
        """Median maximum speed in m/s."""
        return self.median_cells * self.cell_size / self.timestep

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        cum = np.cumsum([p for _, p in self.support])
        idx = np.searchsorted(cum, rng.random(n), side="right")
        idx = np.minimum(idx, len(self.support) - 1)
        return np.array([v for v, _ in self.support], dtype=np.int32)[idx]


@dataclass(frozen=True)
class CouplingParams:
    k_s: float = 1.0
    k_sdyn: float = 0.0

    def __post_init__(self) -> None:
        for name in ("k_s", "k_sdyn"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise ValueError(f"{name} must be finite and >= 0, got {value}")


def supercover(dx: int, dy: int) -> list[Cell]:
    """Cells touched by the segment from cell centre (0, 0) to (dx, dy).

    Passing exactly through a lattice corner touches both side cells.  The
    start cell is excluded, the end cell included.
    """
    nx, ny = abs(dx), abs(dy)
    sx = 1 if dx > 0 else -1
    sy = 1 if dy > 0 else -1
    x = y = ix = iy = 0
    cells = []
    while ix < nx or iy < ny:
        decision = (1 + 2 * ix) * ny - (1 + 2 * iy) * nx
        if decision == 0:
            cells.append((x + sx, y))
            cells.append((x, y + sy))
            x += sx
            y += sy
            ix += 1
            iy += 1
        elif decision < 0:
            x += sx
            ix += 1
        else:
            y += sy
            iy += 1
        cells.append((x, y))
    return cells


@dataclass(frozen=True)
class OffsetTable:
    """Row-major candidate offsets up to a radius, flattened for a padded grid."""

    cand_delta: np.ndarray
    cand_radius: np.ndarray
    touch_start: np.ndarray
    touch_delta: np.ndarray
    offsets: tuple[Cell, ...] = field(repr=False)


@lru_cache(maxsize=32)
def offset_table(radius: int, padded_width: int) -> OffsetTable:
    offsets, delta, rad, start, touch = [], [], [], [0], []
    for dy in range(-radius, radius + 1):
        for dx in range(-radius, radius + 1):
            offsets.append((dx, dy))
            delta.append(dy * padded_width + dx)
            rad.append(max(abs(dx), abs(dy)))
            touch.extend(ty * padded_width + tx for tx, ty in supercover(dx, dy))
            start.append(len(touch))
    table = OffsetTable(
        cand_delta=np.array(delta, dtype=np.intp),
        cand_radius=np.array(rad, dtype=np.int32),
        touch_start=np.array(start, dtype=np.intp),
        touch_delta=np.array(touch, dtype=np.intp),
        offsets=tuple(offsets),
    )
    for arr in (table.cand_delta, table.cand_radius, table.touch_start, table.touch_delta):
        arr.setflags(write=False)
    return table


def visible(grid: Grid, start: Cell, end: Cell) -> bool:
    x0, y0 = start
    return all(grid.walkable(x0 + tx, y0 + ty) for tx, ty in supercover(end[0] - x0, end[1] - y0))


def candidate_cells(agent: Agent, grid: Grid, occupancy: Occupancy) -> list[Cell]:
    """Cells the agent may move to this step, in row-major order.

    Its own cell is always included; any other cell must be walkable, free
    and visible within Chebyshev distance ``v_max``.
    """
    x0, y0 = agent.position
    out = []
    r = agent.v_max
    for y in range(y0 - r, y0 + r + 1):
        for x in range(x0 - r, x0 + r + 1):
            if (x, y) == (x0, y0):
                out.append((x, y))
            elif grid.walkable(x, y) and (x, y) not in occupancy and visible(grid, (x0, y0), (x, y)):
                out.append((x, y))
    return out


def move_weights(candidates: Sequence[Cell], static: np.ndarray, dyn: np.ndarray | None,
                 params: CouplingParams) -> dict[Cell, float]:
    """Normalised move probabilities for ``candidates`` (insertion order kept).

    The smallest exponent is shifted to zero before exponentiating, which
    leaves the normalised table unchanged and rules out underflow to zero.
    """
    if not candidates:
        raise ValueError("no candidate cells")
    energy = []
    for x, y in candidates:
        s0 = float(static[y, x])
        if not math.isfinite(s0):
            raise ValueError(f"candidate ({x}, {y}) has no finite static potential")
        e = params.k_s * s0
        if dyn is not None:
            e = e + params.k_sdyn * float(dyn[y, x])
        energy.append(e)
    emin = min(energy)
    weights = [math.exp(-(e - emin)) for e in energy]
    total = 0.0
    for w in weights:
        total += w
    assert total > 0, "all move weights vanished"
    return {c: w / total for c, w in zip(candidates, weights)}


def sample_index(probs: Sequence[float], u: float) -> int:
    """Inverse-CDF draw: first index whose cumulative probability exceeds ``u``."""
    acc = 0.0
    for i, p in enumerate(probs):
        acc += p
        if u < acc:
            return i
    return len(probs) - 1


def step_agent(agent: Agent, weights: dict[Cell, float], rng: np.random.Generator | float,
               grid: Grid, occupancy: Occupancy, step: int) -> Cell:
    """Sample a target from ``weights`` and move ``agent`` there.

    Updates the occupancy, flags the first crossing of a measurement cell and
    removes the agent (``arrived_at = step``) on entering a destination.
    """
    cells = sorted(weights, key=lambda c: (c[1], c[0]))
    u = float(rng.random()) if isinstance(rng, np.random.Generator) else float(rng)
    target = cells[sample_index([weights[c] for c in cells], u)]
    if target == agent.position:
        return target
    assert target not in occupancy, f"target {target} occupied"
    x0, y0 = agent.position
    hop = supercover(target[0] - x0, target[1] - y0)
    if not agent.passed_measurement and any(
        grid.kind(x0 + tx, y0 + ty) is CellKind.MEASUREMENT for tx, ty in hop
    ):
        agent.passed_measurement = True
        agent.measured_at = step
    occupancy.release(x0, y0)
    agent.position = target
    if grid.kind(*target) is CellKind.DESTINATION:
        agent.arrived_at = step
    else:
        occupancy.occupy(grid, *target)
    return target
