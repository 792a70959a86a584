"""Distance potentials: occupancy-weighted flood fills, the V1 combination, dynamic fields.

Fields are plain ``float64`` arrays shaped like the grid (``field[y, x]``);
walls and unreachable cells hold ``inf``.
"""

from __future__ import annotations

import enum
import weakref
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._backend import get_kernels
from .scenario import CellKind, Grid, Occupancy

INFINITE = np.inf
NEGATIVE_TOLERANCE = 1e-9


class Neighborhood(enum.Enum):
    VON_NEUMANN = "vn"
    MOORE = "moore"


@dataclass(frozen=True)
class CostModel:
    """Cost of entering a cell during the fill: 1 if free, ``s_add`` if occupied."""

    s_add: float = 1.0

    def __post_init__(self) -> None:
        if not (np.isfinite(self.s_add) and self.s_add >= 1):
            raise ValueError(f"s_add must be finite and >= 1, got {self.s_add}")

    @property
    def is_null(self) -> bool:
        return self.s_add == 1


@dataclass(frozen=True)
class FieldPair:
    manhattan: np.ndarray
    chebyshev: np.ndarray


def pad(values: np.ndarray, fill_value=0) -> np.ndarray:
    """Surround ``values`` with a one-cell frame and flatten (row-major)."""
    return np.pad(values, 1, constant_values=fill_value).ravel()


def unpad(flat: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    h, w = shape
    return flat.reshape(h + 2, w + 2)[1:-1, 1:-1].copy()


def destination_sources(grid: Grid) -> np.ndarray:
    """Flat padded indices of all destination cells, ascending."""
    ys, xs = np.nonzero(grid.cells == CellKind.DESTINATION)
    if len(ys) == 0:
        raise ValueError("grid has no destination cell")
    return ((ys + 1) * (grid.width + 2) + xs + 1).astype(np.intp)


def _occupied_mask(grid: Grid, occupancy: Occupancy | np.ndarray | None) -> np.ndarray:
    if occupancy is None:
        return np.zeros(grid.shape, dtype=bool)
    mask = occupancy.occupied if isinstance(occupancy, Occupancy) else np.asarray(occupancy)
    if mask.shape != grid.shape:
        raise ValueError(f"occupancy shape {mask.shape} does not match grid {grid.shape}")
    return mask


def fill_padded(grid: Grid, occupied_flat: np.ndarray, neighborhood: Neighborhood,
                cost: CostModel, backend: str | None = None) -> np.ndarray:
    """Fill on the padded flat layout; used directly by the engine's step loop."""
    kernels = get_kernels(backend)
    walk = pad(grid.walkable_mask.astype(np.uint8))
    return kernels.fill(
        walk,
        occupied_flat,
        destination_sources(grid),
        grid.width + 2,
        neighborhood is Neighborhood.MOORE,
        float(cost.s_add),
    )


def fill(grid: Grid, occupancy: Occupancy | np.ndarray | None,
         neighborhood: Neighborhood, cost: CostModel = CostModel(),
         backend: str | None = None) -> np.ndarray:
    """Minimal entering-cost field from the destination cells.

    Entering a free cell costs 1, entering an occupied one ``cost.s_add``;
    destination cells are the zero-valued sources.  Von Neumann fills yield
    the Manhattan metric on empty geometry, Moore fills the Chebyshev one.
    """
    occ = pad(_occupied_mask(grid, occupancy).astype(np.uint8))
    flat = fill_padded(grid, occ, neighborhood, cost, backend)
    return unpad(flat, grid.shape)


def fill_pair(grid: Grid, occupancy=None, cost: CostModel = CostModel(),
              backend: str | None = None) -> FieldPair:
    return FieldPair(
        manhattan=fill(grid, occupancy, Neighborhood.VON_NEUMANN, cost, backend),
        chebyshev=fill(grid, occupancy, Neighborhood.MOORE, cost, backend),
    )


def combine_v1(pair: FieldPair) -> np.ndarray:
    """Combine Manhattan and Chebyshev fields cell by cell toward Euclidean distance.

    The difference of the two is the "minimum" leg; the result is
    ``sqrt(chebyshev**2 + (manhattan - chebyshev)**2)``, exact for a single
    source on open ground.  Cells infinite in either input stay infinite.
    """
    manhattan = np.asarray(pair.manhattan, dtype=np.float64)
    chebyshev = np.asarray(pair.chebyshev, dtype=np.float64)
    if manhattan.shape != chebyshev.shape:
        raise ValueError(f"field shapes differ: {manhattan.shape} vs {chebyshev.shape}")
    finite = np.isfinite(manhattan) & np.isfinite(chebyshev)
    with np.errstate(invalid="ignore"):
        minor = np.where(finite, manhattan - chebyshev, 0.0)
    if (minor < -NEGATIVE_TOLERANCE).any():
        raise ValueError("manhattan field below chebyshev field; inputs are inconsistent")
    minor = np.maximum(minor, 0.0)
    major = np.where(finite, chebyshev, 0.0)
    out = np.sqrt(major * major + minor * minor)
    out[~finite] = INFINITE
    return out


def v1_field(grid: Grid, occupancy=None, cost: CostModel = CostModel(),
             backend: str | None = None) -> np.ndarray:
    return combine_v1(fill_pair(grid, occupancy, cost, backend))


_static_cache: "weakref.WeakKeyDictionary[Grid, np.ndarray]" = weakref.WeakKeyDictionary()


def static_field(grid: Grid) -> np.ndarray:
    """V1 potential of the empty geometry, cached for the grid's lifetime."""
    try:
        return _static_cache[grid]
    except KeyError:
        pass
    field = v1_field(grid)
    field.setflags(write=False)
    _static_cache[grid] = field
    return field


def dynamic_difference(current: np.ndarray, static: np.ndarray) -> np.ndarray:
    """``current - static`` with cells infinite in both mapped to 0."""
    both = np.isinf(current) & np.isinf(static)
    with np.errstate(invalid="ignore"):
        diff = current - static
    diff[both] = 0.0
    return diff


def dynamic_field(grid: Grid, occupancy: Occupancy | np.ndarray, cost: CostModel,
                  static: np.ndarray | None = None, backend: str | None = None) -> np.ndarray:
    """Occupancy-induced excess of the V1 potential over the empty-geometry one.

    Recomputed from scratch on every call; one field serves all agents of a
    timestep.
    """
    if static is None:
        static = static_field(grid)
    return dynamic_difference(v1_field(grid, occupancy, cost, backend), static)


def write_pgm(field: np.ndarray, path: str | Path) -> Path:
    """Dump ``field`` as a plain (P2) 16-bit PGM; infinite cells render black."""
    field = np.asarray(field, dtype=np.float64)
    finite = np.isfinite(field)
    out = np.zeros(field.shape, dtype=np.int64)
    if finite.any():
        lo, hi = field[finite].min(), field[finite].max()
        span = hi - lo
        if span > 0:
            out[finite] = np.rint((field[finite] - lo) / span * 65535).astype(np.int64)
    h, w = field.shape
    path = Path(path)
    with path.open("w", encoding="ascii") as fh:
        fh.write(f"P2\n{w} {h}\n65535\n")
        for row in out:
            fh.write(" ".join(map(str, row)) + "\n")
    return path


def pgm_name(name: str, step: int) -> str:
    return f"field_{name}_{step}.pgm"
