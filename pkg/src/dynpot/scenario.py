"""Grid geometry, cell semantics and the line-oriented scenario text format."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, TextIO

import numpy as np

DEFAULT_CELL_SIZE = 0.4


class ScenarioError(ValueError):
    """Raised for malformed scenario text or impossible geometry."""


class CellKind(enum.IntEnum):
    WALL = 0
    FREE = 1
    ORIGIN = 2
    DESTINATION = 3
    MEASUREMENT = 4

    @property
    def walkable(self) -> bool:
        return self is not CellKind.WALL


CHAR_TO_KIND = {
    "#": CellKind.WALL,
    ".": CellKind.FREE,
    "O": CellKind.ORIGIN,
    "D": CellKind.DESTINATION,
    "M": CellKind.MEASUREMENT,
}
KIND_TO_CHAR = {kind: char for char, kind in CHAR_TO_KIND.items()}


@dataclass(frozen=True, eq=False)
class Grid:
    """Immutable rectangular cell lattice.

    ``cells`` is indexed ``cells[y, x]`` (row-major); coordinates handed
    around the package are ``(x, y)`` tuples.  Anything outside the lattice
    reads as a wall.
    """

    cells: np.ndarray
    cell_size: float = DEFAULT_CELL_SIZE
    name: str = ""

    def __post_init__(self) -> None:
        cells = np.array(self.cells, dtype=np.uint8, copy=True)
        if cells.ndim != 2 or cells.shape[0] < 1 or cells.shape[1] < 1:
            raise ScenarioError(f"grid must be a non-empty 2-d table, got shape {cells.shape}")
        if not self.cell_size > 0:
            raise ScenarioError(f"cell size must be positive, got {self.cell_size}")
        if cells.max() > max(CellKind):
            raise ScenarioError("grid contains an unknown cell kind")
        cells.setflags(write=False)
        object.__setattr__(self, "cells", cells)

    @property
    def width(self) -> int:
        return self.cells.shape[1]

    @property
    def height(self) -> int:
        return self.cells.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.cells.shape

    def kind(self, x: int, y: int) -> CellKind:
        if 0 <= x < self.width and 0 <= y < self.height:
            return CellKind(int(self.cells[y, x]))
        return CellKind.WALL

    def walkable(self, x: int, y: int) -> bool:
        return self.kind(x, y) is not CellKind.WALL

    @property
    def walkable_mask(self) -> np.ndarray:
        return self.cells != CellKind.WALL

    def mask(self, kind: CellKind) -> np.ndarray:
        return self.cells == kind

    def cells_of(self, kind: CellKind) -> list[tuple[int, int]]:
        """Coordinates of every cell of ``kind`` in row-major order."""
        ys, xs = np.nonzero(self.cells == kind)
        return [(int(x), int(y)) for y, x in zip(ys, xs)]

    def check_runnable(self) -> None:
        if not self.mask(CellKind.DESTINATION).any():
            raise ScenarioError("scenario has no destination cell")
        if not self.mask(CellKind.ORIGIN).any():
            raise ScenarioError("scenario has no origin cell")

    def with_cells(self, cells: np.ndarray) -> "Grid":
        return Grid(cells, cell_size=self.cell_size, name=self.name)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Grid):
            return NotImplemented
        return (
            self.cell_size == other.cell_size
            and self.shape == other.shape
            and bool(np.array_equal(self.cells, other.cells))
        )

    __hash__ = object.__hash__


@dataclass
class Occupancy:
    """Per-cell agent occupancy; mutated only by the engine's step loop."""

    occupied: np.ndarray

    @classmethod
    def empty(cls, grid: Grid) -> "Occupancy":
        return cls(np.zeros(grid.shape, dtype=bool))

    @classmethod
    def from_cells(cls, grid: Grid, cells: Iterable[tuple[int, int]]) -> "Occupancy":
        occ = cls.empty(grid)
        for x, y in cells:
            occ.occupy(grid, x, y)
        return occ

    def __contains__(self, cell: tuple[int, int]) -> bool:
        x, y = cell
        h, w = self.occupied.shape
        return 0 <= x < w and 0 <= y < h and bool(self.occupied[y, x])

    def occupy(self, grid: Grid, x: int, y: int) -> None:
        if not grid.walkable(x, y):
            raise ValueError(f"cannot occupy wall cell ({x}, {y})")
        if self.occupied[y, x]:
            raise ValueError(f"cell ({x}, {y}) already occupied")
        self.occupied[y, x] = True

    def release(self, x: int, y: int) -> None:
        self.occupied[y, x] = False


def parse_scenario(text: str | TextIO) -> Grid:
    """Parse the scenario text format.

    Header lines start with ``@`` (``@cellsize <m>`` required, ``@name <s>``
    optional) and precede the map.  Map rows shorter than the longest row
    are padded with walls.
    """
    if not isinstance(text, str):
        text = text.read()
    lines = text.splitlines()
    cell_size: float | None = None
    name = ""
    i = 0
    while i < len(lines) and (lines[i].startswith("@") or not lines[i].strip()):
        line = lines[i].strip()
        i += 1
        if not line:
            continue
        key, _, value = line[1:].partition(" ")
        value = value.strip()
        if key == "cellsize":
            try:
                cell_size = float(value)
            except ValueError:
                raise ScenarioError(f"line {i}: invalid @cellsize value {value!r}") from None
            if not cell_size > 0 or not np.isfinite(cell_size):
                raise ScenarioError(f"line {i}: @cellsize must be a positive number, got {value!r}")
        elif key == "name":
            name = value
        else:
            raise ScenarioError(f"line {i}: unknown header {line!r}")
    if cell_size is None:
        raise ScenarioError("missing required header '@cellsize <meters>'")

    rows = lines[i:]
    while rows and not rows[-1].strip():
        rows.pop()
    if not rows:
        raise ScenarioError("scenario has no map rows")
    width = max(len(row) for row in rows)
    if width == 0:
        raise ScenarioError("scenario map has zero width")

    cells = np.full((len(rows), width), CellKind.WALL, dtype=np.uint8)
    for y, row in enumerate(rows):
        for x, char in enumerate(row):
            try:
                cells[y, x] = CHAR_TO_KIND[char]
            except KeyError:
                raise ScenarioError(
                    f"unknown map character {char!r} at row {y}, column {x}"
                ) from None
    return Grid(cells, cell_size=cell_size, name=name)


def serialize_scenario(grid: Grid) -> str:
    lines = [f"@cellsize {grid.cell_size!r}"]
    if grid.name:
        lines.append(f"@name {grid.name}")
    lookup = np.array([KIND_TO_CHAR[CellKind(k)] for k in range(len(CellKind))])
    lines.extend("".join(row) for row in lookup[grid.cells])
    return "\n".join(lines) + "\n"


def load_scenario(path: str | Path) -> Grid:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file {str(path)!r}: {exc.strerror}") from None
    return parse_scenario(text)


def bundled_scenarios() -> list[str]:
    return sorted(p.name for p in resources.files("dynpot.data").iterdir() if p.name.endswith(".map"))


def load_bundled(name: str) -> Grid:
    """Load one of the scenario files shipped in ``dynpot/data``."""
    if not name.endswith(".map"):
        name += ".map"
    ref = resources.files("dynpot.data").joinpath(name)
    if not ref.is_file():
        raise ScenarioError(f"no bundled scenario named {name!r}")
    return parse_scenario(ref.read_text(encoding="utf-8"))
