from __future__ import annotations

import io

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dynpot.corridors import build_two_corridor_layout, build_two_corridor_scenario, measure
from dynpot.potential import static_field, v1_field
from dynpot.scenario import (
    CellKind,
    Grid,
    Occupancy,
    ScenarioError,
    bundled_scenarios,
    load_bundled,
    load_scenario,
    parse_scenario,
    serialize_scenario,
)


def test_smallest_map():
    g = parse_scenario("@cellsize 0.4\n###\n#D#\n###\n")
    assert (g.width, g.height, g.cell_size) == (3, 3, 0.4)
    assert g.cells_of(CellKind.DESTINATION) == [(1, 1)]


def test_header_and_padding():
    g = parse_scenario(io.StringIO("@name tiny\n@cellsize 0.5\n\nO..D\n.\n"))
    assert g.name == "tiny" and g.cell_size == 0.5
    assert g.shape == (2, 4)
    assert [g.kind(x, 1) for x in range(4)] == [CellKind.FREE] + [CellKind.WALL] * 3


def test_unknown_character_names_position():
    with pytest.raises(ScenarioError, match=r"'Q' at row 1, column 2"):
        parse_scenario("@cellsize 0.4\n###\n#.Q\n")


@pytest.mark.parametrize(
    "text, message",
    [
        ("###\n#D#\n", "missing required header"),
        ("@cellsize abc\n#D#\n", "invalid @cellsize"),
        ("@cellsize -1\n#D#\n", "positive"),
        ("@cellsize 0.4\n@speed 3\n#D#\n", "unknown header"),
        ("@cellsize 0.4\n", "no map rows"),
    ],
)
def test_header_errors(text, message):
    with pytest.raises(ScenarioError, match=message):
        parse_scenario(text)


def test_outside_reads_are_walls():
    g = parse_scenario("@cellsize 0.4\n...\n.D.\n")
    for x, y in [(-1, 0), (0, -1), (3, 0), (0, 2), (-5, -5), (100, 1)]:
        assert g.kind(x, y) is CellKind.WALL
        assert not g.walkable(x, y)


def test_grid_is_immutable():
    g = parse_scenario("@cellsize 0.4\n.D\n")
    with pytest.raises(ValueError):
        g.cells[0, 0] = 0


def test_walkable_kinds():
    assert [k.walkable for k in CellKind] == [False, True, True, True, True]


def test_occupancy_rules():
    g = parse_scenario("@cellsize 0.4\n#.D\n")
    occ = Occupancy.empty(g)
    occ.occupy(g, 1, 0)
    assert (1, 0) in occ and (0, 0) not in occ and (9, 9) not in occ
    with pytest.raises(ValueError, match="already"):
        occ.occupy(g, 1, 0)
    with pytest.raises(ValueError, match="wall"):
        occ.occupy(g, 0, 0)


map_rows = st.lists(st.text(alphabet="#.ODM", min_size=1, max_size=12), min_size=1, max_size=8)


@given(map_rows)
def test_round_trip(rows):
    width = max(map(len, rows))
    text = "@cellsize 0.4\n" + "\n".join(r.ljust(width, "#") for r in rows) + "\n"
    g = parse_scenario(text)
    assert serialize_scenario(g) == text
    assert parse_scenario(serialize_scenario(g)) == g


def test_load_scenario_file_errors(tmp_path):
    with pytest.raises(ScenarioError, match="cannot read"):
        load_scenario(tmp_path / "missing.map")
    with pytest.raises(ScenarioError, match="no bundled"):
        load_bundled("nope")


# -- two-corridor geometry ---------------------------------------------------

def branch_lengths(grid: Grid) -> tuple[float, float]:
    """Shortest origin->destination V1 length through the short and the long branch.

    Finds the branches from the measurement band column: the band spans the
    long branch; the topmost walkable run in that column is the short one.
    """
    ys, xs = np.nonzero(grid.cells == CellKind.MEASUREMENT)
    col = int(xs.min())
    walk = np.nonzero(grid.walkable_mask[:, col])[0]
    long_rows = set(ys.tolist())
    short_rows = [y for y in walk if y not in long_rows]
    origin = grid.mask(CellKind.ORIGIN)
    out = []
    for blocked in (sorted(long_rows), short_rows):
        cells = grid.cells.copy()
        cells[blocked, col] = CellKind.WALL
        out.append(float(v1_field(grid.with_cells(cells))[origin].min()))
    return out[0], out[1]


@pytest.fixture(scope="module")
def full_map():
    return load_bundled("two_corridor")


def test_bundled_maps_listed():
    assert {"two_corridor.map", "two_corridor_quarter.map"} <= set(bundled_scenarios())


def test_bundled_map_difference_is_32_m(full_map):
    short, long_ = branch_lengths(full_map)
    assert abs((long_ - short) - 80) <= 1
    assert abs((long_ - short) * full_map.cell_size - 32.0) <= full_map.cell_size


def test_bundled_maps_match_builder(full_map):
    assert build_two_corridor_scenario(1.0) == full_map
    assert build_two_corridor_scenario(0.25) == load_bundled("two_corridor_quarter")


def test_walking_distances_scale_one(full_map):
    report = measure(build_two_corridor_layout(1.0))
    assert report.shortest_walk_m == pytest.approx(325, rel=0.05)
    assert report.longest_walk_m == pytest.approx(418, rel=0.05)
    s = static_field(full_map)[full_map.mask(CellKind.ORIGIN)] * full_map.cell_size
    assert s.min() == pytest.approx(325, rel=0.05) and s.max() == pytest.approx(418, rel=0.05)


@pytest.mark.parametrize("scale", [0.25, 0.5])
def test_scaled_difference(scale):
    g = build_two_corridor_scenario(scale)
    short, long_ = branch_lengths(g)
    assert abs((long_ - short) - 80 * scale) <= 1


def test_degenerate_scale_rejected():
    with pytest.raises(ScenarioError, match="wide"):
        build_two_corridor_scenario(0.01)
    with pytest.raises(ScenarioError, match=r"\(0, 1\]"):
        build_two_corridor_scenario(1.5)


@pytest.mark.parametrize("name", ["two_corridor", "two_corridor_quarter"])
def test_measurement_band_is_full_cross_section(name):
    g = load_bundled(name)
    g.check_runnable()
    ys, xs = np.nonzero(g.cells == CellKind.MEASUREMENT)
    col = int(xs.min())
    walk = np.nonzero(g.walkable_mask[:, col])[0]
    short_rows = [y for y in walk if y not in set(ys.tolist())]
    cells = g.cells.copy()
    cells[short_rows, col] = CellKind.WALL
    assert np.isfinite(static_field(g.with_cells(cells))[g.mask(CellKind.ORIGIN)]).all()
    cells[g.cells == CellKind.MEASUREMENT] = CellKind.WALL
    assert np.isinf(static_field(g.with_cells(cells))[g.mask(CellKind.ORIGIN)]).all()


@pytest.mark.parametrize("name", ["two_corridor", "two_corridor_quarter"])
def test_static_watershed_inside_long_corridor(name):
    """Along the long route the static field climbs to an interior maximum, then falls."""
    g = load_bundled(name)
    s = static_field(g)
    ys, xs = np.nonzero(g.cells == CellKind.MEASUREMENT)
    long_mid = int(np.median(ys))
    origin_rows = np.nonzero(g.mask(CellKind.ORIGIN).any(axis=1))[0]
    leg = next(x for x in range(g.width) if g.walkable_mask[long_mid, x])
    rows = slice(origin_rows.max() + 2, int(ys.min()))
    leg_cols = slice(leg, leg + int(g.walkable_mask[rows.start, leg:].argmin()))
    leg_vals = s[rows, leg_cols]
    ry, rx = np.unravel_index(np.argmax(leg_vals), leg_vals.shape)
    py, px = rows.start + ry, leg_cols.start + rx
    assert rows.start < py < rows.stop - 1
    peak = s[py, px]
    neighbours = s[py - 1 : py + 2, px - 1 : px + 2]
    assert peak >= neighbours[np.isfinite(neighbours)].max()
    # strictly above both ends: where the leg leaves the hall, and the band
    assert peak > leg_vals[0].max() + 1
    assert peak > s[g.cells == CellKind.MEASUREMENT].max() + 1
