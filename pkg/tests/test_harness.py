from __future__ import annotations

import io
import math

import numpy as np
import pytest

from dynpot.engine import run
from dynpot.harness import (
    CORRELATION_HEADER,
    SWEEP_HEADER,
    SweepPoint,
    SweepSpec,
    local_correlation,
    read_sweep_csv,
    run_seed,
    run_sweep,
    write_correlation_csv,
    write_sweep_csv,
)
from dynpot.potential import Neighborhood
from dynpot.scenario import load_bundled

from .oracles import pearson, welford

SMALL = dict(agent_count=40, t_max=2000)


@pytest.fixture(scope="module")
def quarter():
    return load_bundled("two_corridor_quarter")


def test_spec_validation(quarter):
    with pytest.raises(ValueError, match="strictly increasing"):
        SweepSpec(quarter, s_add_values=[2, 2])
    with pytest.raises(ValueError, match="empty"):
        SweepSpec(quarter, k_sdyn_values=[])
    with pytest.raises(ValueError, match="runs_per_point"):
        SweepSpec(quarter, runs_per_point=0)


def test_seeds_depend_only_on_coordinates():
    seeds = {run_seed(0, i, r) for i in range(5) for r in range(5)}
    assert len(seeds) == 25
    assert run_seed(3, 1, 2) == run_seed(3, 1, 2) != run_seed(4, 1, 2)
    assert all(0 <= s < 2**64 for s in seeds)


def test_one_point_three_runs(quarter):
    spec = SweepSpec(quarter, [5.0], [1.0], runs_per_point=3, **SMALL)
    [p] = run_sweep(spec)
    assert p.runs == 3 and len(p.samples) == 3
    for name in ("total_time", "mean_egress", "load"):
        values = [getattr(s, name) for s in p.samples]
        mean, std = welford(values)
        assert getattr(p, f"{name}_mean") == pytest.approx(mean, rel=1e-9)
        assert getattr(p, f"{name}_std") == pytest.approx(std, rel=1e-9, abs=1e-12)
        assert min(values) <= getattr(p, f"{name}_mean") <= max(values)


def test_sweep_deterministic_ordered_and_isolated(quarter):
    spec = SweepSpec(quarter, [1.0, 5.0], [0.0, 2.0], runs_per_point=2, base_seed=17, **SMALL)
    a = run_sweep(spec)
    assert [(p.s_add, p.k_sdyn) for p in a] == [(1.0, 0.0), (1.0, 2.0), (5.0, 0.0), (5.0, 2.0)]
    assert run_sweep(spec) == a
    more = run_sweep(SweepSpec(quarter, [1.0, 5.0], [0.0, 2.0], runs_per_point=3, base_seed=17, **SMALL))
    for p, q in zip(a, more):
        assert q.samples[:2] == p.samples


def test_null_s_add_matches_static_baseline(quarter):
    spec = SweepSpec(quarter, [1.0], [0.0, 3.0], runs_per_point=2, **SMALL)
    base, coupled = run_sweep(spec)
    assert coupled.load_mean == 0
    # the points use different seeds, so rerun each coupled seed without coupling
    for s in coupled.samples:
        m = run(spec.config(1.0, 0.0, s.seed))
        assert (m.total_time, m.mean_egress, m.longer_corridor_load) == (s.total_time, s.mean_egress, s.load)


def test_parallel_sweep_matches_serial(quarter):
    spec = SweepSpec(quarter, [2.0, 6.0], [1.0], runs_per_point=2, **SMALL)
    assert run_sweep(spec, workers=2) == run_sweep(spec)


def test_failed_point_is_flagged_not_fatal(quarter):
    spec = SweepSpec(quarter, [0.5, 2.0], [1.0], runs_per_point=1, **SMALL)
    bad, good = run_sweep(spec)
    assert bad.failed and "s_add" in bad.error and math.isnan(bad.load_mean)
    assert not good.failed and good.runs == 1


def test_sweep_csv_round_trip(quarter):
    spec = SweepSpec(quarter, [2.0, 4.0], [1.0, 2.0], runs_per_point=2, **SMALL)
    points = run_sweep(spec)
    buf = io.StringIO()
    write_sweep_csv(points, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == ",".join(SWEEP_HEADER) and len(lines) == 5
    back = read_sweep_csv(io.StringIO(buf.getvalue()))
    for p, q in zip(points, back):
        assert (p.s_add, p.k_sdyn, p.runs, p.mean_egress_mean, p.load_std) == (
            q.s_add, q.k_sdyn, q.runs, q.mean_egress_mean, q.load_std)
    assert len(local_correlation(back)) == 4


def test_read_sweep_errors(tmp_path):
    with pytest.raises(ValueError, match="not a sweep CSV"):
        read_sweep_csv(io.StringIO("a,b\n"))
    with pytest.raises(ValueError, match="line 2"):
        read_sweep_csv(io.StringIO(",".join(SWEEP_HEADER) + "\n1,2\n"))
    with pytest.raises(ValueError, match="cannot read"):
        read_sweep_csv(tmp_path / "missing.csv")


# -- correlation -------------------------------------------------------------

def synthetic(egress, load, s_vals=None, k_vals=None):
    egress, load = np.asarray(egress, float), np.asarray(load, float)
    s_vals = s_vals or [float(i + 1) for i in range(egress.shape[0])]
    k_vals = k_vals or [float(j) for j in range(egress.shape[1])]
    return [
        SweepPoint(s, k, 1, mean_egress_mean=egress[i, j], load_mean=load[i, j])
        for i, s in enumerate(s_vals)
        for j, k in enumerate(k_vals)
    ]


def neighbours(i, j, n, m, moore):
    offs = [(a, b) for a in (-1, 0, 1) for b in (-1, 0, 1)] if moore else [(0, 0), (-1, 0), (1, 0), (0, -1), (0, 1)]
    return [(i + a, j + b) for a, b in offs if 0 <= i + a < n and 0 <= j + b < m]


@pytest.mark.parametrize("nb", list(Neighborhood))
def test_perfect_anticorrelation(nb):
    rng = np.random.default_rng(0)
    egress = rng.random((4, 5)) * 100
    out = local_correlation(synthetic(egress, -egress), nb)
    assert all(c.defined and c.corr == pytest.approx(-1.0, abs=1e-12) for c in out)


def test_constant_load_is_undefined():
    out = local_correlation(synthetic(np.arange(12.0).reshape(3, 4), np.full((3, 4), 7.0)))
    assert not any(c.defined for c in out)
    assert all(math.isnan(c.corr) for c in out)


@pytest.mark.parametrize("moore", [False, True])
def test_random_grid_matches_pearson_oracle(moore):
    rng = np.random.default_rng(5)
    for _ in range(10):
        egress, load = rng.random((4, 4)) * 50, rng.random((4, 4)) * 300
        out = local_correlation(synthetic(egress, load), "moore" if moore else "vn")
        for c, (i, j) in zip(out, [(i, j) for i in range(4) for j in range(4)]):
            idx = neighbours(i, j, 4, 4, moore)
            expected = pearson([egress[a, b] for a, b in idx], [load[a, b] for a, b in idx])
            assert c.defined and abs(c.corr - expected) <= 1e-9


def test_corner_with_two_neighbours_is_defined_when_nonconstant():
    # a corner with von Neumann neighbours uses 3 points
    egress = np.array([[1.0, 2.0], [3.0, 5.0]])
    out = local_correlation(synthetic(egress, egress * 2))
    assert all(c.defined and c.corr == pytest.approx(1.0) for c in out)


def test_non_rectangular_input_rejected():
    pts = synthetic(np.ones((2, 2)), np.ones((2, 2)))[:-1]
    with pytest.raises(ValueError, match="rectangular"):
        local_correlation(pts)
    dup = synthetic(np.ones((1, 2)), np.ones((1, 2)))
    with pytest.raises(ValueError, match="duplicate"):
        local_correlation(dup + dup[:1])


def test_correlation_csv():
    out = local_correlation(synthetic([[1.0, 2.0]], [[2.0, 1.0]]))
    buf = io.StringIO()
    write_correlation_csv(out, buf)
    assert buf.getvalue().splitlines() == [",".join(CORRELATION_HEADER), "1.0,0.0,-1.0,vn,true", "1.0,1.0,-1.0,vn,true"]
