"""Simulation driver: injection, per-step dynamic field, agent updates, metrics."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, TextIO

import numpy as np

from ._backend import get_kernels
from .model import CouplingParams, SpeedDistribution, offset_table
from .potential import (
    CostModel,
    combine_v1,
    destination_sources,
    dynamic_difference,
    pad,
    static_field,
    unpad,
    FieldPair,
)
from .scenario import CellKind, Grid, ScenarioError

SUMMARY_HEADER = "seed,s_add,k_sdyn,total_time,mean_egress,load,completed"
RECORD_HEADER = ("agent_id", "injected_at", "arrived_at", "passed_measurement")


@dataclass(frozen=True)
class RunConfig:
    """Everything a run depends on; metrics are a pure function of it.

    ``dynamic=False`` removes the dynamic field from the update entirely (the
    baseline model).  With ``skip_null_dynamic`` the field is not computed
    when it cannot matter (``k_sdyn == 0`` or ``s_add == 1``).
    """

    grid: Grid
    agent_count: int = 4000
    cost: CostModel = CostModel()
    coupling: CouplingParams = CouplingParams()
    speeds: SpeedDistribution = SpeedDistribution()
    timestep: float = 1.0
    seed: int = 0
    t_max: int = 5000
    dynamic: bool = True
    skip_null_dynamic: bool = True

    def __post_init__(self) -> None:
        if self.agent_count < 1:
            raise ValueError(f"agent_count must be >= 1, got {self.agent_count}")
        if self.t_max < 1:
            raise ValueError(f"t_max must be >= 1, got {self.t_max}")
        if not self.timestep > 0:
            raise ValueError(f"timestep must be positive, got {self.timestep}")

    @property
    def uses_dynamic_field(self) -> bool:
        if not self.dynamic:
            return False
        null = self.coupling.k_sdyn == 0 or self.cost.is_null
        return not (self.skip_null_dynamic and null)


@dataclass(frozen=True)
class AgentRecord:
    agent_id: int
    injected_at: int
    arrived_at: int | None
    passed_measurement: bool
    measured_at: int | None = None


@dataclass
class RunMetrics:
    total_time: float
    mean_egress: float
    longer_corridor_load: int
    per_agent_records: list[AgentRecord]
    completed: bool
    steps: int
    arrival_log: list[tuple[int, int]] = field(default_factory=list, repr=False)


class Simulation:
    """One run's mutable state; advance it with :meth:`step`."""

    def __init__(self, config: RunConfig, backend: str | None = None):
        grid = config.grid
        grid.check_runnable()
        self.config = config
        self.grid = grid
        self.kernels = get_kernels(backend)
        self.padded_width = grid.width + 2
        self.kinds = pad(grid.cells).astype(np.uint8)
        self.walkable = (self.kinds != CellKind.WALL).astype(np.uint8)
        self.sources = destination_sources(grid)
        self.static = pad(static_field(grid), np.inf)
        origin = np.flatnonzero(self.kinds == CellKind.ORIGIN)
        if not np.isfinite(self.static[origin]).all():
            raise ScenarioError("some origin cells cannot reach a destination")
        self.origin_cells = origin.astype(np.intp)
        self.table = offset_table(config.speeds.max_v, self.padded_width)

        n = config.agent_count
        self.rng = np.random.default_rng(config.seed)
        self.occ = np.full(len(self.kinds), -1, dtype=np.intp)
        self.pos = np.full(n, -1, dtype=np.intp)
        self.vmax = config.speeds.sample(self.rng, n).astype(np.intc)
        self.injected_at = np.full(n, -1, dtype=np.int64)
        self.arrived_at = np.full(n, -1, dtype=np.int64)
        self.measured_at = np.full(n, -1, dtype=np.int64)
        self.passed = np.zeros(n, dtype=bool)
        self.next_queued = 0
        self.t = 0
        self.arrival_log: list[tuple[int, int]] = []
        self.dynamic: np.ndarray | None = None
        self._inject()

    # -- state queries -------------------------------------------------
    @property
    def queued(self) -> int:
        return self.config.agent_count - self.next_queued

    @property
    def in_system(self) -> int:
        return int((self.pos >= 0).sum())

    @property
    def arrived(self) -> int:
        return int((self.arrived_at >= 0).sum())

    @property
    def done(self) -> bool:
        return self.arrived == self.config.agent_count

    def occupancy(self) -> np.ndarray:
        """Boolean occupancy table shaped like the grid."""
        return unpad(self.occ >= 0, self.grid.shape)

    def positions(self) -> dict[int, tuple[int, int]]:
        w = self.padded_width
        return {int(a): (int(p % w) - 1, int(p // w) - 1) for a, p in enumerate(self.pos) if p >= 0}

    def dynamic_grid(self) -> np.ndarray | None:
        return None if self.dynamic is None else unpad(self.dynamic, self.grid.shape)

    # -- update ----------------------------------------------------------
    def _inject(self) -> None:
        n = self.config.agent_count
        if self.next_queued >= n:
            return
        free = self.origin_cells[self.occ[self.origin_cells] < 0]
        k = min(len(free), n - self.next_queued)
        if k == 0:
            return
        cells = free[self.rng.choice(len(free), size=k, replace=False)]
        ids = np.arange(self.next_queued, self.next_queued + k)
        self.pos[ids] = cells
        self.occ[cells] = ids
        self.injected_at[ids] = self.t
        self.next_queued += k

    def _dynamic_field(self) -> np.ndarray:
        occupied = (self.occ >= 0).astype(np.uint8)
        s_add = float(self.config.cost.s_add)
        args = (self.walkable, occupied, self.sources, self.padded_width)
        pair = FieldPair(
            manhattan=self.kernels.fill(*args, False, s_add),
            chebyshev=self.kernels.fill(*args, True, s_add),
        )
        return dynamic_difference(combine_v1(pair), self.static)

    def step(self) -> None:
        cfg = self.config
        self.dynamic = self._dynamic_field() if cfg.uses_dynamic_field else None
        t = self.t + 1
        active = np.flatnonzero(self.pos >= 0)
        order = active[self.rng.permutation(len(active))].astype(np.intp)
        u = self.rng.random(len(active))
        tab = self.table
        _, arrived, measured = self.kernels.step_agents(
            self.kinds, self.occ, self.static, self.dynamic,
            cfg.coupling.k_s, cfg.coupling.k_sdyn,
            self.pos, self.vmax, order, u,
            tab.cand_delta, tab.cand_radius, tab.touch_start, tab.touch_delta,
        )
        crossed = order[measured.astype(bool)]
        crossed = crossed[~self.passed[crossed]]
        self.passed[crossed] = True
        self.measured_at[crossed] = t
        for a in order[arrived.astype(bool)]:
            self.arrived_at[a] = t
            self.arrival_log.append((int(a), t))
        self.t = t
        self._inject()

    def run(self, on_step: Callable[["Simulation"], None] | None = None) -> RunMetrics:
        while not self.done and self.t < self.config.t_max:
            self.step()
            if on_step is not None:
                on_step(self)
        return self.metrics()

    def metrics(self) -> RunMetrics:
        dt = self.config.timestep
        done = self.arrived_at >= 0
        if done.any():
            total = float(self.arrived_at[done].max()) * dt
            mean_egress = float(np.mean(self.arrived_at[done] - self.injected_at[done])) * dt
        else:
            total = mean_egress = math.nan
        records = [
            AgentRecord(
                agent_id=a,
                injected_at=int(self.injected_at[a]),
                arrived_at=int(self.arrived_at[a]) if self.arrived_at[a] >= 0 else None,
                passed_measurement=bool(self.passed[a]),
                measured_at=int(self.measured_at[a]) if self.measured_at[a] >= 0 else None,
            )
            for a in range(self.config.agent_count)
        ]
        return RunMetrics(
            total_time=total,
            mean_egress=mean_egress,
            longer_corridor_load=int(self.passed.sum()),
            per_agent_records=records,
            completed=self.done,
            steps=self.t,
            arrival_log=list(self.arrival_log),
        )


def inject_agents(config: RunConfig, backend: str | None = None) -> Simulation:
    """Create a run at step 0: speeds drawn, origin cells filled, the rest queued."""
    return Simulation(config, backend=backend)


def run(config: RunConfig, backend: str | None = None,
        on_step: Callable[[Simulation], None] | None = None) -> RunMetrics:
    return Simulation(config, backend=backend).run(on_step)


def summary_line(config: RunConfig, metrics: RunMetrics) -> str:
    return ",".join(
        [
            str(config.seed),
            repr(float(config.cost.s_add)),
            repr(float(config.coupling.k_sdyn)),
            repr(metrics.total_time),
            repr(metrics.mean_egress),
            str(metrics.longer_corridor_load),
            str(metrics.completed).lower(),
        ]
    )


def write_agent_records(metrics: RunMetrics, out: str | Path | TextIO) -> None:
    if isinstance(out, (str, Path)):
        with open(out, "w", newline="", encoding="utf-8") as fh:
            write_agent_records(metrics, fh)
        return
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(RECORD_HEADER)
    for r in metrics.per_agent_records:
        writer.writerow([
            r.agent_id,
            r.injected_at,
            "" if r.arrived_at is None else r.arrived_at,
            int(r.passed_measurement),
        ])
