"""Time the compiled and pure-Python kernels on the bundled two-corridor maps.

    python benchmarks/bench_backends.py [--scale full|quarter] [--repeat N]

Reports the two fills (Manhattan + Chebyshev) behind one dynamic field and one
batch of agent updates, for a crowded snapshot taken from a real run.
"""

from __future__ import annotations

import argparse
import statistics
import time

import numpy as np

from dynpot._backend import BACKENDS, get_kernels
from dynpot.engine import RunConfig, Simulation
from dynpot.model import CouplingParams
from dynpot.potential import CostModel
from dynpot.scenario import load_bundled

MAPS = {"full": ("two_corridor", 4000, 60), "quarter": ("two_corridor_quarter", 400, 30)}


def snapshot(name: str, agents: int, warmup: int) -> Simulation:
    cfg = RunConfig(load_bundled(name), agent_count=agents, cost=CostModel(10.0),
                    coupling=CouplingParams(1.0, 1.0), seed=1)
    sim = Simulation(cfg)
    for _ in range(warmup):
        sim.step()
    return sim


def time_call(fn, repeat: int) -> float:
    samples = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - start)
    return statistics.median(samples)


def bench(sim: Simulation, backend: str, repeat: int) -> tuple[float, float]:
    k = get_kernels(backend)
    occupied = (sim.occ >= 0).astype(np.uint8)
    args = (sim.walkable, occupied, sim.sources, sim.padded_width)

    def fields():
        k.fill(*args, False, 10.0)
        k.fill(*args, True, 10.0)

    dyn = sim._dynamic_field()
    active = np.flatnonzero(sim.pos >= 0).astype(np.intp)
    u = np.random.default_rng(0).random(len(active))
    tab = sim.table

    def agents():
        occ, pos = sim.occ.copy(), sim.pos.copy()
        k.step_agents(sim.kinds, occ, sim.static, dyn, 1.0, 1.0, pos, sim.vmax, active, u,
                      tab.cand_delta, tab.cand_radius, tab.touch_start, tab.touch_delta)

    return time_call(fields, repeat), time_call(agents, repeat)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--scale", choices=sorted(MAPS), default="full")
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    name, agents, warmup = MAPS[args.scale]
    sim = snapshot(name, agents, warmup)
    print(f"{name}: {sim.grid.width}x{sim.grid.height} cells, {sim.in_system} agents in the system")
    print(f"{'backend':<10}{'fields (ms)':>14}{'agents (ms)':>14}")
    results = {}
    for backend in sorted(BACKENDS):
        results[backend] = bench(sim, backend, args.repeat)
        f, a = results[backend]
        print(f"{backend:<10}{1000 * f:>14.2f}{1000 * a:>14.2f}")
    if len(results) == 2:
        (pf, pa), (cf, ca) = results["python"], results["compiled"]
        print(f"speed-up   {pf / cf:>13.1f}x{pa / ca:>13.1f}x")


if __name__ == "__main__":
    main()
