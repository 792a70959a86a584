"""Dynamic distance potential fields for pedestrian route choice."""

from __future__ import annotations

from ._backend import BACKENDS, DEFAULT as BACKEND
from .corridors import build_two_corridor_scenario
from .engine import RunConfig, RunMetrics, Simulation, run
from .model import Agent, CouplingParams, SpeedDistribution
from .potential import CostModel, Neighborhood, dynamic_field, fill, static_field, v1_field
from .scenario import CellKind, Grid, Occupancy, ScenarioError, load_bundled, load_scenario, parse_scenario

__all__ = [
    "BACKEND",
    "BACKENDS",
    "Agent",
    "CellKind",
    "CostModel",
    "CouplingParams",
    "Grid",
    "Neighborhood",
    "Occupancy",
    "RunConfig",
    "RunMetrics",
    "ScenarioError",
    "Simulation",
    "SpeedDistribution",
    "build_two_corridor_scenario",
    "dynamic_field",
    "fill",
    "load_bundled",
    "load_scenario",
    "parse_scenario",
    "run",
    "static_field",
    "v1_field",
]

__version__ = "0.1.0"
