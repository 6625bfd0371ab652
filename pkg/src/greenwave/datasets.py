"""Shipped Telegraph Road fixtures."""

from __future__ import annotations

import json
from importlib import resources

from .corridor import Corridor, NodePlan, load_corridor, load_plan

#: Mean dingo travel time (s) used as the delay baseline for the shipped dataset.
TELEGRAPH_BASELINE_S = 907.0


def read_resource(name: str) -> str:
    return resources.files(__package__).joinpath("data", name).read_text(encoding="utf-8")


def telegraph_corridor() -> Corridor:
    return load_corridor(read_resource("telegraph_corridor.csv"))


def telegraph_plan(cycle_time: float | None = None) -> NodePlan:
    plan = load_plan(read_resource("telegraph_plan.json"), telegraph_corridor())
    return plan if cycle_time is None else plan.with_cycle_time(cycle_time)


def scenario_names() -> list[str]:
    folder = resources.files(__package__).joinpath("data", "scenarios")
    return sorted(p.name[:-5] for p in folder.iterdir() if p.name.endswith(".json"))


def scenario_document(name: str) -> dict:
    return json.loads(read_resource(f"scenarios/{name}.json"))
