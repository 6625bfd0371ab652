import time
from pathlib import Path

import pytest

from greenwave.datasets import TELEGRAPH_BASELINE_S, scenario_document, telegraph_corridor, telegraph_plan
from greenwave.simulator import Scenario, run_scenario, scenario_from_dict
from greenwave.timing import build_timing_table

DATA = Path(__file__).parent / "data"

# criterion number -> (passed, detail), filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def corridor():
    return telegraph_corridor()


@pytest.fixture(scope="session")
def plan():
    return telegraph_plan()


@pytest.fixture(scope="session")
def table(corridor, plan):
    return build_timing_table(corridor, plan)


@pytest.fixture(scope="session")
def baseline():
    return TELEGRAPH_BASELINE_S


class SimCache:
    """Runs each distinct scenario once per test session."""

    def __init__(self):
        self._store = {}
        self.seconds = {}

    @staticmethod
    def _key(scenario: Scenario) -> str:
        rest = {k: v for k, v in vars(scenario).items() if k != "mixture"}
        return repr(sorted((k.value, v) for k, v in scenario.mixture.items())) + repr(rest)

    def run(self, scenario: Scenario):
        key = self._key(scenario)
        if key not in self._store:
            corridor, plan = telegraph_corridor(), telegraph_plan()
            table = build_timing_table(corridor, plan)
            t0 = time.perf_counter()
            self._store[key] = run_scenario(corridor, plan, table, scenario)
            self.seconds[key] = time.perf_counter() - t0
        return self._store[key]

    def elapsed(self, scenario: Scenario) -> float:
        self.run(scenario)
        return self.seconds[self._key(scenario)]

    @staticmethod
    def scenario(name: str, **overrides) -> Scenario:
        doc = dict(scenario_document(name))
        doc.update(overrides)
        return scenario_from_dict(doc)

    def shipped(self, name: str, **overrides):
        return self.run(self.scenario(name, **overrides))


@pytest.fixture(scope="session")
def sims():
    return SimCache()
