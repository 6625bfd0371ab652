import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from greenwave.dynamics import DriverKind
from greenwave.errors import ScenarioError
from greenwave.simulator import (
    Scenario,
    collision_violations,
    compute_metrics,
    draw_mixture,
    scenario_from_dict,
    scenario_to_dict,
    signal_violations,
    steady_state_flag,
    wave_metrics,
)
from greenwave.waves import NORTH, SOUTH

D, W, CH, T = DriverKind.DINGO, DriverKind.WOLF, DriverKind.CHEETAH, DriverKind.TORTOISE
SEED = 20240607


def pure(kind, **kw):
    return Scenario(mixture={kind: 1.0}, rng_seed=SEED, **kw)


class TestScenario:
    def test_fractions_must_sum_to_one(self):
        with pytest.raises(ScenarioError, match="sum"):
            Scenario(mixture={D: 0.7, W: 0.2})

    @pytest.mark.parametrize(
        "kw",
        [
            {"vehicles_per_wave": 0},
            {"headway": 0},
            {"direction": "east"},
            {"arrival_model": "poisson"},
            {"arrival_model": "uniform"},
        ],
    )
    def test_rejects(self, kw):
        with pytest.raises(ScenarioError):
            Scenario(mixture={D: 1.0}, **kw)

    def test_document_round_trip(self):
        s = Scenario(mixture={D: 0.8, CH: 0.2}, arrival_model="poisson", poisson_mean=4.0, name="x")
        assert scenario_from_dict(scenario_to_dict(s)) == s

    def test_headway_alias(self):
        assert scenario_from_dict({"mixture": {"wolf": 1}, "headway_s": 3}).headway == 3.0


class TestDrawMixture:
    def test_all_majority(self):
        assert draw_mixture(1, 27, {D: 1.0, T: 0.0}) == [D] * 27

    def test_all_minority(self):
        assert draw_mixture(1, 5, {D: 0.0, T: 1.0}) == [T] * 5

    def test_reference_seed(self):
        kinds = draw_mixture(SEED, 27, {D: 0.8, W: 0.2})
        assert kinds.count(W) == 6

    @given(st.integers(0, 2**32 - 1), st.integers(1, 60), st.floats(0, 1))
    @settings(max_examples=30)
    def test_deterministic(self, seed, n, p):
        mix = {D: 1 - p, CH: p}
        assert draw_mixture(seed, n, mix) == draw_mixture(seed, n, mix)


def audits(logs, scenario, corridor, plan, table):
    return (
        signal_violations(logs, corridor, plan, table, scenario.direction),
        collision_violations(logs, scenario.headway),
    )


@pytest.fixture(scope="module")
def dingo_north(sims):
    s = pure(D)
    return s, sims.run(s)


class TestDingoRun:
    def test_travel_time(self, dingo_north, baseline):
        _, logs = dingo_north
        m = compute_metrics(logs, baseline)
        assert m.mean_travel_time == pytest.approx(907, abs=3)
        assert m.mean_delay == pytest.approx(m.mean_travel_time - baseline)
        assert m.pct_delay == pytest.approx(100 * m.mean_delay / baseline)

    def test_lead_vehicles_never_stop(self, dingo_north):
        _, logs = dingo_north
        assert all(lg.stop_count == 0 for lg in logs[:20])

    def test_audits(self, dingo_north, corridor, plan, table):
        s, logs = dingo_north
        assert audits(logs, s, corridor, plan, table) == ([], [])

    def test_followers_finish_after_leaders(self, dingo_north):
        _, logs = dingo_north
        finishes = [lg.finish_time for lg in logs]
        assert finishes == sorted(finishes)
        assert all(lg.finish_time > lg.entry_time for lg in logs)

    def test_deterministic(self, dingo_north, corridor, plan, table, baseline):
        from greenwave.simulator import run_scenario

        s, logs = dingo_north
        again = run_scenario(corridor, plan, table, s)
        assert compute_metrics(again, baseline) == compute_metrics(logs, baseline)
        assert all(np.array_equal(a.x, b.x) for a, b in zip(again, logs))

    def test_southbound_matches(self, dingo_north, sims, baseline, corridor, plan, table):
        south = pure(D, direction=SOUTH)
        logs = sims.run(south)
        assert audits(logs, south, corridor, plan, table) == ([], [])
        n = compute_metrics(dingo_north[1], baseline).mean_travel_time
        assert compute_metrics(logs, baseline).mean_travel_time == pytest.approx(n, abs=1.0)


@pytest.fixture(scope="module")
def pure_runs(sims):
    return {k: (pure(k), sims.run(pure(k))) for k in (D, W, CH, T)}


def test_pure_population_ordering(pure_runs, baseline):
    m = {k: compute_metrics(logs, baseline) for k, (_, logs) in pure_runs.items()}
    assert m[T].mean_travel_time > m[W].mean_travel_time > m[D].mean_travel_time
    assert m[T].mean_red_light_stops > m[W].mean_red_light_stops


@pytest.mark.parametrize("kind", [W, CH, T])
def test_pure_runs_obey_signals(pure_runs, kind, corridor, plan, table):
    s, logs = pure_runs[kind]
    assert audits(logs, s, corridor, plan, table) == ([], [])


def test_stop_records_are_consistent(pure_runs):
    for _, logs in pure_runs.values():
        for lg in logs:
            assert all(st_.wait >= 0 for st_ in lg.stops)
            assert lg.total_wait == pytest.approx(sum(st_.wait for st_ in lg.stops))


def test_steady_flags(pure_runs):
    assert steady_state_flag(pure_runs[CH][1])
    assert not steady_state_flag(pure_runs[T][1])


def test_mixture_ordering(sims, baseline, corridor, plan, table):
    cheetah = Scenario(mixture={D: 0.8, CH: 0.2}, rng_seed=7)
    tortoise = Scenario(mixture={D: 0.8, T: 0.2}, rng_seed=7)
    a, b = sims.run(cheetah), sims.run(tortoise)
    assert [lg.kind is D for lg in a] == [lg.kind is D for lg in b]
    assert compute_metrics(a, baseline).mean_travel_time < compute_metrics(b, baseline).mean_travel_time
    assert audits(a, cheetah, corridor, plan, table) == ([], [])
    assert audits(b, tortoise, corridor, plan, table) == ([], [])


def test_realized_fraction_reported(sims, baseline):
    logs = sims.shipped("sim7")
    m = compute_metrics(logs, baseline)
    assert m.realized_fractions == {"dingo": 21 / 27, "wolf": 6 / 27}


def test_poisson_arrivals_respect_headway(sims, corridor, plan, table):
    s = Scenario(mixture={W: 1.0}, vehicles_per_wave=8, arrival_model="poisson", poisson_mean=6.0, rng_seed=3)
    logs = sims.run(s)
    entries = np.array([lg.entry_time for lg in logs])
    assert np.all(np.diff(entries) >= s.headway - 1e-9)
    assert audits(logs, s, corridor, plan, table) == ([], [])


def test_single_vehicle_has_no_flow(sims, baseline):
    logs = sims.run(pure(W, vehicles_per_wave=1))
    m = compute_metrics(logs, baseline)
    assert m.max_flow is None and m.mean_flow is None


def test_empty_logs_rejected(baseline):
    with pytest.raises(ScenarioError):
        compute_metrics([], baseline)


def test_waves_repeat_exactly(sims, baseline):
    one = sims.run(pure(CH))
    many = sims.run(pure(CH, populate_all_waves=True))
    per_wave = wave_metrics(many, baseline)
    assert len(per_wave) == 3
    assert all(m == per_wave[0] for m in per_wave)
    assert per_wave[0] == compute_metrics(one, baseline)
