import csv

import pytest
from hypothesis import assume, given, strategies as st

from greenwave.corridor import Corridor, Node, NodePlan, SignalSite
from greenwave.errors import DomainError, PlanError, PlanValidationError
from greenwave.timing import (
    build_timing_table,
    cross_green,
    d_param,
    forward_green,
    midblock_reduced_offset,
    node_offset,
    wave_speed,
)

from conftest import DATA


def golden_rows():
    with open(DATA / "telegraph_golden_timing.csv", newline="") as fh:
        return list(csv.DictReader(fh))


class TestFormulas:
    def test_wave_speed(self):
        assert wave_speed(1.046, 60) == pytest.approx(62.76)
        assert wave_speed(1.126, 60) == pytest.approx(67.56)
        assert wave_speed(1.046, 120) == pytest.approx(wave_speed(1.046, 60) / 2)

    @pytest.mark.parametrize("L, T", [(0, 60), (1, 0), (-1, 60)])
    def test_wave_speed_rejects(self, L, T):
        with pytest.raises(DomainError):
            wave_speed(L, T)

    def test_forward_green(self):
        assert forward_green(0.1523, 60) == pytest.approx(78.3, abs=0.05)
        assert forward_green(0, 60) == 60
        assert forward_green(0.3257, 60) == pytest.approx(99.1, abs=0.05)

    def test_cross_green(self):
        assert cross_green(0.1523, 60) == pytest.approx(41.7, abs=0.05)
        assert cross_green(0, 60) == 60
        assert cross_green(0.4999999, 60) == pytest.approx(0, abs=1e-4)

    @pytest.mark.parametrize("xi", [0.5, -0.01, 0.7])
    def test_xi_out_of_range(self, xi):
        with pytest.raises(DomainError):
            forward_green(xi, 60)

    def test_reduced_offset_examples(self):
        # table values are printed to 0.1 s from 4-digit xi
        assert midblock_reduced_offset(0.1523, 0.152, 60) == pytest.approx(110.9, abs=0.2)
        assert midblock_reduced_offset(0.0425, 0.958, 60) == pytest.approx(57.4, abs=0.2)
        assert midblock_reduced_offset(0.2677, 0.733, 60) == pytest.approx(43.9, abs=0.2)

    def test_reduced_offset_singular(self):
        with pytest.raises(DomainError):
            midblock_reduced_offset(0.3, 0.5, 60)


class TestPlanGeometry:
    def test_d_examples(self, plan):
        # shipped odometers put V 4 at 3.714, one metre off the 1.438 km block
        assert d_param(plan, 0.159) == pytest.approx(0.152, abs=2e-3)
        assert d_param(plan, 3.652) == pytest.approx(0.958, abs=2e-3)
        assert d_param(plan, 6.447) == pytest.approx(0.833, abs=2e-3)

    def test_d_undefined_on_node(self, plan):
        with pytest.raises(DomainError):
            d_param(plan, 1.046)

    def test_node_offsets(self, plan):
        assert node_offset(plan, 4) == (240, 0)
        assert node_offset(plan, 0) == (0, 0)
        assert node_offset(plan, 15) == (900, 60)
        with pytest.raises(PlanError):
            node_offset(plan, 17)


def test_golden_table(table):
    rows = golden_rows()
    assert len(rows) == len(table) == 29
    for want, got in zip(rows, table):
        assert got.name == want["name"]
        assert got.odometer == pytest.approx(float(want["odometer_km"]), abs=1e-9)
        assert got.is_node == (want["is_node"] == "1")
        assert got.L_g == pytest.approx(float(want["L_g_km"]), abs=0.002)
        assert got.v_g == pytest.approx(float(want["v_g_kph"]), abs=0.2)
        assert got.xi == pytest.approx(float(want["xi"]), abs=0.002)
        for col, attr in (("T_gf_s", "T_gf"), ("T_gx_s", "T_gx"), ("T_roffset_s", "T_roffset")):
            assert getattr(got, attr) == pytest.approx(float(want[col]), abs=0.2), (got.name, attr)
        if got.is_node:
            assert got.T_offset == float(want["T_offset_s"])


def test_two_nodes_only():
    c = Corridor((SignalSite("A", 0.0, 60), SignalSite("B", 1.0, 60)))
    p = NodePlan((Node.real(c.sites[0]), Node.real(c.sites[1])))
    t = build_timing_table(c, p)
    assert [r.T_roffset for r in t] == [0, 60]


def test_150s_scales_speeds(corridor, plan, table):
    slow = build_timing_table(corridor, plan.with_cycle_time(150))
    for a, b in zip(table, slow):
        assert b.v_g == pytest.approx(a.v_g * 120 / 150, rel=1e-12)


def test_invalid_plan_propagates(corridor, plan):
    with pytest.raises(PlanValidationError):
        build_timing_table(corridor, plan, xi_max=0.2)


def test_table_invariants(table):
    C = table.cycle_time
    assert table.green_time == C / 2
    for r in table:
        assert r.T_gf + r.T_gx == pytest.approx(C, abs=1e-12)
        assert 0 <= r.T_roffset < C
        assert (r.T_roffset + r.T_gf + r.T_gx) % C == pytest.approx(r.T_roffset, abs=1e-9)
        assert r.v_g / r.L_g == pytest.approx(60.0, abs=1e-9)
        if r.is_node:
            assert r.xi == 0 and r.T_gf == r.T_gx == table.green_time
        else:
            assert 0 < r.d < 1


@st.composite
def random_plans(draw):
    n = draw(st.integers(2, 6))
    lengths = draw(st.lists(st.floats(0.3, 2.0), min_size=n - 1, max_size=n - 1))
    odo = [0.0]
    for L in lengths:
        odo.append(round(odo[-1] + L, 6))
    sites = []
    for a, b in zip(odo, odo[1:]):
        sites.append(SignalSite(f"N{len(sites)}", a, draw(st.floats(30, 90))))
        f = draw(st.floats(0.05, 0.45))
        if draw(st.booleans()):
            f = 1 - f
        sites.append(SignalSite(f"M{len(sites)}", round(a + f * (b - a), 6), draw(st.floats(30, 90))))
    sites.append(SignalSite("End", odo[-1], 50.0))
    c = Corridor(tuple(sites))
    nodes = [Node.real(s) for s in sites if s.name.startswith("N") or s.name == "End"]
    cycle = draw(st.sampled_from([60.0, 90.0, 120.0, 150.0]))
    return c, NodePlan(tuple(nodes), cycle)


@given(random_plans())
def test_invariants_on_random_plans(cp):
    c, p = cp
    try:
        t = build_timing_table(c, p, xi_max=0.49)
    except PlanValidationError:
        assume(False)
    C = p.cycle_time
    for r in t:
        assert r.T_gf + r.T_gx == pytest.approx(C, abs=1e-9)
        assert 0 <= r.T_roffset < C
        assert r.v_g / r.L_g == pytest.approx(3600 / p.green_time, rel=1e-12)
        assert 0 <= r.xi < 0.5
