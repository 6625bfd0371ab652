import pytest
from hypothesis import given, strategies as st

from greenwave.corridor import (
    Corridor,
    Node,
    NodePlan,
    SignalSite,
    dump_corridor,
    dump_plan,
    load_corridor,
    load_plan,
    segment_of,
    validate_plan,
)
from greenwave.errors import CorridorFormatError, PlanError

HEADER = "name,odometer_km,speed_limit_kph\n"


def test_load_single_row():
    c = load_corridor(HEADER + "Route 1,0.000,72.4\n")
    assert c.sites == (SignalSite("Route 1", 0.0, 72.4),)


def test_empty_corridor_rejected():
    with pytest.raises(CorridorFormatError, match="no sites"):
        load_corridor(HEADER)


def test_tied_odometers_report_line():
    with pytest.raises(CorridorFormatError, match="non-increasing odometer at line 2") as info:
        load_corridor(HEADER + "A,0.0,50\nB,0.0,50\n")
    assert info.value.line == 2


@pytest.mark.parametrize(
    "row, fragment",
    [
        ("B,abc,50", "non-numeric"),
        ("B,1.0", "expected 3 fields"),
        ("B,1.0,0", "non-positive speed limit"),
        ("B,1.0,-3", "non-positive speed limit"),
    ],
)
def test_bad_rows(row, fragment):
    with pytest.raises(CorridorFormatError, match=fragment):
        load_corridor(HEADER + "A,0.0,50\n" + row + "\n")


def test_bad_header():
    with pytest.raises(CorridorFormatError, match="bad header"):
        load_corridor("name,odo,limit\nA,0,50\n")


def test_telegraph_has_bracketing_nodes(corridor, plan):
    assert plan.odometers[0] == 0.0
    assert plan.odometers[-1] == pytest.approx(17.411)
    assert len(plan.nodes) == 17
    assert corridor.sites[0].name == "Route 1"


class TestSegmentOf:
    def test_belvoir(self, plan):
        pos = segment_of(plan, 0.159)
        assert pos.index == 0
        assert pos.x == pytest.approx(0.159)
        assert pos.length == pytest.approx(1.046)
        assert pos.xi == pytest.approx(0.1523, abs=0.002)

    def test_on_node(self, plan):
        assert segment_of(plan, 1.046).xi == 0.0

    def test_second_segment(self, plan):
        pos = segment_of(plan, 1.961)
        assert pos.index == 1
        assert pos.x == pytest.approx(0.314, abs=1e-9)
        assert pos.xi == pytest.approx(0.314 / 1.229, abs=1e-9)
        assert pos.xi == pytest.approx(0.2555, abs=1e-4)

    def test_outside_span(self, plan):
        with pytest.raises(PlanError):
            segment_of(plan, 17.5)

    def test_continuous_across_node(self, plan):
        for o in plan.odometers[1:-1]:
            for eps in (1e-6, -1e-6):
                assert segment_of(plan, o + eps).xi < 1e-5


class TestValidatePlan:
    def test_telegraph_clean_at_049(self, corridor, plan):
        assert validate_plan(corridor, plan, 0.49) == []

    def test_midpoint_singular(self):
        c = Corridor((SignalSite("A", 0.0, 60), SignalSite("M", 1.0, 60), SignalSite("B", 2.0, 60)))
        p = NodePlan((Node.real(c.sites[0]), Node.real(c.sites[2])))
        v = validate_plan(c, p, 0.49)
        assert [x.site for x in v] == ["M"]
        assert "singular point" in v[0].reason

    def test_one_node(self):
        c = Corridor((SignalSite("A", 0.0, 60),))
        v = validate_plan(c, NodePlan((Node.real(c.sites[0]),)))
        assert v[0].reason == "fewer than 2 nodes"

    def test_site_outside_span(self):
        c = Corridor((SignalSite("A", 0.0, 60), SignalSite("B", 1.0, 60), SignalSite("C", 3.0, 60)))
        p = NodePlan((Node.real(c.sites[0]), Node.real(c.sites[1])))
        assert [x.site for x in validate_plan(c, p)] == ["C"]

    def test_per_site_thresholds(self, corridor, plan):
        v = validate_plan(corridor, plan, {"Chynoweth St": 0.1})
        assert [x.site for x in v] == ["Chynoweth St"]


def test_plan_document_round_trip(corridor, plan):
    again = load_plan(dump_plan(plan), corridor)
    assert again == plan


def test_plan_unknown_site(corridor):
    with pytest.raises(CorridorFormatError, match="unknown site"):
        load_plan('{"cycle_time_s": 120, "nodes": [{"kind": "real", "site": "Nowhere"}]}', corridor)


def test_corridor_round_trip_shipped(corridor):
    assert load_corridor(dump_corridor(corridor)) == corridor


names = st.text(alphabet=st.characters(whitelist_categories=("L", "N"), whitelist_characters=" -."), min_size=1, max_size=12).map(
    str.strip
).filter(bool)


@st.composite
def corridors(draw):
    n = draw(st.integers(1, 12))
    gaps = draw(st.lists(st.floats(0.001, 5.0), min_size=n, max_size=n))
    odo, acc = [], draw(st.floats(0.0, 3.0))
    for g in gaps:
        odo.append(acc)
        acc += g
    limits = draw(st.lists(st.floats(1.0, 130.0), min_size=n, max_size=n))
    labels = draw(st.lists(names, min_size=n, max_size=n))
    return Corridor(tuple(SignalSite(a, o, v) for a, o, v in zip(labels, odo, limits)))


@given(corridors())
def test_corridor_round_trip_property(c):
    assert load_corridor(dump_corridor(c)) == c


@given(st.floats(0.0, 1.0), st.floats(0.1, 5.0))
def test_xi_symmetric_in_fraction(f, length):
    p = NodePlan((Node.virtual(0.0), Node.virtual(length)))
    pos = segment_of(p, f * length)
    assert pos.xi == pytest.approx(min(f, 1 - f), abs=1e-6)
    assert 0.0 <= pos.xi <= 0.5
