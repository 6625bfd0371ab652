"""Corridor geometry, signalized sites and node plans.

Odometers are kilometres from the corridor origin, speed limits are km/h and
cycle times are seconds. A :class:`NodePlan` designates the control nodes
(real nodes sit on a signalized site, virtual nodes on a bare odometer); the
spacing between consecutive nodes sets the green-wave speed of each segment.

Corridor CSV::

    name,odometer_km,speed_limit_kph
    Route 1,0.000,72.4

Node plan JSON::

    {"cycle_time_s": 120,
     "invert_parity": false,
     "nodes": [{"kind": "real", "site": "Route 1"},
               {"kind": "virtual", "odometer_km": 1.046, "label": "V 2"}]}
"""

from __future__ import annotations

import bisect
import csv
import io
import json
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Sequence, TextIO

from .errors import CorridorFormatError, PlanError

CORRIDOR_HEADER = ("name", "odometer_km", "speed_limit_kph")
DEFAULT_XI_MAX = 0.45
# Odometers closer than this (km) are treated as the same point.
ODOMETER_TOL = 1e-9


@dataclass(frozen=True)
class SignalSite:
    name: str
    odometer: float
    speed_limit: float


@dataclass(frozen=True)
class Corridor:
    sites: tuple[SignalSite, ...]

    def __post_init__(self):
        if not self.sites:
            raise CorridorFormatError("no sites")
        prev = None
        for i, site in enumerate(self.sites, start=1):
            if site.odometer < 0:
                raise CorridorFormatError(f"negative odometer at line {i}", line=i)
            if site.speed_limit <= 0:
                raise CorridorFormatError(f"non-positive speed limit at line {i}", line=i)
            if prev is not None and site.odometer <= prev:
                raise CorridorFormatError(f"non-increasing odometer at line {i}", line=i)
            prev = site.odometer

    @property
    def length(self) -> float:
        return self.sites[-1].odometer

    @property
    def odometers(self) -> list[float]:
        return [s.odometer for s in self.sites]

    def site(self, name: str) -> SignalSite:
        for s in self.sites:
            if s.name == name:
                return s
        raise KeyError(name)

    def speed_limit_at(self, odometer: float) -> float:
        """Piecewise-constant limit: the limit of the last site at or before `odometer`."""
        i = bisect.bisect_right(self.odometers, odometer + ODOMETER_TOL) - 1
        return self.sites[max(i, 0)].speed_limit

    def limit_breaks(self) -> list[tuple[float, float]]:
        """(odometer, limit) pairs where the piecewise-constant limit takes a new value."""
        out: list[tuple[float, float]] = []
        for s in self.sites:
            if not out or s.speed_limit != out[-1][1]:
                out.append((s.odometer, s.speed_limit))
        return out

    def renamed(self, mapping: Mapping[str, str]) -> "Corridor":
        return Corridor(tuple(replace(s, name=mapping.get(s.name, s.name)) for s in self.sites))


@dataclass(frozen=True)
class Node:
    """A control node. Real nodes carry the name of the site they sit on."""

    kind: str
    odometer: float
    site: str | None = None
    label: str | None = None

    @classmethod
    def real(cls, site: SignalSite) -> "Node":
        return cls("real", site.odometer, site.name)

    @classmethod
    def virtual(cls, odometer: float, label: str | None = None) -> "Node":
        return cls("virtual", float(odometer), None, label)

    @property
    def is_real(self) -> bool:
        return self.kind == "real"

    @property
    def name(self) -> str:
        if self.is_real:
            return self.site or ""
        return self.label or f"virtual@{self.odometer:.3f}"


@dataclass(frozen=True)
class Segment:
    lower_node_index: int
    upper_node_index: int
    length: float


@dataclass(frozen=True)
class SegmentPosition:
    """Where an odometer falls inside a plan."""

    index: int
    x: float
    xi: float
    length: float
    fraction: float


@dataclass(frozen=True)
class NodePlan:
    nodes: tuple[Node, ...]
    cycle_time: float = 120.0
    invert_parity: bool = False

    @property
    def green_time(self) -> float:
        return self.cycle_time / 2.0

    @property
    def odometers(self) -> list[float]:
        return [n.odometer for n in self.nodes]

    @property
    def span(self) -> tuple[float, float]:
        return self.nodes[0].odometer, self.nodes[-1].odometer

    def is_zero_offset(self, index: int) -> bool:
        return (index + int(self.invert_parity)) % 2 == 0

    def segments(self) -> list[Segment]:
        return [
            Segment(i, i + 1, self.nodes[i + 1].odometer - self.nodes[i].odometer)
            for i in range(len(self.nodes) - 1)
        ]

    def node_index_at(self, odometer: float) -> int | None:
        for i, n in enumerate(self.nodes):
            if abs(n.odometer - odometer) <= ODOMETER_TOL:
                return i
        return None

    def with_cycle_time(self, cycle_time: float) -> "NodePlan":
        return replace(self, cycle_time=float(cycle_time))

    def with_nodes(self, nodes: Iterable[Node]) -> "NodePlan":
        return replace(self, nodes=tuple(nodes))


@dataclass(frozen=True)
class Violation:
    site: str | None
    reason: str


# -- parsing ---------------------------------------------------------------


def load_corridor(text: str | TextIO) -> Corridor:
    """Parse the corridor CSV format.

    Error messages number data rows from 1 (the header is not counted).
    """
    if not isinstance(text, str):
        text = text.read()
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise CorridorFormatError("no sites")
    reader = csv.reader(lines)
    header = tuple(h.strip() for h in next(reader))
    if header != CORRIDOR_HEADER:
        raise CorridorFormatError(f"bad header {','.join(header)!r}, expected {','.join(CORRIDOR_HEADER)}")
    sites: list[SignalSite] = []
    for row_no, row in enumerate(reader, start=1):
        if len(row) != 3:
            raise CorridorFormatError(f"malformed row at line {row_no}: expected 3 fields", line=row_no)
        name = row[0].strip()
        if not name:
            raise CorridorFormatError(f"malformed row at line {row_no}: empty name", line=row_no)
        try:
            odo = float(row[1])
            limit = float(row[2])
        except ValueError:
            raise CorridorFormatError(f"malformed row at line {row_no}: non-numeric field", line=row_no) from None
        if odo < 0:
            raise CorridorFormatError(f"negative odometer at line {row_no}", line=row_no)
        if sites and odo <= sites[-1].odometer:
            raise CorridorFormatError(f"non-increasing odometer at line {row_no}", line=row_no)
        if limit <= 0:
            raise CorridorFormatError(f"non-positive speed limit at line {row_no}", line=row_no)
        sites.append(SignalSite(name, odo, limit))
    if not sites:
        raise CorridorFormatError("no sites")
    return Corridor(tuple(sites))


def dump_corridor(corridor: Corridor) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CORRIDOR_HEADER)
    for s in corridor.sites:
        w.writerow([s.name, repr(s.odometer), repr(s.speed_limit)])
    return buf.getvalue()


def load_plan(text: str | TextIO | Mapping, corridor: Corridor) -> NodePlan:
    """Parse a node plan document; real nodes are resolved against `corridor`."""
    if isinstance(text, Mapping):
        doc = text
    else:
        if not isinstance(text, str):
            text = text.read()
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise CorridorFormatError(f"plan is not valid JSON: {exc}") from None
    try:
        cycle = float(doc["cycle_time_s"])
        raw_nodes = doc["nodes"]
    except (KeyError, TypeError, ValueError):
        raise CorridorFormatError("plan needs numeric 'cycle_time_s' and a 'nodes' list") from None
    nodes = []
    for i, item in enumerate(raw_nodes):
        kind = item.get("kind")
        if kind == "real":
            try:
                nodes.append(Node.real(corridor.site(item["site"])))
            except KeyError:
                raise CorridorFormatError(f"node {i}: unknown site {item.get('site')!r}") from None
        elif kind == "virtual":
            try:
                nodes.append(Node.virtual(float(item["odometer_km"]), item.get("label")))
            except (KeyError, TypeError, ValueError):
                raise CorridorFormatError(f"node {i}: virtual node needs numeric 'odometer_km'") from None
        else:
            raise CorridorFormatError(f"node {i}: kind must be 'real' or 'virtual', got {kind!r}")
    return NodePlan(tuple(nodes), cycle, bool(doc.get("invert_parity", False)))


def plan_to_dict(plan: NodePlan) -> dict:
    nodes = []
    for n in plan.nodes:
        if n.is_real:
            nodes.append({"kind": "real", "site": n.site})
        else:
            item = {"kind": "virtual", "odometer_km": n.odometer}
            if n.label:
                item["label"] = n.label
            nodes.append(item)
    return {"cycle_time_s": plan.cycle_time, "invert_parity": plan.invert_parity, "nodes": nodes}


def dump_plan(plan: NodePlan) -> str:
    return json.dumps(plan_to_dict(plan), indent=2) + "\n"


# -- geometry --------------------------------------------------------------


def _check_ordered(plan: NodePlan) -> None:
    if len(plan.nodes) < 2:
        raise PlanError("fewer than 2 nodes")
    odo = plan.odometers
    if any(b <= a for a, b in zip(odo, odo[1:])):
        raise PlanError("node odometers are not strictly increasing")


def segment_of(plan: NodePlan, odometer: float) -> SegmentPosition:
    """Locate `odometer` in the plan.

    A point exactly on an interior node is reported in the segment that starts
    there (the last node reports the last segment), with ``xi == 0``.
    """
    _check_ordered(plan)
    odo = plan.odometers
    if odometer < odo[0] - ODOMETER_TOL or odometer > odo[-1] + ODOMETER_TOL:
        raise PlanError(f"odometer {odometer} outside node span [{odo[0]}, {odo[-1]}]")
    i = bisect.bisect_right(odo, odometer + ODOMETER_TOL) - 1
    i = min(max(i, 0), len(odo) - 2)
    length = odo[i + 1] - odo[i]
    offset = min(max(odometer - odo[i], 0.0), length)
    if abs(offset) <= ODOMETER_TOL:
        offset = 0.0
    elif abs(length - offset) <= ODOMETER_TOL:
        offset = length
    fraction = offset / length
    x = min(offset, length - offset)
    return SegmentPosition(i, x, x / length, length, fraction)


def _xi_threshold(xi_max, name: str) -> float:
    if xi_max is None:
        return DEFAULT_XI_MAX
    if isinstance(xi_max, Mapping):
        return float(xi_max.get(name, DEFAULT_XI_MAX))
    return float(xi_max)


def site_is_node(plan: NodePlan, site: SignalSite) -> bool:
    return plan.node_index_at(site.odometer) is not None


def validate_plan(corridor: Corridor, plan: NodePlan, xi_max: float | Mapping[str, float] | None = None) -> list[Violation]:
    """Return every violation of the plan invariants; empty means usable."""
    out: list[Violation] = []
    if plan.cycle_time <= 0:
        out.append(Violation(None, "cycle time must be positive"))
    if len(plan.nodes) < 2:
        out.append(Violation(None, "fewer than 2 nodes"))
        return out
    odo = plan.odometers
    for a, b, n in zip(odo, odo[1:], plan.nodes[1:]):
        if b <= a:
            out.append(Violation(n.name, "node odometers not strictly increasing"))
    names = {s.name: s for s in corridor.sites}
    for n in plan.nodes:
        if n.is_real:
            s = names.get(n.site)
            if s is None:
                out.append(Violation(n.site, "real node references an unknown site"))
            elif abs(s.odometer - n.odometer) > ODOMETER_TOL:
                out.append(Violation(n.site, "real node odometer does not match its site"))
    if any(v.reason.startswith("node odometers") for v in out):
        return out
    lo, hi = plan.span
    for s in corridor.sites:
        if s.odometer < lo - ODOMETER_TOL or s.odometer > hi + ODOMETER_TOL:
            out.append(Violation(s.name, "site outside node span"))
            continue
        if site_is_node(plan, s):
            continue
        pos = segment_of(plan, s.odometer)
        if abs(pos.xi - 0.5) <= 1e-9:
            out.append(Violation(s.name, "singular point xi=1/2"))
        elif pos.xi > _xi_threshold(xi_max, s.name):
            out.append(Violation(s.name, f"xi={pos.xi:.4f} exceeds threshold {_xi_threshold(xi_max, s.name)}"))
    return out


def build_plan(corridor: Corridor, real_sites: Sequence[str], virtual: Sequence[float] = (), cycle_time: float = 120.0) -> NodePlan:
    """Convenience constructor: real nodes by site name plus virtual odometers."""
    nodes = [Node.real(corridor.site(n)) for n in real_sites] + [Node.virtual(o) for o in virtual]
    nodes.sort(key=lambda n: n.odometer)
    return NodePlan(tuple(nodes), cycle_time)
