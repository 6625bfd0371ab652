"""Green-wave timing table for a corridor and node plan.

Every segment between consecutive nodes is traversed by the wave head in
exactly one green time ``T_g = cycle / 2``. Nodes alternate between
zero-offset (green onset at cycle phase 0) and half-cycle offset. A mid-block
signal at fractional distance ``xi`` from its nearest node stays green along
the corridor for ``(1 + 2 xi) T_g`` and across it for ``(1 - 2 xi) T_g``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .corridor import (
    Corridor,
    NodePlan,
    segment_of,
    validate_plan,
)
from .errors import DomainError, PlanError, PlanValidationError

SECONDS_PER_HOUR = 3600.0


@dataclass(frozen=True)
class TimingRow:
    name: str
    odometer: float
    is_node: bool
    node_kind: str | None
    node_index: int | None
    speed_limit: float
    L_g: float
    v_g: float
    xi: float
    d: float | None
    T_gf: float
    T_gx: float
    T_offset: float | None
    T_roffset: float


@dataclass(frozen=True)
class TimingTable:
    rows: tuple[TimingRow, ...]
    green_time: float
    cycle_time: float

    def __iter__(self):
        return iter(self.rows)

    def __len__(self):
        return len(self.rows)

    def row(self, name: str) -> TimingRow:
        for r in self.rows:
            if r.name == name:
                return r
        raise KeyError(name)

    @property
    def node_rows(self) -> list[TimingRow]:
        return [r for r in self.rows if r.is_node]


def wave_speed(L_g: float, T_g: float) -> float:
    """Wave speed in km/h for a segment of `L_g` km crossed in `T_g` seconds."""
    if L_g <= 0 or T_g <= 0:
        raise DomainError("segment length and green time must be positive")
    return L_g * SECONDS_PER_HOUR / T_g


def _check_xi(xi: float) -> None:
    if not 0.0 <= xi < 0.5:
        raise DomainError(f"xi must satisfy 0 <= xi < 1/2, got {xi}")


def forward_green(xi: float, T_g: float) -> float:
    _check_xi(xi)
    return (1.0 + 2.0 * xi) * T_g


def cross_green(xi: float, T_g: float) -> float:
    _check_xi(xi)
    return (1.0 - 2.0 * xi) * T_g


def d_param(plan: NodePlan, odometer: float) -> float:
    """Fractional position inside the segment, measured from its zero-offset end."""
    pos = segment_of(plan, odometer)
    if pos.fraction <= 0.0 or pos.fraction >= 1.0:
        raise DomainError(f"odometer {odometer} sits on a node; d is undefined")
    d = pos.fraction if plan.is_zero_offset(pos.index) else 1.0 - pos.fraction
    if abs(d - 0.5) <= 1e-12:
        raise DomainError("d = 1/2 is a singular point")
    return d


def midblock_reduced_offset(xi: float, d: float, T_g: float) -> float:
    """Green onset within the cycle for a signal between two nodes."""
    _check_xi(xi)
    if not 0.0 < d < 1.0:
        raise DomainError(f"d must satisfy 0 < d < 1, got {d}")
    if d == 0.5:
        raise DomainError("d = 1/2 is a singular point")
    raw = T_g * (2.0 - xi) if d < 0.5 else T_g * (1.0 - xi)
    return math.fmod(raw, 2.0 * T_g)


def node_offset(plan: NodePlan, node_index: int) -> tuple[float, float]:
    """(T_offset, T_roffset) for node `node_index`.

    The head needs exactly one green time per segment, so node i is reached at
    ``i * T_g``; inverted parity delays the whole wave family by ``T_g``.
    """
    if not 0 <= node_index < len(plan.nodes):
        raise PlanError(f"node index {node_index} out of range")
    T_g = plan.green_time
    T_offset = (node_index + int(plan.invert_parity)) * T_g
    return T_offset, math.fmod(T_offset, plan.cycle_time)


def build_timing_table(corridor: Corridor, plan: NodePlan, xi_max=None) -> TimingTable:
    violations = validate_plan(corridor, plan, xi_max)
    if violations:
        raise PlanValidationError(violations)
    T_g = plan.green_time
    segments = plan.segments()
    entries: list[TimingRow] = []

    for i, node in enumerate(plan.nodes):
        seg = segments[min(i, len(segments) - 1)]
        T_offset, T_roffset = node_offset(plan, i)
        entries.append(
            TimingRow(
                name=node.name,
                odometer=node.odometer,
                is_node=True,
                node_kind=node.kind,
                node_index=i,
                speed_limit=corridor.speed_limit_at(node.odometer),
                L_g=seg.length,
                v_g=wave_speed(seg.length, T_g),
                xi=0.0,
                d=None,
                T_gf=T_g,
                T_gx=T_g,
                T_offset=T_offset,
                T_roffset=T_roffset,
            )
        )

    for site in corridor.sites:
        if plan.node_index_at(site.odometer) is not None:
            continue
        pos = segment_of(plan, site.odometer)
        d = d_param(plan, site.odometer)
        roff = midblock_reduced_offset(pos.xi, d, T_g)
        entries.append(
            TimingRow(
                name=site.name,
                odometer=site.odometer,
                is_node=False,
                node_kind=None,
                node_index=None,
                speed_limit=site.speed_limit,
                L_g=pos.length,
                v_g=wave_speed(pos.length, T_g),
                xi=pos.xi,
                d=d,
                T_gf=forward_green(pos.xi, T_g),
                T_gx=cross_green(pos.xi, T_g),
                T_offset=None,
                T_roffset=roff,
            )
        )

    entries.sort(key=lambda r: r.odometer)
    return TimingTable(tuple(entries), T_g, plan.cycle_time)
