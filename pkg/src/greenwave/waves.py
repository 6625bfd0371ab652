"""Green-arrow kinematics and the per-signal phase state machine.

A :class:`WavePath` is the head trajectory of the zeroth arrow in one
direction: piecewise linear through node ``i`` at time ``i * T_g`` (mirrored
for southbound), clamped at both ends. Arrow ``k`` of the family is the same
path delayed by ``k`` cycles; its tail trails the head by one green time.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .corridor import NodePlan
from .errors import HorizonError

NORTH = "north"
SOUTH = "south"


@dataclass(frozen=True)
class WavePath:
    times: tuple[float, ...]
    positions: tuple[float, ...]
    direction: str
    green_time: float
    cycle_time: float

    @property
    def start_time(self) -> float:
        return self.times[0]

    @property
    def end_time(self) -> float:
        return self.times[-1]

    def speeds_kph(self) -> list[float]:
        return [
            abs(p1 - p0) / (t1 - t0) * 3600.0
            for (t0, p0), (t1, p1) in zip(zip(self.times, self.positions), zip(self.times[1:], self.positions[1:]))
        ]

    def arrival_time(self, position: float) -> float:
        """Time at which the head of the zeroth arrow reaches `position`."""
        t, p = np.asarray(self.times), np.asarray(self.positions)
        if self.direction == SOUTH:
            p = -p
            position = -position
        if position < p[0] or position > p[-1]:
            raise ValueError(f"position {position} not on the path")
        return float(np.interp(position, p, t))


def wave_paths(plan: NodePlan) -> tuple[WavePath, WavePath]:
    """Northbound and southbound head paths for a plan.

    The southbound family is phased so both heads enter every node at
    congruent times modulo the cycle.
    """
    T_g, C = plan.green_time, plan.cycle_time
    odo = plan.odometers
    n_seg = len(odo) - 1
    start_n = T_g * int(plan.invert_parity)
    start_s = math.fmod(start_n + n_seg * T_g, C)
    north = WavePath(
        tuple(start_n + i * T_g for i in range(len(odo))),
        tuple(odo),
        NORTH,
        T_g,
        C,
    )
    south = WavePath(
        tuple(start_s + j * T_g for j in range(len(odo))),
        tuple(reversed(odo)),
        SOUTH,
        T_g,
        C,
    )
    return north, south


def head_position(path: WavePath, t):
    """Head position (km); constant before the first and after the last node."""
    x = np.interp(t, path.times, path.positions)
    return float(x) if np.ndim(x) == 0 else x


def arrow_interval(path: WavePath, k: int, t):
    """(tail, head) of arrow `k` at time `t`."""
    shifted = np.asarray(t, dtype=float) - k * path.cycle_time
    head = head_position(path, shifted)
    tail = head_position(path, shifted - path.green_time)
    return tail, head


def covers(path: WavePath, odometer: float, t, k_range: range):
    """Boolean mask: does any arrow of the family (k in `k_range`) cover `odometer` at `t`?

    Northbound arrows cover the half-open interval (tail, head]; southbound
    ones [head, tail). Degenerate clamped arrows (tail == head) cover nothing.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    mask = np.zeros(t.shape, dtype=bool)
    for k in k_range:
        tail, head = arrow_interval(path, k, t)
        if path.direction == NORTH:
            hit = (tail < odometer) & (odometer <= head)
        else:
            hit = (head <= odometer) & (odometer < tail)
        mask |= hit & (tail != head)
    return mask


def _k_range(path: WavePath, t_lo: float, t_hi: float) -> range:
    C = path.cycle_time
    k_lo = math.floor((t_lo - path.end_time - path.green_time) / C) - 1
    k_hi = math.ceil((t_hi - path.start_time) / C) + 1
    return range(k_lo, k_hi + 1)


def coverage_profile(paths, odometer: float, resolution: float = 0.01, t_ref: float | None = None):
    """Sample union coverage of both arrow families over one steady-state cycle.

    Returns ``(t, mask)`` with ``t`` spanning ``[t_ref, t_ref + cycle)``; the
    default reference is a whole number of cycles after the last node time,
    where every family member that can reach the odometer is present.
    """
    paths = tuple(paths)
    C = paths[0].cycle_time
    if t_ref is None:
        t_ref = math.ceil(max(p.end_time for p in paths) / C) * C
    n = int(round(C / resolution))
    t = t_ref + np.arange(n) * resolution
    mask = np.zeros(n, dtype=bool)
    for p in paths:
        mask |= covers(p, odometer, t, _k_range(p, t[0], t[-1]))
    return t, mask


def coverage_onset(paths, odometer: float, cycle_time: float, resolution: float = 0.01) -> float:
    """Start of the covered run within the cycle, found by brute-force scan."""
    t, mask = coverage_profile(paths, odometer, resolution)
    if not mask.any():
        raise ValueError(f"odometer {odometer} is never covered")
    if mask.all():
        raise ValueError(f"odometer {odometer} is covered for the whole cycle")
    starts = np.flatnonzero(mask & ~np.roll(mask, 1))
    # several runs only happen on degenerate plans; report the longest
    best, best_len = starts[0], -1
    for s in starts:
        length = 0
        i = s
        while mask[i % len(mask)] and length < len(mask):
            length += 1
            i += 1
        if length > best_len:
            best, best_len = s, length
    return float(math.fmod(t[best] - t[0], cycle_time))


def coverage_duration(paths, odometer: float, resolution: float = 0.01) -> float:
    _, mask = coverage_profile(paths, odometer, resolution)
    return float(mask.sum() * resolution)


class SignalPhase(enum.Enum):
    GREEN = "green"
    AMBER = "amber"
    RED = "red"


GREEN_CODE, AMBER_CODE, RED_CODE = 0, 1, 2
_PHASES = (SignalPhase.GREEN, SignalPhase.AMBER, SignalPhase.RED)


@dataclass(frozen=True)
class PhaseTiming:
    """Signal plan of one site. Amber and all-red are carved out of ``T_gf``.

    Green starts are generated for cycles ``-window .. window`` around
    ``T_roffset``; queries outside that window raise :class:`HorizonError`.
    """

    T_roffset: float
    T_gf: float
    cycle_time: float = 120.0
    amber: float = 5.0
    all_red: float = 1.0
    window: int = 15

    def green_start(self, t: float) -> float:
        k = math.floor((t - self.T_roffset) / self.cycle_time)
        if abs(k) > self.window:
            raise HorizonError(f"t={t} outside generated green-start window of {self.window} cycles")
        return self.T_roffset + k * self.cycle_time

    def phase_code(self, t: float) -> int:
        g = self.green_start(t)
        if t < g + self.T_gf - self.amber - self.all_red:
            return GREEN_CODE
        if t < g + self.T_gf - self.all_red:
            return AMBER_CODE
        return RED_CODE

    def next_green(self, t: float) -> float:
        """Earliest green onset at or after `t`."""
        g = self.green_start(t)
        return g if g >= t else g + self.cycle_time

    def red_start(self, t: float) -> float:
        return self.green_start(t) + self.T_gf - self.all_red


def signal_state(timing: PhaseTiming, t: float) -> SignalPhase:
    return _PHASES[timing.phase_code(t)]


def phase_timings(table, amber: float = 5.0, all_red: float = 1.0, window: int = 15) -> dict[str, PhaseTiming]:
    return {
        r.name: PhaseTiming(r.T_roffset, r.T_gf, table.cycle_time, amber, all_red, window)
        for r in table.rows
    }


def window_for_horizon(horizon: float, cycle_time: float) -> int:
    """Cycle shifts needed to cover ``[-horizon, horizon]`` plus one cycle each side."""
    return int(math.ceil(abs(horizon) / cycle_time)) + 1
