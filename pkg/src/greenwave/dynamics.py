"""Longitudinal motion: driver policies, kinematic primitives, dingo tracking.

Units: positions in metres, speeds in m/s, time in seconds, unless a name
says otherwise (``*_kph``). Wave paths are stored in kilometres.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .waves import NORTH, WavePath

KPH = 1.0 / 3.6
ACCEL_CAP = 2.5
CHEETAH_MARGIN_KPH = 15.0
TORTOISE_MARGIN_KPH = 15.0


class DriverKind(enum.Enum):
    DINGO = "dingo"
    WOLF = "wolf"
    CHEETAH = "cheetah"
    TORTOISE = "tortoise"

    @classmethod
    def parse(cls, name: str) -> "DriverKind":
        try:
            return cls(name.lower())
        except ValueError:
            raise DomainError(f"unknown driver kind {name!r}") from None


def desired_speed(kind: DriverKind, limit: float, wave_speed: float | None = None) -> float:
    """Free-flow speed (km/h) a driver of `kind` aims for."""
    if kind is DriverKind.DINGO:
        if wave_speed is None:
            raise DomainError("dingo needs the local wave speed")
        return wave_speed
    if kind is DriverKind.WOLF:
        return limit
    if kind is DriverKind.CHEETAH:
        return limit + CHEETAH_MARGIN_KPH
    if limit <= TORTOISE_MARGIN_KPH:
        raise DomainError(f"tortoise speed would be non-positive at limit {limit}")
    return limit - TORTOISE_MARGIN_KPH


@dataclass(frozen=True)
class OscillatorParams:
    omega0: float = 0.25
    gamma: float = 0.5

    def __post_init__(self):
        if self.omega0 <= 0:
            raise DomainError("omega0 must be positive")
        if not math.isclose(self.gamma, 2.0 * self.omega0, rel_tol=1e-12):
            raise DomainError(f"gamma={self.gamma} is not critically damped for omega0={self.omega0}")

    @property
    def lag(self) -> float:
        """Steady-state time lag behind a constant-speed reference."""
        return 2.0 / self.omega0


@dataclass(frozen=True)
class VehicleState:
    position: float
    speed: float
    acceleration: float
    driver: DriverKind


class Trajectory:
    """Sampled motion on a uniform time grid with cubic Hermite interpolation.

    Position between samples is the Hermite cubic through (x, v) at both ends,
    so the interpolated speed is the exact derivative of the interpolated
    position. Outside the grid the motion is extrapolated at constant speed.
    """

    def __init__(self, t0: float, dt: float, x, v, a=None):
        self.t0 = float(t0)
        self.dt = float(dt)
        self.x = np.asarray(x, dtype=float)
        self.v = np.asarray(v, dtype=float)
        if self.x.shape != self.v.shape or self.x.ndim != 1 or len(self.x) < 2:
            raise ValueError("x and v must be equal-length 1-D arrays with at least two samples")
        self.a = None if a is None else np.asarray(a, dtype=float)

    @property
    def t_end(self) -> float:
        return self.t0 + self.dt * (len(self.x) - 1)

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(len(self.x))

    def _locate(self, t):
        t = np.asarray(t, dtype=float)
        u = (t - self.t0) / self.dt
        i = np.clip(np.floor(u).astype(int), 0, len(self.x) - 2)
        s = np.clip(u - i, 0.0, 1.0)
        return t, i, s

    def position(self, t):
        t, i, s = self._locate(t)
        h = self.dt
        x0, x1, v0, v1 = self.x[i], self.x[i + 1], self.v[i], self.v[i + 1]
        s2, s3 = s * s, s * s * s
        out = (
            (2 * s3 - 3 * s2 + 1) * x0
            + (s3 - 2 * s2 + s) * h * v0
            + (-2 * s3 + 3 * s2) * x1
            + (s3 - s2) * h * v1
        )
        out = np.where(t < self.t0, self.x[0] + self.v[0] * (t - self.t0), out)
        out = np.where(t > self.t_end, self.x[-1] + self.v[-1] * (t - self.t_end), out)
        return float(out) if out.ndim == 0 else out

    def speed(self, t):
        t, i, s = self._locate(t)
        h = self.dt
        x0, x1, v0, v1 = self.x[i], self.x[i + 1], self.v[i], self.v[i + 1]
        s2 = s * s
        out = (
            (6 * s2 - 6 * s) * x0 / h
            + (3 * s2 - 4 * s + 1) * v0
            + (-6 * s2 + 6 * s) * x1 / h
            + (3 * s2 - 2 * s) * v1
        )
        out = np.where(t < self.t0, self.v[0], out)
        out = np.where(t > self.t_end, self.v[-1], out)
        return float(out) if out.ndim == 0 else out

    def acceleration(self, t):
        """Linear interpolation of sampled acceleration (finite differences if none were stored)."""
        a = self.a if self.a is not None else np.gradient(self.v, self.dt)
        out = np.interp(np.asarray(t, dtype=float), self.times, a, left=0.0, right=0.0)
        return float(out) if np.ndim(out) == 0 else out

    def crossing_time(self, position: float) -> float | None:
        """First time the trajectory reaches `position` (None if it never does)."""
        idx = np.flatnonzero(self.x >= position)
        if len(idx) == 0:
            if self.v[-1] > 0:
                return self.t_end + (position - self.x[-1]) / self.v[-1]
            return None
        j = int(idx[0])
        if j == 0:
            if self.x[0] == position:
                return self.t0
            if self.v[0] <= 0:
                return None
            return self.t0 - (self.x[0] - position) / self.v[0]
        lo, hi = self.t0 + (j - 1) * self.dt, self.t0 + j * self.dt
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if self.position(mid) >= position:
                hi = mid
            else:
                lo = mid
        return hi


def _travel_forcing(path: WavePath, origin_km: float, extend: bool):
    """Wave-head distance from `origin_km` along the travel direction, in metres."""
    t = np.asarray(path.times, dtype=float)
    p = np.asarray(path.positions, dtype=float)
    s = (p - origin_km) if path.direction == NORTH else (origin_km - p)
    s = s * 1000.0
    if extend:
        slope = (s[-1] - s[-2]) / (t[-1] - t[-2])

        def f(tt):
            base = np.interp(tt, t, s)
            return np.maximum(np.where(tt > t[-1], s[-1] + slope * (tt - t[-1]), base), 0.0)
    else:

        def f(tt):
            return np.maximum(np.interp(tt, t, s), 0.0)

    return f


def dingo_trajectory(
    path: WavePath,
    params: OscillatorParams = OscillatorParams(),
    horizon: float | None = None,
    *,
    origin_km: float | None = None,
    dt: float = 0.05,
    preroll: float = 900.0,
    extend: bool = True,
) -> Trajectory:
    """Critically damped tracking of the wave head, integrated with fixed-step RK4.

    Position is measured in metres of travel from `origin_km` (default: the
    first node of the path). Forcing before the head reaches the origin is
    zero, so the vehicle sits at rest there. With `extend`, the head keeps its
    last segment speed beyond the final node instead of stopping.
    Integration runs from ``-preroll`` to `horizon`; the returned trajectory
    starts at ``t = 0``.
    """
    if not isinstance(params, OscillatorParams):
        raise DomainError("params must be OscillatorParams")
    if dt <= 0:
        raise DomainError("dt must be positive")
    if origin_km is None:
        origin_km = path.positions[0]
    if horizon is None:
        horizon = path.end_time + 4 * path.cycle_time
    w2 = params.omega0 ** 2
    g = params.gamma
    f = _travel_forcing(path, origin_km, extend)

    n_pre = int(round(preroll / dt))
    n_post = int(math.ceil(horizon / dt))
    n = n_pre + n_post
    t_start = -n_pre * dt
    half = w2 * f(t_start + 0.5 * dt * np.arange(2 * n + 1))

    xs = np.empty(n + 1)
    vs = np.empty(n + 1)
    x = v = 0.0
    xs[0], vs[0] = x, v
    h = dt
    for j in range(n):
        f0, fm, f1 = half[2 * j], half[2 * j + 1], half[2 * j + 2]
        k1x, k1v = v, f0 - g * v - w2 * x
        x2, v2 = x + 0.5 * h * k1x, v + 0.5 * h * k1v
        k2x, k2v = v2, fm - g * v2 - w2 * x2
        x3, v3 = x + 0.5 * h * k2x, v + 0.5 * h * k2v
        k3x, k3v = v3, fm - g * v3 - w2 * x3
        x4, v4 = x + h * k3x, v + h * k3v
        k4x, k4v = v4, f1 - g * v4 - w2 * x4
        x += h / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x)
        v += h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
        xs[j + 1], vs[j + 1] = x, v
    xs, vs = xs[n_pre:], vs[n_pre:]
    acc = half[2 * n_pre :: 2] - g * vs - w2 * xs
    return Trajectory(0.0, dt, xs, vs, acc)


def _check_speed_change(V0: float, V1: float, A: float) -> None:
    if V0 < 0 or V1 < 0:
        raise DomainError("speeds must be non-negative")
    if V1 != V0 and (A == 0 or (A > 0) != (V1 > V0)):
        raise DomainError(f"acceleration {A} cannot take speed from {V0} to {V1}")


def speed_change_position(t, X0: float, V0: float, V1: float, A: float, t0: float):
    """Constant-acceleration change from V0 to V1 starting at t0, uniform motion either side."""
    _check_speed_change(V0, V1, A)
    t = np.asarray(t, dtype=float)
    tau = t - t0
    T = 0.0 if V1 == V0 else (V1 - V0) / A
    arc = X0 + V0 * tau + 0.5 * A * tau * tau
    after = X0 + V0 * T + 0.5 * A * T * T + V1 * (tau - T)
    out = np.where(tau < 0, X0 + V0 * tau, np.where(tau <= T, arc, after))
    return float(out) if out.ndim == 0 else out


def speed_change_speed(t, V0: float, V1: float, A: float, t0: float):
    _check_speed_change(V0, V1, A)
    t = np.asarray(t, dtype=float)
    tau = t - t0
    T = 0.0 if V1 == V0 else (V1 - V0) / A
    out = np.where(tau < 0, V0, np.where(tau <= T, V0 + A * tau, V1))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class StopParams:
    deceleration: float
    duration: float


def stop_parameters(v0: float, d: float) -> StopParams:
    """Constant deceleration (negative) and time needed to stop from v0 within d."""
    if v0 <= 0:
        raise DomainError("v0 must be positive")
    if d <= 0:
        raise DomainError("stopping distance must be positive")
    return StopParams(-0.5 * v0 * v0 / d, 2.0 * d / v0)


def stop_profile(t, t0: float, x0: float, v0: float, d: float):
    """Position while braking uniformly from v0 to rest over distance d."""
    p = stop_parameters(v0, d)
    t = np.asarray(t, dtype=float)
    tau = np.clip(t - t0, None, p.duration)
    out = np.where(t < t0, x0 + v0 * (t - t0), x0 + v0 * tau + 0.5 * p.deceleration * tau * tau)
    out = np.where(t - t0 >= p.duration, x0 + d, out)
    return float(out) if out.ndim == 0 else out


def stop_speed(t, t0: float, v0: float, d: float):
    p = stop_parameters(v0, d)
    t = np.asarray(t, dtype=float)
    tau = t - t0
    out = np.where(tau < 0, v0, np.maximum(v0 + p.deceleration * tau, 0.0))
    return float(out) if out.ndim == 0 else out
