"""Single-lane platoon simulation over a timed corridor.

Vehicles move in travel coordinates: metres from the origin site in the
direction of travel. Each vehicle is simulated in turn on a shared integer
step grid, so a follower sees its leader's complete trajectory. Time enters
the signal logic only through the wave-local clock (global time minus the
platoon's wave offset); since signals repeat every cycle, platoons in
different waves evaluate bit-identical decisions.

Driving rules, in priority order:

* never cross a site while it shows Red;
* keep at least one headway behind the leader's path, i.e.
  ``x(t) <= x_lead(t - headway)``, and stop at least ``QUEUE_GAP`` metres
  behind a stopped leader;
* otherwise drive the policy of the driver kind (dingoes track the wave with
  the oscillator, the others hold a speed relative to the limit, changing
  speed at ``ACCEL_CAP``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .corridor import Corridor, NodePlan
from .dynamics import (
    ACCEL_CAP,
    KPH,
    DriverKind,
    OscillatorParams,
    Trajectory,
    desired_speed,
    dingo_trajectory,
)
from .errors import CollisionError, ScenarioError
from .timing import TimingTable
from .waves import NORTH, SOUTH, RED_CODE, GREEN_CODE, PhaseTiming, wave_paths, window_for_horizon

QUEUE_GAP = 7.0
STOP_OFFSET = 0.5
EMERGENCY_DECEL = 4.5
CREEP_DECEL = 0.3
FINISH_MARGIN = 60.0
_EPS = 1e-9

_TRACK, _FREE = 0, 1


@dataclass(frozen=True)
class Scenario:
    """One simulation run.

    `mixture` maps driver kinds to fractions summing to one. With
    `populate_all_waves`, `wave_count` consecutive green waves each get a
    platoon of `vehicles_per_wave`; otherwise only the first wave does.
    `poisson_mean` (seconds between arrivals) selects Poisson arrivals; it
    is required when ``arrival_model == "poisson"``.
    """

    mixture: Mapping[DriverKind, float]
    vehicles_per_wave: int = 27
    headway: float = 2.0
    direction: str = NORTH
    populate_all_waves: bool = False
    wave_count: int = 3
    rng_seed: int = 0
    arrival_model: str = "deterministic"
    poisson_mean: float | None = None
    dt: float = 0.05
    max_time: float = 6000.0
    name: str = ""

    def __post_init__(self):
        if not self.mixture:
            raise ScenarioError("mixture is empty")
        if any(f < 0 for f in self.mixture.values()):
            raise ScenarioError("mixture fractions must be non-negative")
        total = sum(self.mixture.values())
        if abs(total - 1.0) > 1e-9:
            raise ScenarioError(f"mixture fractions sum to {total}, not 1")
        if self.vehicles_per_wave < 1:
            raise ScenarioError("vehicles_per_wave must be at least 1")
        if self.headway <= 0:
            raise ScenarioError("headway must be positive")
        if self.direction not in (NORTH, SOUTH):
            raise ScenarioError(f"direction must be {NORTH!r} or {SOUTH!r}")
        if self.wave_count < 1:
            raise ScenarioError("wave_count must be at least 1")
        if self.arrival_model not in ("deterministic", "poisson"):
            raise ScenarioError(f"unknown arrival model {self.arrival_model!r}")
        if self.arrival_model == "poisson" and (self.poisson_mean is None or self.poisson_mean <= 0):
            raise ScenarioError("poisson arrivals need a positive poisson_mean")
        if self.dt <= 0:
            raise ScenarioError("dt must be positive")

    @property
    def waves(self) -> int:
        return self.wave_count if self.populate_all_waves else 1


def scenario_from_dict(doc: Mapping) -> Scenario:
    try:
        mixture = {DriverKind.parse(k): float(v) for k, v in doc["mixture"].items()}
    except KeyError:
        raise ScenarioError("scenario needs a 'mixture' object") from None
    except (AttributeError, TypeError, ValueError) as exc:
        raise ScenarioError(f"bad mixture: {exc}") from None
    arrival = doc.get("arrival_model", "deterministic")
    mean = None
    if isinstance(arrival, Mapping):
        if "poisson" not in arrival:
            raise ScenarioError(f"unknown arrival model {arrival!r}")
        mean = arrival["poisson"].get("mean") if isinstance(arrival["poisson"], Mapping) else arrival["poisson"]
        arrival = "poisson"
    known = {
        "vehicles_per_wave": int,
        "headway": float,
        "direction": str,
        "populate_all_waves": bool,
        "wave_count": int,
        "rng_seed": int,
        "dt": float,
        "max_time": float,
        "name": str,
    }
    kwargs = {}
    for key, cast in known.items():
        if key in doc:
            try:
                kwargs[key] = cast(doc[key])
            except (TypeError, ValueError):
                raise ScenarioError(f"bad value for {key!r}: {doc[key]!r}") from None
    if "headway_s" in doc:
        kwargs["headway"] = float(doc["headway_s"])
    return Scenario(mixture=mixture, arrival_model=arrival, poisson_mean=mean, **kwargs)


def scenario_to_dict(s: Scenario) -> dict:
    arrival: object = s.arrival_model
    if s.arrival_model == "poisson":
        arrival = {"poisson": {"mean": s.poisson_mean}}
    return {
        "name": s.name,
        "mixture": {k.value: v for k, v in s.mixture.items()},
        "vehicles_per_wave": s.vehicles_per_wave,
        "headway": s.headway,
        "direction": s.direction,
        "populate_all_waves": s.populate_all_waves,
        "wave_count": s.wave_count,
        "rng_seed": s.rng_seed,
        "arrival_model": arrival,
        "dt": s.dt,
        "max_time": s.max_time,
    }


def draw_mixture(seed, n: int, fractions: Mapping[DriverKind, float], rng: np.random.Generator | None = None) -> list[DriverKind]:
    """Driver kinds for `n` vehicles.

    Two-kind mixtures use independent Bernoulli draws for the minority kind
    (the smaller fraction); more kinds fall back to a categorical draw.
    Passing `rng` continues an existing stream instead of seeding a new one.
    """
    if n < 1:
        raise ScenarioError("n must be at least 1")
    kinds = [k for k, f in fractions.items() if f > 0]
    if not kinds:
        raise ScenarioError("mixture has no positive fraction")
    if abs(sum(fractions.values()) - 1.0) > 1e-9:
        raise ScenarioError("mixture fractions must sum to 1")
    if rng is None:
        rng = np.random.default_rng(seed)
    if len(kinds) == 1:
        return [kinds[0]] * n
    if len(kinds) == 2:
        a, b = kinds
        minority, majority = (a, b) if fractions[a] < fractions[b] else (b, a)
        hits = rng.random(n) < fractions[minority]
        return [minority if h else majority for h in hits]
    p = np.array([fractions[k] for k in kinds])
    idx = rng.choice(len(kinds), size=n, p=p / p.sum())
    return [kinds[i] for i in idx]


@dataclass(frozen=True)
class StopRecord:
    site: str
    wait: float
    position: float
    start: float


@dataclass
class VehicleLog:
    index: int
    wave: int
    kind: DriverKind
    entry_step: int
    dt: float
    x: np.ndarray
    v: np.ndarray
    finish_offset: float
    stops: list[StopRecord] = field(default_factory=list)
    finish_window: int = 0
    crossings: dict[str, float] = field(default_factory=dict)

    @property
    def entry_time(self) -> float:
        return self.entry_step * self.dt

    @property
    def travel_time(self) -> float:
        return self.finish_offset

    @property
    def finish_time(self) -> float:
        return self.entry_time + self.finish_offset

    @property
    def stop_count(self) -> int:
        return len(self.stops)

    @property
    def total_wait(self) -> float:
        return float(sum(s.wait for s in self.stops))

    @property
    def trajectory(self) -> Trajectory:
        return Trajectory(self.entry_time, self.dt, self.x, self.v)


@dataclass(frozen=True)
class _Site:
    name: str
    pos: float
    timing: PhaseTiming


@dataclass(frozen=True)
class _Course:
    """Corridor geometry seen from one direction of travel."""

    sites: tuple[_Site, ...]
    finish: _Site
    origin: _Site
    origin_km: float
    t_origin: float
    node_pos: np.ndarray
    node_speed: np.ndarray  # m/s on the segment starting at each node
    limit_pos: np.ndarray
    limit_speed: np.ndarray  # km/h on the piece starting at each break
    direction: str


def _build_course(corridor: Corridor, plan: NodePlan, timing: TimingTable, direction: str, horizon: float) -> _Course:
    window = window_for_horizon(horizon, plan.cycle_time)
    phase = {r.name: PhaseTiming(r.T_roffset, r.T_gf, plan.cycle_time, window=window) for r in timing.rows}
    real = [n for n in plan.nodes if n.is_real]
    if len(real) < 2:
        raise ScenarioError("plan needs two real nodes to define origin and finish")
    first, last = real[0], real[-1]
    north_path, south_path = wave_paths(plan)
    if direction == NORTH:
        origin, finish, path = first, last, north_path

        def to_travel(o):
            return (o - origin.odometer) * 1000.0
    else:
        origin, finish, path = last, first, south_path

        def to_travel(o):
            return (origin.odometer - o) * 1000.0

    lo, hi = sorted((origin.odometer, finish.odometer))
    sites = []
    for s in corridor.sites:
        if lo <= s.odometer <= hi and s.name != origin.name:
            sites.append(_Site(s.name, to_travel(s.odometer), phase[s.name]))
    sites.sort(key=lambda s: s.pos)
    fin = next(s for s in sites if s.name == finish.name)
    org = _Site(origin.name, 0.0, phase[origin.name])

    seg = plan.segments()
    odo = plan.odometers
    T_g = plan.green_time
    if direction == NORTH:
        node_pos = [to_travel(odo[s.lower_node_index]) for s in seg]
        node_speed = [s.length * 1000.0 / T_g for s in seg]
        breaks = corridor.limit_breaks()
        limit_pos = [to_travel(o) for o, _ in breaks]
        limit_speed = [lim for _, lim in breaks]
    else:
        node_pos = [to_travel(odo[s.upper_node_index]) for s in reversed(seg)]
        node_speed = [s.length * 1000.0 / T_g for s in reversed(seg)]
        # a piece [o_i, o_{i+1}) keeps its limit in both directions
        breaks = corridor.limit_breaks()
        ends = [o for o, _ in breaks[1:]] + [corridor.length]
        pieces = list(zip(ends, [lim for _, lim in breaks]))
        limit_pos = [to_travel(o) for o, _ in reversed(pieces)]
        limit_speed = [lim for _, lim in reversed(pieces)]
    return _Course(
        tuple(sites),
        fin,
        org,
        origin.odometer,
        path.arrival_time(origin.odometer),
        np.asarray(node_pos),
        np.asarray(node_speed),
        np.asarray(limit_pos),
        np.asarray(limit_speed),
        direction,
    )


def _piece(pos_arr: np.ndarray, val_arr: np.ndarray, s: float) -> float:
    i = int(np.searchsorted(pos_arr, s + _EPS, side="right")) - 1
    return float(val_arr[max(i, 0)])


def _arrival_offset(D: float, v: float, v_des: float, a: float = ACCEL_CAP) -> float:
    """Time to cover D starting at v while moving toward v_des at rate a."""
    if D <= 0:
        return 0.0
    if v_des == v:
        return D / v if v > 0 else math.inf
    sgn = 1.0 if v_des > v else -1.0
    t1 = abs(v_des - v) / a
    d1 = 0.5 * (v + v_des) * t1
    if d1 >= D:
        acc = sgn * a
        disc = v * v + 2 * acc * D
        if disc < 0:
            return math.inf
        return (-v + math.sqrt(disc)) / acc
    if v_des <= 0:
        return math.inf
    return t1 + (D - d1) / v_des


class _Leader:
    """Read access to an already simulated vehicle on the global step grid."""

    def __init__(self, log: VehicleLog):
        self.e = log.entry_step
        self.x = log.x
        self.v = log.v
        self.dt = log.dt
        # (start step, end step, position) of each standstill
        events = []
        moving = self.v > 0
        j = 1
        n = len(self.v)
        while j < n:
            if not moving[j] and moving[j - 1]:
                k = j
                while k < n and not moving[k]:
                    k += 1
                events.append((self.e + j, self.e + k if k < n else 10**12, float(self.x[j])))
                j = k
            j += 1
        self.events = events

    def at(self, j: float) -> tuple[float, float]:
        i = j - self.e
        if i <= 0:
            return 0.0, 0.0 if i < 0 else float(self.v[0])
        n = len(self.x) - 1
        if i >= n:
            return float(self.x[-1] + self.v[-1] * (i - n) * self.dt), float(self.v[-1])
        lo = int(i)
        f = i - lo
        if f == 0:
            return float(self.x[lo]), float(self.v[lo])
        return (
            float(self.x[lo] + f * (self.x[lo + 1] - self.x[lo])),
            float(self.v[lo] + f * (self.v[lo + 1] - self.v[lo])),
        )

    def next_stop(self, s: float, j: int):
        """Standstill ahead of position s that has not ended before step j."""
        for js, je, p in self.events:
            if je > j and p > s - QUEUE_GAP + _EPS:
                return js, je, p
        return None


class _DingoBase:
    """Shared oscillator solution for unperturbed dingoes, sampled from the origin time."""

    def __init__(self, plan: NodePlan, course: _Course, params: OscillatorParams, dt: float, horizon: float):
        north, south = wave_paths(plan)
        path = north if course.direction == NORTH else south
        traj = dingo_trajectory(path, params, horizon=course.t_origin + horizon, origin_km=course.origin_km, dt=dt)
        k0 = int(round(course.t_origin / dt))
        self.x = traj.x[k0:]
        self.v = traj.v[k0:]
        # step offsets (fractional) at which each site is crossed
        self.cross = {}
        for site in course.sites:
            idx = int(np.searchsorted(self.x, site.pos, side="left"))
            if 0 < idx < len(self.x):
                x0, x1 = self.x[idx - 1], self.x[idx]
                self.cross[site.name] = idx - 1 + (site.pos - x0) / (x1 - x0)


class _Runner:
    def __init__(self, corridor, plan, timing, scenario: Scenario, params: OscillatorParams):
        self.sc = scenario
        self.dt = scenario.dt
        C = plan.cycle_time
        self.nc = int(round(C / self.dt))
        if abs(self.nc * self.dt - C) > 1e-9 * C:
            raise ScenarioError(f"cycle time {C} is not a whole number of steps of {self.dt}")
        self.course = _build_course(corridor, plan, timing, scenario.direction, scenario.max_time + 2 * C)
        self.m = scenario.headway / self.dt
        if abs(self.m - round(self.m)) < 1e-9:
            self.m = int(round(self.m))
        self.max_steps = int(math.ceil(scenario.max_time / self.dt))
        self.margin = int(round(FINISH_MARGIN / self.dt))
        self.t0_step = int(round(self.course.t_origin / self.dt))
        self._dingo = None
        self._params = params
        self._plan = plan

    @property
    def dingo(self) -> _DingoBase:
        if self._dingo is None:
            self._dingo = _DingoBase(self._plan, self.course, self._params, self.dt, self.sc.max_time)
        return self._dingo

    def local_time(self, j: float, wave: int) -> float:
        return (j - wave * self.nc) * self.dt

    def phase(self, site: _Site, j: float, wave: int) -> int:
        return site.timing.phase_code(self.local_time(j, wave))

    def desired(self, kind: DriverKind, s: float) -> float:
        c = self.course
        if kind is DriverKind.DINGO:
            return _piece(c.node_pos, c.node_speed, s)
        return desired_speed(kind, _piece(c.limit_pos, c.limit_speed, s)) * KPH

    # -- entry -------------------------------------------------------------
    def entry_step(self, desired_step: int, wave: int, leader: _Leader | None) -> int:
        j = desired_step
        if leader is not None:
            j = max(j, leader.e + int(math.ceil(self.m)))
        for _ in range(self.max_steps):
            ok = self.phase(self.course.origin, j, wave) == GREEN_CODE
            if ok and leader is not None:
                xl, vl = leader.at(j)
                ok = not (vl <= 0 and xl < QUEUE_GAP and j > leader.e)
            if ok:
                return j
            j += 1
        raise ScenarioError("origin never admitted the vehicle")

    # -- fast path ---------------------------------------------------------
    def try_track(self, e: int, wave: int, leader: _Leader | None):
        d = self.dingo
        for site in self.course.sites:
            off = d.cross.get(site.name)
            if off is None or self.phase(site, e + off, wave) == RED_CODE:
                return None
        fin = d.cross[self.course.finish.name]
        n = min(len(d.x), int(math.ceil(fin)) + self.margin + 1)
        x, v = d.x[:n], d.v[:n]
        if leader is not None:
            steps = e + np.arange(n)
            cap = np.array([leader.at(j - self.m)[0] for j in steps])
            if np.any(x > cap + 1e-9):
                return None
            for js, je, p in leader.events:
                lo, hi = max(js - e, 0), min(je - e, n)
                if lo < hi and np.any(x[lo:hi] > p - QUEUE_GAP + 1e-9):
                    return None
        return x.copy(), v.copy(), fin * self.dt, []

    # -- general stepping --------------------------------------------------
    def step_loop(self, e: int, wave: int, kind: DriverKind, leader: _Leader | None):
        dt, A = self.dt, ACCEL_CAP
        sites = self.course.sites
        fin_pos = self.course.finish.pos
        mode = _TRACK if kind is DriverKind.DINGO else _FREE
        base = self.dingo if mode == _TRACK else None
        xs = [0.0]
        vs = [0.0]
        s = v = 0.0
        nxt = 0  # index of next site ahead
        hold = None  # site index the vehicle is holding for
        stops: dict[str, list] = {}
        stopped_at = None
        finish = None
        end_step = None
        for i in range(self.max_steps):
            j = e + i
            while nxt < len(sites) and sites[nxt].pos <= s + _EPS:
                nxt += 1
            v_des = self.desired(kind, s)
            target = math.inf

            if nxt < len(sites):
                site = sites[nxt]
                D = site.pos - s
                zone = v * v / (2 * A) + v * dt + 0.5
                if hold == nxt:
                    if self.phase(site, j, wave) == GREEN_CODE:
                        hold = None
                        mode = _FREE
                elif D <= zone or v <= 0:
                    if mode == _TRACK and site.name in base.cross:
                        t_arr = e + base.cross[site.name]
                    else:
                        t_arr = j + _arrival_offset(D, v, v_des) / dt
                    if math.isinf(t_arr) or self.phase(site, t_arr, wave) == RED_CODE:
                        hold = nxt
                if hold == nxt:
                    target = site.pos - STOP_OFFSET if s <= site.pos - STOP_OFFSET + _EPS else site.pos - 1e-3

            if leader is not None:
                ev = leader.next_stop(s, j)
                if ev is not None:
                    js, je, p = ev
                    line = p - QUEUE_GAP
                    D = line - s
                    zone = v * v / (2 * A) + v * dt + 0.5
                    if js <= j or D <= zone:
                        t_arr = _arrival_offset(max(D, 0.0), v, v_des) / dt
                        if js <= j or je > j + t_arr:
                            target = min(target, line)

            if math.isinf(target):
                if mode == _TRACK:
                    s_new, v_new = float(base.x[i + 1]), float(base.v[i + 1])
                else:
                    v_new = v + max(-A * dt, min(A * dt, v_des - v))
                    s_new = s + 0.5 * (v + v_new) * dt
            else:
                if mode == _TRACK:
                    mode = _FREE
                Dt = target - s
                if Dt <= _EPS:
                    s_new, v_new = s, 0.0
                else:
                    b = v * v / (2 * Dt)
                    if b >= CREEP_DECEL:
                        # a non-positive v_new means uniform braking ends on the target within this step
                        v_new = v - b * dt
                    else:
                        v_new = min(v + A * dt, v_des, math.sqrt(2 * CREEP_DECEL * Dt))
                    s_new = min(s + 0.5 * (v + v_new) * dt, target)
                    if s_new >= target or v_new <= 0.0:
                        s_new, v_new = target, 0.0

            if leader is not None:
                cap, v_cap = leader.at(j + 1 - self.m)
                if s_new > cap + 1e-12:
                    s_new, v_new = max(cap, s), v_cap
                    if mode == _TRACK:
                        mode = _FREE
                xl, _ = leader.at(j + 1)
                if s_new > xl + 1e-9 and j + 1 > leader.e:
                    raise CollisionError(f"follower passed leader at t={(j + 1) * dt:.2f}s, x={s_new:.2f}m")

            # standstill bookkeeping
            if v_new <= 0 and v > 0 and stopped_at is None:
                name = sites[nxt].name if nxt < len(sites) else self.course.finish.name
                stopped_at = name
                stops.setdefault(name, [0.0, s_new, (j + 1) * dt])
            if stopped_at is not None:
                if v_new <= 0:
                    stops[stopped_at][0] += dt
                else:
                    stopped_at = None

            if finish is None and s_new >= fin_pos > s:
                finish = (i + (fin_pos - s) / (s_new - s)) * dt
                end_step = i + 1 + self.margin
            s, v = s_new, max(v_new, 0.0)
            xs.append(s)
            vs.append(v)
            if end_step is not None and i + 1 >= end_step:
                break
        else:
            raise ScenarioError(f"vehicle did not finish within {self.sc.max_time} s")
        recs = [StopRecord(k, w, p, t) for k, (w, p, t) in stops.items()]
        return np.asarray(xs), np.asarray(vs), finish, recs

    def crossings(self, log: VehicleLog) -> dict[str, float]:
        out = {}
        x = log.x
        for site in self.course.sites:
            idx = int(np.searchsorted(x, site.pos, side="left"))
            if idx == 0:
                out[site.name] = log.entry_time
            elif idx < len(x):
                f = (site.pos - x[idx - 1]) / (x[idx] - x[idx - 1])
                out[site.name] = (log.entry_step + idx - 1 + f) * self.dt
        return out


def _wave_offsets(scenario: Scenario, rng: np.random.Generator) -> list[float]:
    n = scenario.vehicles_per_wave
    if scenario.arrival_model == "deterministic":
        return [k * scenario.headway for k in range(n)]
    gaps = rng.exponential(scenario.poisson_mean, size=n - 1)
    return [0.0] + list(np.cumsum(np.maximum(gaps, scenario.headway)))


def run_scenario(
    corridor: Corridor,
    plan: NodePlan,
    timing: TimingTable,
    scenario: Scenario,
    params: OscillatorParams = OscillatorParams(),
) -> list[VehicleLog]:
    """Simulate every vehicle of `scenario`; returns logs in entry order."""
    runner = _Runner(corridor, plan, timing, scenario, params)
    rng = np.random.default_rng(scenario.rng_seed)
    logs: list[VehicleLog] = []
    leader: _Leader | None = None
    C_steps = runner.nc
    for w in range(scenario.waves):
        kinds = draw_mixture(None, scenario.vehicles_per_wave, scenario.mixture, rng=rng)
        offsets = _wave_offsets(scenario, rng)
        for k, (kind, off) in enumerate(zip(kinds, offsets)):
            want = runner.t0_step + w * C_steps + int(round(off / runner.dt))
            e = runner.entry_step(want, w, leader)
            result = None
            if kind is DriverKind.DINGO:
                result = runner.try_track(e, w, leader)
            if result is None:
                result = runner.step_loop(e, w, kind, leader)
            x, v, finish, stops = result
            log = VehicleLog(len(logs), w, kind, e, runner.dt, x, v, finish, stops)
            fin_site = runner.course.finish
            g = fin_site.timing.green_start(runner.local_time(e + finish / runner.dt, w))
            log.finish_window = int(round((g - fin_site.timing.T_roffset) / plan.cycle_time))
            log.crossings = runner.crossings(log)
            logs.append(log)
            leader = _Leader(log)
    return logs


def signal_violations(logs: Sequence[VehicleLog], corridor: Corridor, plan: NodePlan, timing: TimingTable, direction: str) -> list[tuple[int, str, float]]:
    """(vehicle, site, time) for every crossing made while the site showed Red."""
    horizon = max((lg.finish_time for lg in logs), default=0.0) + 2 * plan.cycle_time
    course = _build_course(corridor, plan, timing, direction, horizon)
    nc = plan.cycle_time
    bad = []
    for lg in logs:
        for site in course.sites:
            t = lg.crossings.get(site.name)
            if t is None:
                continue
            if site.timing.phase_code(t - lg.wave * nc) == RED_CODE:
                bad.append((lg.index, site.name, t))
    return bad


def collision_violations(logs: Sequence[VehicleLog], headway: float) -> list[tuple[int, float]]:
    """(vehicle, time) where a follower is ahead of its leader or inside a stopped leader's gap."""
    bad = []
    for lead, fol in zip(logs, logs[1:]):
        L = _Leader(lead)
        for i, (x, v) in enumerate(zip(fol.x, fol.v)):
            j = fol.entry_step + i
            xl, vl = L.at(j)
            if j <= L.e:
                continue
            if x > xl + 1e-6 or (vl <= 0 and x > xl - QUEUE_GAP + 1e-6):
                bad.append((fol.index, j * fol.dt))
                break
    return bad


@dataclass(frozen=True)
class Metrics:
    mean_travel_time: float
    mean_red_light_stops: float
    mean_wait: float
    mean_delay: float
    pct_delay: float
    max_flow: float | None
    mean_flow: float | None
    vehicles: int
    steady_state: bool
    realized_fractions: dict

    def to_dict(self) -> dict:
        return {
            "MTT_s": self.mean_travel_time,
            "MRLS_per_pcu": self.mean_red_light_stops,
            "MRLST_s": self.mean_wait,
            "MDT_s": self.mean_delay,
            "pct_delay": self.pct_delay,
            "max_flow_vphpl": self.max_flow,
            "mean_flow_vphpl": self.mean_flow,
            "vehicles": self.vehicles,
            "steady_state": self.steady_state,
            "realized_fractions": self.realized_fractions,
        }


def steady_state_flag(logs: Sequence[VehicleLog], cycle_time: float | None = None) -> bool:
    """True when every platoon leaves through a single green window of the finish site."""
    if not logs:
        raise ScenarioError("no logs")
    by_wave: dict[int, set[int]] = {}
    for lg in logs:
        by_wave.setdefault(lg.wave, set()).add(lg.finish_window)
    return all(len(w) == 1 for w in by_wave.values())


def _flow(logs: Sequence[VehicleLog]) -> float | None:
    if len(logs) < 2:
        return None
    t = sorted(lg.finish_time for lg in logs)
    span = t[-1] - t[0]
    if span <= 0:
        return None
    return (len(logs) - 1) * 3600.0 / span


def compute_metrics(logs: Sequence[VehicleLog], baseline: float, cycle_time: float | None = None) -> Metrics:
    if not logs:
        raise ScenarioError("no logs")
    n = len(logs)
    mtt = float(sum(lg.travel_time for lg in logs) / n)
    mrls = float(sum(lg.stop_count for lg in logs) / n)
    wait = float(sum(lg.total_wait for lg in logs) / n)
    waves: dict[int, list[VehicleLog]] = {}
    for lg in logs:
        waves.setdefault(lg.wave, []).append(lg)
    flows = [f for f in (_flow(w) for w in waves.values()) if f is not None]
    max_flow = float(sum(flows) / len(flows)) if flows else None
    steady = steady_state_flag(logs)
    counts: dict[str, int] = {}
    for lg in logs:
        counts[lg.kind.value] = counts.get(lg.kind.value, 0) + 1
    return Metrics(
        mean_travel_time=mtt,
        mean_red_light_stops=mrls,
        mean_wait=wait,
        mean_delay=mtt - baseline,
        pct_delay=100.0 * (mtt - baseline) / baseline,
        max_flow=max_flow,
        mean_flow=max_flow / 2 if (steady and max_flow is not None) else None,
        vehicles=n,
        steady_state=steady,
        realized_fractions={k: c / n for k, c in sorted(counts.items())},
    )


def wave_metrics(logs: Sequence[VehicleLog], baseline: float) -> list[Metrics]:
    waves: dict[int, list[VehicleLog]] = {}
    for lg in logs:
        waves.setdefault(lg.wave, []).append(lg)
    return [compute_metrics(waves[w], baseline) for w in sorted(waves)]
