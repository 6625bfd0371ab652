"""Node-placement objective and a deterministic local search.

The objective is the RMS gap between green-wave speed and speed limit over
the node span,

    eta^2 = (1/L) * integral (v_g(o) - v_lim(o))^2 do,

evaluated exactly: both factors are piecewise constant, so the integral is a
finite sum over the pieces cut by nodes and limit changes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .corridor import Corridor, Node, NodePlan, Violation, validate_plan
from .errors import DomainError, PlanValidationError
from .timing import wave_speed


@dataclass(frozen=True)
class PlacementConfig:
    """Constraints and search controls.

    With `speed_band` set, each segment must keep ``|v_g - limit| <= band``
    on every stretch of constant limit it covers; otherwise the absolute
    bounds `v_min`/`v_max` apply.
    """

    v_min: float = 0.0
    v_max: float = math.inf
    speed_band: float | None = None
    xi_max: float | Mapping[str, float] | None = 0.45
    max_iterations: int = 20000
    step_km: float = 0.2
    min_step_km: float = 1e-4
    min_segment_km: float = 0.05
    restarts: int = 4
    seed: int = 0
    structural_moves: bool = True

    def __post_init__(self):
        if not self.v_min < self.v_max:
            raise DomainError("v_min must be below v_max")
        if self.speed_band is not None and self.speed_band <= 0:
            raise DomainError("speed_band must be positive")
        values = self.xi_max.values() if isinstance(self.xi_max, Mapping) else [self.xi_max]
        for x in values:
            if x is not None and not 0.0 < x < 0.5:
                raise DomainError(f"xi_max values must lie in (0, 1/2), got {x}")
        if self.max_iterations < 0 or self.step_km <= 0 or self.min_step_km <= 0:
            raise DomainError("search controls must be positive")


def _pieces(corridor: Corridor, plan: NodePlan):
    """(start, end, v_g, limit) for every stretch on which both are constant."""
    odo = plan.odometers
    lo, hi = odo[0], odo[-1]
    cuts = set(odo)
    cuts.update(o for o, _ in corridor.limit_breaks() if lo < o < hi)
    cuts = sorted(cuts)
    T_g = plan.green_time
    out = []
    seg = 0
    for a, b in zip(cuts, cuts[1:]):
        while odo[seg + 1] <= a:
            seg += 1
        v_g = wave_speed(odo[seg + 1] - odo[seg], T_g)
        out.append((a, b, v_g, corridor.speed_limit_at(a)))
    return out


def eta(corridor: Corridor, plan: NodePlan) -> float:
    odo = plan.odometers
    if len(odo) < 2 or any(b <= a for a, b in zip(odo, odo[1:])):
        raise PlanValidationError([Violation(None, "nodes must be strictly increasing")])
    L = odo[-1] - odo[0]
    total = sum((v - lim) ** 2 * (b - a) for a, b, v, lim in _pieces(corridor, plan))
    return math.sqrt(total / L)


def check_constraints(corridor: Corridor, plan: NodePlan, config: PlacementConfig) -> list[Violation]:
    """Speed violations per segment followed by plan-validation problems (including xi)."""
    out: list[Violation] = []
    odo = plan.odometers
    names = [n.name for n in plan.nodes]
    seen = set()
    for a, b, v, lim in _pieces(corridor, plan):
        if config.speed_band is not None:
            lo_v, hi_v = lim - config.speed_band, lim + config.speed_band
        else:
            lo_v, hi_v = config.v_min, config.v_max
        if lo_v - 1e-9 <= v <= hi_v + 1e-9:
            continue
        i = max(k for k in range(len(odo) - 1) if odo[k] <= a)
        label = f"{names[i]} -> {names[i + 1]}"
        if label in seen:
            continue
        seen.add(label)
        out.append(Violation(label, f"v_g={v:.1f} kph outside [{lo_v:.1f}, {hi_v:.1f}]"))
    out.extend(validate_plan(corridor, plan, config.xi_max))
    return out


@dataclass
class OptimizeResult:
    plan: NodePlan
    eta: float
    seed_eta: float
    feasible: bool
    violations: list[Violation]
    iterations: int
    trace: list[tuple[int, float, int]] = field(default_factory=list)


def _score(corridor, plan, config):
    try:
        viol = check_constraints(corridor, plan, config)
        return (len(viol), eta(corridor, plan)), viol
    except (DomainError, PlanValidationError, ValueError):
        return None, None


class _Search:
    def __init__(self, corridor: Corridor, config: PlacementConfig):
        self.corridor = corridor
        self.config = config
        self.evals = 0
        self.trace: list[tuple[int, float, int]] = []
        self.best = None  # (score, plan, violations)

    @property
    def exhausted(self) -> bool:
        return self.evals >= self.config.max_iterations

    def evaluate(self, plan: NodePlan):
        self.evals += 1
        score, viol = _score(self.corridor, plan, self.config)
        if score is not None and (self.best is None or score < self.best[0]):
            self.best = (score, plan, viol)
            self.trace.append((self.evals, score[1], score[0]))
        return score

    def _moved(self, plan: NodePlan, i: int, odo: float) -> NodePlan | None:
        nodes = list(plan.nodes)
        lo, hi = nodes[i - 1].odometer if i > 0 else -math.inf, nodes[i + 1].odometer if i + 1 < len(nodes) else math.inf
        gap = self.config.min_segment_km
        if not (lo + gap <= odo <= hi - gap) or odo < 0:
            return None
        nodes[i] = Node.virtual(odo, nodes[i].label)
        return plan.with_nodes(nodes)

    def descend(self, plan: NodePlan, score):
        step = self.config.step_km
        while step >= self.config.min_step_km and not self.exhausted:
            improved = False
            for i, node in enumerate(plan.nodes):
                if node.is_real:
                    continue
                for direction in (1.0, -1.0):
                    if self.exhausted:
                        break
                    cand = self._moved(plan, i, round(node.odometer + direction * step, 9))
                    if cand is None:
                        continue
                    s = self.evaluate(cand)
                    if s is not None and s < score:
                        plan, score, improved = cand, s, True
                        break
            if not improved:
                step /= 2.0
        return plan, score

    def structural(self, plan: NodePlan, score):
        """Best single removal or midpoint insertion of a virtual node."""
        best = (score, plan)
        nodes = list(plan.nodes)
        for i, node in enumerate(nodes):
            if self.exhausted:
                break
            if node.is_real or len(nodes) <= 2:
                continue
            cand = plan.with_nodes(nodes[:i] + nodes[i + 1 :])
            s = self.evaluate(cand)
            if s is not None and s < best[0]:
                best = (s, cand)
        for i in range(len(nodes) - 1):
            if self.exhausted:
                break
            mid = round(0.5 * (nodes[i].odometer + nodes[i + 1].odometer), 9)
            cand = plan.with_nodes(nodes[: i + 1] + [Node.virtual(mid, "V new")] + nodes[i + 1 :])
            s = self.evaluate(cand)
            if s is not None and s < best[0]:
                best = (s, cand)
        return best[1], best[0]


def _relabel(plan: NodePlan) -> NodePlan:
    nodes = [n if n.is_real else Node.virtual(n.odometer, f"V {i + 1}") for i, n in enumerate(plan.nodes)]
    return plan.with_nodes(nodes)


def optimize_plan(corridor: Corridor, seed_plan: NodePlan, config: PlacementConfig = PlacementConfig()) -> OptimizeResult:
    """Coordinate descent over virtual-node odometers with seeded restarts.

    Candidates are compared by (number of violations, eta); the seed plan is
    always a candidate, so the result is never worse than the seed.
    """
    seed_score, seed_viol = _score(corridor, seed_plan, config)
    if seed_score is None:
        raise PlanValidationError(validate_plan(corridor, seed_plan, None) or [Violation(None, "seed plan unusable")])
    search = _Search(corridor, config)
    search.best = (seed_score, seed_plan, seed_viol)
    search.trace.append((0, seed_score[1], seed_score[0]))
    rng = np.random.default_rng(config.seed)

    starts = [seed_plan]
    for _ in range(config.restarts):
        nodes = list(seed_plan.nodes)
        for i, n in enumerate(nodes):
            if not n.is_real:
                lo = nodes[i - 1].odometer if i > 0 else n.odometer - config.step_km
                hi = nodes[i + 1].odometer if i + 1 < len(nodes) else n.odometer + config.step_km
                nodes[i] = Node.virtual(float(rng.uniform(lo, hi)), n.label)
        starts.append(seed_plan.with_nodes(nodes))

    for start in starts:
        if search.exhausted:
            break
        score = search.evaluate(start) if start is not seed_plan else seed_score
        if score is None:
            continue
        plan = start
        while not search.exhausted:
            plan, score = search.descend(plan, score)
            if not config.structural_moves:
                break
            new_plan, new_score = search.structural(plan, score)
            if new_score >= score:
                break
            plan, score = new_plan, new_score

    (n_viol, best_eta), best_plan, viol = search.best
    if best_plan is not seed_plan:
        best_plan = _relabel(best_plan)
    return OptimizeResult(
        plan=best_plan,
        eta=best_eta,
        seed_eta=seed_score[1],
        feasible=n_viol == 0,
        violations=list(viol),
        iterations=search.evals,
        trace=search.trace,
    )
