"""Greenberg logarithmic speed-density model and its flow curve."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class GreenbergModel:
    """u = c0 - c1 ln(rho), valid for rho_min <= rho <= rho_max (veh/km, km/h)."""

    c0: float = 125.75
    c1: float = 25.35
    rho_min: float = 8.0
    rho_max: float = 115.0

    def __post_init__(self):
        if self.c0 <= 0 or self.c1 <= 0:
            raise ValueError("c0 and c1 must be positive")
        if not self.rho_min < self.rho_max:
            raise ValueError("rho_min must be below rho_max")

    def _check(self, rho):
        r = np.asarray(rho, dtype=float)
        if np.any(r < self.rho_min) or np.any(r > self.rho_max):
            raise DomainError(f"density outside model domain [{self.rho_min}, {self.rho_max}] veh/km")
        return r


def speed_at_density(model: GreenbergModel, rho):
    r = model._check(rho)
    u = model.c0 - model.c1 * np.log(r)
    return float(u) if u.ndim == 0 else u


def flow_at_density(model: GreenbergModel, rho):
    """Flow in veh/h/lane."""
    r = model._check(rho)
    q = r * (model.c0 - model.c1 * np.log(r))
    return float(q) if q.ndim == 0 else q


def peak_flow(model: GreenbergModel) -> tuple[float, float]:
    """Density and flow at the maximum of the flow curve.

    dq/drho = c0 - c1 - c1 ln(rho) vanishes at rho* = exp((c0 - c1)/c1), where
    the speed equals c1 and so q* = c1 * rho*.
    """
    rho_star = math.exp((model.c0 - model.c1) / model.c1)
    if not model.rho_min <= rho_star <= model.rho_max:
        raise DomainError(f"peak density {rho_star:.3f} lies outside the model domain")
    return rho_star, flow_at_density(model, rho_star)


def flow_curve(model: GreenbergModel, step: float = 1.0) -> np.ndarray:
    """Rows of (rho, u, q) sampled across the model domain."""
    rho = np.arange(model.rho_min, model.rho_max + step / 2, step)
    rho = rho[rho <= model.rho_max]
    return np.column_stack([rho, speed_at_density(model, rho), flow_at_density(model, rho)])
