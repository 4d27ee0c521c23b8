"""Closed-form evaluation of the constant-feedback linear flows.

Between switching events the model is a linear ODE with feedback frozen at
s in {+1, -1}; its solution is

    v(t) = A(t) v(0) + s * b(t)

where A and b are written below in terms of two regime-spanning scalar
functions ``gcos`` and ``gsinc``.  In the underdamped regime these are
cos(omega t) and sin(omega t)/omega; in the overdamped regime the same code
path evaluates cosh and sinh/|omega| through the sign of ``omega2``; at the
critical point they reduce to 1 and t.  A short series covers the
neighborhood of the critical point where the trig forms would cancel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .params import Rates

# |omega2| * t^2 below this uses the series; three terms give ~1e-24 truncation.
SERIES_THRESHOLD = 1e-8


@dataclass(frozen=True)
class Headpoint:
    """Current (x, y) value of the solution."""

    x: float
    y: float

    def __neg__(self) -> "Headpoint":
        return Headpoint(-self.x, -self.y)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y])


def gcos(t: float, r: Rates) -> float:
    """cos(omega t), cosh(|omega| t), or the critical limit 1, by regime."""
    w2t2 = r.omega2 * t * t
    if abs(w2t2) < SERIES_THRESHOLD:
        return 1.0 - w2t2 / 2.0 + w2t2 * w2t2 / 24.0
    if r.omega2 > 0.0:
        return math.cos(r.omega_abs * t)
    return math.cosh(r.omega_abs * t)


def gsinc(t: float, r: Rates) -> float:
    """sin(omega t)/omega, sinh(|omega| t)/|omega|, or the critical limit t."""
    w2t2 = r.omega2 * t * t
    if abs(w2t2) < SERIES_THRESHOLD:
        return t * (1.0 - w2t2 / 6.0 + w2t2 * w2t2 / 120.0)
    if r.omega2 > 0.0:
        return math.sin(r.omega_abs * t) / r.omega_abs
    return math.sinh(r.omega_abs * t) / r.omega_abs


def decayed_gcos_gsinc(t: float, r: Rates) -> tuple[float, float]:
    """(e^{-mu t} gcos(t), e^{-mu t} gsinc(t)) without intermediate overflow.

    In the overdamped regime |omega| < mu, so both exponents below are
    negative for t > 0 and the products stay bounded even when cosh alone
    would overflow.
    """
    w2t2 = r.omega2 * t * t
    if abs(w2t2) < SERIES_THRESHOLD or r.omega2 > 0.0:
        decay = math.exp(-r.mu * t)
        return decay * gcos(t, r), decay * gsinc(t, r)
    w = r.omega_abs
    ep = math.exp((w - r.mu) * t)
    em = math.exp(-(w + r.mu) * t)
    return 0.5 * (ep + em), 0.5 * (ep - em) / w


def flow_matrix(t: float, r: Rates) -> np.ndarray:
    """State-transition matrix A(t) of the frozen-feedback flow, t >= 0."""
    egc, egs = decayed_gcos_gsinc(t, r)
    mu = r.mu
    # mu^2 + omega^2 = Omega^2 holds in every regime with omega2 signed.
    a21 = r.omega_sq_plus_mu_sq / (2.0 * mu) * egs
    return np.array(
        [
            [egc - mu * egs, -2.0 * mu * egs],
            [a21, egc + mu * egs],
        ]
    )


def flow_offset(t: float, r: Rates) -> np.ndarray:
    """Offset b(t); the flow toward the node/spiral at (0, +1) is A(t)v + b(t)."""
    egc, egs = decayed_gcos_gsinc(t, r)
    return np.array([2.0 * r.mu * egs, 1.0 - (egc + r.mu * egs)])


def apply_flow(t: float, v: Headpoint, s: int, r: Rates) -> Headpoint:
    """Advance the headpoint by time t under feedback frozen at s in {+1, -1}."""
    if s not in (-1, 1):
        raise ValueError(f"flow sign must be +1 or -1, got {s}")
    egc, egs = decayed_gcos_gsinc(t, r)
    mu = r.mu
    bx = 2.0 * mu * egs
    by_decay = egc + mu * egs
    x = (egc - mu * egs) * v.x - 2.0 * mu * egs * v.y + s * bx
    y = (
        r.omega_sq_plus_mu_sq / (2.0 * mu) * egs * v.x
        + by_decay * v.y
        + s * (1.0 - by_decay)
    )
    return Headpoint(x, y)


def flow_x(t: float, v: Headpoint, s: int, r: Rates) -> float:
    """x-component of apply_flow, without building the Headpoint."""
    egc, egs = decayed_gcos_gsinc(t, r)
    mu = r.mu
    return (egc - mu * egs) * v.x - 2.0 * mu * egs * (v.y - s)


def derivative(v: Headpoint, s: int, r: Rates) -> tuple[float, float]:
    """Right-hand side of the frozen-feedback ODE at v."""
    dx = 2.0 * r.mu * (-v.x - v.y + s)
    dy = r.omega_sq_plus_mu_sq / (2.0 * r.mu) * v.x
    return dx, dy
