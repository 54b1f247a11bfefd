"""Ball volumes and the isoperimetric constants."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gamma

from .errors import Unsupported


def ball_volume(d: int) -> float:
    """Volume of the unit ball in R^d (1 for d = 0)."""
    if d < 0:
        raise ValueError("dimension must be non-negative")
    return float(np.pi ** (d / 2.0) / gamma(d / 2.0 + 1.0))


def sphere_area(d: int) -> float:
    """(d-1)-volume of the unit sphere in R^d; ``d * ball_volume(d)``.

    Counts the two points of the 0-sphere, so ``sphere_area(1) == 2``.
    """
    return d * ball_volume(d) if d > 0 else 0.0


def _slope_factor(tau: float) -> float:
    if tau < 1.0:
        raise ValueError("tau must be >= 1")
    return tau + np.sqrt(tau * tau - 1.0)


def thm1_constant(n: int, k: int, tau: float) -> float:
    """Constant for purely timelike codimension (m = 0)."""
    if k < 2:
        raise Unsupported("the constant needs k >= 2; embed R^{n,1} into R^{n,2}")
    e = n + k - 2
    return (e / n) * _slope_factor(tau) ** e / (n**n * ball_volume(n))


def thm2_constant(n: int, m: int, k: int, tau: float) -> float:
    """Constant when the normal bundle also has m >= 1 spacelike directions."""
    if k < 2:
        raise Unsupported("the constant needs k >= 2; embed R^{n+m,1} into R^{n+m,2}")
    if m < 1:
        raise ValueError("m >= 1 required; use thm1_constant for m = 0")
    e = n + m + k - 2
    return (
        (e / (n + m))
        * _slope_factor(tau) ** e
        * (tau * tau + 1.0) ** ((k - 2) / 2.0)
        / tau ** (m + k - 2)
        * ball_volume(m)
        / (n**n * ball_volume(n + m))
    )


def measure_constant(n: int, m: int, k: int, c0: float, tau: float) -> float:
    """Lower bound for the normalised measure of the comparison image."""
    e = n + m + k - 2
    return (
        k * ball_volume(k) * sphere_area(n + m) / (2.0 * e)
        * (c0 * (tau - np.sqrt(tau * tau - 1.0))) ** e
    )


def density_identity_gap(tau):
    """(1 + sqrt(tau^4 - 1)) / tau - (1/tau + sqrt(tau^2 - 1/tau^2)); zero for tau >= 1."""
    tau = np.asarray(tau, dtype=float)
    return (1.0 + np.sqrt(tau**4 - 1.0)) / tau - (1.0 / tau + np.sqrt(tau**2 - 1.0 / tau**2))


@dataclass(frozen=True)
class TheoremConstants:
    n: int
    m: int
    k: int
    tau: float
    c_thm1: float | None
    c_thm2: float | None

    @classmethod
    def build(cls, n, m, k, tau):
        c1 = thm1_constant(n, k, tau)
        c2 = thm2_constant(n, m, k, tau) if m >= 1 else None
        return cls(n, m, k, float(tau), c1, c2)
