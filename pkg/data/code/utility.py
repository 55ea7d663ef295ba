"""
Burst Utility Functions
Utility received at the moment a gain or loss is realized

Key Concepts:
1. g = G/R: gain ratio relative to the reference level
2. Scaled-TK: power utility on each side, loss side scaled by lambda
3. Modified-TK: R-reduced power of (1 + g), logarithmic when alpha = 0
4. Full form U(G, R) = R^beta u(G/R) is homogeneous of degree beta
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from model_params import ModelError, UtilityFamily

# Curvatures closer to zero than this use the logarithmic limit.
LOG_LIMIT_TOL = 1e-12


class Side(str, Enum):
    ABOVE = "above"
    BELOW = "below"


@dataclass(frozen=True)
class BurstValue:
    value: float | np.ndarray
    derivative: float | np.ndarray | None = None


def _box_cox(g, alpha):
    """[(1+g)^alpha - 1]/alpha, ln(1+g) in the limit."""
    log1p = np.log1p(g)
    if abs(alpha) < LOG_LIMIT_TOL:
        return log1p
    return np.expm1(alpha * log1p) / alpha


def _as_output(values, scalar):
    return float(values) if scalar else values


def burst_value(g, u):
    """Vectorized u(g) without the domain check; callers guarantee g >= -1 for modified-TK."""
    g = np.asarray(g, dtype=float)
    gains = g >= 0
    with np.errstate(divide="ignore", invalid="ignore"):
        if u.family is UtilityFamily.SCALED_TK:
            up = np.power(np.where(gains, g, 0.0), u.alpha_g)
            down = -u.lam * np.power(np.where(gains, 0.0, -g), u.alpha_l)
        else:
            up = _box_cox(np.where(gains, g, 0.0), u.alpha_g)
            down = u.lam * _box_cox(np.where(gains, 0.0, g), u.alpha_l)
    return np.where(gains, up, down)


def burst_slope(g, u, side=None):
    """Vectorized u'(g); at g = 0 the side decides which branch is used."""
    g = np.asarray(g, dtype=float)
    above = g > 0
    if side is not None:
        above = above | ((g == 0) & (Side(side) is Side.ABOVE))
    with np.errstate(divide="ignore", invalid="ignore"):
        if u.family is UtilityFamily.SCALED_TK:
            up = u.alpha_g * np.power(np.where(above, g, 1.0), u.alpha_g - 1.0)
            down = u.lam * u.alpha_l * np.power(np.where(above, 1.0, -g), u.alpha_l - 1.0)
        else:
            up = np.power(1.0 + np.where(above, g, 0.0), u.alpha_g - 1.0)
            down = u.lam * np.power(1.0 + np.where(above, 0.0, g), u.alpha_l - 1.0)
    return np.where(above, up, down)


def burst(g, u, derivative=False):
    """
    Burst utility u(g) for a gain ratio g, optionally with u'(g).

    Modified-TK is only defined for g >= -1 (a loss cannot exceed the reference).
    """
    scalar = np.ndim(g) == 0
    arr = np.asarray(g, dtype=float)
    if u.family is UtilityFamily.MODIFIED_TK and np.any(arr < -1.0):
        raise ModelError("DOMAIN", f"modified-TK utility needs g >= -1, got min g = {arr.min()}")
    value = _as_output(burst_value(arr, u), scalar)
    if not derivative:
        return BurstValue(value)
    return BurstValue(value, burst_marginal(g, u))


def burst_marginal(g, u, side=None):
    """
    Analytic marginal utility u'(g) of the branch containing g.

    g = 0 is a kink and needs side="above" or side="below"; modified-TK gives
    1 and lam there.
    """
    scalar = np.ndim(g) == 0
    arr = np.asarray(g, dtype=float)
    if side is None and np.any(arr == 0):
        raise ModelError("KINK", "marginal utility at g = 0 needs side='above' or side='below'")
    if u.family is UtilityFamily.MODIFIED_TK and np.any(arr <= -1.0):
        raise ModelError("DOMAIN", "modified-TK marginal utility needs g > -1")
    return _as_output(burst_slope(arr, u, side), scalar)


def full_burst(G, R, u):
    """U(G, R) = R^beta u(G/R)."""
    if np.any(np.asarray(R) <= 0):
        raise ModelError("INVALID_REFERENCE", f"reference level must be positive, got {R}")
    scalar = np.ndim(G) == 0 and np.ndim(R) == 0
    g = np.asarray(G, dtype=float) / np.asarray(R, dtype=float)
    value = np.power(np.asarray(R, dtype=float), u.beta) * np.asarray(burst(g, u).value)
    return _as_output(value, scalar)
