"""
Optimal Realization Policy
Solve for the sale thresholds of a realization-utility investor

Key Concepts:
1. Reduced value v(x) = C1 x^g1 + C2 x^g2 on the continuation region [theta, Theta]
2. Boundary conditions: at each threshold the investor collects burst utility and
   re-enters with reference K * price, worth (K phi)^beta v(1)
3. The policy maximizes v(1) = C1 + C2; the problem is not convex, so the corner
   (gains only) and the interior (two-point) regimes are solved separately
4. Critical loss aversion lambda*: the regime boundary between the two
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache

import numpy as np
import pandas as pd
from scipy import optimize
from scipy.special import expit, logit

from model_params import (
    BETA_GAMMA_TOL,
    AssetParams,
    CostSpec,
    ModelError,
    UtilityFamily,
    check_transversality,
    gamma_roots,
)
from utility import LOG_LIMIT_TOL, burst_slope, burst_value

logger = logging.getLogger(__name__)

THETA_MIN = 1e-6
THETA_MAX = 1.0 - 1e-6
GAP_MIN = 1e-6          # smallest Theta - 1/kappa searched
GAP_CAP = 1e6
GAP_MIN_SPAN = 8.0      # search at least up to Theta = 1/kappa + 8
VALUE_TOL = 1e-10
THRESHOLD_TOL = 1e-8
SCREEN_POINTS = 96
MAX_STARTS = 3
MAX_PASSES = 40
REGION_TOL = 1e-12


class Regime(str, Enum):
    TWO_POINT = "TwoPoint"
    GAINS_ONLY = "GainsOnly"


@dataclass(frozen=True)
class ValueCoefficients:
    c1: float
    c2: float
    gamma: object
    theta: float
    theta_big: float

    @property
    def v1(self):
        return self.c1 + self.c2

    def value(self, x):
        x = np.asarray(x, dtype=float)
        out = self.c1 * np.power(x, self.gamma.gamma1)
        if self.c2 != 0.0:
            out = out + self.c2 * np.power(x, self.gamma.gamma2)
        return out

    def slope(self, x):
        g1, g2 = self.gamma.gamma1, self.gamma.gamma2
        x = np.asarray(x, dtype=float)
        out = self.c1 * g1 * np.power(x, g1 - 1.0)
        if self.c2 != 0.0:
            out = out + self.c2 * g2 * np.power(x, g2 - 1.0)
        return out

    def curvature(self, x):
        g1, g2 = self.gamma.gamma1, self.gamma.gamma2
        x = np.asarray(x, dtype=float)
        out = self.c1 * g1 * (g1 - 1.0) * np.power(x, g1 - 2.0)
        if self.c2 != 0.0:
            out = out + self.c2 * g2 * (g2 - 1.0) * np.power(x, g2 - 2.0)
        return out


@dataclass(frozen=True)
class Policy:
    theta: float
    theta_big: float
    regime: Regime
    v1: float
    coefficients: ValueCoefficients
    warnings: tuple = field(default=())

    @property
    def realizes_losses(self):
        return self.regime is Regime.TWO_POINT

    def as_dict(self):
        two_point = self.realizes_losses
        return {
            "regime": self.regime.value,
            "theta": self.theta,
            "theta_big": self.theta_big,
            "loss_pct": (self.theta - 1.0) if two_point else None,
            "gain_pct": self.theta_big - 1.0,
            "v1": self.v1,
            "c1": self.coefficients.c1,
            "c2": self.coefficients.c2,
            "warnings": list(self.warnings),
        }


@dataclass(frozen=True)
class PastingResiduals:
    upper: float
    lower: float | None

    def max_abs(self):
        return max(abs(self.upper), abs(self.lower or 0.0))


@dataclass(frozen=True)
class CriticalLambda:
    lambda_star: float
    theta_star: float
    theta_big_star: float


def _coefficient_arrays(theta, theta_big, u, gamma, costs):
    """
    C1, C2 for broadcast arrays of thresholds; theta <= 0 means gains only.

    Also returns the determinant and its magnitude scale for singularity checks.
    """
    g1, g2 = gamma.gamma1, gamma.gamma2
    theta = np.asarray(theta, dtype=float)
    big = np.asarray(theta_big, dtype=float)
    gains_only = theta <= 0
    small = np.where(gains_only, 0.5, theta)
    with np.errstate(all="ignore"):
        u_big = burst_value(costs.kappa * big - 1.0, u)
        u_small = burst_value(costs.kappa * small - 1.0, u)
        reset_big = np.power(costs.K * big, u.beta)
        reset_small = np.power(costs.K * small, u.beta)
        c1_big = np.power(big, g1) - reset_big
        c2_big = np.power(big, g2) - reset_big
        c1_small = np.power(small, g1) - reset_small
        c2_small = np.power(small, g2) - reset_small
        det = c1_big * c2_small - c1_small * c2_big
        scale = np.abs(c1_big * c2_small) + np.abs(c1_small * c2_big)
        c1 = np.where(gains_only, u_big / c1_big, (c2_small * u_big - c2_big * u_small) / det)
        c2 = np.where(gains_only, 0.0, (c1_big * u_small - c1_small * u_big) / det)
        det = np.where(gains_only, c1_big, det)
        scale = np.where(gains_only, np.power(big, g1) + reset_big, scale)
    return c1, c2, det, scale


def _initial_value(theta, theta_big, u, gamma, costs):
    """Vectorized v(1) = C1 + C2; non-finite results become -inf."""
    c1, c2, _, _ = _coefficient_arrays(theta, theta_big, u, gamma, costs)
    v1 = c1 + c2
    return np.where(np.isfinite(v1), v1, -np.inf)


def value_coefficients(theta, theta_big, u, asset, costs):
    """
    Coefficients of the reduced value function generated by a policy.

    theta None (or 0) gives the gains-only form with C2 = 0.
    """
    theta = 0.0 if theta is None else float(theta)
    theta_big = float(theta_big)
    if not (0.0 <= theta < 1.0 < theta_big):
        raise ModelError("DEGENERATE", f"need 0 <= theta < 1 < Theta, got theta={theta}, Theta={theta_big}")
    gamma = gamma_roots(asset, u.delta)
    c1, c2, det, scale = _coefficient_arrays(theta, theta_big, u, gamma, costs)
    if not abs(float(det)) > 1e-14 * float(scale) or not np.isfinite(c1 + c2):
        raise ModelError("SINGULAR", f"coefficient system is singular at theta={theta}, Theta={theta_big}")
    return ValueCoefficients(float(c1), float(c2), gamma, theta, theta_big)


def reduced_value(x, coeffs):
    """v(x) = C1 x^g1 + C2 x^g2 inside the continuation region."""
    lo, hi = coeffs.theta, coeffs.theta_big
    arr = np.asarray(x, dtype=float)
    tol = REGION_TOL * hi
    if np.any(arr < lo - tol) or np.any(arr > hi + tol):
        raise ModelError("OUT_OF_REGION", f"x must lie in [{lo}, {hi}]")
    value = coeffs.value(np.clip(arr, lo, hi))
    return float(value) if np.ndim(x) == 0 else value


def _pasting_mismatch(phi, coeffs, u, costs):
    """phi v'(phi) - [kappa phi u'(kappa phi - 1) + beta (K phi)^beta v(1)]."""
    g1, g2 = coeffs.gamma.gamma1, coeffs.gamma.gamma2
    weighted = g1 * coeffs.c1 * phi ** g1 + g2 * coeffs.c2 * phi ** g2
    target = (costs.kappa * phi * float(burst_slope(costs.kappa * phi - 1.0, u))
              + u.beta * (costs.K * phi) ** u.beta * coeffs.v1)
    return weighted - target


def smooth_pasting_residuals(p, u, asset, costs):
    """
    First-order optimality mismatches at Theta and, for two-point policies, theta.

    The coefficients are rebuilt from p's thresholds, so a perturbed policy is
    judged on its own value function. A gains-only policy has no lower
    condition and reports None there.
    """
    two_point = p.regime is Regime.TWO_POINT
    coeffs = value_coefficients(p.theta if two_point else None, p.theta_big, u, asset, costs)
    upper = _pasting_mismatch(p.theta_big, coeffs, u, costs)
    lower = _pasting_mismatch(p.theta, coeffs, u, costs) if two_point else None
    return PastingResiduals(upper=upper, lower=lower)


def _gap_limit(u, gamma, costs):
    """Largest Theta - 1/kappa worth searching: double until v(1) falls twice."""
    base = 1.0 / costs.kappa
    gap = 1e-3
    prev = float(_initial_value(0.0, base + gap, u, gamma, costs))
    drops = 0
    while gap < GAP_CAP:
        gap *= 2.0
        cur = float(_initial_value(0.0, base + gap, u, gamma, costs))
        drops = drops + 1 if cur < prev else 0
        prev = cur
        if drops >= 2:
            break
    return min(max(gap, GAP_MIN_SPAN), GAP_CAP)


def _solve_gains_only(u, gamma, costs, gap_max):
    base = 1.0 / costs.kappa
    log_gaps = np.linspace(math.log(GAP_MIN), math.log(gap_max), 400)
    values = _initial_value(0.0, base + np.exp(log_gaps), u, gamma, costs)
    i = int(np.argmax(values))
    lo, hi = log_gaps[max(i - 1, 0)], log_gaps[min(i + 1, len(log_gaps) - 1)]

    def negative_value(s):
        return -float(_initial_value(0.0, base + math.exp(s), u, gamma, costs))

    res = optimize.minimize_scalar(negative_value, bounds=(lo, hi), method="bounded",
                                   options={"xatol": 1e-12})
    s_best, v_best = float(res.x), -float(res.fun)
    if v_best < values[i]:
        s_best, v_best = float(log_gaps[i]), float(values[i])

    def mismatch(s):
        big = base + math.exp(s)
        c1, _, _, _ = _coefficient_arrays(0.0, big, u, gamma, costs)
        coeffs = ValueCoefficients(float(c1), 0.0, gamma, 0.0, big)
        return _pasting_mismatch(big, coeffs, u, costs)

    try:
        f_lo, f_hi = mismatch(lo), mismatch(hi)
        if np.isfinite(f_lo) and np.isfinite(f_hi) and f_lo * f_hi < 0:
            s_root = optimize.brentq(mismatch, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps)
            v_root = -negative_value(s_root)
            if v_root >= v_best - 1e-14:
                s_best, v_best = s_root, v_root
    except (ValueError, RuntimeError) as exc:
        logger.debug("gains-only polish skipped: %s", exc)
    return base + math.exp(s_best), v_best


def _local_maxima(grid):
    """Indices of cells not exceeded by any of their 8 neighbours, best first."""
    padded = np.pad(grid, 1, constant_values=-np.inf)
    center = padded[1:-1, 1:-1]
    is_peak = np.isfinite(center)
    rows, cols = grid.shape
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == 0 and dj == 0:
                continue
            is_peak &= center >= padded[1 + di:rows + 1 + di, 1 + dj:cols + 1 + dj]
    peaks = np.argwhere(is_peak)
    order = np.argsort(-grid[is_peak])
    return [tuple(peaks[k]) for k in order]


def _solve_two_point(u, gamma, costs, gap_max):
    """
    Best interior (theta, Theta) or None when the interior has no maximum.

    Works in t = logit(theta), s = log(Theta - 1/kappa): screen a grid, run
    alternating bounded 1-D passes from the best local peaks, then polish the
    winner on the smooth-pasting equations.
    """
    base = 1.0 / costs.kappa
    t_lo, t_hi = float(logit(THETA_MIN)), float(logit(THETA_MAX))
    s_lo, s_hi = math.log(GAP_MIN), math.log(gap_max)
    t_grid = np.linspace(t_lo, t_hi, SCREEN_POINTS)
    s_grid = np.linspace(s_lo, s_hi, SCREEN_POINTS)
    dt_cell, ds_cell = t_grid[1] - t_grid[0], s_grid[1] - s_grid[0]

    def value(t, s):
        return float(_initial_value(expit(t), base + math.exp(s), u, gamma, costs))

    screen = _initial_value(expit(t_grid)[:, None], base + np.exp(s_grid)[None, :], u, gamma, costs)
    starts = [(i, j) for i, j in _local_maxima(screen) if i > 0][:MAX_STARTS]
    if not starts:
        return None

    best = None
    for i, j in starts:
        t, s, v = float(t_grid[i]), float(s_grid[j]), float(screen[i, j])
        for _ in range(MAX_PASSES):
            t_prev, s_prev, v_prev = t, s, v
            res = optimize.minimize_scalar(
                lambda tt: -value(tt, s), method="bounded",
                bounds=(max(t - 2 * dt_cell, t_lo), min(t + 2 * dt_cell, t_hi)),
                options={"xatol": 1e-11})
            if -res.fun > v:
                t, v = float(res.x), -float(res.fun)
            res = optimize.minimize_scalar(
                lambda ss: -value(t, ss), method="bounded",
                bounds=(max(s - 2 * ds_cell, s_lo), min(s + 2 * ds_cell, s_hi)),
                options={"xatol": 1e-11})
            if -res.fun > v:
                s, v = float(res.x), -float(res.fun)
            if v - v_prev < VALUE_TOL and abs(t - t_prev) + abs(s - s_prev) < THRESHOLD_TOL:
                break
        t, s, v = _polish_two_point(t, s, v, u, gamma, costs, (t_lo, t_hi, s_lo, s_hi), value)
        if best is None or v > best[2]:
            best = (t, s, v)

    t, s, v = best
    if t <= t_lo + 1e-6:
        return None
    return float(expit(t)), base + math.exp(s), v


def _polish_two_point(t, s, v, u, gamma, costs, bounds, value):
    t_lo, t_hi, s_lo, s_hi = bounds
    base = 1.0 / costs.kappa

    def residuals(z):
        theta, big = float(expit(z[0])), base + math.exp(z[1])
        c1, c2, _, _ = _coefficient_arrays(theta, big, u, gamma, costs)
        coeffs = ValueCoefficients(float(c1), float(c2), gamma, theta, big)
        return [_pasting_mismatch(big, coeffs, u, costs), _pasting_mismatch(theta, coeffs, u, costs)]

    try:
        sol = optimize.root(residuals, x0=[t, s], method="hybr", options={"xtol": 1e-13})
    except (ValueError, FloatingPointError) as exc:
        logger.debug("two-point polish failed: %s", exc)
        return t, s, v
    if sol.success and t_lo <= sol.x[0] <= t_hi and s_lo <= sol.x[1] <= s_hi:
        v_new = value(sol.x[0], sol.x[1])
        if v_new >= v - 1e-12:
            return float(sol.x[0]), float(sol.x[1]), v_new
    logger.debug("POLISH_REJECTED at theta=%.6g (status %s)", float(expit(t)), sol.status)
    return t, s, v


def optimize_policy(u, asset, costs):
    """
    Global maximizer of v(1) over gains-only and two-point policies.

    Raises TRANSVERSALITY when the parameter screen fails and NO_PARTICIPATION
    when no policy beats staying out of the market.
    """
    report = check_transversality(u, asset, costs)
    if not report.ok:
        raise ModelError("TRANSVERSALITY", "; ".join(v.message for v in report.violations), report)
    gamma = report.gamma
    warnings = list(report.warnings)

    gap_max = _gap_limit(u, gamma, costs)
    corner_big, corner_v = _solve_gains_only(u, gamma, costs, gap_max)
    interior = _solve_two_point(u, gamma, costs, gap_max)
    logger.debug("corner v1=%.12g at Theta=%.8f; interior=%s", corner_v, corner_big, interior)

    if interior is not None and interior[2] >= corner_v - VALUE_TOL:
        theta, theta_big, v1 = interior
        if abs(v1 - corner_v) < VALUE_TOL:
            warnings.append("REGIME_BOUNDARY")
            logger.warning("REGIME_BOUNDARY: two-point and gains-only values tie at %.12g", v1)
        regime = Regime.TWO_POINT
    else:
        theta, theta_big, v1 = 0.0, corner_big, corner_v
        regime = Regime.GAINS_ONLY

    if not v1 > 0:
        raise ModelError("NO_PARTICIPATION", f"best reduced value v(1) = {v1:.6g} is not positive")

    coeffs = value_coefficients(theta if regime is Regime.TWO_POINT else None, theta_big, u, asset, costs)
    return Policy(theta=theta, theta_big=theta_big, regime=regime, v1=coeffs.v1,
                  coefficients=coeffs, warnings=tuple(warnings))


cached_policy = lru_cache(maxsize=512)(optimize_policy)


def _critical_equation(phi, alpha, u, gamma, costs):
    """
    Joint value-matching and smooth-pasting condition for a threshold at phi
    when C2 = 0; its roots are the regime-boundary thresholds. lambda cancels.
    """
    g1, beta, kappa, K = gamma.gamma1, u.beta, costs.kappa, costs.K
    phi = np.asarray(phi, dtype=float)
    with np.errstate(all="ignore"):
        if u.family is UtilityFamily.SCALED_TK:
            return ((alpha - g1) * kappa * phi ** (g1 + 1.0 - beta) + g1 * phi ** (g1 - beta)
                    - (alpha - beta) * K ** beta * kappa * phi - beta * K ** beta)
        if abs(alpha) >= LOG_LIMIT_TOL:
            return ((alpha - g1) * kappa ** alpha * phi ** (g1 + alpha - beta) + g1 * phi ** (g1 - beta)
                    - (alpha - beta) * K ** beta * (kappa * phi) ** alpha - beta * K ** beta)
        unit = u.replace(lam=1.0)
        g = kappa * phi - 1.0
        return (burst_value(g, unit) * (g1 * phi ** g1 - beta * (K * phi) ** beta)
                - kappa * phi * burst_slope(g, unit) * (phi ** g1 - (K * phi) ** beta))


def _bracketed_roots(func, grid):
    values = func(grid)
    roots = []
    for k in range(len(grid) - 1):
        a, b = values[k], values[k + 1]
        if not (np.isfinite(a) and np.isfinite(b)):
            continue
        if a == 0.0:
            roots.append(float(grid[k]))
        elif a * b < 0:
            roots.append(optimize.brentq(lambda x: float(func(x)), grid[k], grid[k + 1],
                                         xtol=1e-15, rtol=4 * np.finfo(float).eps))
    return roots


def _lambda_at(theta, c1_star, u, gamma, costs):
    """Loss aversion making a loss sale at theta value-matching with C1*."""
    unit_loss = float(burst_value(costs.kappa * theta - 1.0, u.replace(lam=1.0)))
    return c1_star * (theta ** gamma.gamma1 - (costs.K * theta) ** u.beta) / unit_loss


def _lambda_at_zero(c1_star, u, costs):
    """theta -> 0 limit of _lambda_at: C1* / |u(-1)| when beta = 0, otherwise 0."""
    if u.beta > 0:
        return 0.0
    unit_loss = float(burst_value(-1.0, u.replace(lam=1.0)))
    return 0.0 if not np.isfinite(unit_loss) else -c1_star / unit_loss


def _closed_form_lambda(theta, theta_big, u, gamma, costs):
    g1, beta, kappa = gamma.gamma1, u.beta, costs.kappa
    a_g, a_l = u.alpha_g, u.alpha_l
    if u.family is UtilityFamily.SCALED_TK:
        return ((kappa * theta_big - 1.0) ** (a_g - 1.0) * theta ** beta
                / ((1.0 - kappa * theta) ** (a_l - 1.0) * theta_big ** beta)
                * ((a_g - g1) * kappa * theta_big + g1) / ((a_l - g1) * kappa * theta + g1))
    if abs(a_g) < LOG_LIMIT_TOL or abs(a_l) < LOG_LIMIT_TOL:
        return None
    return ((a_l / a_g) * (theta / theta_big) ** beta
            * ((a_g - g1) * (kappa * theta_big) ** a_g + g1)
            / ((a_l - g1) * (kappa * theta) ** a_l + g1))


def critical_lambda(u, asset, costs):
    """
    Loss aversion at which the two-point and gains-only policies tie.

    u's own lambda is ignored. Theta* and theta* come from two independent
    one-dimensional root problems; among several roots, Theta* is the one with
    the largest gains-only value and theta* the one demanding the largest
    lambda. When the loss equation has no root in (0, 1), theta* is 0 and
    lambda* is the theta -> 0 limit of value matching.
    """
    report = check_transversality(u, asset, costs)
    if not report.ok:
        raise ModelError("TRANSVERSALITY", "; ".join(v.message for v in report.violations), report)
    gamma = report.gamma
    unit = u.replace(lam=1.0)
    base = 1.0 / costs.kappa

    gap_max = _gap_limit(unit, gamma, costs)
    big_grid = base + np.geomspace(1e-10, gap_max, 800)
    big_roots = _bracketed_roots(lambda x: _critical_equation(x, u.alpha_g, u, gamma, costs), big_grid)
    if not big_roots:
        raise ModelError("NO_ROOT", f"no gain threshold root in ({base:.6f}, {base + gap_max:.6g})")
    c1_of = {r: float(_coefficient_arrays(0.0, r, unit, gamma, costs)[0]) for r in big_roots}
    theta_big_star = max(big_roots, key=lambda r: c1_of[r])
    c1_star = c1_of[theta_big_star]

    if abs(u.beta - gamma.gamma1) <= BETA_GAMMA_TOL:
        return CriticalLambda(lambda_star=0.0, theta_star=0.0, theta_big_star=theta_big_star)

    small_grid = expit(np.linspace(-30.0, 30.0, 1200))
    small_roots = _bracketed_roots(lambda x: _critical_equation(x, u.alpha_l, u, gamma, costs), small_grid)
    small_roots = [r for r in small_roots if 0.0 < r < 1.0]
    if not small_roots:
        # theta* shrinks to 0 at the switch; the boundary is the theta -> 0 limit
        lam = _lambda_at_zero(c1_star, u, costs)
        logger.info("no interior loss threshold root; lambda* = %.6g at theta* = 0", lam)
        return CriticalLambda(lambda_star=float(lam), theta_star=0.0, theta_big_star=theta_big_star)
    theta_star = max(small_roots, key=lambda r: _lambda_at(r, c1_star, u, gamma, costs))

    lam = _closed_form_lambda(theta_star, theta_big_star, u, gamma, costs)
    if lam is None:
        lam = _lambda_at(theta_star, c1_star, u, gamma, costs)
    return CriticalLambda(lambda_star=float(lam), theta_star=theta_star, theta_big_star=theta_big_star)


def value_profile(u, asset, costs, thetas=None, theta_big=None):
    """
    v(1) along theta, with Theta fixed or (default) re-optimized for each theta.

    The row at theta = 0 is the gains-only policy. Plot-ready.
    """
    report = check_transversality(u, asset, costs)
    if not report.ok:
        raise ModelError("TRANSVERSALITY", "; ".join(v.message for v in report.violations), report)
    gamma = report.gamma
    base = 1.0 / costs.kappa
    gap_max = _gap_limit(u, gamma, costs)
    if thetas is None:
        thetas = np.concatenate([[0.0], np.linspace(0.01, 0.99, 99)])
    log_gaps = np.linspace(math.log(GAP_MIN), math.log(gap_max), 600)

    rows = []
    for theta in np.asarray(thetas, dtype=float):
        if theta_big is not None:
            big = float(theta_big)
            v1 = float(_initial_value(theta, big, u, gamma, costs))
        else:
            values = _initial_value(theta, base + np.exp(log_gaps), u, gamma, costs)
            i = int(np.argmax(values))
            lo, hi = log_gaps[max(i - 1, 0)], log_gaps[min(i + 1, len(log_gaps) - 1)]
            res = optimize.minimize_scalar(
                lambda s: -float(_initial_value(theta, base + math.exp(s), u, gamma, costs)),
                bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
            big, v1 = base + math.exp(float(res.x)), -float(res.fun)
        rows.append({"theta": float(theta), "theta_big": big, "v1": v1})
    return pd.DataFrame(rows)


SWEEP_PARAMETERS = ("lambda", "beta", "alpha_g", "alpha_l", "delta", "mu", "sigma", "k")


def policy_sweep(u, asset, costs, parameter, values):
    """
    Optimal policy and lambda* as one parameter varies. Failing points are kept
    with their error code in the `note` column.
    """
    if parameter not in SWEEP_PARAMETERS:
        raise ModelError("INVALID_UTILITY", f"cannot sweep {parameter!r}; choose from {SWEEP_PARAMETERS}")
    rows = []
    for value in values:
        uu, aa, cc = u, asset, costs
        if parameter == "lambda":
            uu = u.replace(lam=value)
        elif parameter in ("beta", "alpha_g", "alpha_l", "delta"):
            uu = u.replace(**{parameter: value})
        elif parameter in ("mu", "sigma"):
            aa = AssetParams(**{"mu": asset.mu, "sigma": asset.sigma, parameter: value})
        else:
            cc = _costs_like(costs, value)
        row = {"parameter": parameter, "value": float(value)}
        try:
            policy = cached_policy(uu, aa, cc)
            row.update(regime=policy.regime.value, theta=policy.theta if policy.realizes_losses else None,
                       theta_big=policy.theta_big, v1=policy.v1, note="")
        except ModelError as exc:
            row.update(regime=None, theta=None, theta_big=None, v1=None, note=exc.code)
        try:
            row["lambda_star"] = critical_lambda(uu, aa, cc).lambda_star
        except ModelError as exc:
            row["lambda_star"] = None
            row["note"] = row["note"] or exc.code
        rows.append(row)
        logger.info("sweep %s=%g -> %s", parameter, value, row["regime"])
    return pd.DataFrame(rows)


def _costs_like(costs, k):
    """Symmetric costs k_s = k_p = k keeping the same kappa convention."""
    if costs.kappa == costs.K:
        return CostSpec(k, k)
    if costs.kappa == 1.0:
        return CostSpec.with_preset(k, k, "one")
    return CostSpec.with_preset(k, k, "sale")
