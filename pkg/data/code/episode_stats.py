"""
Trading Statistics for a Fixed Sale Rule
Closed-form episode outcomes, holding periods and paper gain frequencies

Key Concepts:
1. Episode: from purchase until the position is sold (gain or loss)
2. Q_G / Q_L: probability an episode ends with a realized gain / loss
3. phi_G / phi_L: steady-state fraction of time a held position shows a paper gain / loss
4. Threshold rule: sell at x = Theta or x = theta; Poisson rule: sell at random times
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from model_params import ModelError, years_to_days

logger = logging.getLogger(__name__)

# |eta| below this uses the zero-eta limit forms.
ETA_TOL = 1e-8
RHO_MU_TOL = 1e-10
SUPPORT_TOL = 1e-12


@dataclass(frozen=True)
class EpisodeStats:
    q_gain: float
    q_loss: float
    phi_gain: float
    phi_loss: float
    mean_duration: float
    gain_level: float
    loss_level: float

    @property
    def mean_duration_days(self):
        return years_to_days(self.mean_duration)

    def as_dict(self):
        return {
            "q_gain": self.q_gain,
            "q_loss": self.q_loss,
            "phi_gain": self.phi_gain,
            "phi_loss": self.phi_loss,
            "mean_duration_years": self.mean_duration,
            "mean_duration_days": self.mean_duration_days,
            "gain_level": self.gain_level,
            "loss_level": self.loss_level,
        }


@dataclass(frozen=True)
class PoissonStats:
    rho: float
    mean_gain_multiple: float
    mean_loss_fraction: float
    q_gain: float
    mean_duration: float
    gain_multiple_finite: bool = True

    @property
    def q_loss(self):
        return 1.0 - self.q_gain

    @property
    def phi_gain(self):
        return self.q_gain

    @property
    def phi_loss(self):
        return 1.0 - self.q_gain

    @property
    def gain_level(self):
        return self.mean_gain_multiple

    @property
    def loss_level(self):
        return self.mean_loss_fraction

    @property
    def mean_duration_days(self):
        return years_to_days(self.mean_duration)

    def as_dict(self):
        return {
            "rho": self.rho,
            "mean_gain_multiple": self.mean_gain_multiple if self.gain_multiple_finite else None,
            "gain_multiple_infinite": not self.gain_multiple_finite,
            "mean_loss_fraction": self.mean_loss_fraction,
            "q_gain": self.q_gain,
            "q_loss": self.q_loss,
            "phi_gain": self.phi_gain,
            "phi_loss": self.phi_loss,
            "mean_duration_years": self.mean_duration,
            "mean_duration_days": self.mean_duration_days,
        }


def _check_thresholds(theta, theta_big):
    if not (0.0 < theta < 1.0 < theta_big) or not math.isfinite(theta_big):
        raise ModelError("DEGENERATE", f"need 0 < theta < 1 < Theta, got theta={theta}, Theta={theta_big}")


def threshold_stats(theta, theta_big, asset):
    """Episode statistics when the position is sold at the first touch of theta or Theta."""
    _check_thresholds(theta, theta_big)
    a, b = math.log(theta), math.log(theta_big)
    eta = asset.eta

    if abs(eta) < ETA_TOL:
        q_gain = -a / (b - a)
        phi_gain = b / (b - a)
        duration = -a * b / asset.variance
    else:
        up_big, up_small = math.expm1(eta * b), math.expm1(eta * a)   # Theta^eta - 1, theta^eta - 1
        q_gain = math.expm1(-eta * a) / math.expm1(eta * (b - a))
        phi_gain = (-up_small) * (b - up_big / eta) / (-up_small * b + up_big * a)
        duration = (up_big * a - up_small * b) / ((up_big - up_small) * asset.log_drift)

    return EpisodeStats(
        q_gain=q_gain, q_loss=1.0 - q_gain,
        phi_gain=phi_gain, phi_loss=1.0 - phi_gain,
        mean_duration=duration, gain_level=theta_big, loss_level=theta,
    )


def gains_only_stats(theta_big, asset):
    """
    Statistics when losses are never realized and gains at Theta.

    Every episode ends with a gain only if ln X drifts upward (eta < 0);
    otherwise the mean holding period is infinite.
    """
    if not (theta_big > 1.0) or not math.isfinite(theta_big):
        raise ModelError("DEGENERATE", f"need Theta > 1, got {theta_big}")
    eta = asset.eta
    if not eta < -ETA_TOL:
        raise ModelError("DEGENERATE", f"gains-only episodes need mu > sigma^2/2 (eta = {eta:.6g})")
    b = math.log(theta_big)
    phi_gain = 1.0 - math.expm1(eta * b) / (eta * b)
    return EpisodeStats(
        q_gain=1.0, q_loss=0.0,
        phi_gain=phi_gain, phi_loss=1.0 - phi_gain,
        mean_duration=b / asset.log_drift, gain_level=theta_big, loss_level=0.0,
    )


def _density_terms(theta, theta_big, asset):
    _check_thresholds(theta, theta_big)
    a, b = math.log(theta), math.log(theta_big)
    eta = asset.eta
    if abs(eta) < ETA_TOL:
        return a, b, eta, None
    return a, b, eta, -math.expm1(eta * a) * b + math.expm1(eta * b) * a


def _support(x, theta, theta_big):
    arr = np.asarray(x, dtype=float)
    tol = SUPPORT_TOL * theta_big
    if np.any(arr < theta - tol) or np.any(arr > theta_big + tol):
        raise ModelError("OUT_OF_SUPPORT", f"x must lie in [{theta}, {theta_big}]")
    return np.clip(arr, theta, theta_big)


def steady_state_pdf(x, theta, theta_big, asset):
    """Long-run density of x = X/R for a position traded at (theta, Theta)."""
    a, b, eta, den = _density_terms(theta, theta_big, asset)
    arr = _support(x, theta, theta_big)
    lx = np.log(arr)
    below = arr <= 1.0
    if den is None:
        out = np.where(below, 2.0 * (a - lx) / (a * (b - a)), 2.0 * (b - lx) / (b * (b - a))) / arr
    else:
        out = np.where(
            below,
            math.expm1(eta * b) * np.expm1(eta * (a - lx)),
            math.expm1(eta * a) * np.expm1(eta * (b - lx)),
        ) / (arr * den)
    return float(out) if np.ndim(x) == 0 else out


def steady_state_cdf(x, theta, theta_big, asset):
    """Long-run distribution function of x; F(1) = 1 - phi_G."""
    a, b, eta, den = _density_terms(theta, theta_big, asset)
    arr = _support(x, theta, theta_big)
    lx = np.log(arr)
    below = arr <= 1.0
    if den is None:
        out = np.where(below, -(lx - a) ** 2 / (a * (b - a)), 1.0 - (b - lx) ** 2 / (b * (b - a)))
    else:
        lower = math.expm1(eta * b) * ((a - lx) - np.expm1(eta * (a - lx)) / eta) / den
        upper = 1.0 - math.expm1(eta * a) * ((lx - b) + np.expm1(eta * (b - lx)) / eta) / den
        out = np.where(below, lower, upper)
    out = np.clip(out, 0.0, 1.0)
    return float(out) if np.ndim(x) == 0 else out


def poisson_stats(rho, asset):
    """
    Statistics when sales arrive at rate rho independently of the price.

    The mean realized gain multiple is finite only for rho > mu and is
    otherwise flagged rather than returned as an overflow.
    """
    if not rho > 0 or not math.isfinite(rho):
        raise ModelError("DEGENERATE", f"Poisson intensity must be positive, got {rho}")
    m, var, mu = asset.log_drift, asset.variance, asset.mu
    root = math.sqrt(m * m + 2.0 * rho * var)
    psi_up = (-m + root) / var
    psi_down = (-m - root) / var
    q_gain = psi_down / (psi_down - psi_up)

    if abs(rho - mu) < RHO_MU_TOL:
        loss_fraction = mu / (mu + 0.5 * var)
    else:
        loss_fraction = rho * (psi_up - 1.0) / ((rho - mu) * psi_up)

    finite = rho > mu + RHO_MU_TOL
    gain_multiple = -rho * (1.0 - psi_down) / ((rho - mu) * psi_down) if finite else math.inf
    return PoissonStats(rho=rho, mean_gain_multiple=gain_multiple, mean_loss_fraction=loss_fraction,
                        q_gain=q_gain, mean_duration=1.0 / rho, gain_multiple_finite=finite)


POISSON_TARGETS = ("gain", "loss", "q_gain", "duration")


def calibrate_poisson_rate(target, value, asset, bracket=(1e-4, 1e3)):
    """
    Intensity rho at which one Poisson statistic equals `value`.

    target: "gain" (mean gain multiple), "loss" (mean loss fraction),
    "q_gain", or "duration" (years).
    """
    if target == "duration":
        if not value > 0:
            raise ModelError("DEGENERATE", "target duration must be positive")
        return 1.0 / value
    if target not in POISSON_TARGETS:
        raise ModelError("DEGENERATE", f"unknown calibration target {target!r}; use one of {POISSON_TARGETS}")

    def gap(log_rho):
        stats = poisson_stats(math.exp(log_rho), asset)
        if target == "gain":
            level = stats.mean_gain_multiple if stats.gain_multiple_finite else 1e300
            return level - value
        if target == "loss":
            return stats.mean_loss_fraction - value
        return stats.q_gain - value

    lo, hi = math.log(bracket[0]), math.log(bracket[1])
    if target == "gain" and asset.mu > 0:
        # the mean gain multiple is infinite for rho <= mu
        lo = max(lo, math.log(asset.mu) + 1e-9)
    try:
        return math.exp(optimize.brentq(gap, lo, hi, xtol=1e-14))
    except ValueError as exc:
        raise ModelError("NO_ROOT", f"no rho in {bracket} gives {target} = {value}") from exc


@dataclass(frozen=True)
class ThresholdRule:
    """Sell at x = theta_big or x = theta; theta = 0 means losses are never realized."""

    theta: float
    theta_big: float

    def as_dict(self):
        return {"theta": self.theta, "theta_big": self.theta_big}


@dataclass(frozen=True)
class PoissonRule:
    rho: float

    def as_dict(self):
        return {"rho": self.rho}


def rule_stats(rule, asset):
    if isinstance(rule, PoissonRule):
        return poisson_stats(rule.rho, asset)
    if rule.theta == 0:
        return gains_only_stats(rule.theta_big, asset)
    return threshold_stats(rule.theta, rule.theta_big, asset)
