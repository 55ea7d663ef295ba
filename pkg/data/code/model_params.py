"""
Model Parameters for Realization-Utility Trading
Containers, validation, characteristic roots and transversality screening

Key Concepts:
1. Asset: geometric Brownian motion dX/X = mu dt + sigma dw (rates per year)
2. Costs: a sale and re-purchase shrinks wealth by the round-trip factor K
3. Utility: burst utility family with curvatures, loss aversion, scaling and discounting
4. Gamma roots: exponents of the reduced value function v(x) = C1 x^g1 + C2 x^g2
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum

logger = logging.getLogger(__name__)

TRADING_DAYS_PER_YEAR = 250

# Below this distance beta and gamma1 are treated as equal.
BETA_GAMMA_TOL = 1e-12


class ModelError(ValueError):
    """
    Raised for invalid inputs and failed computations.

    The stable `code` (e.g. "NONPOSITIVE_DELTA") is what callers and the CLI
    switch on; `details` carries any supporting object such as a report.
    """

    def __init__(self, code, message, details=None):
        super().__init__(f"[{code}] {message}")
        self.code = code
        self.message = message
        self.details = details


@dataclass(frozen=True)
class AssetParams:
    mu: float
    sigma: float

    def __post_init__(self):
        if not math.isfinite(self.mu):
            raise ModelError("INVALID_ASSET", f"mu must be finite, got {self.mu}")
        if not math.isfinite(self.sigma) or self.sigma <= 0:
            raise ModelError("INVALID_SIGMA", f"sigma must be positive, got {self.sigma}")

    @property
    def variance(self):
        return self.sigma ** 2

    @property
    def log_drift(self):
        """Drift of ln X, mu - sigma^2/2."""
        return self.mu - 0.5 * self.variance

    @property
    def eta(self):
        """First-passage exponent 1 - 2 mu / sigma^2."""
        return 1.0 - 2.0 * self.mu / self.variance

    def rescaled(self, factor):
        """Same asset measured in a time unit `factor` times longer."""
        return AssetParams(mu=self.mu * factor, sigma=self.sigma * math.sqrt(factor))


KAPPA_PRESETS = ("K", "one", "sale")


@dataclass(frozen=True)
class CostSpec:
    """
    Proportional transaction costs.

    kappa is the fraction of the pre-sale price the investor books as proceeds
    when measuring a gain. None means kappa = K (costs fully recognized).
    """

    k_s: float = 0.0
    k_p: float = 0.0
    kappa: float | None = None
    K: float = field(init=False)

    def __post_init__(self):
        K = round_trip_factor(self)
        object.__setattr__(self, "K", K)
        if self.kappa is None:
            object.__setattr__(self, "kappa", K)
        elif not (K - 1e-15 <= self.kappa <= 1.0 + 1e-15):
            raise ModelError(
                "INVALID_COSTS",
                f"kappa must lie in [K, 1] = [{K:.6f}, 1], got {self.kappa}",
            )

    @classmethod
    def with_preset(cls, k_s, k_p, preset="K"):
        """Build costs with kappa chosen by name: "K", "one" (kappa=1) or "sale" (1 - k_s)."""
        if preset == "K":
            return cls(k_s, k_p)
        if preset == "one":
            return cls(k_s, k_p, kappa=1.0)
        if preset == "sale":
            return cls(k_s, k_p, kappa=1.0 - k_s)
        raise ModelError("INVALID_COSTS", f"unknown kappa preset {preset!r}; use one of {KAPPA_PRESETS}")

    @property
    def is_costless(self):
        return self.k_s == 0 and self.k_p == 0


def round_trip_factor(costs):
    """K = (1 - k_s)/(1 + k_p), the wealth kept after selling and buying back."""
    k_s, k_p = costs.k_s, costs.k_p
    if not (0.0 <= k_s < 1.0) or not math.isfinite(k_p) or k_p < 0.0:
        raise ModelError("INVALID_COSTS", f"need 0 <= k_s < 1 and k_p >= 0, got k_s={k_s}, k_p={k_p}")
    return (1.0 - k_s) / (1.0 + k_p)


class UtilityFamily(str, Enum):
    SCALED_TK = "scaled-tk"
    MODIFIED_TK = "modified-tk"


@dataclass(frozen=True)
class UtilitySpec:
    """
    Burst utility parameters.

    Scaled-TK:   u(g) = g^alpha_g for gains, -lam (-g)^alpha_l for losses.
    Modified-TK: u(g) = [(1+g)^alpha_g - 1]/alpha_g for gains,
                 -lam [1 - (1+g)^alpha_l]/alpha_l for losses (log form at alpha = 0).

    delta is validated by check_transversality rather than here, so that a
    non-positive discount rate surfaces as a transversality failure.
    """

    family: UtilityFamily
    alpha_g: float
    alpha_l: float
    lam: float
    beta: float
    delta: float

    def __post_init__(self):
        object.__setattr__(self, "family", UtilityFamily(self.family))
        for name in ("alpha_g", "alpha_l", "lam", "beta", "delta"):
            if not math.isfinite(getattr(self, name)):
                raise ModelError("INVALID_UTILITY", f"{name} must be finite")
        if self.lam < 0:
            raise ModelError("INVALID_UTILITY", f"loss aversion must be >= 0, got {self.lam}")
        if self.beta < 0:
            raise ModelError("INVALID_UTILITY", f"beta must be >= 0, got {self.beta}")
        if self.family is UtilityFamily.SCALED_TK:
            if not (0 < self.alpha_g <= 1) or not (0 < self.alpha_l <= 1):
                raise ModelError(
                    "INVALID_UTILITY",
                    f"scaled-TK needs 0 < alpha <= 1, got alpha_g={self.alpha_g}, alpha_l={self.alpha_l}",
                )
        elif self.alpha_l <= 0:
            raise ModelError("INVALID_UTILITY", f"modified-TK needs alpha_l > 0, got {self.alpha_l}")

    def with_lambda(self, lam):
        return UtilitySpec(self.family, self.alpha_g, self.alpha_l, lam, self.beta, self.delta)

    def replace(self, **changes):
        values = {
            "family": self.family, "alpha_g": self.alpha_g, "alpha_l": self.alpha_l,
            "lam": self.lam, "beta": self.beta, "delta": self.delta,
        }
        values.update(changes)
        return UtilitySpec(**values)

    def advisories(self):
        """Soft restrictions that are reported but not enforced."""
        notes = []
        if self.family is UtilityFamily.SCALED_TK and self.beta > min(self.alpha_g, self.alpha_l):
            notes.append("BETA_EXCEEDS_ALPHA")
        return notes


@dataclass(frozen=True)
class GammaRoots:
    gamma1: float
    gamma2: float


def gamma_roots(asset, delta):
    """
    Roots of 0.5 sigma^2 g(g-1) + mu g - delta = 0.

    The larger-magnitude root comes from the sign-matched formula and the other
    from the product of roots, which keeps both accurate when mu - sigma^2/2
    dominates the discriminant.
    """
    if not asset.sigma > 0:
        raise ModelError("INVALID_SIGMA", f"sigma must be positive, got {asset.sigma}")
    if not delta > 0:
        raise ModelError("NONPOSITIVE_DELTA", f"discount rate must be positive, got {delta}")
    a = 0.5 * asset.variance
    b = asset.log_drift
    c = -delta
    root_disc = math.sqrt(b * b - 4.0 * a * c)
    q = -0.5 * (b + math.copysign(root_disc, b))
    r1, r2 = q / a, c / q
    return GammaRoots(gamma1=max(r1, r2), gamma2=min(r1, r2))


@dataclass(frozen=True)
class Violation:
    code: str
    message: str


@dataclass(frozen=True)
class TransversalityReport:
    ok: bool
    violations: tuple = ()
    warnings: tuple = ()
    gamma: GammaRoots | None = None

    @property
    def codes(self):
        return [v.code for v in self.violations]

    def as_dict(self):
        return {
            "ok": self.ok,
            "violations": [{"code": v.code, "message": v.message} for v in self.violations],
            "warnings": list(self.warnings),
            "gamma1": None if self.gamma is None else self.gamma.gamma1,
            "gamma2": None if self.gamma is None else self.gamma.gamma2,
        }


def check_transversality(u, asset, costs):
    """
    Screen parameters for unbounded expected utility.

    Requires delta > 0 and beta <= gamma1 for both families. Scaled-TK also
    needs alpha_g <= gamma1 and nonzero costs.
    """
    violations = []
    warnings = list(u.advisories())
    gamma = None

    if not u.delta > 0:
        violations.append(Violation("NONPOSITIVE_DELTA", f"delta = {u.delta} must be positive"))
    else:
        gamma = gamma_roots(asset, u.delta)
        if u.beta > gamma.gamma1 + BETA_GAMMA_TOL:
            violations.append(Violation(
                "BETA_EXCEEDS_GAMMA1", f"beta = {u.beta} exceeds gamma1 = {gamma.gamma1:.6f}"))
        elif abs(u.beta - gamma.gamma1) <= BETA_GAMMA_TOL:
            warnings.append("BETA_AT_GAMMA1")
        if u.family is UtilityFamily.SCALED_TK and u.alpha_g > gamma.gamma1 + BETA_GAMMA_TOL:
            violations.append(Violation(
                "ALPHA_G_EXCEEDS_GAMMA1", f"alpha_g = {u.alpha_g} exceeds gamma1 = {gamma.gamma1:.6f}"))

    if u.family is UtilityFamily.SCALED_TK and costs.is_costless:
        violations.append(Violation(
            "ZERO_COSTS_SCALED_TK", "scaled-TK utility is unbounded without transaction costs"))

    for code in warnings:
        logger.warning("transversality screen: %s", code)

    return TransversalityReport(
        ok=not violations, violations=tuple(violations), warnings=tuple(warnings), gamma=gamma)


def years_to_days(years):
    return years * TRADING_DAYS_PER_YEAR


def days_to_years(days):
    return days / TRADING_DAYS_PER_YEAR
