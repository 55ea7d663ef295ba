"""
Odean Disposition Measures
Pool per-stock trading statistics into PGR, PLR and their ratio

Key Concepts:
1. PGR = realized gains / (realized gains + paper gains), counted on sale days
2. PLR is the same for losses; O = PGR / PLR > 1 signals a disposition effect
3. Paper positions are only counted when another stock in the account is sold,
   so larger accounts dilute PGR and PLR
4. Mixtures weight each stock class by its sale frequency n / E[tau]
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from episode_stats import rule_stats
from model_params import ModelError

logger = logging.getLogger(__name__)

FRACTION_TOL = 1e-9


def _safe_ratio(num, den):
    return num / den if den > 0 else 0.0


@dataclass(frozen=True)
class AccountSizeMix:
    """
    Distribution of stocks per account: either moments (n_bar, sigma_n) or an
    explicit list of sizes with population fractions.
    """

    n_bar: float | None = None
    sigma_n: float = 0.0
    sizes: tuple = ()
    fractions: tuple = ()

    def __post_init__(self):
        if self.sizes:
            sizes, fractions = tuple(self.sizes), tuple(self.fractions)
            if len(sizes) != len(fractions):
                raise ModelError("INVALID_MIX", "sizes and fractions must have equal length")
            if any(int(n) != n or n < 1 for n in sizes):
                raise ModelError("INVALID_MIX", f"account sizes must be integers >= 1, got {sizes}")
            if any(p < 0 for p in fractions) or abs(sum(fractions) - 1.0) > FRACTION_TOL:
                raise ModelError("INVALID_MIX", "fractions must be nonnegative and sum to 1")
            object.__setattr__(self, "sizes", sizes)
            object.__setattr__(self, "fractions", fractions)
        elif self.n_bar is None or not self.n_bar >= 1 or not self.sigma_n >= 0:
            raise ModelError("INVALID_MIX", f"need n_bar >= 1 and sigma_n >= 0, got {self.n_bar}, {self.sigma_n}")

    @property
    def multiplier(self):
        """m = n_bar + sigma_n^2 / n_bar, the size-biased mean account size."""
        if self.sizes:
            n = np.asarray(self.sizes, dtype=float)
            p = np.asarray(self.fractions, dtype=float)
            return float(np.sum(p * n * n) / np.sum(p * n))
        return self.n_bar + self.sigma_n ** 2 / self.n_bar

    def integer_sizes(self):
        """
        (sizes, fractions) of whole-stock accounts with this mix's multiplier.

        Explicit sizes are returned as given. A moment mix becomes a two-point
        mix on floor(m) and floor(m) + 1 weighted so the size-biased mean is m,
        which is all the pooled measures depend on.
        """
        if self.sizes:
            return tuple(int(n) for n in self.sizes), self.fractions
        m = self.multiplier
        a = math.floor(m)
        if m - a < FRACTION_TOL:
            return (a,), (1.0,)
        b = a + 1
        p = b * (b - m) / (a + b - m)
        return (a, b), (p, 1.0 - p)


@dataclass(frozen=True)
class InvestorType:
    pi: float
    n: int
    rule: object = None
    asset: object = None
    stats: object = None

    def __post_init__(self):
        if self.n < 1 or int(self.n) != self.n:
            raise ModelError("INVALID_MIX", f"stocks per account must be an integer >= 1, got {self.n}")
        if self.stats is None and (self.rule is None or self.asset is None):
            raise ModelError("INVALID_MIX", "investor type needs a rule with an asset, or stats")

    def resolved_stats(self):
        return self.stats if self.stats is not None else rule_stats(self.rule, self.asset)


@dataclass(frozen=True)
class HoldingGroup:
    n: int
    rule: object = None
    asset: object = None
    stats: object = None

    def __post_init__(self):
        if self.n < 1 or int(self.n) != self.n:
            raise ModelError("INVALID_MIX", f"group size must be an integer >= 1, got {self.n}")
        if self.stats is None and (self.rule is None or self.asset is None):
            raise ModelError("INVALID_MIX", "holding group needs a rule with an asset, or stats")

    def resolved_stats(self):
        return self.stats if self.stats is not None else rule_stats(self.rule, self.asset)


@dataclass(frozen=True)
class OdeanStats:
    pgr: float
    plr: float
    o: float
    gain_level: float | None = None
    loss_level: float | None = None
    q_gain: float | None = None
    mean_duration: float | None = None
    phi_gain: float | None = None
    weights: tuple = field(default=())

    @property
    def o_infinite(self):
        return math.isinf(self.o)

    def as_dict(self):
        def finite_or_none(x):
            return None if x is None or not math.isfinite(x) else x

        return {
            "pgr": self.pgr,
            "plr": self.plr,
            "o": finite_or_none(self.o),
            "o_infinite": self.o_infinite,
            "gain_level": finite_or_none(self.gain_level),
            "loss_level": finite_or_none(self.loss_level),
            "q_gain": self.q_gain,
            "mean_duration_years": self.mean_duration,
            "phi_gain": self.phi_gain,
            "weights": list(self.weights),
        }


def _odean_ratio(pgr, plr):
    if plr == 0:
        logger.info("PLR is zero; disposition measure reported as infinite")
        return math.inf
    return pgr / plr


def representative_odean(stats, mix):
    """PGR, PLR and O for identical investors whose account sizes follow `mix`."""
    m = mix.multiplier if isinstance(mix, AccountSizeMix) else float(mix)
    if not m >= 1:
        raise ModelError("INVALID_MIX", f"account multiplier must be >= 1, got {m}")
    pgr = _safe_ratio(stats.q_gain, stats.q_gain + (m - 1.0) * stats.phi_gain)
    plr = _safe_ratio(stats.q_loss, stats.q_loss + (m - 1.0) * stats.phi_loss)
    return OdeanStats(
        pgr=pgr, plr=plr, o=_odean_ratio(pgr, plr),
        gain_level=stats.gain_level, loss_level=stats.loss_level,
        q_gain=stats.q_gain, mean_duration=stats.mean_duration, phi_gain=stats.phi_gain,
        weights=(1.0,),
    )


def _trade_weighted(all_stats, rates):
    """Sale-frequency weighted means of the realized-trade statistics."""
    rates = np.asarray(rates, dtype=float)
    w = rates / rates.sum()

    def mean(attr):
        values = np.array([getattr(s, attr) for s in all_stats], dtype=float)
        with np.errstate(invalid="ignore"):
            return float(np.sum(w * values))

    return w, mean("gain_level"), mean("loss_level"), mean("q_gain"), mean("mean_duration")


def heterogeneous_investors(types):
    """Pooled measures when investor types differ in rules and account sizes."""
    if not types:
        raise ModelError("INVALID_MIX", "need at least one investor type")
    if abs(sum(t.pi for t in types) - 1.0) > FRACTION_TOL:
        raise ModelError("INVALID_MIX", "investor fractions must sum to 1")
    all_stats = [t.resolved_stats() for t in types]
    pi = np.array([t.pi for t in types], dtype=float)
    n = np.array([t.n for t in types], dtype=float)
    dur = np.array([s.mean_duration for s in all_stats], dtype=float)
    qg = np.array([s.q_gain for s in all_stats])
    ql = np.array([s.q_loss for s in all_stats])
    fg = np.array([s.phi_gain for s in all_stats])
    fl = np.array([s.phi_loss for s in all_stats])

    w, gain_level, loss_level, q_gain, duration = _trade_weighted(all_stats, pi * n / dur)
    pair_rate = pi * n * (n - 1.0) / dur
    phi_gain = float(np.sum(pair_rate * fg) / pair_rate.sum()) if pair_rate.sum() > 0 else None

    base = pi * n / dur
    pgr = _safe_ratio(float(np.sum(base * qg)), float(np.sum(base * (qg + (n - 1.0) * fg))))
    plr = _safe_ratio(float(np.sum(base * ql)), float(np.sum(base * (ql + (n - 1.0) * fl))))
    return OdeanStats(
        pgr=pgr, plr=plr, o=_odean_ratio(pgr, plr),
        gain_level=gain_level, loss_level=loss_level, q_gain=q_gain,
        mean_duration=duration, phi_gain=phi_gain, weights=tuple(float(x) for x in w),
    )


def heterogeneous_holdings(groups):
    """Pooled measures when every account holds the same mix of differently traded stocks."""
    if not groups:
        raise ModelError("INVALID_MIX", "need at least one holding group")
    all_stats = [g.resolved_stats() for g in groups]
    n = np.array([g.n for g in groups], dtype=float)
    total = n.sum()
    if total < 2:
        raise ModelError("INVALID_MIX", f"accounts need at least 2 stocks, got {int(total)}")
    dur = np.array([s.mean_duration for s in all_stats], dtype=float)
    qg = np.array([s.q_gain for s in all_stats])
    ql = np.array([s.q_loss for s in all_stats])
    fg = np.array([s.phi_gain for s in all_stats])
    fl = np.array([s.phi_loss for s in all_stats])

    rate = n / dur
    w, gain_level, loss_level, q_gain, duration = _trade_weighted(all_stats, rate)
    others_gain = np.sum(n * fg) - fg     # expected paper gains among the other N - 1 stocks
    others_loss = np.sum(n * fl) - fl
    phi_gain = float(np.sum(rate * others_gain) / ((total - 1.0) * rate.sum()))

    pgr = _safe_ratio(float(np.sum(rate * qg)), float(np.sum(rate * (qg + others_gain))))
    plr = _safe_ratio(float(np.sum(rate * ql)), float(np.sum(rate * (ql + others_loss))))
    return OdeanStats(
        pgr=pgr, plr=plr, o=_odean_ratio(pgr, plr),
        gain_level=gain_level, loss_level=loss_level, q_gain=q_gain,
        mean_duration=duration, phi_gain=phi_gain, weights=tuple(float(x) for x in w),
    )
