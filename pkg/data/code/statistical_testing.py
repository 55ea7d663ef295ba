"""
Statistical Comparison of Simulated and Closed-Form Statistics
Test whether Monte Carlo estimates agree with their analytical values

Key Concepts:
1. Standard error: binomial for probabilities, sample SE for means,
   batch ratio SE for time averages and pooled ratios
2. z-score: (estimate - closed form) / standard error
3. Concordance: |z| below a limit (default 3) means no detectable disagreement
4. Two-sided normal p-value reported alongside z
"""

import logging

import numpy as np
import pandas as pd
from scipy import stats

logger = logging.getLogger(__name__)


def binomial_standard_error(p, n):
    """SE of a sample proportion p from n independent trials."""
    if n <= 0:
        return float("nan")
    return float(np.sqrt(max(p * (1.0 - p), 0.0) / n))


def mean_standard_error(samples):
    samples = np.asarray(samples, dtype=float)
    if samples.size < 2:
        return float("nan")
    return float(np.std(samples, ddof=1) / np.sqrt(samples.size))


def ratio_estimate(numerators, denominators):
    """
    Pooled ratio sum(num)/sum(den) over batches with its linearized SE.

    Batches are treated as independent, which absorbs autocorrelation inside a
    batch (time averages along one path, counts within one account block).
    """
    num = np.asarray(numerators, dtype=float)
    den = np.asarray(denominators, dtype=float)
    total = den.sum()
    if total <= 0:
        return float("nan"), float("nan")
    ratio = num.sum() / total
    b = num.size
    if b < 2:
        return float(ratio), float("nan")
    resid = num - ratio * den
    se = np.sqrt(np.sum(resid ** 2) / (b * (b - 1))) / den.mean()
    return float(ratio), float(se)


class ConcordanceTester:
    """
    Compare estimates against closed forms in units of standard error
    """

    def __init__(self, z_limit=3.0):
        """
        Args:
            z_limit: Largest |z| still counted as agreement (default 3)
        """
        self.z_limit = z_limit

    def z_test(self, estimate, closed_form, standard_error, statistic="statistic"):
        """
        One estimate against its analytical value

        Returns:
            dict with test results
        """
        diff = estimate - closed_form
        if standard_error and np.isfinite(standard_error) and standard_error > 0:
            z = diff / standard_error
        else:
            z = 0.0 if diff == 0 else float("inf")
        return {
            "statistic": statistic,
            "estimate": float(estimate),
            "closed_form": float(closed_form),
            "se": float(standard_error),
            "difference": float(diff),
            "z": float(z),
            "p_value": float(2.0 * stats.norm.sf(abs(z))),
            "agreement": self._interpret_z(abs(z)),
            "is_consistent": bool(abs(z) < self.z_limit),
        }

    def _interpret_z(self, z):
        """
        Rules of thumb:
        - below 2: consistent
        - 2 to the limit: borderline
        - beyond the limit: inconsistent
        """
        if z < 2.0:
            return "Consistent"
        elif z < self.z_limit:
            return "Borderline"
        else:
            return "Inconsistent"

    def compare_many(self, estimates, closed_forms, standard_errors):
        """
        Test every statistic present in all three mappings

        Returns:
            DataFrame with one row per statistic, worst |z| first
        """
        rows = [
            self.z_test(estimates[name], closed_forms[name], standard_errors[name], name)
            for name in estimates
            if name in closed_forms and name in standard_errors
        ]
        df = pd.DataFrame(rows)
        if not df.empty:
            df = df.reindex(df["z"].abs().sort_values(ascending=False).index).reset_index(drop=True)
        return df

    def all_consistent(self, results_df):
        return bool(results_df["is_consistent"].all()) if not results_df.empty else True

    def summary_text(self, results_df, title="SIMULATION vs CLOSED FORM"):
        """
        Banner-framed summary table
        """
        lines = [f"\nSUMMARY: {title}", "=" * 93,
                 f"{'Statistic':<18} {'Estimate':>12} {'Closed form':>12} {'SE':>10} {'z':>8} {'p':>8} {'Verdict':>14}",
                 "-" * 93]
        for _, row in results_df.iterrows():
            lines.append(f"{row['statistic']:<18} {row['estimate']:>12.5f} {row['closed_form']:>12.5f} "
                         f"{row['se']:>10.5f} {row['z']:>8.2f} {row['p_value']:>8.4f} {row['agreement']:>14}")
        lines.append("-" * 93)
        lines.append(f"Agreement limit: |z| < {self.z_limit}")
        lines.append("=" * 93)
        return "\n".join(lines)

    def log_summary(self, results_df, title="SIMULATION vs CLOSED FORM"):
        logger.info(self.summary_text(results_df, title))
