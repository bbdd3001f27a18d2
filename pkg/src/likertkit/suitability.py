"""Factorability checks run before exploratory factor analysis."""

import math
from dataclasses import dataclass

import numpy as np

from .basestats import chisq_sf
from .errors import DataError
from .linalg import spd_inverse, spd_logdet


@dataclass(frozen=True)
class BartlettResult:
    chi2: float
    df: int
    p_value: float


@dataclass(frozen=True)
class KmoResult:
    overall: float
    per_item: dict


@dataclass(frozen=True)
class SuitabilityReport:
    threshold: float
    low_correlation_items: tuple
    bartlett: BartlettResult
    kmo_overall: float
    kmo_per_item: dict
    n: int

    def to_dict(self):
        return {
            "n": self.n,
            "low_correlation_threshold": self.threshold,
            "low_correlation_items": list(self.low_correlation_items),
            "bartlett": {"chi2": self.bartlett.chi2, "df": self.bartlett.df,
                         "p_value": self.bartlett.p_value},
            "kmo_overall": self.kmo_overall,
            "kmo_per_item": dict(self.kmo_per_item),
        }


def correlation_screen(R, threshold=0.3):
    """Items whose every off-diagonal ``|r|`` is strictly below ``threshold``."""
    if not 0 < threshold < 1:
        raise DataError(f"threshold must lie in (0, 1), got {threshold}")
    a = np.abs(np.asarray(R.r, dtype=float))
    np.fill_diagonal(a, 0.0)
    max_r = a.max(axis=1) if R.p > 1 else np.zeros(R.p)
    return tuple(item for item, m in zip(R.items, max_r) if m < threshold)


def bartlett_sphericity(R, n):
    """Bartlett's test that the population correlation matrix is the identity.

    ``chi2 = -(n - 1 - (2p + 5) / 6) * ln det(R)`` on ``p(p-1)/2`` degrees of
    freedom.
    """
    p = R.p
    if n <= p:
        raise DataError(f"Bartlett's test needs n > p (n={n}, p={p})")
    logdet = spd_logdet(R.r, "correlation matrix")
    chi2 = -(n - 1 - (2 * p + 5) / 6) * logdet
    # ln det(R) <= 0 for any correlation matrix; clear rounding noise at R = I
    chi2 = chi2 if chi2 > 0 else 0.0
    df = p * (p - 1) // 2
    return BartlettResult(float(chi2), df, chisq_sf(chi2, df))


def anti_image_correlations(R):
    """Partial correlations of each item pair given all other items.

    With two items there is nothing to partial out and the result is the
    correlation matrix itself.
    """
    if R.p == 2:
        return np.array(R.r, dtype=float)
    inv = spd_inverse(R.r, "correlation matrix")
    d = 1.0 / np.sqrt(np.diag(inv))
    q = -inv * np.outer(d, d)
    np.fill_diagonal(q, 1.0)
    return q


def kmo(R):
    """Kaiser-Meyer-Olkin sampling adequacy, overall and per item."""
    r2 = np.asarray(R.r, dtype=float) ** 2
    q2 = anti_image_correlations(R) ** 2
    np.fill_diagonal(r2, 0.0)
    np.fill_diagonal(q2, 0.0)
    rs = r2.sum(axis=0)
    qs = q2.sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        per_item = np.where(rs + qs > 0, rs / (rs + qs), math.nan)
    total = r2.sum() + q2.sum()
    overall = float(r2.sum() / total) if total > 0 else math.nan
    return KmoResult(overall, {item: float(v) for item, v in zip(R.items, per_item)})


def assess(R, n, threshold=0.3):
    """Run the three checks and bundle them into one report."""
    k = kmo(R)
    return SuitabilityReport(threshold, tuple(correlation_screen(R, threshold)),
                             bartlett_sphericity(R, n), k.overall, k.per_item, n)
