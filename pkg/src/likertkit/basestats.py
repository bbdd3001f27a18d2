"""Correlation matrices, confidence intervals and the few distributions needed."""

import math
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np
from scipy import special

from .dataset import RatingMatrix
from .errors import DataError

_STD_NORMAL = NormalDist()


@dataclass(frozen=True, eq=False)
class CorrelationMatrix:
    """Pearson correlations over ``items``; symmetric with a unit diagonal."""

    items: tuple
    r: np.ndarray

    def __post_init__(self):
        r = np.array(self.r, dtype=float)
        object.__setattr__(self, "items", tuple(self.items))
        if r.ndim != 2 or r.shape[0] != r.shape[1]:
            raise DataError("correlation matrix must be square")
        if r.shape[0] != len(self.items):
            raise DataError("correlation matrix size does not match item count")
        if not np.allclose(r, r.T, atol=1e-12, rtol=0):
            raise DataError("correlation matrix is not symmetric")
        r = (r + r.T) / 2
        np.fill_diagonal(r, 1.0)
        r.setflags(write=False)
        object.__setattr__(self, "r", r)

    @classmethod
    def from_array(cls, r, items=None):
        r = np.asarray(r, dtype=float)
        if items is None:
            items = tuple(f"item{j + 1}" for j in range(r.shape[0]))
        return cls(tuple(items), r)

    @property
    def p(self):
        return len(self.items)

    def select(self, items):
        lookup = {item: j for j, item in enumerate(self.items)}
        idx = [lookup[i] for i in items]
        return CorrelationMatrix(tuple(items), self.r[np.ix_(idx, idx)])


@dataclass(frozen=True)
class MeanCI:
    mean: float
    half_width: float
    level: float
    n: int = 0
    sd: float = 0.0

    @property
    def lower(self):
        return self.mean - self.half_width

    @property
    def upper(self):
        return self.mean + self.half_width

    def overlaps(self, other):
        return self.lower <= other.upper and other.lower <= self.upper

    def to_dict(self):
        return {"mean": self.mean, "half_width": self.half_width, "lower": self.lower,
                "upper": self.upper, "level": self.level, "n": self.n, "sd": self.sd,
                "method": "normal"}


def _as_values(data):
    if isinstance(data, RatingMatrix):
        return data.as_float(), data.items
    values = np.asarray(data, dtype=float)
    if values.ndim != 2:
        raise DataError("expected a 2-D respondents x items array")
    return values, tuple(f"item{j + 1}" for j in range(values.shape[1]))


def pearson_matrix(matrix):
    """Sample Pearson correlations between the columns of ``matrix``.

    Raises
    ------
    DataError
        If fewer than three respondents are present or a column is constant.
    """
    x, items = _as_values(matrix)
    n = x.shape[0]
    if n < 3:
        raise DataError(f"need at least 3 respondents for correlations, got {n}")
    xc = x - x.mean(axis=0)
    ss = np.einsum("ij,ij->j", xc, xc)
    zero = [items[j] for j in np.flatnonzero(ss == 0)]
    if zero:
        raise DataError(f"zero variance in item(s) {zero}")
    z = xc / np.sqrt(ss)
    r = z.T @ z
    r = np.clip((r + r.T) / 2, -1.0, 1.0)
    np.fill_diagonal(r, 1.0)
    return CorrelationMatrix(items, r)


def pearson_r(x, y):
    """Pearson correlation of two equal-length vectors."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise DataError("pearson_r needs two 1-D vectors of equal length")
    if x.size < 3:
        raise DataError("need at least 3 observations for a correlation")
    xc = x - x.mean()
    yc = y - y.mean()
    sx = math.sqrt(xc @ xc)
    sy = math.sqrt(yc @ yc)
    if sx == 0 or sy == 0:
        raise DataError("correlation undefined for a constant vector")
    return float(np.clip((xc @ yc) / (sx * sy), -1.0, 1.0))


def normal_cdf(x):
    return _STD_NORMAL.cdf(x)


def normal_ppf(q):
    if not 0 < q < 1:
        raise DataError(f"quantile level must be in (0, 1), got {q}")
    return _STD_NORMAL.inv_cdf(q)


def mean_ci(values, level=0.95):
    """Mean with a two-sided normal-theory confidence interval.

    The half width is ``z * s / sqrt(n)`` with ``z`` the standard normal
    quantile at ``(1 + level) / 2`` and ``s`` the ``n - 1`` sample SD.
    """
    x = np.asarray(values, dtype=float).ravel()
    if x.size < 2:
        raise DataError("need at least 2 values for a confidence interval")
    if not 0 < level < 1:
        raise DataError(f"level must be in (0, 1), got {level}")
    sd = float(x.std(ddof=1))
    z = normal_ppf((1 + level) / 2)
    return MeanCI(float(x.mean()), z * sd / math.sqrt(x.size), level, int(x.size), sd)


def chisq_sf(x, df):
    """Upper-tail probability of the chi-square distribution."""
    if df <= 0:
        raise DataError(f"degrees of freedom must be positive, got {df}")
    if x < 0 or math.isnan(x):
        raise DataError(f"chi-square statistic must be >= 0, got {x}")
    return float(special.gammaincc(df / 2.0, x / 2.0))


def chisq_cdf(x, df):
    if df <= 0:
        raise DataError(f"degrees of freedom must be positive, got {df}")
    if x < 0:
        raise DataError(f"chi-square statistic must be >= 0, got {x}")
    return float(special.gammainc(df / 2.0, x / 2.0))
