"""Cronbach's alpha and exhaustive search for the most reliable item subsets."""

import csv
import io
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .dataset import RatingMatrix
from .errors import DataError, LikertKitError


@dataclass(frozen=True)
class AlphaReport:
    alpha: float
    k: int
    item_variances: tuple
    total_variance: float
    standardized: bool = False

    @property
    def negative(self):
        return self.alpha < 0

    def to_dict(self):
        return {"alpha": self.alpha, "k": self.k, "item_variances": list(self.item_variances),
                "total_variance": self.total_variance, "standardized": self.standardized,
                "negative": self.negative}


def alpha_from_values(x, standardized=False):
    """Alpha of the columns of a plain ``n x k`` array.

    Raw alpha is ``k/(k-1) * (1 - sum(var_i) / var(total))`` with ``n - 1``
    variances; standardized alpha is ``k r / (1 + (k-1) r)`` with ``r`` the
    mean inter-item correlation.
    """
    x = np.asarray(x, dtype=float)
    n, k = x.shape
    if k < 2:
        raise DataError("alpha needs at least 2 items")
    if n < 3:
        raise DataError(f"alpha needs at least 3 respondents, got {n}")
    cov = np.cov(x, rowvar=False, ddof=1)
    item_var = np.diag(cov)
    total_var = float(cov.sum())
    if total_var <= 0:
        raise DataError("total score has zero variance")
    if standardized:
        if np.any(item_var <= 0):
            raise DataError("standardized alpha needs non-constant items")
        sd = np.sqrt(item_var)
        corr = cov / np.outer(sd, sd)
        rbar = (corr.sum() - k) / (k * (k - 1))
        alpha = k * rbar / (1 + (k - 1) * rbar)
    else:
        alpha = k / (k - 1) * (1.0 - item_var.sum() / total_var)
    return AlphaReport(float(alpha), k, tuple(float(v) for v in item_var), total_var,
                       standardized)


def cronbach_alpha(matrix, items=None, standardized=False):
    """Cronbach's alpha of ``items`` (default: all items) in ``matrix``."""
    if items is not None:
        items = tuple(items)
        if len(set(items)) != len(items):
            raise DataError("alpha items must be distinct")
        matrix = matrix.select(items)
    return alpha_from_values(matrix.as_float(), standardized)


@dataclass(frozen=True)
class SubsetScore:
    items: tuple
    alphas: dict
    mean_alpha: float
    min_alpha: float
    max_alpha: float
    errors: dict

    @property
    def ok(self):
        return not self.errors


@dataclass(frozen=True)
class SubsetSearchResult:
    size: int
    stimuli: tuple
    ranked: tuple
    rank_by: str = "mean"

    @property
    def best(self):
        return self.ranked[0]

    def to_csv(self, decimals=None):
        """Rows are subsets in rank order, one alpha column per stimulus."""
        def fmt(x):
            if x is None or (isinstance(x, float) and math.isnan(x)):
                return ""
            return repr(float(x)) if decimals is None else f"{x:.{decimals}f}"

        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["rank", "size", "items", *self.stimuli, "mean", "min", "max", "errors"])
        for rank, s in enumerate(self.ranked, start=1):
            w.writerow([rank, self.size, "+".join(s.items),
                        *(fmt(s.alphas.get(st)) for st in self.stimuli),
                        fmt(s.mean_alpha), fmt(s.min_alpha), fmt(s.max_alpha),
                        "; ".join(f"{k}: {v}" for k, v in sorted(s.errors.items()))])
        return buf.getvalue()


def _score_subset(values_by_stimulus, index_by_stimulus, subset, standardized):
    alphas = {}
    errors = {}
    for sid, x in values_by_stimulus.items():
        try:
            alphas[sid] = alpha_from_values(x[:, index_by_stimulus[sid](subset)],
                                            standardized).alpha
        except LikertKitError as exc:
            errors[sid] = str(exc)
    vals = list(alphas.values())
    if vals and not errors:
        return SubsetScore(subset, alphas, float(np.mean(vals)), min(vals), max(vals), errors)
    return SubsetScore(subset, alphas, math.nan, math.nan, math.nan, errors)


def _sort_key(rank_by):
    def key(score):
        value = score.mean_alpha if rank_by == "mean" else score.min_alpha
        failed = not score.ok or math.isnan(value)
        return (failed, 0.0 if failed else -value, score.items)
    return key


def subset_search(matrices, pool, sizes=(3, 4, 5), rank_by="mean", standardized=False):
    """Alpha of every ``size``-item subset of ``pool`` on every stimulus.

    ``matrices`` maps stimulus id to :class:`RatingMatrix` (a sequence is
    keyed by each matrix's ``stimulus_id``). Subsets are ranked by mean
    alpha across stimuli (or minimum, with ``rank_by="min"``), ties broken
    by the sorted item ids. Subsets whose alpha cannot be computed on some
    stimulus are kept, annotated, and ranked last.
    """
    if rank_by not in ("mean", "min"):
        raise DataError("rank_by must be 'mean' or 'min'")
    if not isinstance(matrices, dict):
        matrices = {m.stimulus_id: m for m in matrices}
    if not matrices:
        raise DataError("no stimuli to search over")
    pool = tuple(sorted(set(pool)))
    sizes = tuple(sorted(set(int(s) for s in sizes)))
    for s in sizes:
        if not 2 <= s <= len(pool):
            raise DataError(f"subset size {s} outside [2, {len(pool)}]")
    stimuli = tuple(sorted(matrices))
    values = {}
    index = {}
    for sid in stimuli:
        m = matrices[sid]
        if not isinstance(m, RatingMatrix):
            raise DataError("subset_search expects RatingMatrix values")
        m.index(pool)  # every pool item must exist
        lookup = {item: j for j, item in enumerate(m.items)}
        values[sid] = m.as_float()
        index[sid] = lambda subset, lookup=lookup: [lookup[i] for i in subset]
    results = {}
    for size in sizes:
        scores = [_score_subset(values, index, subset, standardized)
                  for subset in itertools.combinations(pool, size)]
        scores.sort(key=_sort_key(rank_by))
        results[size] = SubsetSearchResult(size, stimuli, tuple(scores), rank_by)
    return results
