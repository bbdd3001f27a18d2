"""Construct validity: convergent and discriminant correlations, known groups."""

import csv
import io
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .basestats import mean_ci, pearson_r
from .dataset import LikertSpec, composite_score
from .errors import DataError

CONVERGENT_MIN = 0.5
DISCRIMINANT_MAX = 0.3


def convergent_validity(matrix, scale_a, scale_b):
    """Pearson r between the composite scores of two scales."""
    return pearson_r(composite_score(matrix, scale_a), composite_score(matrix, scale_b))


def discriminant_validity(matrix, scale, covariate):
    """Pearson r between a scale composite and an unrelated per-respondent variable."""
    covariate = np.asarray(covariate, dtype=float)
    if covariate.shape != (matrix.n,):
        raise DataError(f"covariate has {covariate.size} values for {matrix.n} respondents")
    if np.ptp(covariate) == 0:
        raise DataError("covariate is constant")
    return pearson_r(composite_score(matrix, scale), covariate)


def convergent_label(r):
    return "high" if r > CONVERGENT_MIN else "low"


def discriminant_label(r):
    return "low" if abs(r) < DISCRIMINANT_MAX else "high"


@dataclass(frozen=True)
class GroupScore:
    stimulus_id: str
    ci: object


@dataclass(frozen=True)
class KnownGroupResult:
    """Stimuli ranked by mean composite, highest first.

    ``separated`` is true when every pair of neighbouring stimuli in the
    ranking has non-overlapping confidence intervals.
    """

    ranked: tuple
    level: float
    separated: bool

    @property
    def ordering(self):
        return tuple(g.stimulus_id for g in self.ranked)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["rank", "stimulus_id", "mean", "lower", "upper", "half_width", "n", "sd"])
        for rank, g in enumerate(self.ranked, start=1):
            c = g.ci
            w.writerow([rank, g.stimulus_id, repr(c.mean), repr(c.lower), repr(c.upper),
                        repr(c.half_width), c.n, repr(c.sd)])
        return buf.getvalue()

    def to_dict(self):
        return {"ordering": list(self.ordering), "level": self.level,
                "separated": self.separated, "ci_method": "normal",
                "groups": {g.stimulus_id: g.ci.to_dict() for g in self.ranked}}


def known_group_comparison(matrices, scale, level=0.95):
    """Mean composite with a confidence interval per stimulus, ranked descending."""
    if not isinstance(matrices, dict):
        matrices = {m.stimulus_id: m for m in matrices}
    if len(matrices) < 2:
        raise DataError("known-group comparison needs at least 2 stimuli")
    groups = [GroupScore(sid, mean_ci(composite_score(m, scale), level))
              for sid, m in sorted(matrices.items())]
    groups.sort(key=lambda g: (-g.ci.mean, g.stimulus_id))
    separated = all(not a.ci.overlaps(b.ci) for a, b in zip(groups, groups[1:]))
    return KnownGroupResult(tuple(groups), level, separated)


def item_means_csv(matrices, scale, level=0.95):
    """Per-item means with confidence intervals, one row per stimulus and item."""
    if not isinstance(matrices, dict):
        matrices = {m.stimulus_id: m for m in matrices}
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["stimulus_id", "item", "mean", "lower", "upper", "half_width", "n"])
    for sid, m in sorted(matrices.items()):
        for item in scale:
            c = mean_ci(m.column(item).astype(float), level)
            w.writerow([sid, item, repr(c.mean), repr(c.lower), repr(c.upper),
                        repr(c.half_width), c.n])
    return buf.getvalue()


def map_unit_to_likert(x, spec=LikertSpec()):
    """Linearly rescale a score in [0, 1] onto ``[spec.min, spec.max]``.

    The arithmetic is exact on the shortest decimal form of ``x`` and rounded
    once, so ``0.58`` maps to ``4.48`` on a 1..7 scale rather than
    ``4.4799999999999995``.
    """
    x = float(x)
    if not 0.0 <= x <= 1.0:
        raise DataError(f"unit score must lie in [0, 1], got {x}")
    return float(spec.min + (spec.max - spec.min) * Fraction(repr(x)))


@dataclass(frozen=True)
class ValidityReport:
    convergent: dict
    discriminant: dict
    known_groups: KnownGroupResult | None
    mapped_references: dict

    def to_dict(self):
        return {
            "convergent": {k: {"r": v, "label": convergent_label(v)}
                           for k, v in self.convergent.items()},
            "discriminant": {k: {"r": v, "label": discriminant_label(v)}
                             for k, v in self.discriminant.items()},
            "known_groups": None if self.known_groups is None else self.known_groups.to_dict(),
            "mapped_references": dict(self.mapped_references),
            "thresholds": {"convergent_min": CONVERGENT_MIN,
                           "discriminant_max": DISCRIMINANT_MAX},
        }


def validity_report(matrices, scale, comparison_scale=None, covariates=None,
                    references=None, level=0.95):
    """Assemble convergent, discriminant and known-group results across stimuli.

    ``covariates`` maps stimulus id to a per-respondent array; ``references``
    maps stimulus id to an external score in [0, 1].
    """
    if not isinstance(matrices, dict):
        matrices = {m.stimulus_id: m for m in matrices}
    convergent = {}
    discriminant = {}
    for sid, m in sorted(matrices.items()):
        if comparison_scale:
            convergent[sid] = convergent_validity(m, scale, comparison_scale)
        if covariates and sid in covariates:
            discriminant[sid] = discriminant_validity(m, scale, covariates[sid])
    likert = next(iter(matrices.values())).likert or LikertSpec()
    groups = known_group_comparison(matrices, scale, level) if len(matrices) >= 2 else None
    mapped = {sid: map_unit_to_likert(x, likert) for sid, x in sorted((references or {}).items())}
    return ValidityReport(convergent, discriminant, groups, mapped)
