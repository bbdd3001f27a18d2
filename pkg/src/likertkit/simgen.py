"""Synthetic Likert responses drawn from a known factor model.

Random numbers come from NumPy's PCG64 bit generator seeded through a
``SeedSequence`` built from ``(seed, *stream)``; normal deviates are made
from its uniforms with the Box-Muller transform, so a given seed yields the
same bytes on every platform.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .dataset import LikertSpec, RatingMatrix, RawSurvey, SurveyRow, reverse_score
from .errors import DataError


def make_rng(seed, *stream):
    """PCG64 generator for ``seed`` and an optional sub-stream key."""
    key = [int(seed)] + [int(s) for s in stream]
    if any(k < 0 for k in key):
        raise DataError("seeds must be non-negative integers")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(key)))


def normal_deviates(rng, size):
    """Standard normal array of shape ``size`` by the Box-Muller transform."""
    shape = (size,) if np.isscalar(size) else tuple(size)
    count = int(np.prod(shape))
    pairs = (count + 1) // 2
    u1 = 1.0 - rng.random(pairs)  # (0, 1]: keeps log finite
    u2 = rng.random(pairs)
    radius = np.sqrt(-2.0 * np.log(u1))
    angle = 2.0 * math.pi * u2
    z = np.empty(2 * pairs)
    z[0::2] = radius * np.cos(angle)
    z[1::2] = radius * np.sin(angle)
    return z[:count].reshape(shape)


def default_thresholds(n_categories=7):
    """Cut points splitting N(0, 1) into equally probable categories."""
    from statistics import NormalDist

    nd = NormalDist()
    return tuple(nd.inv_cdf(k / n_categories) for k in range(1, n_categories))


@dataclass(frozen=True, eq=False)
class SimSpec:
    """Factor model plus discretisation for one simulated stimulus.

    ``latent_mean`` shifts every item's latent score before thresholding
    (in latent SD units) and is how stimuli with different average ratings
    are produced.
    """

    loadings: np.ndarray
    n: int
    seed: int = 0
    factor_correlation: np.ndarray | None = None
    thresholds: tuple | None = None
    likert: LikertSpec = LikertSpec()
    items: tuple | None = None
    stimulus_id: str = "sim"
    latent_mean: float = 0.0
    respondents: tuple | None = None
    stream: tuple = field(default=())

    def __post_init__(self):
        lam = np.asarray(self.loadings, dtype=float)
        if lam.ndim == 1:
            lam = lam[:, None]
        if lam.ndim != 2 or lam.size == 0:
            raise DataError("loadings must be a non-empty p x k matrix")
        p, k = lam.shape
        phi = np.eye(k) if self.factor_correlation is None else np.asarray(
            self.factor_correlation, dtype=float)
        if phi.shape != (k, k) or not np.allclose(phi, phi.T) or not np.allclose(np.diag(phi), 1):
            raise DataError("factor_correlation must be a symmetric k x k matrix "
                            "with unit diagonal")
        if np.linalg.eigvalsh(phi).min() <= 0:
            raise DataError("factor_correlation is not positive definite")
        h2 = np.einsum("ij,jk,ik->i", lam, phi, lam)
        if np.any(h2 > 1 + 1e-12):
            bad = np.flatnonzero(h2 > 1 + 1e-12).tolist()
            raise DataError(f"items {bad} have communality > 1")
        cuts = (default_thresholds(self.likert.n_categories) if self.thresholds is None
                else tuple(float(t) for t in self.thresholds))
        if len(cuts) != self.likert.n_categories - 1:
            raise DataError(f"need {self.likert.n_categories - 1} thresholds, got {len(cuts)}")
        if any(b <= a for a, b in zip(cuts, cuts[1:])):
            raise DataError("thresholds must be strictly increasing")
        if self.n < 1:
            raise DataError("n must be positive")
        items = tuple(self.items) if self.items is not None else tuple(
            f"item{j + 1}" for j in range(p))
        if len(items) != p:
            raise DataError(f"{len(items)} item ids for {p} loading rows")
        if self.respondents is not None and len(self.respondents) != self.n:
            raise DataError("respondents must have length n")
        lam.setflags(write=False)
        phi.setflags(write=False)
        object.__setattr__(self, "loadings", lam)
        object.__setattr__(self, "factor_correlation", phi)
        object.__setattr__(self, "thresholds", cuts)
        object.__setattr__(self, "items", items)

    @property
    def communalities(self):
        lam, phi = self.loadings, self.factor_correlation
        return np.clip(np.einsum("ij,jk,ik->i", lam, phi, lam), 0.0, 1.0)

    @property
    def latent_covariance(self):
        lam, phi = self.loadings, self.factor_correlation
        cov = lam @ phi @ lam.T
        cov[np.diag_indices_from(cov)] = 1.0
        return cov


def simulate_latent(spec):
    """Continuous item scores ``x = L f + e`` before discretisation."""
    rng = make_rng(spec.seed, *spec.stream)
    p, k = spec.loadings.shape
    chol = np.linalg.cholesky(spec.factor_correlation)
    factors = normal_deviates(rng, (spec.n, k)) @ chol.T
    noise = normal_deviates(rng, (spec.n, p)) * np.sqrt(1.0 - spec.communalities)
    return factors @ spec.loadings.T + noise + spec.latent_mean


def simulate(spec):
    """Draw a rating matrix from ``spec``; identical output for identical specs."""
    latent = simulate_latent(spec)
    cats = np.searchsorted(np.asarray(spec.thresholds), latent, side="right")
    values = (cats + spec.likert.min).astype(np.int64)
    respondents = spec.respondents or tuple(
        f"{spec.stimulus_id}-r{i + 1:05d}" for i in range(spec.n))
    return RatingMatrix(spec.stimulus_id, respondents, spec.items, values, spec.likert)


def simulate_survey(specs, seed=0, reversed_items=(), check_id="check_attention",
                    age_range=(18, 65)):
    """Simulate several stimuli and package them as a :class:`RawSurvey`.

    Items listed in ``reversed_items`` are written in their raw
    (un-reversed) form, so reading the survey back with a catalog that marks
    them reversed restores the simulated values. Ages are drawn uniformly
    and independently of the ratings; every attention check passes.
    """
    specs = list(specs)
    if not specs:
        raise DataError("need at least one stimulus spec")
    matrices = [simulate(s) for s in specs]
    likert = specs[0].likert
    items = tuple(dict.fromkeys(i for m in matrices for i in m.items))
    respondent_ids = sorted({r for m in matrices for r in m.respondents})
    rng = make_rng(seed, 0xA6E)
    ages = rng.integers(age_range[0], age_range[1] + 1, size=len(respondent_ids))
    genders = rng.choice(["female", "male"], size=len(respondent_ids))
    demo = {rid: {"age": str(int(a)), "gender": str(g)}
            for rid, a, g in zip(respondent_ids, ages, genders)}
    rev = set(reversed_items)
    rows = []
    for m in matrices:
        for rid, vals in zip(m.respondents, m.values):
            responses = dict.fromkeys(items)
            for item, v in zip(m.items, vals):
                v = int(v)
                responses[item] = reverse_score(v, likert) if item in rev else v
            rows.append(SurveyRow(rid, m.stimulus_id, responses,
                                  {check_id: True} if check_id else {}, demo[rid]))
    return RawSurvey(tuple(rows), items, (check_id,) if check_id else (),
                     ("age", "gender"), likert)
