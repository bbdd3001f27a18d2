"""Exploratory factor analysis by iterated principal axes.

Covers the scree eigenvalues of the reduced correlation matrix, Horn's
parallel analysis, principal-axis extraction, and Varimax / Promax
rotation, together with the communality (h2), uniqueness (u2) and Hofmann
complexity (com) columns of the usual loading table.
"""

import csv
import io
from dataclasses import dataclass, field, replace

import numpy as np

from .basestats import CorrelationMatrix, pearson_matrix
from .errors import DataError, NumericalError
from .linalg import eigh_desc, eigvals_desc, spd_inverse
from .simgen import make_rng, normal_deviates

COMMUNALITY_INITS = ("smc", "unity")


@dataclass(frozen=True)
class ScreeData:
    eigenvalues: tuple
    communality_init: str = "smc"

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["factor", "eigenvalue"])
        for i, v in enumerate(self.eigenvalues, start=1):
            w.writerow([i, repr(float(v))])
        return buf.getvalue()


@dataclass(frozen=True)
class ParallelAnalysisResult:
    observed: tuple
    simulated_reference: tuple
    n_factors: int
    replicates: int
    seed: int
    reference: str = "mean"

    def to_dict(self):
        return {"observed": list(self.observed),
                "simulated_reference": list(self.simulated_reference),
                "n_factors": self.n_factors, "replicates": self.replicates,
                "seed": self.seed, "reference": self.reference,
                "simulation": "standard normal (Box-Muller on PCG64)"}


@dataclass(frozen=True, eq=False)
class EfaSolution:
    """Loadings with their per-item summary statistics.

    ``h2`` is the row sum of squared loadings (for oblique rotations the
    diagonal of ``P Phi P'``), ``u2 = 1 - h2`` and ``com`` is Hofmann's
    complexity ``(sum l^2)^2 / sum l^4``. Heywood items had ``h2 > 1``
    clamped to 1.
    """

    items: tuple
    loadings: np.ndarray
    h2: np.ndarray
    u2: np.ndarray
    com: np.ndarray
    iterations: int
    converged: bool
    heywood: tuple = ()
    eigenvalues: tuple = ()
    rotation: str = "none"
    rotation_matrix: np.ndarray | None = None
    factor_correlation: np.ndarray | None = None

    @property
    def k(self):
        return self.loadings.shape[1]

    @property
    def factor_names(self):
        return tuple(f"PA{j + 1}" for j in range(self.k))

    def loading(self, item, factor=0):
        return float(self.loadings[self.items.index(item), factor])

    def to_csv(self, decimals=2):
        """Loading table ``item,PA1[,PA2...],h2,u2,com``.

        ``decimals=None`` writes full precision.
        """
        def fmt(x):
            return repr(float(x)) if decimals is None else f"{x:.{decimals}f}"

        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["item", *self.factor_names, "h2", "u2", "com"])
        for i, item in enumerate(self.items):
            w.writerow([item, *(fmt(v) for v in self.loadings[i]), fmt(self.h2[i]),
                        fmt(self.u2[i]), fmt(self.com[i])])
        return buf.getvalue()

    def to_dict(self):
        out = {
            "items": list(self.items),
            "factors": list(self.factor_names),
            "loadings": self.loadings.tolist(),
            "h2": self.h2.tolist(), "u2": self.u2.tolist(), "com": self.com.tolist(),
            "iterations": self.iterations, "converged": self.converged,
            "heywood": list(self.heywood), "rotation": self.rotation,
        }
        if self.factor_correlation is not None:
            out["factor_correlation"] = self.factor_correlation.tolist()
        return out


@dataclass(frozen=True, eq=False)
class RotationResult:
    rotated_loadings: np.ndarray
    rotation: np.ndarray
    factor_correlation: np.ndarray
    criterion_history: tuple = field(default=())


def smc(R):
    """Squared multiple correlation of each item with all others."""
    inv = spd_inverse(R.r, "correlation matrix")
    return 1.0 - 1.0 / np.diag(inv)


def _initial_communalities(R, communality_init):
    if communality_init == "smc":
        return smc(R)
    if communality_init == "unity":
        return np.ones(R.p)
    raise DataError(f"communality_init must be one of {COMMUNALITY_INITS}")


def reduced_eigenvalues(R, communality_init="smc", method="lapack"):
    """Descending eigenvalues of R with its diagonal replaced by communalities."""
    a = np.array(R.r, dtype=float)
    np.fill_diagonal(a, _initial_communalities(R, communality_init))
    return ScreeData(tuple(float(v) for v in eigvals_desc(a, method)), communality_init)


def _batched_reduced_eigenvalues(x, communality_init):
    """Reduced eigenvalues for a stack of (n, p) data sets."""
    xc = x - x.mean(axis=1, keepdims=True)
    cov = np.einsum("rni,rnj->rij", xc, xc)
    sd = np.sqrt(np.einsum("rii->ri", cov))
    corr = cov / (sd[:, :, None] * sd[:, None, :])
    corr = (corr + np.swapaxes(corr, 1, 2)) / 2
    p = x.shape[2]
    idx = np.arange(p)
    if communality_init == "smc":
        diag = 1.0 - 1.0 / np.einsum("rii->ri", np.linalg.inv(corr))
    else:
        diag = np.ones((x.shape[0], p))
    corr[:, idx, idx] = diag
    return eigvals_desc(corr)


def _count_leading(observed, reference):
    k = 0
    while k < len(observed) and observed[k] > reference[k]:
        k += 1
    return k


def parallel_analysis(matrix, replicates=100, seed=0, reference="mean",
                      communality_init="smc", batch=50):
    """Horn's parallel analysis on the reduced correlation matrix.

    Each replicate ``r`` draws an ``n x p`` standard-normal data set from
    the generator seeded with ``(seed, r)``, so results do not depend on
    batching. ``reference`` is ``"mean"`` or a quantile level in (0, 1)
    such as 0.95. The number of factors is the length of the leading run of
    positions where the observed eigenvalue exceeds the reference.
    """
    if replicates < 20:
        raise DataError("parallel analysis needs at least 20 replicates")
    R = pearson_matrix(matrix)
    observed = np.array(reduced_eigenvalues(R, communality_init).eigenvalues)
    n, p = matrix.values.shape if hasattr(matrix, "values") else np.shape(matrix)
    sims = np.empty((replicates, p))
    for start in range(0, replicates, batch):
        stop = min(start + batch, replicates)
        x = np.stack([normal_deviates(make_rng(seed, r), (n, p)) for r in range(start, stop)])
        sims[start:stop] = _batched_reduced_eigenvalues(x, communality_init)
    if reference == "mean":
        ref = sims.mean(axis=0)
        label = "mean"
    else:
        q = float(reference)
        if not 0 < q < 1:
            raise DataError(f"reference quantile must be in (0, 1), got {reference}")
        ref = np.quantile(sims, q, axis=0)
        label = f"quantile {q:g}"
    return ParallelAnalysisResult(tuple(observed.tolist()), tuple(ref.tolist()),
                                  _count_leading(observed, ref), replicates, seed, label)


def hofmann_complexity(loadings):
    lam2 = np.asarray(loadings, dtype=float) ** 2
    s2 = lam2.sum(axis=1)
    s4 = (lam2 ** 2).sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        com = np.where(s4 > 0, s2 ** 2 / s4, 1.0)
    return com


def _fix_signs(loadings):
    """Flip columns so each one's largest-magnitude entry is positive."""
    lam = loadings.copy()
    for j in range(lam.shape[1]):
        col = lam[:, j]
        if col.size and col[np.argmax(np.abs(col))] < 0:
            lam[:, j] = -col
    return lam


def _summarise(items, loadings, h2_raw, iterations, converged, eigenvalues):
    heywood = tuple(item for item, h in zip(items, h2_raw) if h > 1.0)
    h2 = np.minimum(h2_raw, 1.0)
    return EfaSolution(tuple(items), loadings, h2, 1.0 - h2, hofmann_complexity(loadings),
                       iterations, converged, heywood, tuple(float(v) for v in eigenvalues))


def principal_axis_factoring(R, k=1, max_iter=100, tol=1e-4, communality_init="smc",
                             method="lapack"):
    """Iterated principal-axis extraction of ``k`` factors.

    Starting from the initial communalities, the diagonal of R is replaced
    by the current estimates, the top ``k`` eigenpairs give loadings
    ``v * sqrt(w)``, and the new communalities are the row sums of squared
    loadings. Iteration stops once no communality moves by ``tol`` or more.
    Non-convergence is reported via ``converged`` rather than raised.
    """
    if not isinstance(R, CorrelationMatrix):
        raise DataError("principal_axis_factoring expects a CorrelationMatrix")
    p = R.p
    if not 1 <= k < p:
        raise DataError(f"need 1 <= k < p (k={k}, p={p})")
    h2 = _initial_communalities(R, communality_init)
    a = np.array(R.r, dtype=float)
    converged = False
    iterations = 0
    w = np.zeros(p)
    loadings = np.zeros((p, k))
    for iterations in range(1, max_iter + 1):
        np.fill_diagonal(a, h2)
        w, v = eigh_desc(a, method)
        loadings = v[:, :k] * np.sqrt(np.clip(w[:k], 0.0, None))
        new_h2 = np.sum(loadings ** 2, axis=1)
        delta = np.max(np.abs(new_h2 - h2))
        h2 = new_h2
        if delta < tol:
            converged = True
            break
    loadings = _fix_signs(loadings)
    return _summarise(R.items, loadings, np.sum(loadings ** 2, axis=1), iterations, converged, w)


def varimax_criterion(loadings):
    """Raw varimax criterion: summed column variances of squared loadings."""
    lam2 = np.asarray(loadings, dtype=float) ** 2
    p = lam2.shape[0]
    return float(np.sum(np.sum(lam2 ** 2, axis=0) - np.sum(lam2, axis=0) ** 2 / p) / p)


def _kaiser_weights(loadings):
    w = np.sqrt(np.sum(loadings ** 2, axis=1))
    w[w == 0] = 1.0
    return w


def varimax(loadings, kaiser_normalize=True, tol=1e-10, max_sweeps=1000):
    """Varimax rotation by Kaiser's cycle of pairwise planar rotations.

    Each pair of columns is turned by the angle that maximises the
    criterion for that pair; sweeps repeat until a full sweep improves the
    criterion by less than ``tol``; a sweep that lowers it through round-off
    is discarded. With ``kaiser_normalize`` rows are
    scaled to unit length while rotating.
    """
    lam = np.array(loadings, dtype=float)
    if lam.ndim != 2 or lam.shape[1] < 2:
        raise DataError("varimax needs a p x k loading matrix with k >= 2")
    p, k = lam.shape
    weights = _kaiser_weights(lam) if kaiser_normalize else np.ones(p)
    x = lam / weights[:, None]
    rot = np.eye(k)
    history = [varimax_criterion(x)]
    for _ in range(max_sweeps):
        prev_x, prev_rot = x.copy(), rot.copy()
        for i in range(k - 1):
            for j in range(i + 1, k):
                a, b = x[:, i], x[:, j]
                u = a * a - b * b
                v = 2.0 * a * b
                su, sv = u.sum(), v.sum()
                num = 2.0 * (np.dot(u, v) - su * sv / p)
                den = np.dot(u, u) - np.dot(v, v) - (su * su - sv * sv) / p
                phi = np.arctan2(num, den) / 4.0
                c, s = np.cos(phi), np.sin(phi)
                planar = np.array([[c, -s], [s, c]])
                x[:, [i, j]] = x[:, [i, j]] @ planar
                rot[:, [i, j]] = rot[:, [i, j]] @ planar
        value = varimax_criterion(x)
        if value < history[-1]:
            # only round-off can lower the criterion at the optimum; keep the best
            x, rot = prev_x, prev_rot
            break
        history.append(value)
        if history[-1] - history[-2] < tol:
            break
    rotated = x * weights[:, None]
    return RotationResult(rotated, rot, np.eye(k), tuple(history))


def promax(loadings, kappa=4, kaiser_normalize=True):
    """Promax: Varimax followed by an oblique least-squares fit to a power target.

    The target raises each varimax loading to ``kappa`` while keeping its
    sign. Returns pattern loadings, the overall rotation ``T`` (pattern =
    loadings @ T) and the factor correlation ``inv(T' T)``.
    """
    if kappa < 2:
        raise DataError("promax kappa must be >= 2")
    vm = varimax(loadings, kaiser_normalize=kaiser_normalize)
    v = vm.rotated_loadings
    target = v * np.abs(v) ** (kappa - 1)
    u, *_ = np.linalg.lstsq(v, target, rcond=None)
    try:
        d = np.diag(np.linalg.inv(u.T @ u))
    except np.linalg.LinAlgError:
        raise NumericalError("promax target regression is singular") from None
    if np.any(d <= 0) or not np.all(np.isfinite(d)):
        raise NumericalError("promax target regression is singular")
    u = u * np.sqrt(d)
    pattern = v @ u
    rot = vm.rotation @ u
    try:
        phi = np.linalg.inv(rot.T @ rot)
    except np.linalg.LinAlgError:
        raise NumericalError("promax rotation matrix is singular") from None
    phi = (phi + phi.T) / 2
    dphi = np.sqrt(np.diag(phi))
    phi = phi / np.outer(dphi, dphi)
    np.fill_diagonal(phi, 1.0)
    return RotationResult(pattern, rot, phi, vm.criterion_history)


def _order_and_sign(res):
    """Order factors by explained variance and make column sums positive."""
    lam = res.rotated_loadings
    phi = res.factor_correlation
    ss = np.sum(lam ** 2, axis=0)
    order = np.argsort(-ss, kind="stable")
    signs = np.where(lam[:, order].sum(axis=0) < 0, -1.0, 1.0)
    lam = lam[:, order] * signs
    rot = res.rotation[:, order] * signs
    phi = phi[np.ix_(order, order)] * np.outer(signs, signs)
    return lam, rot, phi


def rotate(solution, method="varimax", kappa=4, kaiser_normalize=True):
    """Rotate an unrotated :class:`EfaSolution` (k >= 2)."""
    if solution.k < 2:
        raise DataError("rotation needs at least two factors")
    if method == "varimax":
        res = varimax(solution.loadings, kaiser_normalize=kaiser_normalize)
    elif method == "promax":
        res = promax(solution.loadings, kappa=kappa, kaiser_normalize=kaiser_normalize)
    else:
        raise DataError(f"unknown rotation {method!r}")
    lam, rot, phi = _order_and_sign(res)
    h2_raw = np.einsum("ij,jk,ik->i", lam, phi, lam)
    h2 = np.minimum(h2_raw, 1.0)
    return replace(solution, loadings=lam, h2=h2, u2=1.0 - h2, com=hofmann_complexity(lam),
                   rotation=method, rotation_matrix=rot,
                   factor_correlation=None if method == "varimax" else phi)


def efa(matrix, k=1, rotation=None, **kwargs):
    """Correlate, extract ``k`` factors and optionally rotate."""
    R = matrix if isinstance(matrix, CorrelationMatrix) else pearson_matrix(matrix)
    sol = principal_axis_factoring(R, k, **kwargs)
    if rotation and k >= 2:
        sol = rotate(sol, rotation)
    return sol
