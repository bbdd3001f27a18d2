"""One-factor confirmatory factor analysis by maximum likelihood.

The model is ``Sigma = l l' + diag(theta)`` with the factor variance fixed
to 1. Parameters are optimised as ``(l, log theta)`` with BFGS and an
analytic gradient, then refined with a few Fisher-scoring steps. The
chi-square statistic is ``n * F_min`` with ``S`` the
``n - 1`` sample covariance; SRMR uses correlation-metric residuals
``(S - Sigma) / sqrt(s_ii s_jj)`` over the lower triangle including the
diagonal.
"""

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .basestats import chisq_sf
from .dataset import RatingMatrix
from .errors import DataError, NumericalError
from .linalg import spd_inverse, spd_logdet

THETA_FLOOR = 1e-6
GRADIENT_TOL = 1e-8

# cutoffs used when labelling fit
TLI_MIN = 0.95
CFI_MIN = 0.95
SRMR_MAX = 0.08
RMSEA_GOOD = 0.06
RMSEA_ACCEPTABLE = 0.10
CHI2_ALPHA = 0.05
LOADING_MIN = 0.7


@dataclass(frozen=True)
class CfaModel:
    items: tuple
    identification: str = "fix_factor_variance_to_1"

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))
        if len(self.items) < 3:
            raise DataError("a one-factor CFA needs at least 3 items")
        if len(set(self.items)) != len(self.items):
            raise DataError("CFA items must be distinct")
        if self.identification != "fix_factor_variance_to_1":
            raise DataError(f"unsupported identification {self.identification!r}")

    @property
    def p(self):
        return len(self.items)

    @property
    def df(self):
        p = self.p
        return p * (p + 1) // 2 - 2 * p

    @property
    def baseline_df(self):
        return self.p * (self.p - 1) // 2


@dataclass(frozen=True)
class FitIndices:
    tli: float
    cfi: float
    srmr: float
    rmsea: float


@dataclass(frozen=True, eq=False)
class CfaSolution:
    items: tuple
    lambda_: np.ndarray
    theta: np.ndarray
    standardized_lambda: np.ndarray
    chi2: float
    df: int
    p_value: float | None
    tli: float
    cfi: float
    srmr: float
    rmsea: float
    baseline_chi2: float
    baseline_df: int
    n: int
    converged: bool
    iterations: int
    fmin: float = 0.0
    gradient_norm: float = 0.0
    saturated: bool = False
    metadata: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "items": list(self.items),
            "lambda": self.lambda_.tolist(),
            "theta": self.theta.tolist(),
            "standardized_lambda": self.standardized_lambda.tolist(),
            "chi2": self.chi2, "df": self.df, "p_value": self.p_value,
            "tli": self.tli, "cfi": self.cfi, "srmr": self.srmr, "rmsea": self.rmsea,
            "baseline_chi2": self.baseline_chi2, "baseline_df": self.baseline_df,
            "n": self.n, "converged": self.converged, "iterations": self.iterations,
            "fmin": self.fmin, "gradient_norm": self.gradient_norm,
            "saturated": self.saturated, "metadata": dict(self.metadata),
        }

    def loadings_csv(self, decimals=3):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["item", "standardized_loading", "loading", "residual_variance"])
        for item, s, lam, th in zip(self.items, self.standardized_lambda, self.lambda_,
                                    self.theta):
            if decimals is None:
                w.writerow([item, repr(float(s)), repr(float(lam)), repr(float(th))])
            else:
                w.writerow([item, f"{s:.{decimals}f}", f"{lam:.{decimals}f}",
                            f"{th:.{decimals}f}"])
        return buf.getvalue()


def implied_covariance(lam, theta):
    lam = np.asarray(lam, dtype=float)
    return np.outer(lam, lam) + np.diag(theta)


def _unpack(params):
    params = np.asarray(params, dtype=float)
    p = params.size // 2
    return params[:p], np.exp(params[p:])


def ml_discrepancy(params, S, logdet_s=None):
    """``F_ML = ln|Sigma| + tr(S Sigma^-1) - ln|S| - p`` at ``(l, log theta)``."""
    lam, theta = _unpack(params)
    sigma = implied_covariance(lam, theta)
    if logdet_s is None:
        logdet_s = spd_logdet(S, "sample covariance")
    inv = spd_inverse(sigma, "implied covariance")
    return spd_logdet(sigma) + float(np.sum(S * inv)) - logdet_s - S.shape[0]


def ml_gradient(params, S):
    """Analytic gradient of :func:`ml_discrepancy` in ``(l, log theta)``."""
    lam, theta = _unpack(params)
    inv = spd_inverse(implied_covariance(lam, theta), "implied covariance")
    g = inv - inv @ S @ inv
    return np.concatenate([2.0 * g @ lam, np.diag(g) * theta])


def expected_hessian(params):
    """Expected (Fisher) Hessian of ``F_ML`` in ``(l, log theta)`` at ``S = Sigma``."""
    lam, theta = _unpack(params)
    p = lam.size
    inv = spd_inverse(implied_covariance(lam, theta), "implied covariance")
    derivs = []
    for i in range(p):
        d = np.zeros((p, p))
        d[i, :] += lam
        d[:, i] += lam
        derivs.append(d)
    for i in range(p):
        d = np.zeros((p, p))
        d[i, i] = theta[i]
        derivs.append(d)
    a = [inv @ d for d in derivs]
    return np.array([[np.sum(x * y.T) for y in a] for x in a])


def _polish(params, S, logdet_s, steps=20):
    """Fisher-scoring steps from a near-optimal point; keeps a step only if F drops."""
    f = ml_discrepancy(params, S, logdet_s)
    for _ in range(steps):
        g = ml_gradient(params, S)
        if np.max(np.abs(g)) < GRADIENT_TOL * 1e-2:
            break
        try:
            step = np.linalg.solve(expected_hessian(params), g)
        except np.linalg.LinAlgError:
            break
        trial = params - step
        try:
            f_trial = ml_discrepancy(trial, S, logdet_s)
        except NumericalError:
            break
        if f_trial > f + 1e-14:
            break
        params, f = trial, f_trial
    return params


def fit_indices(chi2, df, baseline_chi2, baseline_df, n, residuals):
    """TLI, CFI, SRMR and RMSEA from the model and baseline chi-squares.

    ``residuals`` is the standardized residual matrix; SRMR is the root mean
    square of its lower triangle including the diagonal.
    """
    if df < 1 or baseline_df < 1:
        raise DataError("fit indices need df >= 1 and baseline_df >= 1")
    if n < 2:
        raise DataError("fit indices need n >= 2")
    base_ratio = baseline_chi2 / baseline_df
    if base_ratio == 1.0:
        raise NumericalError("TLI undefined: baseline chi2/df equals 1")
    tli = (base_ratio - chi2 / df) / (base_ratio - 1.0)
    excess = max(chi2 - df, 0.0)
    denom = max(baseline_chi2 - baseline_df, chi2 - df, 0.0)
    cfi = 1.0 if denom == 0 else 1.0 - excess / denom
    rmsea = math.sqrt(excess / (df * (n - 1)))
    res = np.asarray(residuals, dtype=float)
    tri = res[np.tril_indices(res.shape[0])]
    srmr = float(np.sqrt(np.mean(tri ** 2))) if tri.size else 0.0
    return FitIndices(float(tli), float(cfi), srmr, float(rmsea))


def standardized_residuals(S, sigma):
    d = np.sqrt(np.diag(S))
    return (S - sigma) / np.outer(d, d)


def fit_covariance(S, n, items=None, max_iter=2000):
    """Fit the one-factor model to a covariance matrix ``S`` from ``n`` cases."""
    S = np.asarray(S, dtype=float)
    p = S.shape[0]
    items = tuple(items) if items is not None else tuple(f"item{j + 1}" for j in range(p))
    model = CfaModel(items)
    if S.shape != (p, p) or not np.allclose(S, S.T):
        raise DataError("covariance matrix must be square and symmetric")
    S = (S + S.T) / 2
    logdet_s = spd_logdet(S, "sample covariance")
    d = np.diag(S)
    start = np.concatenate([0.7 * np.sqrt(d), np.log(0.51 * d)])

    res = optimize.minimize(lambda x: ml_discrepancy(x, S, logdet_s), start,
                            jac=lambda x: ml_gradient(x, S), method="BFGS",
                            options={"gtol": GRADIENT_TOL, "maxiter": max_iter})
    params = _polish(res.x, S, logdet_s)
    grad = ml_gradient(params, S)
    gnorm = float(np.max(np.abs(grad)))
    converged = gnorm < GRADIENT_TOL

    lam, theta = _unpack(params)
    if lam.sum() < 0:
        lam = -lam
    theta = np.maximum(theta, THETA_FLOOR)
    sigma = implied_covariance(lam, theta)
    fmin = max(ml_discrepancy(np.concatenate([lam, np.log(theta)]), S, logdet_s), 0.0)
    chi2 = n * fmin
    baseline_chi2 = n * (float(np.sum(np.log(d))) - logdet_s)
    std_lam = lam / np.sqrt(lam ** 2 + theta)
    residuals = standardized_residuals(S, sigma)
    df, bdf = model.df, model.baseline_df
    if df == 0:
        tri = residuals[np.tril_indices(p)]
        idx = FitIndices(1.0, 1.0, float(np.sqrt(np.mean(tri ** 2))), 0.0)
        p_value = None
    else:
        idx = fit_indices(chi2, df, baseline_chi2, bdf, n, residuals)
        p_value = chisq_sf(chi2, df)
    return CfaSolution(
        items, lam, theta, std_lam, float(chi2), df, p_value, idx.tli, idx.cfi, idx.srmr,
        idx.rmsea, float(baseline_chi2), bdf, int(n), bool(converged), int(res.nit),
        float(fmin), gnorm, df == 0,
        {"estimator": "ML", "chi2_multiplier": "n", "covariance_ddof": 1,
         "srmr": "correlation-metric residuals, lower triangle incl. diagonal",
         "identification": model.identification, "optimizer": "BFGS",
         "optimizer_message": str(res.message)},
    )


def fit_one_factor(matrix, model=None):
    """Fit a one-factor CFA to the items of ``model`` in ``matrix``."""
    if not isinstance(matrix, RatingMatrix):
        raise DataError("fit_one_factor expects a RatingMatrix")
    model = model or CfaModel(matrix.items)
    x = matrix.select(model.items).as_float()
    n = x.shape[0]
    if n <= model.p:
        raise DataError(f"CFA needs more respondents than items (n={n}, p={model.p})")
    S = np.cov(x, rowvar=False, ddof=1)
    return fit_covariance(S, n, model.items)


def interpret_fit(solution):
    """Label each index against conventional cutoffs.

    TLI and CFI are ``good`` at >= 0.95, SRMR at <= 0.08. RMSEA is
    ``good`` at <= 0.06, ``acceptable`` up to 0.10 and ``poor`` above. The
    chi-square test passes when p >= 0.05; it is reported but does not
    decide the overall verdict because of its sensitivity to sample size.
    Standardized loadings >= 0.7 are ``well-defined``.
    """
    if not solution.converged:
        raise NumericalError("cannot interpret a CFA solution that did not converge")
    labels = {
        "tli": "good" if solution.tli >= TLI_MIN else "poor",
        "cfi": "good" if solution.cfi >= CFI_MIN else "poor",
        "srmr": "good" if solution.srmr <= SRMR_MAX else "poor",
    }
    if solution.rmsea <= RMSEA_GOOD:
        labels["rmsea"] = "good"
    elif solution.rmsea <= RMSEA_ACCEPTABLE:
        labels["rmsea"] = "acceptable"
    else:
        labels["rmsea"] = "poor"
    if solution.p_value is None:
        labels["chi2"] = "saturated"
    else:
        labels["chi2"] = "pass" if solution.p_value >= CHI2_ALPHA else "significant"
    loadings = {item: ("well-defined" if s >= LOADING_MIN else "weak")
                for item, s in zip(solution.items, solution.standardized_lambda)}
    core = [labels["tli"], labels["cfi"], labels["srmr"], labels["rmsea"]]
    if all(v == "good" for v in core):
        overall = "good"
    elif "poor" in core:
        overall = "poor"
    else:
        overall = "acceptable"
    return {"indices": labels, "loadings": loadings,
            "all_loadings_well_defined": all(v == "well-defined" for v in loadings.values()),
            "overall": overall}
