"""Symmetric eigendecomposition and positive-definite helpers."""

import numpy as np

from .errors import ConvergenceError, NotPositiveDefiniteError

EIG_METHODS = ("lapack", "jacobi")


def jacobi_eigh(a, tol=1e-12, max_sweeps=100):
    """Eigenvalues and eigenvectors of a symmetric matrix by cyclic Jacobi.

    Each sweep annihilates every off-diagonal pair once with a planar
    rotation. Iteration stops when the off-diagonal Frobenius norm drops
    below ``tol`` times ``max(1, ||a||_F)``.

    Returns
    -------
    w : ndarray, shape (p,)
        Eigenvalues in descending order.
    v : ndarray, shape (p, p)
        Matching orthonormal eigenvectors in the columns.
    """
    a = np.array(a, dtype=float)
    p = a.shape[0]
    if a.shape != (p, p):
        raise ValueError("jacobi_eigh needs a square matrix")
    a = (a + a.T) / 2
    v = np.eye(p)
    scale = max(1.0, np.linalg.norm(a))
    sweeps = 0
    while True:
        off = np.sqrt(2.0 * np.sum(np.triu(a, 1) ** 2))
        if off < tol * scale:
            break
        if sweeps >= max_sweeps:
            raise ConvergenceError(
                f"Jacobi eigensolver did not converge in {max_sweeps} sweeps "
                f"(off-diagonal norm {off:.3e})", iterations=sweeps)
        sweeps += 1
        for i in range(p - 1):
            for j in range(i + 1, p):
                aij = a[i, j]
                if aij == 0.0:
                    continue
                diff = a[j, j] - a[i, i]
                if abs(aij) < 1e-150 * abs(diff):
                    t = aij / diff  # theta would overflow; t ~ 1/(2 theta)
                else:
                    theta = diff / (2.0 * aij)
                    t = np.copysign(1.0, theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                ai = a[:, i].copy()
                aj = a[:, j].copy()
                a[:, i] = c * ai - s * aj
                a[:, j] = s * ai + c * aj
                ai = a[i, :].copy()
                aj = a[j, :].copy()
                a[i, :] = c * ai - s * aj
                a[j, :] = s * ai + c * aj
                a[i, j] = a[j, i] = 0.0
                vi = v[:, i].copy()
                vj = v[:, j].copy()
                v[:, i] = c * vi - s * vj
                v[:, j] = s * vi + c * vj
    w = np.diag(a).copy()
    order = np.argsort(-w, kind="stable")
    return w[order], v[:, order]


def eigh_desc(a, method="lapack"):
    """Symmetric eigendecomposition with eigenvalues sorted descending."""
    if method == "jacobi":
        return jacobi_eigh(a)
    if method != "lapack":
        raise ValueError(f"unknown eigen method {method!r}; use one of {EIG_METHODS}")
    a = np.asarray(a, dtype=float)
    w, v = np.linalg.eigh((a + a.T) / 2)
    return w[::-1], v[:, ::-1]


def eigvals_desc(a, method="lapack"):
    """Eigenvalues only, descending. Accepts a stack of matrices for LAPACK."""
    if method == "jacobi":
        a = np.asarray(a, dtype=float)
        if a.ndim == 3:
            return np.array([jacobi_eigh(m)[0] for m in a])
        return jacobi_eigh(a)[0]
    a = np.asarray(a, dtype=float)
    sym = (a + np.swapaxes(a, -1, -2)) / 2
    return np.linalg.eigvalsh(sym)[..., ::-1]


def cholesky(a, what="matrix"):
    try:
        return np.linalg.cholesky(np.asarray(a, dtype=float))
    except np.linalg.LinAlgError:
        raise NotPositiveDefiniteError(f"{what} is not positive definite") from None


def spd_inverse(a, what="matrix"):
    """Inverse of a symmetric positive-definite matrix via its Cholesky factor."""
    low = cholesky(a, what)
    inv_low = np.linalg.solve(low, np.eye(low.shape[0]))
    inv = inv_low.T @ inv_low
    return (inv + inv.T) / 2


def spd_logdet(a, what="matrix"):
    low = cholesky(a, what)
    return 2.0 * float(np.sum(np.log(np.diag(low))))
