"""Zero-lag covariances of the gradient and Hessian of an isotropic field.

The Hessian covariance on vec coordinates, ``c (I + C_n + vec(I) vec(I)^T)``
with ``c = sigma2 * rho4_0``, is singular (rank n(n+1)/2).  Density work is
done on vech coordinates through ``Sigma_n = D_n^+ R D_n^+^T``, which is
positive definite.
"""
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from . import matops


@dataclass(frozen=True, eq=False)
class CovarianceBundle:
    n: int
    consts: object
    grad_cov: np.ndarray
    cross_cov: np.ndarray
    hess_cov: np.ndarray
    sigma_n: np.ndarray
    sigma_tilde: np.ndarray
    sigma_det: float

    @property
    def hess_scale(self):
        return self.consts.hess_scale


def _frozen(a):
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


def build_bundle(n, consts):
    """Assemble every zero-lag covariance matrix for ambient dimension ``n``."""
    matops._check_dim(n)
    c = consts.hess_scale
    C = matops.commutation_matrix(n)
    vI = matops.vec_of(np.eye(n))
    hess = c * (np.eye(n * n) + C + np.outer(vI, vI))
    Dp = matops.dup_pinv(n)
    sigma_n = Dp @ hess @ Dp.T
    # exact symmetry; the product above is symmetric up to rounding only
    sigma_n = 0.5 * (sigma_n + sigma_n.T)
    p = n * (n + 1) // 2
    det = 2.0 ** (n - 1) * (2 + n) * c**p
    return CovarianceBundle(
        n=n,
        consts=consts,
        grad_cov=_frozen(consts.grad_var * np.eye(n)),
        cross_cov=_frozen(np.zeros((n, n * n))),
        hess_cov=_frozen(hess),
        sigma_n=_frozen(sigma_n),
        sigma_tilde=_frozen(c * (2.0 * np.eye(n) + np.ones((n, n)))),
        sigma_det=float(det),
    )


def hess_cov_pinv(bundle):
    """Closed-form Moore-Penrose inverse of the vec-coordinate Hessian covariance."""
    n = bundle.n
    C = matops.commutation_matrix(n)
    vI = matops.vec_of(np.eye(n))
    return (np.eye(n * n) + C - (2.0 / (2 + n)) * np.outer(vI, vI)) / (4.0 * bundle.hess_scale)


def sigma_tilde_inv_apply(lam, hess_scale):
    """``Sigma_tilde^-1 @ lam`` via the Sherman-Morrison form of ``(2I + 11^T)^-1``.

    Works along the last axis so stacked eigenvalue vectors are fine.
    """
    lam = np.asarray(lam, dtype=float)
    m = lam.shape[-1]
    return (lam - lam.sum(axis=-1, keepdims=True) / (m + 2)) / (2.0 * hess_scale)


def eig_quadratic_form(lam, hess_scale):
    """``lam^T Sigma_tilde^-1 lam`` along the last axis."""
    lam = np.asarray(lam, dtype=float)
    m = lam.shape[-1]
    s = lam.sum(axis=-1)
    return (np.einsum("...i,...i->...", lam, lam) - s * s / (m + 2)) / (2.0 * hess_scale)


def _check_orthogonal(R, n):
    R = np.asarray(R, dtype=float)
    if R.shape != (n, n):
        raise ValueError(f"expected a {n}x{n} matrix, got {R.shape}")
    if np.max(np.abs(R.T @ R - np.eye(n))) > 1e-12:
        raise ValueError("matrix is not orthogonal to within 1e-12")
    return R


def rotation_invariance_check(bundle, R):
    """Max entrywise deviation of ``(R kron R) A (R^T kron R^T)`` from ``A = hess_cov``.

    Only orthogonal ``R`` is accepted: the ``vec(I) vec(I)^T`` term is
    invariant under orthogonal conjugation but not under a general
    invertible change of basis.
    """
    R = _check_orthogonal(R, bundle.n)
    K = np.kron(R, R)
    A = bundle.hess_cov
    return float(np.max(np.abs(K @ A @ np.kron(R.T, R.T) - A)))


def quadratic_form_reduction(bundle, R, lam):
    """Both sides of the eigenvalue reduction of the vech quadratic form.

    Returns
    -------
    lhs : float
        ``vech(R^T diag(lam) R)^T Sigma_n^-1 vech(R^T diag(lam) R)``, by a
        Cholesky solve.
    rhs : float
        ``lam^T Sigma_tilde^-1 lam`` in closed form.
    """
    R = _check_orthogonal(R, bundle.n)
    lam = np.asarray(lam, dtype=float)
    u = matops.vech_of(R.T @ matops.diag_inv(lam) @ R)
    cf = linalg.cho_factor(bundle.sigma_n)
    lhs = float(u @ linalg.cho_solve(cf, u))
    rhs = float(eig_quadratic_form(lam, bundle.hess_scale))
    return lhs, rhs
