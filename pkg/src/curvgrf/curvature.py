"""Principal curvatures of a level set from the local jet (gradient, Hessian).

Sign convention: curvatures are the eigenvalues of ``-N^T H N / |g|``.  For
``f(x) = |x|^2`` the gradient points outward and a sphere of radius R gets
curvatures ``-1/R``.
"""
import numpy as np

from . import _kernels


class DegenerateGradient(ValueError):
    """The gradient vanishes (relative to the scale), so no level set passes smoothly here."""


def _threshold(scale):
    return 1e-12 * (1.0 if scale is None else float(scale))


def nullspace_basis(g, scale=None):
    """Orthonormal basis (n, n-1) of the complement of ``g``.

    Householder reflection sending e1 to ``-sign(g_1) g/|g|``; its remaining
    columns span the null space of ``g^T``.  Deterministic in ``g``.
    """
    g = np.asarray(g, dtype=float).ravel()
    norm = float(np.linalg.norm(g))
    if not norm > _threshold(scale):
        raise DegenerateGradient(f"gradient norm {norm:g} too small for a level set")
    u = g / norm
    u[0] += 1.0 if u[0] >= 0.0 else -1.0
    P = np.eye(g.size) - 2.0 * np.outer(u, u) / (u @ u)
    return P[:, 1:]


def principal_curvatures(jet, scale=None, basis=None):
    """Ascending principal curvatures at one point.

    Parameters
    ----------
    jet : PointJet or (gradient, hessian) pair
    scale : float, optional
        Typical gradient magnitude; gradients below ``1e-12 * scale`` raise
        :class:`DegenerateGradient`.
    basis : ndarray (n, n-1), optional
        Any orthonormal null-space basis; the result does not depend on it.
    """
    g, H = (jet.gradient, jet.hessian) if hasattr(jet, "gradient") else jet
    g = np.asarray(g, dtype=float).ravel()
    H = np.asarray(H, dtype=float)
    N = nullspace_basis(g, scale) if basis is None else np.asarray(basis, dtype=float)
    M = -(N.T @ H @ N) / np.linalg.norm(g)
    return np.linalg.eigvalsh(0.5 * (M + M.T))


def curvatures_of(batch, scale=None, backend=None):
    """Curvatures for every jet in a batch.

    Returns
    -------
    kappas : ndarray (M, n-1)
        Rows for the jets that passed the gradient guard, in order.
    skipped : int
        Jets dropped for a degenerate gradient.
    """
    G = np.asarray(batch.gradients, dtype=float)
    H = np.asarray(batch.hessians, dtype=float)
    ok = np.sqrt(np.einsum("ij,ij->i", G, G)) > _threshold(scale)
    skipped = int(ok.size - np.count_nonzero(ok))
    if skipped:
        G, H = G[ok], H[ok]
    return _kernels.curvatures(G, H, backend), skipped
