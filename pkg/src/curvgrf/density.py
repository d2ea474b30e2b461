"""Closed-form densities of Hessian eigenvalues, gradient norms and curvatures.

All normalising constants are assembled in log space so that moderate
dimensions (n up to 8) neither overflow nor underflow.  Densities are over
unordered vectors: sorted samples carry an extra ``m!``.
"""
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import gammaln, xlogy

from .corrmodel import constants
from .covariance import eig_quadratic_form

LN2 = math.log(2.0)


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not reach its tolerance."""

    def __init__(self, message, abserr):
        super().__init__(f"{message} (error estimate {abserr:.3g})")
        self.abserr = abserr


@dataclass(frozen=True)
class DensitySpec:
    n: int
    consts: object

    @classmethod
    def from_model(cls, n, model):
        return cls(n, constants(model))

    @property
    def alpha(self):
        return self.consts.alpha


def _log_vandermonde(x):
    m = x.shape[-1]
    out = np.zeros(x.shape[:-1])
    with np.errstate(divide="ignore"):
        for i in range(m):
            for j in range(i + 1, m):
                out = out + np.log(np.abs(x[..., j] - x[..., i]))
    return out


def eig_log_const(m, hess_scale):
    """Log of the eigenvalue-density prefactor in dimension ``m``."""
    return ((2 - 7 * m - m * m) / 4.0 * LN2
            - 0.5 * math.log(2 + m)
            - m * (m + 1) / 4.0 * math.log(hess_scale)
            - sum(gammaln(1 + i / 2.0) for i in range(1, m + 1)))


def eig_pdf(spec, lam):
    """Joint density of the ``m`` Hessian eigenvalues, ``m = lam.shape[-1]``.

    ``m = spec.n`` for the full Hessian; the curvature law uses ``m = n - 1``
    for the Hessian restricted to the tangent space.
    """
    lam = np.asarray(lam, dtype=float)
    if lam.ndim == 0:
        lam = lam[None]
    m = lam.shape[-1]
    c = spec.consts.hess_scale
    log_p = eig_log_const(m, c) + _log_vandermonde(lam) - 0.5 * eig_quadratic_form(lam, c)
    out = np.exp(log_p)
    return out if out.ndim else float(out)


def gradnorm_pdf(spec, u):
    """Density of ``|grad F|``: a chi law with ``n`` degrees of freedom, scale ``sqrt(-sigma2 rho2_0)``."""
    u = np.asarray(u, dtype=float)
    if np.any(u < 0):
        raise ValueError("gradient norm must be non-negative")
    n = spec.n
    s2r2 = spec.consts.sigma2 * spec.consts.rho2_0  # negative
    log_p = (LN2 + xlogy(n - 1, u) + u * u / (2.0 * s2r2)
             - n / 2.0 * math.log(-2.0 * s2r2) - gammaln(n / 2.0))
    out = np.exp(log_p)
    return out if out.ndim else float(out)


def curvature_log_const(n, alpha):
    return ((n * n - 7 * n + 8) / 4.0 * LN2
            + gammaln(n * (n + 1) / 4.0)
            - 0.5 * math.log(1 + n)
            - gammaln(n / 2.0)
            - sum(gammaln(1 + i / 2.0) for i in range(1, n))
            + n * (n - 1) / 4.0 * math.log(alpha))


def curvature_pdf(spec, kappa):
    """Joint density of the ``n - 1`` principal curvatures; ``kappa`` is (..., n-1).

    For ``n = 2`` a scalar or 1-D array of single curvatures is accepted.
    Depends on the model only through ``alpha``.
    """
    n = spec.n
    if n < 2:
        raise ValueError("curvatures need ambient dimension >= 2")
    k = np.asarray(kappa, dtype=float)
    if n == 2 and (k.ndim == 0 or k.shape[-1] != 1):
        k = k[..., None]
    if k.shape[-1] != n - 1:
        raise ValueError(f"expected {n - 1} curvatures per point, got shape {k.shape}")
    a = spec.alpha
    s = k.sum(axis=-1)
    q = np.einsum("...i,...i->...", k, k) - s * s / (n + 1)
    log_p = (curvature_log_const(n, a) + _log_vandermonde(k)
             - (n * n + n) / 4.0 * np.log1p(a * q))
    out = np.exp(log_p)
    return out if out.ndim else float(out)


def _quad(f, a, b, epsabs, epsrel, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        res = integrate.quad(f, a, b, epsabs=epsabs, epsrel=epsrel, full_output=1, **kw)
    if len(res) > 3:
        raise QuadratureError(res[3].splitlines()[0], res[1])
    return res[0], res[1]


def ratio_integral_pdf(spec, kappa, epsrel=1e-11, epsabs=1e-14):
    """Curvature density by direct integration over the gradient norm.

    ``p(kappa) = int_0^inf u^(n-1) p_eig(kappa u) p_norm(u) du`` with the
    ``(n-1)``-dimensional eigenvalue density.  Independent of
    :func:`curvature_pdf`; the two must agree.
    """
    n = spec.n
    k = np.atleast_1d(np.asarray(kappa, dtype=float))
    if k.shape != (n - 1,):
        raise ValueError(f"expected {n - 1} curvatures, got shape {k.shape}")
    sd = math.sqrt(spec.consts.grad_var)

    def f(u):
        return u ** (n - 1) * eig_pdf(spec, k * u) * gradnorm_pdf(spec, u)

    # chi density is below exp(-450) past 30 scale units
    val, _ = _quad(f, 0.0, 30.0 * sd, epsabs, epsrel, points=[sd], limit=400)
    return val


def curvature_cdf_1d(spec, kappa):
    """CDF of the single curvature for ``n = 2``.

    The ``n = 2`` density is ``sqrt(alpha/6) (1 + (2 alpha/3) k^2)^(-3/2)``;
    with ``y = k sqrt(2 alpha / 3)`` its integral is ``(1 + y / sqrt(1 + y^2)) / 2``.
    """
    if spec.n != 2:
        raise ValueError("closed-form CDF exists for n = 2 only")
    k = np.asarray(kappa, dtype=float)
    y = k * math.sqrt(2.0 * spec.alpha / 3.0)
    with np.errstate(invalid="ignore"):
        t = np.where(np.isinf(y), np.sign(y), y / np.hypot(1.0, y))
    out = 0.5 * (1.0 + t)
    return out if out.ndim else float(out)


def total_mass_1d(f, epsrel=1e-12, epsabs=1e-13):
    """Integral of ``f`` over the real line after ``x = tan(theta)``."""

    def g(th):
        c = math.cos(th)
        return f(math.tan(th)) / (c * c)

    h = 0.5 * math.pi
    return _quad(g, -h, h, epsabs, epsrel, limit=400)[0]


def total_mass_2d(f, epsrel=1e-10, epsabs=1e-12, lo=None, hi=None):
    """Iterated integral of ``f(x, y)`` over R^2 (or a box) with the inner line split at ``y = x``.

    Without bounds both axes are mapped by ``tan``; the split keeps the
    Vandermonde kink on a panel edge.
    """
    if lo is None:
        h = 0.5 * math.pi

        def inner(t1):
            c1 = math.cos(t1)
            x = math.tan(t1)

            def g(t2):
                c2 = math.cos(t2)
                return f(x, math.tan(t2)) / (c1 * c1 * c2 * c2)

            return (_quad(g, -h, t1, epsabs, epsrel, limit=400)[0]
                    + _quad(g, t1, h, epsabs, epsrel, limit=400)[0])

        return _quad(inner, -h, h, epsabs, epsrel, limit=400)[0]

    def inner_box(x):
        parts = [(lo, x), (x, hi)] if lo < x < hi else [(lo, hi)]
        return sum(_quad(lambda y: f(x, y), a, b, epsabs, epsrel, limit=400)[0] for a, b in parts)

    return _quad(inner_box, lo, hi, epsabs, epsrel, limit=400)[0]
