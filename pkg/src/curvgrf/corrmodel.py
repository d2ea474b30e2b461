"""Radial correlation families and the derivative constants the curvature law depends on.

Every model is handled through ``r(t) = sigma2 * rho(sqrt(t))``, a function of
the squared distance ``t``.  Expanding ``rho(s) = r(s**2) / sigma2`` around
zero gives the bridge used by :func:`constants`::

    rho''(0)   =  2 r'(0)  / sigma2
    rho''''(0) = 12 r''(0) / sigma2
"""
import math
from dataclasses import dataclass

import numpy as np

KINDS = ("gaussian", "rational_quadratic")


@dataclass(frozen=True)
class CorrelationModel:
    """Isotropic correlation ``rho`` with variance ``sigma2``.

    ``shape`` is the rational-quadratic exponent and is ignored by the
    Gaussian model.
    """

    kind: str = "gaussian"
    lengthscale: float = 1.0
    variance: float = 1.0
    shape: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown correlation kind {self.kind!r}; expected one of {KINDS}")
        for name in ("lengthscale", "variance", "shape"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be positive and finite, got {value!r}")


@dataclass(frozen=True)
class DerivedConstants:
    """Second and fourth radial derivatives of rho at zero, and their ratio alpha."""

    rho2_0: float
    rho4_0: float
    alpha: float
    sigma2: float

    @property
    def grad_var(self):
        """Variance of each gradient component, ``-sigma2 * rho2_0``."""
        return -self.sigma2 * self.rho2_0

    @property
    def hess_scale(self):
        """``sigma2 * rho4_0``, the scale of the Hessian covariance."""
        return self.sigma2 * self.rho4_0


def rho(model, s):
    """Correlation at distance ``s`` (scalar or array, non-negative)."""
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise ValueError("distance must be non-negative")
    ell = model.lengthscale
    if model.kind == "gaussian":
        out = np.exp(-(s * s) / (2.0 * ell * ell))
    else:
        a = model.shape
        out = (1.0 + (s * s) / (2.0 * a * ell * ell)) ** (-a)
    return out if out.ndim else float(out)


def r_deriv(model, i, t):
    """i-th derivative of ``r(t) = sigma2 * rho(sqrt(t))`` at squared distance ``t``."""
    if int(i) != i or not 0 <= i <= 4:
        raise ValueError(f"unsupported derivative order {i!r}; need 0..4")
    i = int(i)
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("squared distance must be non-negative")
    ell2 = model.lengthscale ** 2
    if model.kind == "gaussian":
        out = model.variance * (-0.5 / ell2) ** i * np.exp(-t / (2.0 * ell2))
    else:
        a = model.shape
        b = 1.0 / (2.0 * a * ell2)
        # falling factorial (-a)(-a-1)...(-a-i+1)
        coeff = math.prod(-a - k for k in range(i))
        out = model.variance * coeff * b**i * (1.0 + b * t) ** (-a - i)
    return out if out.ndim else float(out)


def radial_operator_check(model, i, u, step=None, richardson=True):
    """Finite-difference value of ``r^(i)(u**2) / sigma2`` built from ``rho`` alone.

    Applies ``(1 / (2u)) d/du`` -- which is ``d/dt`` written in ``u = sqrt(t)`` --
    ``i`` times to ``rho`` with nested central differences.  Used as an oracle
    for :func:`r_deriv`; it never touches the analytic derivatives.

    Parameters
    ----------
    model : CorrelationModel
    i : {1, 2}
        Number of operator applications.
    u : float
        Radius, strictly positive.
    step : float, optional
        Base step; defaults to ``max(1e-4, 1e-4 * u)``.
    richardson : bool
        Combine steps ``h`` and ``h/2`` to cancel the leading O(h**2) error.
    """
    if i not in (1, 2):
        raise ValueError("radial operator order must be 1 or 2")
    if not u > 0:
        raise ValueError("radius must be strictly positive")
    h = max(1e-4, 1e-4 * u) if step is None else float(step)
    # nested differences probe down to u - i*h
    if not h > 0 or u - i * h <= 0 or u + i * h == u:
        raise ValueError(f"step {h!r} underflows or crosses zero at radius {u!r}")

    def f(x):
        return rho(model, x)

    def op(g, hh):
        return lambda x: (g(x + hh) - g(x - hh)) / (2.0 * hh) / (2.0 * x)

    def apply(hh):
        g = f
        for _ in range(i):
            g = op(g, hh)
        return g(u)

    if not richardson:
        return apply(h)
    return (4.0 * apply(h / 2.0) - apply(h)) / 3.0


def constants(model):
    """Derive ``rho2_0``, ``rho4_0`` and ``alpha = -rho2_0 / (2 rho4_0)`` for a model."""
    s2 = model.variance
    rho2 = 2.0 * r_deriv(model, 1, 0.0) / s2
    rho4 = 12.0 * r_deriv(model, 2, 0.0) / s2
    if not (rho2 < 0 and rho4 > 0):
        raise ValueError(
            f"degenerate model: need rho2_0 < 0 and rho4_0 > 0, got {rho2!r}, {rho4!r}"
        )
    return DerivedConstants(rho2_0=rho2, rho4_0=rho4, alpha=-rho2 / (2.0 * rho4), sigma2=s2)
