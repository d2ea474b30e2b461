import math

import numpy as np
import pytest
from scipy import stats
from scipy.special import gammaln

from curvgrf import density as dn
from curvgrf.corrmodel import CorrelationModel, DerivedConstants, constants
from curvgrf.validate import reduced_n2_pdf

UNIT = DerivedConstants(rho2_0=-1.0, rho4_0=1.0, alpha=0.5, sigma2=1.0)
GAUSS = constants(CorrelationModel())


def spec(n, consts=GAUSS):
    return dn.DensitySpec(n, consts)


def test_gamma_half_integers():
    sqrt_pi = math.sqrt(math.pi)
    exact = {0.5: sqrt_pi, 1.5: sqrt_pi / 2, 2.5: 3 * sqrt_pi / 4, 3.5: 15 * sqrt_pi / 8, 4.5: 105 * sqrt_pi / 16}
    for x, v in exact.items():
        assert math.exp(gammaln(x)) == pytest.approx(v, rel=1e-14)


def test_eig_pdf_m1_is_normal():
    s = spec(1, UNIT)
    assert dn.eig_pdf(s, 0.0) == pytest.approx(1 / math.sqrt(6 * math.pi), rel=1e-14)
    x = np.linspace(-6, 6, 41)[:, None]
    np.testing.assert_allclose(dn.eig_pdf(s, x), stats.norm.pdf(x[:, 0], scale=math.sqrt(3)), rtol=1e-13)


def test_eig_pdf_m1_general_scale():
    c = GAUSS.hess_scale
    x = np.linspace(-10, 10, 11)[:, None]
    np.testing.assert_allclose(dn.eig_pdf(spec(1), x), stats.norm.pdf(x[:, 0], scale=math.sqrt(3 * c)), rtol=1e-13)


def test_eig_pdf_m2_normalised():
    s = spec(2, UNIT)
    mass = dn.total_mass_2d(lambda x, y: dn.eig_pdf(s, np.array([x, y])), lo=-20.0, hi=20.0)
    assert abs(mass - 1) < 1e-6


def test_eig_pdf_symmetric_and_vanishes_on_ties(rng):
    lam = rng.standard_normal(3)
    s = spec(3)
    assert dn.eig_pdf(s, lam) == pytest.approx(dn.eig_pdf(s, lam[::-1]), rel=1e-14)
    assert dn.eig_pdf(s, np.array([0.4, 0.4, 1.0])) == 0.0


def test_eig_pdf_no_overflow_n8(rng):
    v = dn.eig_pdf(spec(8), rng.standard_normal(8))
    assert np.isfinite(v) and v >= 0


def test_gradnorm_pdf():
    s = dn.DensitySpec(1, UNIT)
    assert dn.gradnorm_pdf(s, 0.0) == pytest.approx(math.sqrt(2 / math.pi), rel=1e-14)
    u = np.linspace(0, 5, 21)
    for n in (1, 2, 3, 5):
        np.testing.assert_allclose(dn.gradnorm_pdf(spec(n, UNIT), u), stats.chi.pdf(u, n), rtol=1e-12, atol=1e-300)
    with pytest.raises(ValueError):
        dn.gradnorm_pdf(s, -1.0)


def test_gradnorm_mass():
    for n in (2, 3, 4):
        assert dn.total_mass_1d(lambda u: dn.gradnorm_pdf(spec(n), abs(u)) / 2) == pytest.approx(1, abs=1e-10)


def test_curvature_pdf_n2_reduced_form():
    s = spec(2)
    assert s.alpha == pytest.approx(1 / 6, rel=1e-15)
    assert dn.curvature_pdf(s, 0.0) == pytest.approx(1 / 6, rel=1e-14)
    k = np.linspace(-50, 50, 1001)
    np.testing.assert_allclose(dn.curvature_pdf(s, k), reduced_n2_pdf(s.alpha, k), rtol=1e-12)


def test_curvature_pdf_shape_errors():
    with pytest.raises(ValueError):
        dn.curvature_pdf(spec(3), np.zeros(3))
    with pytest.raises(ValueError):
        dn.curvature_pdf(spec(1), 0.0)


def test_curvature_mass_n2():
    s = spec(2)
    assert abs(dn.total_mass_1d(lambda k: dn.curvature_pdf(s, k)) - 1) < 1e-8


@pytest.mark.parametrize("ell", [0.5, 1.0, 2.0])
def test_curvature_mass_n3(ell):
    s = dn.DensitySpec.from_model(3, CorrelationModel("gaussian", ell))
    assert abs(dn.total_mass_2d(lambda x, y: dn.curvature_pdf(s, np.array([x, y]))) - 1) < 1e-6


def test_ratio_integral_examples():
    assert dn.ratio_integral_pdf(spec(2), [0.0]) == pytest.approx(1 / 6, abs=1e-7)
    k = np.array([0.3, -0.2])
    a, b = dn.ratio_integral_pdf(spec(3), k), dn.curvature_pdf(spec(3), k)
    assert abs(a - b) < 1e-6
    tail = dn.ratio_integral_pdf(spec(2), [5.0])
    assert tail == pytest.approx(dn.curvature_pdf(spec(2), 5.0), rel=1e-4)


@pytest.mark.parametrize("n", [3, 4])
def test_ratio_integral_matches_closed_form(n, rng):
    s = spec(n)
    for _ in range(5):
        k = rng.uniform(-2, 2, n - 1)
        assert dn.ratio_integral_pdf(s, k) == pytest.approx(dn.curvature_pdf(s, k), rel=1e-8)


def test_ratio_integral_rejects_wrong_length():
    with pytest.raises(ValueError):
        dn.ratio_integral_pdf(spec(3), [0.1])


def test_quadrature_error_is_reported():
    with pytest.raises(dn.QuadratureError) as exc:
        dn._quad(lambda x: 1 / math.sqrt(abs(x - 0.3)) if x != 0.3 else 0.0, 0, 1, 1e-15, 1e-15, limit=3)
    assert exc.value.abserr > 0


def test_cdf_examples():
    s = spec(2)
    assert dn.curvature_cdf_1d(s, 0.0) == 0.5
    assert abs(dn.curvature_cdf_1d(s, 1e12) - 1) < 1e-9
    assert dn.curvature_cdf_1d(s, math.inf) == 1.0
    assert dn.curvature_cdf_1d(s, -math.inf) == 0.0
    with pytest.raises(ValueError):
        dn.curvature_cdf_1d(spec(3), 0.0)


def test_cdf_matches_quadrature_of_pdf():
    s = spec(2)
    for k in (-7.0, -1.0, 0.3, 2.0, 40.0):
        mass, _ = dn._quad(lambda t: dn.curvature_pdf(s, t), -np.inf, k, 1e-13, 1e-12)
        assert dn.curvature_cdf_1d(s, k) == pytest.approx(mass, abs=1e-10)


@pytest.mark.parametrize("n", [2, 3])
@pytest.mark.parametrize("c", [0.5, 3.0])
def test_lengthscale_scaling(n, c, rng):
    base = spec(n, constants(CorrelationModel("gaussian", 1.3)))
    scaled = spec(n, constants(CorrelationModel("gaussian", 1.3 * c)))
    k = rng.standard_normal((20, n - 1)) if n > 2 else rng.standard_normal(20)
    np.testing.assert_allclose(dn.curvature_pdf(scaled, k) * c ** -(n - 1), dn.curvature_pdf(base, c * k), rtol=1e-12)


def test_variance_invariance():
    k = np.linspace(-5, 5, 101)
    ref = dn.curvature_pdf(dn.DensitySpec.from_model(2, CorrelationModel(variance=1.0)), k)
    for v in (0.1, 10.0):
        other = dn.curvature_pdf(dn.DensitySpec.from_model(2, CorrelationModel(variance=v)), k)
        np.testing.assert_allclose(other, ref, rtol=1e-12, atol=0)


def test_rational_quadratic_alpha():
    m = CorrelationModel("rational_quadratic", 1.5, 1.0, 2.0)
    s = dn.DensitySpec.from_model(2, m)
    assert s.alpha == pytest.approx(2.0 * 1.5**2 / (6 * 3.0), rel=1e-13)
    assert abs(dn.total_mass_1d(lambda k: dn.curvature_pdf(s, k)) - 1) < 1e-8
