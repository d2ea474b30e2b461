"""Statistical checks tying the samplers to the closed forms, and the JSON report.

Each check draws from its own Philox stream ``(seed, stream=k)``, so the
report is deterministic for a fixed seed.  Timings are the only
non-deterministic field and can be left out of the serialised form.
"""
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from importlib import resources

import numpy as np
from scipy import stats

from . import covariance, density, ensemble, fieldgrid, matops
from ._backend import resolve_threads
from .corrmodel import CorrelationModel, constants

KS_COEFF = 1.63  # asymptotic two-sided KS critical value at alpha ~ 0.01
SE_LIMIT = 5.0


# --------------------------------------------------------------------------
# statistics


def ks_statistic(samples, cdf):
    """Sup distance between the empirical CDF of sorted ``samples`` and ``cdf``.

    Ties are fine: the two one-sided gaps at each sorted position bracket
    the empirical step correctly.
    """
    x = np.asarray(samples, dtype=float).ravel()
    N = x.size
    if N < 10:
        raise ValueError("need at least 10 samples")
    if np.any(np.diff(x) < 0):
        raise ValueError("samples must be sorted ascending")
    F = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, N + 1)
    return float(max(np.max(i / N - F), np.max(F - (i - 1) / N)))


def empirical_cov_check(batch, bundle):
    """Worst deviation, in standard errors, of the empirical jet covariance.

    The target is ``blockdiag(grad_cov, Sigma_n)`` over ``(g, vech H)``, zero
    cross block included.  Means are known to be zero, so second moments
    are compared directly; the SE of entry (i, j) is
    ``sqrt((T_ii T_jj + T_ij^2) / N)`` for Gaussian data.
    """
    X = np.hstack([batch.gradients, batch.vech])
    N = X.shape[0]
    if N < 10_000:
        raise ValueError("need at least 1e4 jets")
    n = bundle.n
    p = bundle.sigma_n.shape[0]
    T = np.zeros((n + p, n + p))
    T[:n, :n] = bundle.grad_cov
    T[n:, n:] = bundle.sigma_n
    S = X.T @ X / N
    d = np.diag(T)
    se = np.sqrt((np.outer(d, d) + T * T) / N)
    return float(np.max(np.abs(S - T) / se))


def moore_penrose_residual(A, P):
    """Largest entry among the four Moore-Penrose residuals of ``P`` as the pinv of ``A``."""
    return float(max(
        np.max(np.abs(A @ P @ A - A)),
        np.max(np.abs(P @ A @ P - P)),
        np.max(np.abs((A @ P).T - A @ P)),
        np.max(np.abs((P @ A).T - P @ A)),
    ))


def random_rotation(rng, n):
    """Haar-distributed element of SO(n) from the QR of a Gaussian matrix."""
    Q, R = np.linalg.qr(rng.standard_normal((n, n)))
    Q = Q * np.sign(np.diag(R))
    if np.linalg.det(Q) < 0:
        Q[:, 0] = -Q[:, 0]
    return Q


# --------------------------------------------------------------------------
# report


@dataclass
class CheckResult:
    name: str
    anchor: str
    statistic: float
    threshold: float
    passed: bool
    sample_size: int
    seed: int
    runtime_s: float = 0.0
    budget_s: float = 0.0
    details: dict = field(default_factory=dict)


@dataclass
class ValidationReport:
    profile: str
    seed: int
    checks: list

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def to_dict(self, timings=True):
        checks = []
        for c in self.checks:
            d = asdict(c)
            if not timings:
                d.pop("runtime_s")
            for key in ("statistic", "threshold"):
                if math.isnan(d[key]):
                    d[key] = None
            checks.append(d)
        return {"profile": self.profile, "seed": self.seed, "passed": self.passed, "checks": checks}

    def to_json(self, timings=True):
        return json.dumps(self.to_dict(timings), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d):
        checks = []
        for c in d["checks"]:
            c = dict(c)
            for key in ("statistic", "threshold"):
                if c[key] is None:
                    c[key] = math.nan
            checks.append(CheckResult(**c))
        return cls(d["profile"], d["seed"], checks)


def report_schema():
    return json.loads(resources.files("curvgrf.schemas").joinpath("report.schema.json").read_text())


def validate_report_json(d):
    """Raise ``jsonschema.ValidationError`` if ``d`` does not match the report schema."""
    import jsonschema

    jsonschema.validate(d, report_schema())


# --------------------------------------------------------------------------
# individual checks; each returns a list of CheckResult without timing


@dataclass(frozen=True)
class ValidationConfig:
    profile: str = "fast"
    seed: int = 42
    threads: int = None
    model: CorrelationModel = field(default_factory=CorrelationModel)
    fail_fast: bool = False

    def __post_init__(self):
        if self.profile not in ("fast", "full"):
            raise ValueError(f"unknown profile {self.profile!r}")


def _res(name, anchor, stat, thr, passed, size, seed, **details):
    return CheckResult(name, anchor, float(stat), float(thr), bool(passed), int(size), int(seed),
                       details={k: _plain(v) for k, v in details.items()})


def _plain(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    return v


def check_operator_identity(cfg):
    worst = 0.0
    for n in range(1, 7):
        lhs = matops.duplication_matrix(n) @ matops.dup_pinv(n)
        rhs = 0.5 * (np.eye(n * n) + matops.commutation_matrix(n))
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return [_res("c01_operator_identity", "duplication/commutation identity D D+ = (I + C)/2",
                 worst, 1e-14, worst <= 1e-14, 6, cfg.seed)]


def check_jet_covariance(cfg):
    out = []
    model = replace(cfg.model, lengthscale=1.0)
    consts = constants(model)
    for k, n in enumerate((2, 3)):
        sc = ensemble.SamplerConfig(n=n, model=model, seed=cfg.seed, count=100_000, stream=20 + k)
        batch = ensemble.sample_jets(sc, threads=cfg.threads)
        bundle = covariance.build_bundle(n, consts)
        dev = empirical_cov_check(batch, bundle)
        out.append(_res(f"c02_jet_covariance_n{n}", "zero-lag gradient/Hessian covariance",
                        dev, SE_LIMIT, dev < SE_LIMIT, sc.count, cfg.seed))
        if n == 2:
            # negative control: leak 20% of g_1 into H_11 (~20 SE at N=1e5)
            bad = ensemble.JetBatch(batch.gradients, batch.hessians.copy())
            bad.hessians[:, 0, 0] += 0.2 * batch.gradients[:, 0]
            dev_bad = empirical_cov_check(bad, bundle)
            out.append(_res("c02_negative_control_cross", "gradient/Hessian independence has power",
                            dev_bad, 10.0, dev_bad > 10.0, sc.count, cfg.seed))
    return out


def check_pinv_det(cfg):
    consts = constants(cfg.model)
    mp = 0.0
    det_err = 0.0
    for n in range(1, 6):
        b = covariance.build_bundle(n, consts)
        mp = max(mp, moore_penrose_residual(b.hess_cov, covariance.hess_cov_pinv(b)))
        det_err = max(det_err, abs(np.linalg.det(b.sigma_n) - b.sigma_det) / b.sigma_det)
    return [
        _res("c03_hessian_pinv", "closed-form pseudoinverse of the Hessian covariance",
             mp, 1e-12, mp <= 1e-12, 5, cfg.seed),
        _res("c03_sigma_det", "determinant of the vech Hessian covariance",
             det_err, 1e-9, det_err <= 1e-9, 5, cfg.seed),
    ]


def check_quadratic_reduction(cfg):
    consts = constants(cfg.model)
    rng = np.random.default_rng([cfg.seed, 4])
    worst = 0.0
    trials = 0
    for n in (2, 3, 4):
        b = covariance.build_bundle(n, consts)
        for _ in range(100):
            lhs, rhs = covariance.quadratic_form_reduction(
                b, random_rotation(rng, n), rng.standard_normal(n) * 3.0)
            worst = max(worst, abs(lhs - rhs) / (1.0 + abs(rhs)))
            trials += 1
    return [_res("c04_quadratic_reduction", "vech quadratic form reduces to eigenvalues",
                 worst, 1e-9, worst <= 1e-9, trials, cfg.seed)]


def check_eig_normalization(cfg):
    consts = constants(cfg.model)
    spec = density.DensitySpec(2, consts)
    c = consts.hess_scale
    mass = density.total_mass_2d(lambda a, b: density.eig_pdf(spec, np.array([a, b])), lo=-20.0 * math.sqrt(c), hi=20.0 * math.sqrt(c))
    err2 = abs(mass - 1.0)
    lam = np.linspace(-15.0, 15.0, 301)
    p1 = density.eig_pdf(spec, lam[:, None])
    ref = stats.norm(scale=math.sqrt(3.0 * c)).pdf(lam)
    err1 = float(np.max(np.abs(p1 - ref) / ref))
    return [
        _res("c05_eig_normalization_m2", "eigenvalue density integrates to one",
             err2, 1e-6, err2 <= 1e-6, 1, cfg.seed, mass=mass),
        _res("c05_eig_m1_normal", "one-dimensional eigenvalue density is N(0, 3 c)",
             err1, 1e-12, err1 <= 1e-12, lam.size, cfg.seed),
    ]


def reduced_n2_pdf(alpha, kappa):
    """Hand-reduced ``n = 2`` curvature density."""
    k = np.asarray(kappa, dtype=float)
    return math.sqrt(alpha / 6.0) * (1.0 + (2.0 * alpha / 3.0) * k * k) ** -1.5


def check_curvature_normalization(cfg):
    consts = constants(cfg.model)
    s2 = density.DensitySpec(2, consts)
    s3 = density.DensitySpec(3, consts)
    m2 = density.total_mass_1d(lambda k: density.curvature_pdf(s2, k))
    m3 = density.total_mass_2d(lambda a, b: density.curvature_pdf(s3, np.array([a, b])))
    k = np.linspace(-50.0, 50.0, 2001)
    ref = reduced_n2_pdf(consts.alpha, k)
    pw = float(np.max(np.abs(density.curvature_pdf(s2, k) - ref) / ref))
    e2, e3 = abs(m2 - 1.0), abs(m3 - 1.0)
    return [
        _res("c06_curvature_mass_n2", "curvature density integrates to one (n=2)",
             e2, 1e-8, e2 <= 1e-8, 1, cfg.seed, mass=m2),
        _res("c06_curvature_mass_n3", "curvature density integrates to one (n=3)",
             e3, 1e-6, e3 <= 1e-6, 1, cfg.seed, mass=m3),
        _res("c06_curvature_n2_reduced", "n=2 curvature density equals its reduced form",
             pw, 1e-12, pw <= 1e-12, k.size, cfg.seed),
    ]


def ratio_grid(n):
    """The 100-point curvature grids used for the ratio-integral comparison."""
    if n == 2:
        return np.linspace(-5.0, 5.0, 100)[:, None]
    g = np.linspace(-2.0, 2.0, 10)
    a, b = np.meshgrid(g, g, indexing="ij")
    return np.column_stack([a.ravel(), b.ravel()])


def ratio_error(a, b):
    """Relative error with an absolute floor: ``|a - b| / (|b| + 1e-3)``."""
    return np.abs(a - b) / (np.abs(b) + 1e-3)


def check_ratio_oracle(cfg):
    consts = constants(cfg.model)
    out = []
    for n in (2, 3):
        spec = density.DensitySpec(n, consts)
        pts = ratio_grid(n)
        closed = density.curvature_pdf(spec, pts)
        numeric = np.array([density.ratio_integral_pdf(spec, k) for k in pts])
        err = float(np.max(ratio_error(numeric, closed)))
        out.append(_res(f"c07_ratio_oracle_n{n}", "closed form equals the gradient-norm ratio integral",
                        err, 1e-6, err <= 1e-6, len(pts), cfg.seed))
    return out


def check_point_ensemble(cfg):
    model = replace(cfg.model, lengthscale=1.0)
    consts = constants(model)
    N = 1_000_000
    sc = ensemble.SamplerConfig(n=2, model=model, seed=cfg.seed, count=N, stream=80)
    k = np.sort(ensemble.sample_curvatures(sc, threads=cfg.threads)[:, 0])
    thr = 2.0 * KS_COEFF / math.sqrt(N)
    spec = density.DensitySpec(2, consts)
    d = ks_statistic(k, lambda x: density.curvature_cdf_1d(spec, x))
    bad = density.DensitySpec(2, replace(consts, alpha=1.2 * consts.alpha))
    d_bad = ks_statistic(k, lambda x: density.curvature_cdf_1d(bad, x))
    return [
        _res("c08_point_ensemble_ks", "sampled curvatures follow the closed-form law",
             d, thr, d < thr, k.size, cfg.seed, alpha=consts.alpha),
        _res("c08_negative_control_alpha", "KS rejects the law with alpha scaled by 1.2",
             d_bad, thr, d_bad >= thr, k.size, cfg.seed, alpha=1.2 * consts.alpha),
    ]


def check_sigma_invariance(cfg):
    out = []
    worst = 0.0
    for n in (2, 3):
        pts = ratio_grid(n)
        vals = [density.curvature_pdf(density.DensitySpec(n, constants(replace(cfg.model, variance=v))), pts)
                for v in (0.1, 1.0, 10.0)]
        worst = max(worst, float(max(np.max(np.abs(v - vals[1])) for v in vals)))
    out.append(_res("c09_sigma_invariance_pdf", "curvature density is independent of the variance",
                    worst, 1e-12, worst <= 1e-12, 200, cfg.seed))
    N = 100_000
    draws = [
        ensemble.sample_curvatures(
            ensemble.SamplerConfig(n=2, model=replace(cfg.model, variance=v), seed=cfg.seed,
                                   count=N, stream=90 + i), threads=cfg.threads)[:, 0]
        for i, v in enumerate((0.1, 10.0))
    ]
    d = float(stats.ks_2samp(draws[0], draws[1]).statistic)
    thr = KS_COEFF * math.sqrt(2.0 / N)
    out.append(_res("c09_sigma_invariance_samples", "sampled curvature law is independent of the variance",
                    d, thr, d < thr, N, cfg.seed))
    return out


def check_grid(cfg, reals=20, coarse=(256, 0.125), fine=(512, 0.0625)):
    model = replace(cfg.model, kind="gaussian", lengthscale=1.0)
    spec = density.DensitySpec(2, constants(model))
    ks = []
    sizes = []
    for shape, h in (coarse, fine):
        k, skipped = fieldgrid.grid_curvatures(model, shape, h, reals, cfg.seed, threads=cfg.threads)
        k = np.sort(k[:, 0])
        ks.append(ks_statistic(k, lambda x: density.curvature_cdf_1d(spec, x)))
        sizes.append(k.size)
    return [
        _res("c10_grid_ks", "curvatures of synthesized fields follow the closed-form law",
             ks[0], 0.05, ks[0] < 0.05, sizes[0], cfg.seed, spacing=coarse[1], alpha=spec.alpha),
        _res("c10_grid_refinement", "halving the grid spacing lowers the KS distance",
             ks[1], ks[0], ks[1] < ks[0], sizes[1], cfg.seed, spacing=fine[1]),
    ]


# (group function, runtime ceiling in seconds, profiles)
CHECKS = [
    (check_operator_identity, 1.0, ("fast", "full")),
    (check_jet_covariance, 30.0, ("fast", "full")),
    (check_pinv_det, 1.0, ("fast", "full")),
    (check_quadratic_reduction, 5.0, ("fast", "full")),
    (check_eig_normalization, 10.0, ("fast", "full")),
    (check_curvature_normalization, 30.0, ("fast", "full")),
    (check_ratio_oracle, 60.0, ("fast", "full")),
    (check_point_ensemble, 120.0, ("fast", "full")),
    (check_sigma_invariance, 30.0, ("fast", "full")),
    (check_grid, 600.0, ("full",)),
]


def run_check(fn, budget, cfg):
    """Run one check group, stamping runtime and budget; exceptions become failures."""
    t0 = time.perf_counter()
    try:
        results = fn(cfg)
    except Exception as exc:  # noqa: BLE001 - any crash is a failed check
        results = [_res(fn.__name__, "harness", math.nan, math.nan, False, 0, cfg.seed,
                        error=f"{type(exc).__name__}: {exc}")]
    elapsed = time.perf_counter() - t0
    for r in results:
        r.runtime_s = elapsed
        r.budget_s = budget
        r.details["within_budget"] = elapsed <= budget
        r.passed = r.passed and elapsed <= budget
    return results


def run_full_validation(config=None):
    """Run every check of the profile; results ordered by check name."""
    cfg = config or ValidationConfig()
    todo = [(fn, b) for fn, b, profiles in CHECKS if cfg.profile in profiles]
    results = []
    if cfg.fail_fast:
        for fn, b in todo:
            res = run_check(fn, b, cfg)
            results.extend(res)
            if not all(r.passed for r in res):
                break
    else:
        workers = min(resolve_threads(cfg.threads), len(todo))
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for res in pool.map(lambda t: run_check(t[0], t[1], cfg), todo):
                results.extend(res)
    results.sort(key=lambda r: r.name)
    return ValidationReport(cfg.profile, cfg.seed, results)
