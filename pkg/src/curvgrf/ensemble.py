"""Monte Carlo jets (gradient, Hessian) drawn straight from the zero-lag covariances.

Random numbers
--------------
Draws come from numpy's Philox-4x64 counter-based generator keyed by the
seed.  Sample ``i`` of stream ``k`` owns counter blocks
``[i*B + 1, (i+1)*B]`` in the low counter word, with ``k`` in the second
word, where ``B`` is the number of 4-word blocks one sample needs.  Words
are turned into normals with the Box-Muller transform (53-bit uniforms,
first uniform shifted into (0, 1]).  A sample therefore depends only on
``(seed, stream, i)``: chunking and thread count cannot change it.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels, matops
from ._backend import resolve_threads
from .corrmodel import CorrelationModel, constants
from .covariance import build_bundle

CHUNK = 1 << 16


@dataclass(frozen=True)
class PointJet:
    gradient: np.ndarray
    hessian: np.ndarray


@dataclass(frozen=True)
class SamplerConfig:
    n: int = 2
    model: CorrelationModel = field(default_factory=CorrelationModel)
    seed: int = 0
    count: int = 1000
    stream: int = 0

    def __post_init__(self):
        matops._check_dim(self.n)
        if self.count < 1:
            raise ValueError("count must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")


@dataclass(eq=False)
class JetBatch:
    """Stacked jets; iterating yields :class:`PointJet` in sample order."""

    gradients: np.ndarray
    hessians: np.ndarray

    def __len__(self):
        return self.gradients.shape[0]

    def __iter__(self):
        for g, h in zip(self.gradients, self.hessians):
            yield PointJet(g, h)

    @property
    def n(self):
        return self.gradients.shape[1]

    @property
    def vech(self):
        rows, cols = matops._vech_rows_cols(self.n)
        return self.hessians[:, rows, cols]

    @classmethod
    def concat(cls, batches):
        batches = list(batches)
        return cls(np.concatenate([b.gradients for b in batches]),
                   np.concatenate([b.hessians for b in batches]))


def words_per_sample(n):
    d = n + n * (n + 1) // 2
    return 4 * (-(-d // 4))


def raw_words(seed, stream, start, stop, n):
    """uint64 words for samples ``start..stop-1``; shape (stop - start, words_per_sample(n))."""
    w = words_per_sample(n)
    bg = np.random.Philox(key=seed, counter=[start * (w // 4), stream, 0, 0])
    return bg.random_raw((stop - start) * w).reshape(stop - start, w)


def standard_normals(config, start, stop, backend=None):
    """The ``d = n + n(n+1)/2`` standard normals owned by each sample in range."""
    n = config.n
    z = _kernels.box_muller(raw_words(config.seed, config.stream, start, stop, n), backend)
    return z[:, : n + n * (n + 1) // 2]


class _Plan:
    def __init__(self, config, backend):
        self.config = config
        self.backend = backend
        self.bundle = build_bundle(config.n, constants(config.model))
        self.grad_sd = float(np.sqrt(self.bundle.consts.grad_var))
        self.chol = np.linalg.cholesky(self.bundle.sigma_n)

    def chunk(self, bounds):
        start, stop = bounds
        n = self.config.n
        z = standard_normals(self.config, start, stop, self.backend)
        G, V = _kernels.affine_jets(z, self.grad_sd, self.chol, n, self.backend)
        return JetBatch(G, matops.vech_inv(V, n))


def _bounds(count, chunk):
    return [(s, min(s + chunk, count)) for s in range(0, count, chunk)]


def map_ordered(fn, items, threads=None):
    """``map`` over a thread pool, results in input order."""
    threads = resolve_threads(threads)
    if threads == 1 or len(items) <= 1:
        return map(fn, items)
    return _pooled(fn, items, threads)


def _pooled(fn, items, threads):
    pool = ThreadPoolExecutor(max_workers=threads)
    # generator consumers may stop early; shut down without waiting then
    try:
        yield from pool.map(fn, items)
    finally:
        pool.shutdown(wait=False, cancel_futures=True)


def jet_chunks(config, threads=None, backend=None, chunk=CHUNK):
    """Yield :class:`JetBatch` chunks covering samples ``0..count-1`` in order."""
    plan = _Plan(config, backend)
    yield from map_ordered(plan.chunk, _bounds(config.count, chunk), threads)


def sample_jets(config, threads=None, backend=None):
    """All ``config.count`` jets as one :class:`JetBatch`.

    Gradients are N(0, -sigma2 rho2_0 I); ``vech`` of the Hessian is
    N(0, Sigma_n), drawn through a Cholesky factor of Sigma_n so the
    singular vec-coordinate covariance is never factorised.  The two blocks
    use disjoint normals and are independent.
    """
    return JetBatch.concat(jet_chunks(config, threads, backend))


def sample_hessian_eigs(config, threads=None, backend=None):
    """Ascending Hessian eigenvalues, shape (count, n)."""
    return np.concatenate(
        [np.linalg.eigvalsh(b.hessians) for b in jet_chunks(config, threads, backend)]
    )


def sample_curvatures(config, threads=None, backend=None):
    """Sorted principal curvatures of sampled jets, shape (count, n - 1).

    Zero-probability degenerate gradients are dropped rather than raised.
    """
    from .curvature import curvatures_of

    out = [curvatures_of(b, backend=backend)[0] for b in jet_chunks(config, threads, backend)]
    return np.concatenate(out)
