"""Hot numeric kernels, each in a numba and a pure-numpy flavour.

Public entry points take ``backend=None`` and dispatch through
:func:`curvgrf._backend.resolve`.  Both flavours implement the same
arithmetic; they agree to rounding, not bit for bit (libm differs).
"""
import math

import numpy as np

from ._backend import njit, resolve

_TWO_PI = 2.0 * math.pi
_INV_2_53 = 1.0 / 9007199254740992.0

# periodic 4th-order central stencils, offsets -2..2
_D1 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_D2 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0


# --------------------------------------------------------------------------
# Box-Muller on raw 64-bit words


def _box_muller_numpy(raw):
    a = raw[:, 0::2] >> np.uint64(11)
    b = raw[:, 1::2] >> np.uint64(11)
    u1 = (a.astype(np.float64) + 1.0) * _INV_2_53  # (0, 1]
    u2 = b.astype(np.float64) * _INV_2_53
    r = np.sqrt(-2.0 * np.log(u1))
    t = _TWO_PI * u2
    out = np.empty(raw.shape, dtype=np.float64)
    out[:, 0::2] = r * np.cos(t)
    out[:, 1::2] = r * np.sin(t)
    return out


@njit
def _box_muller_numba(raw):
    N, k = raw.shape
    out = np.empty((N, k), dtype=np.float64)
    for i in range(N):
        for j in range(0, k, 2):
            u1 = (np.float64(raw[i, j] >> np.uint64(11)) + 1.0) * _INV_2_53
            u2 = np.float64(raw[i, j + 1] >> np.uint64(11)) * _INV_2_53
            r = math.sqrt(-2.0 * math.log(u1))
            t = _TWO_PI * u2
            out[i, j] = r * math.cos(t)
            out[i, j + 1] = r * math.sin(t)
    return out


def box_muller(raw, backend=None):
    """Standard normals from pairs of uint64 words, shape preserved (last axis even)."""
    raw = np.ascontiguousarray(raw, dtype=np.uint64)
    if raw.shape[1] % 2:
        raise ValueError("need an even number of words per row")
    if resolve(backend) == "numba":
        return _box_muller_numba(raw)
    return _box_muller_numpy(raw)


# --------------------------------------------------------------------------
# standard normals -> (gradient, vech Hessian)


def _affine_jets_numpy(z, grad_sd, chol, n):
    p = chol.shape[0]
    G = grad_sd * z[:, :n]
    V = z[:, n:n + p] @ chol.T
    return G, V


@njit
def _affine_jets_numba(z, grad_sd, chol, n):
    N = z.shape[0]
    p = chol.shape[0]
    G = np.empty((N, n))
    V = np.empty((N, p))
    for s in range(N):
        for i in range(n):
            G[s, i] = grad_sd * z[s, i]
        for a in range(p):
            acc = 0.0
            for b in range(a + 1):
                acc += chol[a, b] * z[s, n + b]
            V[s, a] = acc
    return G, V


def affine_jets(z, grad_sd, chol, n, backend=None):
    """Scale the first ``n`` normals to gradients and colour the next ``p`` by ``chol``."""
    z = np.ascontiguousarray(z, dtype=np.float64)
    chol = np.ascontiguousarray(chol, dtype=np.float64)
    if resolve(backend) == "numba":
        return _affine_jets_numba(z, float(grad_sd), chol, int(n))
    return _affine_jets_numpy(z, float(grad_sd), chol, int(n))


# --------------------------------------------------------------------------
# principal curvatures of level sets


def _householder_null_numpy(G):
    """Null-space bases (N, n, n-1) from the Householder reflection of e1 onto -+g/|g|."""
    N, n = G.shape
    norm = np.sqrt(np.einsum("ij,ij->i", G, G))
    u = G / norm[:, None]
    sign = np.where(u[:, 0] >= 0.0, 1.0, -1.0)
    u[:, 0] += sign
    uu = np.einsum("ij,ij->i", u, u)
    P = np.eye(n)[None, :, :] - 2.0 * u[:, :, None] * u[:, None, :] / uu[:, None, None]
    return P[:, :, 1:], norm


def _curvatures_numpy(G, H):
    Nb, norm = _householder_null_numpy(G)
    M = -np.einsum("sia,sij,sjb->sab", Nb, H, Nb) / norm[:, None, None]
    M = 0.5 * (M + np.swapaxes(M, 1, 2))
    if M.shape[1] == 1:
        return M[:, :, 0].copy()
    return np.linalg.eigvalsh(M)


@njit
def _curvatures_numba(G, H):
    N, n = G.shape
    m = n - 1
    out = np.empty((N, m))
    u = np.empty(n)
    Nb = np.empty((n, m))
    HN = np.empty((n, m))
    M = np.empty((m, m))
    for s in range(N):
        norm = 0.0
        for i in range(n):
            norm += G[s, i] * G[s, i]
        norm = math.sqrt(norm)
        for i in range(n):
            u[i] = G[s, i] / norm
        u[0] += 1.0 if u[0] >= 0.0 else -1.0
        uu = 0.0
        for i in range(n):
            uu += u[i] * u[i]
        for i in range(n):
            for a in range(m):
                Nb[i, a] = (1.0 if i == a + 1 else 0.0) - 2.0 * u[i] * u[a + 1] / uu
        for i in range(n):
            for a in range(m):
                acc = 0.0
                for j in range(n):
                    acc += H[s, i, j] * Nb[j, a]
                HN[i, a] = acc
        for a in range(m):
            acc = 0.0
            for i in range(n):
                acc += Nb[i, a] * HN[i, a]
            M[a, a] = -acc / norm
        for a in range(m):
            for b in range(a + 1, m):
                acc1 = 0.0
                acc2 = 0.0
                for i in range(n):
                    acc1 += Nb[i, a] * HN[i, b]
                    acc2 += Nb[i, b] * HN[i, a]
                v = -0.5 * (acc1 + acc2) / norm
                M[a, b] = v
                M[b, a] = v
        if m == 1:
            out[s, 0] = M[0, 0]
        elif m == 2:
            mid = 0.5 * (M[0, 0] + M[1, 1])
            half = 0.5 * (M[0, 0] - M[1, 1])
            rad = math.hypot(half, M[0, 1])
            out[s, 0] = mid - rad
            out[s, 1] = mid + rad
        else:
            w = np.linalg.eigvalsh(M)
            for a in range(m):
                out[s, a] = w[a]
    return out


def curvatures(G, H, backend=None):
    """Ascending principal curvatures ``eig(-N^T H N / |g|)`` for stacked jets.

    No degeneracy guard here; callers filter tiny gradients first.
    """
    G = np.ascontiguousarray(G, dtype=np.float64)
    H = np.ascontiguousarray(H, dtype=np.float64)
    if G.shape[1] < 2:
        raise ValueError("level sets need ambient dimension >= 2")
    if resolve(backend) == "numba":
        return _curvatures_numba(G, H)
    return _curvatures_numpy(G, H)


# --------------------------------------------------------------------------
# periodic finite-difference jets on a grid


def _roll_stencil(f, w, axis):
    out = np.zeros_like(f)
    for off, c in zip(range(-2, 3), w):
        if c != 0.0:
            out += c * np.roll(f, -off, axis=axis)
    return out


def _grid_jets_numpy(f, h):
    n = f.ndim
    G = np.empty(f.shape + (n,))
    H = np.empty(f.shape + (n, n))
    for a in range(n):
        G[..., a] = _roll_stencil(f, _D1, a) / h
        H[..., a, a] = _roll_stencil(f, _D2, a) / (h * h)
        for b in range(a + 1, n):
            mixed = _roll_stencil(_roll_stencil(f, _D1, b), _D1, a) / (h * h)
            H[..., a, b] = mixed
            H[..., b, a] = mixed
    return G.reshape(-1, n), H.reshape(-1, n, n)


@njit
def _d1_axis0(f, out):
    nx, ny = f.shape
    for i in range(nx):
        im2 = (i - 2) % nx
        im1 = (i - 1) % nx
        ip1 = (i + 1) % nx
        ip2 = (i + 2) % nx
        for j in range(ny):
            out[i, j] = (f[im2, j] - 8.0 * f[im1, j] + 8.0 * f[ip1, j] - f[ip2, j]) / 12.0


@njit
def _grid_jets2_numba(f, h):
    nx, ny = f.shape
    G = np.empty((nx * ny, 2))
    H = np.empty((nx * ny, 2, 2))
    fy = np.empty((nx, ny))
    for i in range(nx):
        for j in range(ny):
            fy[i, j] = (f[i, (j - 2) % ny] - 8.0 * f[i, (j - 1) % ny]
                        + 8.0 * f[i, (j + 1) % ny] - f[i, (j + 2) % ny]) / 12.0
    fxy = np.empty((nx, ny))
    _d1_axis0(fy, fxy)
    h2 = h * h
    for i in range(nx):
        im2 = (i - 2) % nx
        im1 = (i - 1) % nx
        ip1 = (i + 1) % nx
        ip2 = (i + 2) % nx
        for j in range(ny):
            k = i * ny + j
            jm2 = (j - 2) % ny
            jm1 = (j - 1) % ny
            jp1 = (j + 1) % ny
            jp2 = (j + 2) % ny
            c = f[i, j]
            G[k, 0] = (f[im2, j] - 8.0 * f[im1, j] + 8.0 * f[ip1, j] - f[ip2, j]) / 12.0 / h
            G[k, 1] = fy[i, j] / h
            H[k, 0, 0] = (-f[im2, j] + 16.0 * f[im1, j] - 30.0 * c
                          + 16.0 * f[ip1, j] - f[ip2, j]) / 12.0 / h2
            H[k, 1, 1] = (-f[i, jm2] + 16.0 * f[i, jm1] - 30.0 * c
                          + 16.0 * f[i, jp1] - f[i, jp2]) / 12.0 / h2
            H[k, 0, 1] = fxy[i, j] / h2
            H[k, 1, 0] = fxy[i, j] / h2
    return G, H


def grid_jets(f, h, backend=None):
    """Gradient (P, n) and Hessian (P, n, n) at every grid point, periodic wrap, C order."""
    f = np.ascontiguousarray(f, dtype=np.float64)
    if resolve(backend) == "numba" and f.ndim == 2:
        return _grid_jets2_numba(f, float(h))
    return _grid_jets_numpy(f, float(h))
