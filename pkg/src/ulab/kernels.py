"""Hot inner loops, each in two interchangeable implementations.

Every kernel exists as ``<name>_numpy`` (vectorised reference) and
``<name>_numba`` (``@njit`` loops). The unsuffixed name is bound to the
numba version unless numba is unavailable or ``ULAB_DISABLE_NUMBA`` is set
to a non-empty value other than ``0``; ``block_norms`` always uses numpy,
which is faster there. Both versions consume the same explicit inputs
(random numbers are always drawn by the caller), so they agree up to
floating-point rounding.
"""
from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


def _numba_disabled() -> bool:
    flag = os.environ.get("ULAB_DISABLE_NUMBA", "")
    return flag not in ("", "0")


BACKEND = "numba" if HAVE_NUMBA and not _numba_disabled() else "numpy"


# --------------------------------------------------------------------------
# coupon collecting


def coupon_times_numpy(u: np.ndarray, k: int) -> np.ndarray:
    """Coupon-collector completion times from uniforms ``u`` in (0, 1].

    Row ``t`` of ``u`` (shape ``(trials, k)``) drives trial ``t``: with ``i``
    coupons already held, the wait for a new one is geometric with success
    probability ``(k - i)/k``, sampled by inversion from ``u[t, i]``.
    Column 0 is unused because the first draw is always new.
    """
    if k == 1:
        return np.ones(u.shape[0], dtype=np.int64)
    log_q = np.log(np.arange(1, k) / k)
    waits = 1 + np.floor(np.log(u[:, 1:k]) / log_q).astype(np.int64)
    return 1 + waits.sum(axis=1)


@njit(cache=True)
def coupon_times_numba(u, k):
    trials = u.shape[0]
    out = np.empty(trials, dtype=np.int64)
    log_q = np.empty(k)
    for i in range(1, k):
        log_q[i] = np.log(i / k)
    for t in range(trials):
        total = 1
        for i in range(1, k):
            total += 1 + np.int64(np.floor(np.log(u[t, i]) / log_q[i]))
        out[t] = total
    return out


def completion_times_numpy(draws: np.ndarray, k: int) -> np.ndarray:
    """First (1-based) position in each row of ``draws`` where all of
    ``0..k-1`` have appeared, or 0 if the row never completes."""
    trials, m = draws.shape
    out = np.zeros(trials, dtype=np.int64)
    if m == 0:
        return out
    # first occurrence of each coupon per row; completion is the latest of them
    first = np.full((trials, k), m, dtype=np.int64)
    rows = np.repeat(np.arange(trials), m)
    pos = np.tile(np.arange(m), trials)
    np.minimum.at(first, (rows, draws.ravel()), pos)
    last_new = first.max(axis=1)
    done = last_new < m
    out[done] = last_new[done] + 1
    return out


@njit(cache=True)
def completion_times_numba(draws, k):
    trials, m = draws.shape
    out = np.zeros(trials, dtype=np.int64)
    seen = np.zeros(k, dtype=np.bool_)
    for t in range(trials):
        seen[:] = False
        need = k
        for i in range(m):
            c = draws[t, i]
            if not seen[c]:
                seen[c] = True
                need -= 1
                if need == 0:
                    out[t] = i + 1
                    break
    return out


# --------------------------------------------------------------------------
# exhaustive subset evaluations for restricted isometry / orthogonality


def block_norms_numpy(M: np.ndarray, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """Spectral norm of ``M[rows[i]][:, cols[i]]`` for every ``i``."""
    if rows.shape[1] == 0 or cols.shape[1] == 0:
        return np.zeros(rows.shape[0])
    blocks = M[rows[:, :, None], cols[:, None, :]]
    return np.linalg.svd(blocks, compute_uv=False)[:, 0]


@njit(cache=True)
def block_norms_numba(M, rows, cols):
    count = rows.shape[0]
    a = rows.shape[1]
    b = cols.shape[1]
    out = np.zeros(count)
    if a == 0 or b == 0:
        return out
    block = np.empty((a, b), dtype=M.dtype)
    for t in range(count):
        for i in range(a):
            for j in range(b):
                block[i, j] = M[rows[t, i], cols[t, j]]
        out[t] = np.linalg.svd(block)[1][0]
    return out


def gram_deviation_numpy(Phi: np.ndarray, subsets: np.ndarray) -> np.ndarray:
    """``max(lmax - 1, 1 - lmin)`` of the Gram matrix of each column subset."""
    cols = Phi[:, subsets]  # (m, count, k)
    gram = np.einsum("mci,mcj->cij", cols.conj(), cols)
    eig = np.linalg.eigvalsh(gram)
    return np.maximum(eig[:, -1] - 1.0, 1.0 - eig[:, 0])


@njit(cache=True)
def gram_deviation_numba(Phi, subsets):
    count, k = subsets.shape
    m = Phi.shape[0]
    out = np.empty(count)
    gram = np.empty((k, k), dtype=Phi.dtype)
    for t in range(count):
        for i in range(k):
            ci = subsets[t, i]
            for j in range(i, k):
                cj = subsets[t, j]
                acc = 0j
                for r in range(m):
                    acc += np.conj(Phi[r, ci]) * Phi[r, cj]
                gram[i, j] = acc
                gram[j, i] = np.conj(acc)
        eig = np.linalg.eigvalsh(gram)
        out[t] = max(eig[k - 1] - 1.0, 1.0 - eig[0])
    return out


def submatrix_dets_numpy(M: np.ndarray, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """``|det M[rows[i]][:, cols[j]]|`` minimised over ``j`` for each ``i``."""
    blocks = M[rows[:, None, :, None], cols[None, :, None, :]]
    return np.abs(np.linalg.det(blocks)).min(axis=1)


@njit(cache=True)
def submatrix_dets_numba(M, rows, cols):
    nr, s = rows.shape
    nc = cols.shape[0]
    out = np.empty(nr)
    block = np.empty((s, s), dtype=M.dtype)
    for t in range(nr):
        best = np.inf
        for u in range(nc):
            for i in range(s):
                for j in range(s):
                    block[i, j] = M[rows[t, i], cols[u, j]]
            d = abs(np.linalg.det(block))
            if d < best:
                best = d
        out[t] = best
    return out


# --------------------------------------------------------------------------
# basis pursuit for [I U] via Douglas-Rachford splitting
#
# Returns (y, z, iterations, status) where y is the feasible iterate and z
# the soft-thresholded (exactly sparse) iterate; status 1 = converged.


def _soft(v, gamma):
    mag = np.abs(v)
    scale = np.where(mag > gamma, 1.0 - gamma / np.where(mag > 0, mag, 1.0), 0.0)
    return v * scale


def dr_basis_pursuit_numpy(apply, adjoint, b, gamma, max_iter, feas_tol, fp_tol,
                           window, obj_rtol):
    """Reference loop; ``apply``/``adjoint`` act on length-n vectors."""
    n = b.size
    w = np.zeros(2 * n, dtype=np.complex128)
    history = np.full(window + 1, np.nan)
    y = w
    z = w
    for it in range(1, max_iter + 1):
        r = b - (w[:n] + apply(w[n:]))
        y = w + 0.5 * np.concatenate([r, adjoint(r)])
        z = _soft(2.0 * y - w, gamma)
        w = w + (z - y)
        obj = np.abs(y).sum()
        history[it % (window + 1)] = obj
        if it <= window:
            continue
        ref = history[(it + 1) % (window + 1)]
        if abs(obj - ref) > obj_rtol * max(obj, 1e-300):
            continue
        if np.linalg.norm(z - y) > fp_tol:
            continue
        res = np.linalg.norm(y[:n] + apply(y[n:]) - b)
        if res <= feas_tol:
            return y, z, it, 1
    return y, z, max_iter, 0


@njit(cache=True)
def _matvec(M, v):
    n = M.shape[0]
    out = np.zeros(n, dtype=np.complex128)
    for i in range(n):
        acc = 0j
        for j in range(M.shape[1]):
            acc += M[i, j] * v[j]
        out[i] = acc
    return out


@njit(cache=True)
def dr_basis_pursuit_numba(U, Uh, b, gamma, max_iter, feas_tol, fp_tol, window, obj_rtol):
    n = b.size
    w = np.zeros(2 * n, dtype=np.complex128)
    y = np.zeros(2 * n, dtype=np.complex128)
    z = np.zeros(2 * n, dtype=np.complex128)
    r = np.empty(n, dtype=np.complex128)
    history = np.full(window + 1, np.nan)
    for it in range(1, max_iter + 1):
        Uw = _matvec(U, w[n:])
        for i in range(n):
            r[i] = b[i] - (w[i] + Uw[i])
        Uhr = _matvec(Uh, r)
        obj = 0.0
        fp = 0.0
        for i in range(2 * n):
            corr = 0.5 * r[i] if i < n else 0.5 * Uhr[i - n]
            yi = w[i] + corr
            t = 2.0 * yi - w[i]
            mag = abs(t)
            if mag > gamma:
                zi = t * (1.0 - gamma / mag)
            else:
                zi = 0j
            y[i] = yi
            z[i] = zi
            w[i] = w[i] + (zi - yi)
            obj += abs(yi)
            fp += abs(zi - yi) ** 2
        history[it % (window + 1)] = obj
        if it <= window:
            continue
        ref = history[(it + 1) % (window + 1)]
        if abs(obj - ref) > obj_rtol * max(obj, 1e-300):
            continue
        if np.sqrt(fp) > fp_tol:
            continue
        Uy = _matvec(U, y[n:])
        res = 0.0
        for i in range(n):
            res += abs(y[i] + Uy[i] - b[i]) ** 2
        if np.sqrt(res) <= feas_tol:
            return y, z, it, 1
    return y, z, max_iter, 0


# --------------------------------------------------------------------------
# backend selection

# block_norms stays on numpy: its batched SVD beats the per-block numba loop
# (see benchmarks/bench_kernels.py)
block_norms = block_norms_numpy

if BACKEND == "numba":
    coupon_times = coupon_times_numba
    completion_times = completion_times_numba
    gram_deviation = gram_deviation_numba
    submatrix_dets = submatrix_dets_numba
else:
    coupon_times = coupon_times_numpy
    completion_times = completion_times_numpy
    gram_deviation = gram_deviation_numpy
    submatrix_dets = submatrix_dets_numpy
