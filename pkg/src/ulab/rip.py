"""Exact restricted orthogonality / isometry constants and width estimates.

All "exact" constants come from exhaustive enumeration of column subsets
and refuse (``BudgetError``) rather than silently sampling when the
enumeration exceeds ``budget`` subset evaluations.

For ``Phi = [I U]`` with unitary ``U`` two reductions make enumeration
cheap and stay exact:

* theta_k equals ``max ||U[A, B]||`` over ``|A| = |B| = k`` (cross-block
  pairs dominate because each block has orthonormal columns);
* the Gram matrix of a support split ``A`` (identity part) / ``B``
  (``U`` part) is ``I + [[0, U[A,B]], [U[A,B]*, 0]]``, so delta_k is the
  largest ``||U[A, B]||`` with ``|A| + |B| = k``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .errors import ArgumentError, BudgetError
from .operators import UnitaryOperator, dft_matrix, haar_unitary
from .rng import generator, parallel_map
from .signal import numerical_sparsity_columns
from .uncertainty import minimize_additive_ns

DEFAULT_BUDGET = 10**6
STRUCTURES = ("generic", "identity_concat_unitary", "partial_fourier")
METHODS = ("exact_enumeration", "monte_carlo_upper", "candidate_lower")
_CHUNK = 20_000


@dataclass(frozen=True, eq=False)
class MeasurementMatrix:
    matrix: np.ndarray
    structure: str = "generic"
    unitary: Optional[UnitaryOperator] = None

    def __post_init__(self):
        m = np.ascontiguousarray(self.matrix, dtype=np.complex128)
        if m.ndim != 2:
            raise ArgumentError("measurement matrix must be 2-D")
        if self.structure not in STRUCTURES:
            raise ArgumentError(f"unknown structure {self.structure!r}")
        if self.structure == "identity_concat_unitary":
            if self.unitary is None or m.shape != (self.unitary.n, 2 * self.unitary.n):
                raise ArgumentError("[I U] structure needs the unitary block")
        object.__setattr__(self, "matrix", m)

    @property
    def m(self) -> int:
        return self.matrix.shape[0]

    @property
    def N(self) -> int:
        return self.matrix.shape[1]

    def column_norms(self) -> np.ndarray:
        return np.linalg.norm(self.matrix, axis=0)


def identity_concat(U: UnitaryOperator) -> MeasurementMatrix:
    """``[I U]``."""
    mat = np.concatenate([np.eye(U.n), U.matrix], axis=1)
    return MeasurementMatrix(mat, "identity_concat_unitary", U)


def partial_fourier(n: int, rows, normalize: bool = True) -> MeasurementMatrix:
    """Rows ``rows`` (with repetition) of the unitary DFT.

    With ``normalize`` the rows are scaled by ``sqrt(n/m)`` so columns have
    unit norm.
    """
    rows = np.asarray(rows, dtype=np.int64)
    mat = dft_matrix(n)[rows]
    if normalize and rows.size:
        mat = mat * math.sqrt(n / rows.size)
    return MeasurementMatrix(mat, "partial_fourier")


@dataclass
class RIPReport:
    k: int
    theta: float
    delta: float
    width_c: Optional[float]
    method: str
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"k": self.k, "theta": self.theta, "delta": self.delta,
                "width_c": self.width_c, "method": self.method, **self.extra}


def _combos(n: int, k: int) -> np.ndarray:
    if k == 0:
        return np.zeros((1, 0), dtype=np.int64)
    return np.array(list(itertools.combinations(range(n), k)), dtype=np.int64)


def _guard(count: int, budget: int, what: str) -> None:
    if count > budget:
        raise BudgetError(
            f"{what} needs {count} subset evaluations (budget {budget}); "
            "use the sampled variant instead"
        )


def _max_block_norm(M: np.ndarray, rows: np.ndarray, cols: np.ndarray) -> float:
    """``max ||M[r][:, c]||`` over all pairs (r in rows, c in cols)."""
    if rows.shape[1] == 0 or cols.shape[1] == 0:
        return 0.0
    best = 0.0
    per = max(1, _CHUNK // len(cols))
    for lo in range(0, len(rows), per):
        r = np.repeat(rows[lo:lo + per], len(cols), axis=0)
        c = np.tile(cols, (min(per, len(rows) - lo), 1))
        best = max(best, float(kernels.block_norms(M, r, c).max()))
    return best


def restricted_orthogonality(Phi: MeasurementMatrix, k: int, budget: int = DEFAULT_BUDGET) -> float:
    """Smallest theta with ``|<Phi x, Phi y>| <= theta ||x|| ||y||`` for
    disjointly supported ``k``-sparse ``x, y``.

    The maximum over supports of size ``<= k`` is attained at size exactly
    ``k`` (a block's norm can only grow when rows/columns are added), so
    only size-``k`` pairs are enumerated.
    """
    if k < 0 or 2 * k > Phi.N:
        raise ArgumentError(f"need 0 <= 2k <= N, got k={k}, N={Phi.N}")
    if k == 0:
        return 0.0
    if Phi.structure == "identity_concat_unitary":
        n = Phi.unitary.n
        _guard(math.comb(n, k) ** 2, budget, "restricted orthogonality")
        sets = _combos(n, k)
        return _max_block_norm(Phi.unitary.matrix, sets, sets)
    N = Phi.N
    _guard(math.comb(N, k) * math.comb(N - k, k) // 2, budget, "restricted orthogonality")
    gram = Phi.matrix.conj().T @ Phi.matrix
    best = 0.0
    for S in itertools.combinations(range(N), k):
        rest = [j for j in range(N) if j not in S and j > S[0]]
        if len(rest) < k:
            continue
        T = np.array(list(itertools.combinations(rest, k)), dtype=np.int64)
        rows = np.repeat(np.array([S], dtype=np.int64), len(T), axis=0)
        best = max(best, float(kernels.block_norms(gram, rows, T).max()))
    return best


def restricted_isometry_constant(Phi: MeasurementMatrix, k: int, budget: int = DEFAULT_BUDGET,
                                 structured: bool = True) -> float:
    """Exact ``delta_k = max_{|S|=k} ||Phi_S* Phi_S - I||``."""
    if k < 0 or k > Phi.N:
        raise ArgumentError(f"need 0 <= k <= N, got k={k}, N={Phi.N}")
    if k == 0:
        return 0.0
    _guard(math.comb(Phi.N, k), budget, "restricted isometry")
    if structured and Phi.structure == "identity_concat_unitary":
        n = Phi.unitary.n
        best = 0.0
        for a in range(max(1, k - n), min(k - 1, n) + 1):
            best = max(best, _max_block_norm(Phi.unitary.matrix, _combos(n, a), _combos(n, k - a)))
        return best
    subsets = _combos(Phi.N, k)
    best = 0.0
    for lo in range(0, len(subsets), _CHUNK):
        best = max(best, float(kernels.gram_deviation(Phi.matrix, subsets[lo:lo + _CHUNK]).max()))
    return best


def ro_implies_rip_check(Phi: MeasurementMatrix, k: int, budget: int = DEFAULT_BUDGET) -> bool:
    """``delta_k <= 2 theta_k`` for a unit-column matrix (always true)."""
    if np.abs(Phi.column_norms() - 1.0).max() > 1e-10:
        raise ArgumentError("columns must have unit norm")
    return restricted_isometry_constant(Phi, k, budget) <= 2 * restricted_orthogonality(Phi, k, budget) + 1e-10


# --------------------------------------------------------------------------
# width property


@dataclass
class WidthEstimate:
    """Lower bound on the smallest valid width constant at sparsity ``k``.

    ``c_lower = sqrt(k) * ||z||_2 / ||z||_1`` for the best nullspace vector
    ``z`` found; the true constant is at least this large.
    """

    k: int
    c_lower: float
    ns_min: float
    certificate: np.ndarray = field(repr=False)


def stacked_nullspace_vector(U: UnitaryOperator, x) -> np.ndarray:
    """``[Ux; -x]``, which ``[I U]`` maps to zero."""
    x = np.asarray(x, dtype=np.complex128)
    return np.concatenate([U.apply(x), -x])


def width_constant_IU(U: UnitaryOperator, k: int, budget: int = 200, seed: int = 0,
                      restarts: int = 10, steps: int = 200) -> WidthEstimate:
    """Width constant lower bound for ``[I U]`` over nullspace ``{[Ux; -x]}``."""
    if k < 1:
        raise ArgumentError("k must be positive")
    search = minimize_additive_ns(U, budget, seed, restarts, steps, objective="stacked")
    ns_min = search.minimum_upper_bound
    return WidthEstimate(k, math.sqrt(k / ns_min), ns_min, search.x)


def width_constant(Phi: MeasurementMatrix, k: int, budget: int = 2000, seed: int = 0) -> WidthEstimate:
    """Width constant lower bound for a general matrix by sampling its nullspace.

    Candidates are random combinations of a nullspace basis and projections
    of random sparse vectors onto the nullspace.
    """
    if k < 1:
        raise ArgumentError("k must be positive")
    if Phi.structure == "identity_concat_unitary":
        return width_constant_IU(Phi.unitary, k, seed=seed)
    _, s, vh = np.linalg.svd(Phi.matrix)
    rank = int(np.sum(s > 1e-10 * s.max())) if s.size else 0
    basis = vh[rank:].conj().T  # N x (N - rank)
    N = Phi.N
    if basis.shape[1] == 0:
        return WidthEstimate(k, 0.0, math.inf, np.zeros(N, dtype=np.complex128))
    rng = generator(seed, N, 0x3D7)
    dim = basis.shape[1]
    coeffs = rng.standard_normal((dim, budget)) + 1j * rng.standard_normal((dim, budget))
    Z = basis @ coeffs
    sparse = np.zeros((N, budget), dtype=np.complex128)
    for c in range(budget):
        idx = rng.choice(N, size=min(N, max(1, k)), replace=False)
        sparse[idx, c] = rng.standard_normal(idx.size) + 1j * rng.standard_normal(idx.size)
    P = basis @ (basis.conj().T @ sparse)
    Z = np.concatenate([Z, P], axis=1)
    Z = Z[:, np.linalg.norm(Z, axis=0) > 1e-12]
    ns = numerical_sparsity_columns(Z)
    i = int(np.argmin(ns))
    return WidthEstimate(k, math.sqrt(k / ns[i]), float(ns[i]), Z[:, i])


# --------------------------------------------------------------------------
# the random [I U] restricted isometry harness


def rip_sample_size_k(n: int, delta: float) -> int:
    """Largest integer ``k >= 0`` with ``n >= (256 / delta^2) k log(e n / k)``.

    ``k log(e n / k)`` increases on ``(0, n]``, so bisection is exact.
    """
    if n < 1 or not 0 < delta:
        raise ArgumentError("need n >= 1 and delta > 0")
    c = 256.0 / delta ** 2

    def ok(k: int) -> bool:
        return k == 0 or c * k * math.log(math.e * n / k) <= n

    lo, hi = 0, n
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if ok(mid):
            lo = mid
        else:
            hi = mid - 1
    return lo


@dataclass
class RIPMonteCarlo:
    n: int
    k: int
    delta: float
    theorem_k: int
    regime: str
    seeds: list[int]
    deltas: list[float]
    thetas: list[float]
    fraction_within: float
    quantiles: dict

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def iu_rip_montecarlo(n: int, delta: float, seeds: int, k: Optional[int] = None,
                      seed: int = 0, budget: int = DEFAULT_BUDGET) -> RIPMonteCarlo:
    """Exact ``delta_k`` and ``theta_k`` of ``[I U]`` over Haar draws ``seed + i``.

    ``k`` defaults to the largest sparsity the probabilistic guarantee covers
    at this ``n`` (usually 0 at small ``n``); any larger ``k`` is labelled
    ``beyond_theorem``.
    """
    theorem_k = rip_sample_size_k(n, delta)
    if k is None:
        k = theorem_k
    seed_list = [seed + i for i in range(seeds)]

    def one(s: int):
        Phi = identity_concat(haar_unitary(n, s))
        return (restricted_isometry_constant(Phi, k, budget),
                restricted_orthogonality(Phi, k, budget))

    results = parallel_map(one, seed_list)
    deltas = [float(d) for d, _ in results]
    thetas = [float(t) for _, t in results]
    arr = np.array(deltas)
    qs = {str(q): float(np.quantile(arr, q)) for q in (0.1, 0.5, 0.9)} if deltas else {}
    return RIPMonteCarlo(
        n=n, k=k, delta=delta, theorem_k=theorem_k,
        regime="theorem" if k <= theorem_k else "beyond_theorem",
        seeds=seed_list, deltas=deltas, thetas=thetas,
        fraction_within=float(np.mean(arr <= delta)) if deltas else float("nan"),
        quantiles=qs,
    )


def rip_report(Phi: MeasurementMatrix, k: int, budget: int = DEFAULT_BUDGET,
               samples: Optional[int] = None, seed: int = 0) -> RIPReport:
    """Exact constants, or with ``samples`` a lower bound from random supports."""
    width = width_constant(Phi, k, seed=seed).c_lower if k >= 1 else None
    if samples is None:
        return RIPReport(k, restricted_orthogonality(Phi, k, budget),
                         restricted_isometry_constant(Phi, k, budget), width, "exact_enumeration")
    rng = generator(seed, Phi.N, k, 0x51)
    N = Phi.N
    subsets = np.array([np.sort(rng.choice(N, size=k, replace=False)) for _ in range(samples)])
    delta = float(kernels.gram_deviation(Phi.matrix, subsets).max()) if k else 0.0
    gram = Phi.matrix.conj().T @ Phi.matrix
    theta = 0.0
    if k and 2 * k <= N:
        both = np.array([rng.permutation(N)[: 2 * k] for _ in range(samples)])
        theta = float(kernels.block_norms(gram, both[:, :k], both[:, k:]).max())
    return RIPReport(k, theta, delta, width, "candidate_lower", {"samples": samples})
