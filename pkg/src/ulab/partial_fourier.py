"""Row-sampled DFT matrices, coupon collecting and sparse nullspace witnesses.

For ``k | n`` let ``K`` be the subgroup of ``Z_n`` of size ``k`` and ``H``
the subgroup of size ``n/k`` (the multiples of ``k``). The DFT of the
modulated indicator ``M^r 1_K`` is supported on the coset ``r + H``, so a
set of sampled rows annihilates it exactly when no row is ``= r (mod k)``.
Whether such a witness exists is therefore a coupon-collector question
with ``k`` coupons (the residues mod ``k``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from . import kernels
from .errors import ArgumentError
from .operators import dft_matrix
from .rng import chunks, generator, parallel_map
from .signal import modulate, subgroup_indicator

EULER_GAMMA = 0.57721566490153286
_CHUNK = 4096


@dataclass(frozen=True)
class RowSample:
    """``m`` row indices of the ``n``-point DFT, iid uniform with replacement."""

    n: int
    indices: np.ndarray
    seed: Optional[int] = None

    @property
    def m(self) -> int:
        return int(self.indices.size)

    def matrix(self) -> np.ndarray:
        """The unnormalised ``m x n`` row-sampled DFT."""
        return dft_matrix(self.n)[self.indices]


def sample_rows(n: int, m: int, seed: int = 0) -> RowSample:
    if n < 1 or m < 0:
        raise ArgumentError("need n >= 1 and m >= 0")
    idx = generator(seed, n, m).integers(0, n, size=m)
    return RowSample(n, idx.astype(np.int64), seed)


# --------------------------------------------------------------------------
# coupon collecting


@dataclass
class CouponStats:
    k: int
    trials: int
    samples: np.ndarray = field(repr=False)

    @property
    def mean(self) -> float:
        return float(self.samples.mean())

    def empirical_cdf(self, t) -> np.ndarray:
        """``P(T_k <= t)`` for each entry of ``t``."""
        ordered = np.sort(self.samples)
        return np.searchsorted(ordered, np.asarray(t), side="right") / self.trials

    def normalized_cdf(self, a, center: str = "log") -> np.ndarray:
        """``P(T_k <= c_k + a k)`` with ``c_k = k log k`` or ``k H_k``."""
        return self.empirical_cdf(np.floor(_center(self.k, center) + np.asarray(a) * self.k))

    def gumbel_distance(self, center: str = "log") -> float:
        """Sup distance between the normalised empirical CDF and its limit.

        ``center="log"`` compares ``P(T_k <= k log k + a k)`` with
        ``exp(-exp(-a))``; ``center="harmonic"`` compares
        ``P(T_k <= k H_k + a k)`` with :func:`gumbel_limit_cdf`. The limit is
        continuous and increasing, so checking both sides of every jump of
        the empirical step function gives the exact supremum.
        """
        k = self.k
        limit = classical_gumbel_cdf if center == "log" else gumbel_limit_cdf
        jumps = np.unique(self.samples).astype(float)
        a = (jumps - _center(k, center)) / k
        lim = limit(a)
        after = self.empirical_cdf(jumps)
        before = self.empirical_cdf(jumps - 1)
        return float(max(np.abs(after - lim).max(), np.abs(before - lim).max()))

    def to_dict(self) -> dict:
        k = self.k
        big = k > 1
        return {
            "k": k,
            "trials": self.trials,
            "mean": self.mean,
            "expected_mean": k * harmonic(k),
            "p_at_k_log_k": float(self.normalized_cdf(0.0)) if big else 1.0,
            "p_at_k_harmonic": float(self.normalized_cdf(0.0, "harmonic")) if big else 1.0,
            "gumbel_limit_at_0": gumbel_limit_cdf(0.0),
            "classical_limit_at_0": classical_gumbel_cdf(0.0),
            "sup_distance_log_center": self.gumbel_distance("log") if big else None,
            "sup_distance_harmonic_center": self.gumbel_distance("harmonic") if big else None,
        }


def _center(k: int, center: str) -> float:
    if center == "log":
        return k * math.log(k)
    if center == "harmonic":
        return k * harmonic(k)
    raise ArgumentError(f"unknown centering {center!r}")


def harmonic(k: int) -> float:
    return float(sum(1.0 / i for i in range(1, k + 1)))


def coupon_simulate(k: int, trials: int, seed: int = 0) -> CouponStats:
    """Simulate ``trials`` coupon-collector completion times for ``k`` coupons."""
    if k < 1 or trials < 0:
        raise ArgumentError("need k >= 1 and trials >= 0")

    def run(span):
        lo, hi = span
        rng = generator(seed, k, lo)
        u = 1.0 - rng.random((hi - lo, k))  # in (0, 1]
        return kernels.coupon_times(u, k)

    parts = parallel_map(run, chunks(trials, _CHUNK))
    samples = np.concatenate(parts) if parts else np.zeros(0, dtype=np.int64)
    return CouponStats(k, trials, samples)


def gumbel_limit_cdf(a):
    """``exp(-exp(-(a + gamma)))``; vectorised.

    This is the limit of ``P(T_k <= k H_k + a k)``. Centred at ``k log k``
    instead, the limit is :func:`classical_gumbel_cdf`; the two centrings
    differ by ``gamma k + O(1)``.
    """
    out = np.exp(-np.exp(-(np.asarray(a, dtype=float) + EULER_GAMMA)))
    return float(out) if out.ndim == 0 else out


def classical_gumbel_cdf(a):
    """``exp(-exp(-a))``, the limit of ``P(T_k <= k log k + a k)``."""
    out = np.exp(-np.exp(-np.asarray(a, dtype=float)))
    return float(out) if out.ndim == 0 else out


def coupon_cdf_exact(k: int, m: int) -> float:
    """Exact ``P(T_k <= m)`` by inclusion-exclusion in rational arithmetic."""
    if k < 1 or m < 0:
        raise ArgumentError("need k >= 1 and m >= 0")
    numerator = sum((-1) ** j * math.comb(k, j) * (k - j) ** m for j in range(k + 1))
    return float(Fraction(numerator, k ** m))


# --------------------------------------------------------------------------
# nullspace witnesses


def _check_divisor(n: int, k: int) -> None:
    if k < 1 or n % k:
        raise ArgumentError(f"k={k} must divide n={n}")


def missed_residues(n: int, k: int, rows) -> np.ndarray:
    """Residues ``r`` mod ``k`` (cosets ``r + H``) that no row hits."""
    _check_divisor(n, k)
    hit = np.zeros(k, dtype=bool)
    hit[np.asarray(rows, dtype=np.int64) % k] = True
    return np.flatnonzero(~hit)


def nullspace_sparse_witness(n: int, k: int, rows) -> Optional[np.ndarray]:
    """A ``k``-sparse ``x`` with ``Phi x = 0`` for the rows, or ``None``.

    Returns ``M^r 1_K`` for the smallest missed residue ``r``.
    """
    if isinstance(rows, RowSample):
        rows = rows.indices
    missed = missed_residues(n, k, rows)
    if missed.size == 0:
        return None
    return modulate(subgroup_indicator(n, k), int(missed[0]))


def bonferroni_lower(k: int, m: int) -> float:
    """``k (1 - 1/k)^m - C(k, 2) (1 - 2/k)^m`` clamped to ``[0, 1]``."""
    raw = k * (1 - 1 / k) ** m - math.comb(k, 2) * (1 - 2 / k) ** m
    return min(1.0, max(0.0, raw))


@dataclass
class WitnessProbability:
    n: int
    k: int
    m: int
    trials: int
    empirical: float
    bonferroni_lower: float
    sigma: float
    regime: str

    @property
    def consistent(self) -> bool:
        return self.empirical >= self.bonferroni_lower - 3 * self.sigma

    def to_dict(self) -> dict:
        return {**self.__dict__, "consistent": self.consistent}


def draw_row_matrix(n: int, m: int, trials: int, seed: int) -> np.ndarray:
    """``(trials, m)`` row indices.

    Draws are laid out so that trial ``t`` with ``m`` rows is a prefix of
    the same trial with more rows (common random numbers across ``m``).
    """
    rng = generator(seed, n, 0xC0)
    return np.ascontiguousarray(rng.integers(0, n, size=(m, trials)).T)


def witness_probability(n: int, k: int, m: int, trials: int, seed: int = 0) -> WitnessProbability:
    """Fraction of row samples whose DFT rows annihilate some ``k``-sparse vector."""
    _check_divisor(n, k)
    if m < 0 or trials < 1:
        raise ArgumentError("need m >= 0 and trials >= 1")
    if m == 0:
        exists = np.ones(trials, dtype=bool)
    else:
        residues = draw_row_matrix(n, m, trials, seed) % k
        exists = kernels.completion_times(residues, k) == 0
    emp = float(exists.mean())
    bound = bonferroni_lower(k, m)
    spread = max(emp * (1 - emp), bound * (1 - bound))
    regime = "sub_coupon" if k <= 1 or m <= k * math.log(k) else "super_coupon"
    return WitnessProbability(n, k, m, trials, emp, bound, math.sqrt(spread / trials), regime)


def rip_rows_lower_bound(k: int, n: int, eta: float, c_delta: float,
                         c0: Optional[float] = None, c2: Optional[float] = None) -> dict:
    """Row count sufficient for partial-Fourier restricted isometry.

    ``bound = C(delta) k (log(e n) + log(1 / (2 eta)))``. The two
    ingredient bounds ``C0 k (log k + log(1/(2 eta)))`` and
    ``C2 k log(e n / k)`` are included when their (unspecified) constants
    are supplied.
    """
    if not 0 < eta < 1:
        raise ArgumentError("eta must lie in (0, 1)")
    if k < 1 or n < 1 or c_delta <= 0:
        raise ArgumentError("need k, n >= 1 and c_delta > 0")
    tail = math.log(1 / (2 * eta))
    out = {"bound": c_delta * k * (math.log(math.e * n) + tail)}
    out["coupon_term"] = None if c0 is None else c0 * k * (math.log(k) + tail)
    out["isometry_term"] = None if c2 is None else c2 * k * math.log(math.e * n / k)
    return out
