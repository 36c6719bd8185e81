"""Periodized-and-sampled Schwartz functions, in particular the discrete Gaussian.

Periodizing ``f`` with unit period and sampling at multiples of ``1/n``
gives a signal whose DFT is the periodization of ``fhat`` (Poisson
summation). For ``f(t) = exp(-n pi t^2)`` both sides coincide, so the
resulting discrete Gaussian is a fixed point of the unitary DFT.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import ArgumentError

TAIL_TOL = 1e-300
MAX_WINDOW = 100_000

Envelope = Callable[[float], float]


@dataclass(frozen=True)
class SchwarzPair:
    """A rapidly decaying function and its Fourier transform.

    ``fhat(xi) = integral f(t) exp(-2 pi i xi t) dt``. ``decay_bound(r)``
    must bound ``|f(t)|`` for ``|t| >= r`` and be nonincreasing;
    ``fhat_decay_bound`` does the same for ``fhat`` and defaults to
    ``decay_bound``. Both ``f`` and ``fhat`` must accept numpy arrays.
    """

    f: Callable[[np.ndarray], np.ndarray]
    fhat: Callable[[np.ndarray], np.ndarray]
    decay_bound: Envelope
    fhat_decay_bound: Optional[Envelope] = None

    @property
    def spectral_decay(self) -> Envelope:
        return self.fhat_decay_bound or self.decay_bound


def gaussian_pair(width: float) -> SchwarzPair:
    """``f(t) = exp(-width pi t^2)`` and ``fhat(xi) = exp(-pi xi^2 / width) / sqrt(width)``."""
    if width <= 0:
        raise ArgumentError("width must be positive")
    root = math.sqrt(width)
    return SchwarzPair(
        f=lambda t: np.exp(-width * np.pi * np.square(t)),
        fhat=lambda xi: np.exp(-np.pi * np.square(xi) / width) / root,
        decay_bound=lambda r: math.exp(-width * math.pi * r * r),
        fhat_decay_bound=lambda r: math.exp(-math.pi * r * r / width) / root,
    )


def _periodize(g: Callable, decay: Envelope, base: np.ndarray, period: float) -> np.ndarray:
    """``sum_{p in Z} g(base + p * period)`` with ``base`` in ``[0, period)``.

    Terms with ``|p| > R`` have ``|argument| >= R * period``, so the window
    grows until ``decay(R * period)`` is negligible against the retained sum.
    """
    total = np.asarray(g(base), dtype=np.complex128)
    total = total + g(base - period)
    if decay(MAX_WINDOW * period) > TAIL_TOL * float(np.abs(total).max()):
        raise ArgumentError("decay bound does not certify a summable tail")
    radius = 1
    while True:
        scale = float(np.abs(total).max())
        if decay(radius * period) <= TAIL_TOL * scale:
            return total
        radius += 1
        if radius > MAX_WINDOW:
            raise ArgumentError("decay bound does not certify a summable tail")
        total = total + g(base + (radius - 1) * period) + g(base - radius * period)


def periodize_sample(pair: SchwarzPair, n: int) -> np.ndarray:
    """``x[j] = sum_{j'} f(j/n + j')`` for ``j = 0..n-1``."""
    if n < 1:
        raise ArgumentError("n must be positive")
    return _periodize(pair.f, pair.decay_bound, np.arange(n) / n, 1.0)


def periodized_spectrum(pair: SchwarzPair, n: int) -> np.ndarray:
    """``sqrt(n) * sum_{k'} fhat(k + k' n)`` for ``k = 0..n-1``.

    This is what the DFT of :func:`periodize_sample` must equal.
    """
    if n < 1:
        raise ArgumentError("n must be positive")
    base = np.arange(n, dtype=np.float64)
    return math.sqrt(n) * _periodize(pair.fhat, pair.spectral_decay, base, float(n))


def discrete_gaussian(n: int) -> np.ndarray:
    """Periodized, sampled ``exp(-n pi t^2)``; real, nonnegative, DFT-invariant.

    Entries far from 0 mod n underflow to exactly zero for large ``n``.
    """
    return periodize_sample(gaussian_pair(n), n)


@dataclass(frozen=True)
class GaussianBounds:
    n: int
    l2_sq_lower: float
    l1_upper: float
    ns_upper: Optional[float]

    @property
    def applicable(self) -> bool:
        return self.ns_upper is not None

    def holds_for(self, x) -> bool:
        """Check all three bounds against a computed signal."""
        mag = np.abs(np.asarray(x))
        l1 = float(mag.sum())
        l2_sq = float(np.sum(mag * mag))
        ok = l1 <= self.l1_upper and l2_sq >= self.l2_sq_lower
        if self.applicable:
            ok = ok and l1 * l1 / l2_sq <= self.ns_upper
        return ok


def gaussian_bounds(n: int) -> GaussianBounds:
    """Integral-comparison bounds on the discrete Gaussian's norms.

    ``||x||_2^2 >= sqrt(n/2) - 1`` and ``||x||_1 <= sqrt(n) + 1``, hence
    ``ns(x) <= (sqrt(n) + 1)^2 / (sqrt(n/2) - 1)``. The last bound needs a
    positive denominator; for ``n <= 2`` it is reported as ``None``.
    """
    if n < 1:
        raise ArgumentError("n must be positive")
    lower = math.sqrt(n / 2) - 1
    upper = math.sqrt(n) + 1
    ns_upper = upper * upper / lower if lower > 0 else None
    return GaussianBounds(n=n, l2_sq_lower=lower, l1_upper=upper, ns_upper=ns_upper)
