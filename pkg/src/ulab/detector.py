"""Noisy Fourier queries and the l1 detector for sparse signals.

A query at frequency ``j`` returns ``(Fx)[j] + eps`` with iid noise. The
detector draws ``m`` uniform frequencies and rejects ``H0: x = 0`` when the
sum of response magnitudes exceeds ``tau = 2 m alpha``. With
``alpha = E|eps| <= 1/(8k)`` and ``m >= (8k + 2v^2)/p`` both error
probabilities are at most ``p`` against any ``x`` with ``||x||_0 <= k`` and
``||x||_2^2 = n/k``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import ArgumentError, HypothesisError
from .rng import chunks, generator, parallel_map
from .signal import as_signal, subgroup_indicator, translate

FAMILIES = ("const", "gauss", "disk")
SHAPES = ("flat", "spike", "comb")
_CHUNK_ELEMENTS = 1 << 20


@dataclass(frozen=True)
class NoiseModel:
    """iid complex noise with declared ``alpha = E|eps|`` and ``beta^2 = E|eps|^2``.

    ``const``: ``|eps| = scale`` with uniform phase.
    ``gauss``: circular complex Gaussian with ``E|eps|^2 = scale^2``.
    ``disk``: uniform on the disk of radius ``scale``.
    """

    family: str
    scale: float

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ArgumentError(f"unknown noise family {self.family!r}")
        if not self.scale >= 0:
            raise ArgumentError("noise scale must be nonnegative")

    @classmethod
    def parse(cls, spec: str) -> "NoiseModel":
        """``"const:0.125"`` style specification."""
        try:
            family, value = spec.split(":")
            return cls(family, float(value))
        except ValueError as exc:
            raise ArgumentError(f"bad noise spec {spec!r}") from exc

    @property
    def alpha(self) -> float:
        s = self.scale
        return {"const": s, "gauss": s * math.sqrt(math.pi) / 2, "disk": 2 * s / 3}[self.family]

    @property
    def beta(self) -> float:
        s = self.scale
        return {"const": s, "gauss": s, "disk": s / math.sqrt(2)}[self.family]

    @property
    def v(self) -> float:
        """Coefficient of variation of ``|eps|``; 0 for the noiseless model."""
        a = self.alpha
        if a == 0:
            return 0.0
        return math.sqrt(max(self.beta ** 2 - a * a, 0.0)) / a

    def sample(self, rng: np.random.Generator, shape) -> np.ndarray:
        s = self.scale
        if self.family == "const":
            return s * np.exp(2j * np.pi * rng.random(shape))
        if self.family == "gauss":
            return s * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2)
        radius = s * np.sqrt(rng.random(shape))
        return radius * np.exp(2j * np.pi * rng.random(shape))

    def to_dict(self) -> dict:
        return {"family": self.family, "scale": self.scale,
                "alpha": self.alpha, "beta": self.beta, "v": self.v}


def make_hypothesis_signal(n: int, k: int, shape: str = "flat", seed: int = 0) -> np.ndarray:
    """An ``H1`` signal: ``||x||_0 <= k`` and ``||x||_2^2 = n/k``.

    ``flat``: unimodular random phases on a random ``k``-set.
    ``spike``: ``sqrt(n/k) e_j`` at a random ``j``.
    ``comb``: a random translate of the scaled size-``k`` subgroup indicator,
    whose DFT has unit-magnitude entries on the dual subgroup.
    """
    if not 1 <= k <= n:
        raise ArgumentError("need 1 <= k <= n")
    rng = generator(seed, n, k, SHAPES.index(shape) if shape in SHAPES else 99)
    x = np.zeros(n, dtype=np.complex128)
    if shape == "flat":
        idx = rng.choice(n, size=k, replace=False)
        x[idx] = np.exp(2j * np.pi * rng.random(k)) * math.sqrt(n) / k
    elif shape == "spike":
        x[rng.integers(n)] = math.sqrt(n / k)
    elif shape == "comb":
        if n % k:
            raise ArgumentError(f"comb shape needs k | n (k={k}, n={n})")
        x = translate(subgroup_indicator(n, k), int(rng.integers(n))) * (math.sqrt(n) / k)
    else:
        raise ArgumentError(f"unknown shape {shape!r}")
    return x


def _batch_signals(n: int, k: int, shape: str, count: int, rng) -> np.ndarray:
    X = np.zeros((count, n), dtype=np.complex128)
    rows = np.arange(count)[:, None]
    if shape == "flat":
        idx = np.argsort(rng.random((count, n)), axis=1)[:, :k]
        X[rows, idx] = np.exp(2j * np.pi * rng.random((count, k))) * math.sqrt(n) / k
    elif shape == "spike":
        X[rows[:, 0], rng.integers(0, n, count)] = math.sqrt(n / k)
    else:
        step = n // k
        idx = (rng.integers(0, n, count)[:, None] + step * np.arange(k)) % n
        X[rows, idx] = math.sqrt(n) / k
    return X


def query(x, j: int, noise: NoiseModel, seed: int = 0) -> complex:
    """One noisy Fourier coefficient ``(Fx)[j] + eps``."""
    x = as_signal(x)
    n = x.size
    if not 0 <= j < n:
        raise ArgumentError(f"query index {j} outside [0, {n})")
    coeff = np.sum(x * np.exp(-2j * np.pi * ((np.arange(n) * j) % n) / n)) / math.sqrt(n)
    eps = noise.sample(generator(seed, n, j), ()) if noise.scale else 0.0
    return complex(coeff + eps)


def l1_detect(responses: Sequence[complex], tau: float) -> bool:
    """Reject ``H0`` iff ``sum |y_i| > tau`` (strict)."""
    if tau < 0:
        raise ArgumentError("tau must be nonnegative")
    return float(np.abs(np.asarray(responses, dtype=np.complex128)).sum()) > tau


@dataclass(frozen=True)
class DetectionOutcome:
    m: int
    tau: float
    statistic: float
    rejected: bool
    truth: str


def sample_count(k: int, p: float, v: float) -> int:
    """``ceil((8k + 2 v^2) / p)``."""
    return math.ceil((8 * k + 2 * v * v) / p)


@dataclass
class DetectionResult:
    n: int
    k: int
    p: float
    m: int
    tau: float
    trials: int
    fp_rate: float
    fn_rate: float
    sigma: float
    noise: dict
    per_shape: dict = field(default_factory=dict)

    @property
    def within_bounds(self) -> bool:
        limit = self.p + 3 * self.sigma
        return self.fp_rate <= limit and self.fn_rate <= limit

    def to_dict(self) -> dict:
        return {**self.__dict__, "within_bounds": self.within_bounds}


def _stats_h0(noise: NoiseModel, m: int, count: int, rng) -> np.ndarray:
    if noise.scale == 0:
        return np.zeros(count)
    return np.abs(noise.sample(rng, (count, m))).sum(axis=1)


def _stats_h1(n: int, k: int, shape: str, noise: NoiseModel, m: int, count: int, rng) -> np.ndarray:
    X = _batch_signals(n, k, shape, count, rng)
    FX = np.fft.fft(X, axis=1, norm="ortho")
    idx = rng.integers(0, n, (count, m))
    Y = np.take_along_axis(FX, idx, axis=1)
    if noise.scale:
        Y = Y + noise.sample(rng, (count, m))
    return np.abs(Y).sum(axis=1)


def detection_experiment(n: int, k: int, noise: NoiseModel, p: float, trials: int,
                         seed: int = 0, shapes: Optional[Sequence[str]] = None,
                         tau: Optional[float] = None, m: Optional[int] = None) -> DetectionResult:
    """Monte Carlo false-positive / false-negative rates of the l1 detector.

    ``trials`` H0 worlds and ``trials`` H1 worlds per shape. The reported
    ``fn_rate`` is the worst shape. ``tau`` and ``m`` override the default
    ``2 m alpha`` and ``ceil((8k + 2v^2)/p)`` (used for monotonicity checks).
    """
    if not 0 < p < 1:
        raise ArgumentError("p must lie in (0, 1)")
    if not 1 <= k <= n:
        raise ArgumentError("need 1 <= k <= n")
    if noise.alpha > 1 / (8 * k):
        raise HypothesisError(f"noise alpha={noise.alpha} exceeds 1/(8k)={1 / (8 * k)}")
    if shapes is None:
        shapes = [s for s in SHAPES if s != "comb" or n % k == 0]
    for s in shapes:
        if s not in SHAPES:
            raise ArgumentError(f"unknown shape {s!r}")
        if s == "comb" and n % k:
            raise ArgumentError("comb shape needs k | n")
    m = sample_count(k, p, noise.v) if m is None else int(m)
    tau = 2 * m * noise.alpha if tau is None else float(tau)
    spans = _spans(n, m, trials)

    def h0(span):
        lo, hi = span
        return _stats_h0(noise, m, hi - lo, generator(seed, 0, lo))

    fp = float(np.mean(np.concatenate(parallel_map(h0, spans)) > tau)) if trials else 0.0
    per_shape = {}
    for s_idx, shape in enumerate(shapes):
        def h1(span, shape=shape, s_idx=s_idx):
            lo, hi = span
            return _stats_h1(n, k, shape, noise, m, hi - lo, generator(seed, 1 + s_idx, lo))

        stats = np.concatenate(parallel_map(h1, spans)) if trials else np.zeros(0)
        per_shape[shape] = {"fn_rate": float(np.mean(stats <= tau)) if trials else 0.0}
    fn = max((v["fn_rate"] for v in per_shape.values()), default=0.0)
    sigma = math.sqrt(p * (1 - p) / trials) if trials else float("inf")
    return DetectionResult(n, k, p, m, tau, trials, fp, fn, sigma, noise.to_dict(), per_shape)


def _spans(n: int, m: int, trials: int):
    return chunks(trials, max(1, _CHUNK_ELEMENTS // max(n, m)))


def experiment_signals(n: int, k: int, shape: str, trials: int, seed: int = 0,
                       shape_index: int = 0, m: int = 1) -> np.ndarray:
    """The ``(trials, n)`` H1 signals a ``detection_experiment`` call draws.

    ``shape_index`` is the position of ``shape`` in that call's shape list
    and ``m`` its sample count; both fix the random streams.
    """
    parts = [_batch_signals(n, k, shape, hi - lo, generator(seed, 1 + shape_index, lo))
             for lo, hi in _spans(n, m, trials)]
    return np.concatenate(parts) if parts else np.zeros((0, n), dtype=np.complex128)


def noise_exceedance(noise: NoiseModel, m: int, trials: int, seed: int = 0) -> float:
    """Empirical ``P(sum_{i<m} |eps_i| > 2 m alpha)``."""
    return float(np.mean(_stats_h0(noise, m, trials, generator(seed, 0xE0)) > 2 * m * noise.alpha))


def empirical_moments(noise: NoiseModel, draws: int, seed: int = 0) -> tuple[float, float]:
    """Sample ``(E|eps|, sqrt(E|eps|^2))`` for checking the declared values."""
    mag = np.abs(noise.sample(generator(seed, 0x30), draws))
    return float(mag.mean()), float(np.sqrt(np.mean(mag * mag)))


@dataclass(frozen=True)
class MomentCheck:
    ey: float
    ey2: float
    ey_lower_ok: bool
    ey2_ok: bool


def moment_check(x, k: int) -> MomentCheck:
    """Exact ``E|(Fx)[j]|`` and ``E|(Fx)[j]|^2`` over uniform ``j``.

    For an ``H1`` signal these are ``>= 1/k`` and ``= 1/k``.
    """
    x = as_signal(x)
    n = x.size
    if np.count_nonzero(x) > k:
        raise ArgumentError(f"signal has more than k={k} nonzeros")
    energy = float(np.vdot(x, x).real)
    if abs(energy - n / k) > 1e-9 * (n / k):
        raise ArgumentError(f"||x||_2^2 = {energy}, expected n/k = {n / k}")
    mag = np.abs(np.fft.fft(x, norm="ortho"))
    ey = float(mag.sum() / n)
    ey2 = float(np.sum(mag * mag) / n)
    return MomentCheck(ey, ey2, ey >= 1 / k - 1e-9, abs(ey2 - 1 / k) <= 1e-9)
