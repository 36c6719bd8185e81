"""Complex signals on Z_n: norms, sparsity measures and group actions.

A signal is a 1-D ``complex128`` array of length ``n >= 1`` with finite
entries. Functions here never modify their inputs.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ArgumentError, DomainError

# absolute cutoff used to reproduce the "larger than machine precision" count
MACHINE_EPS_CUTOFF = 2.22e-16


def as_signal(x) -> np.ndarray:
    """Validate ``x`` and return it as a 1-D complex128 array."""
    arr = np.asarray(x)
    if arr.ndim != 1 or arr.size == 0:
        raise ArgumentError(f"signal must be a non-empty 1-D array, got shape {arr.shape}")
    arr = arr.astype(np.complex128, copy=False)
    if not np.all(np.isfinite(arr)):
        raise ArgumentError("signal entries must be finite")
    return arr


def norms(x) -> tuple[float, float, float]:
    """Return ``(l1, l2, linf)`` of ``x``."""
    mag = np.abs(as_signal(x))
    return float(mag.sum()), float(np.sqrt(np.sum(mag * mag))), float(mag.max())


def _threshold(mag: np.ndarray, rel_tol: float, abs_tol: float | None) -> float:
    if rel_tol < 0 or (abs_tol is not None and abs_tol < 0):
        raise ArgumentError("tolerances must be nonnegative")
    if abs_tol is not None:
        return float(abs_tol)
    return float(rel_tol) * float(mag.max())


def support(x, rel_tol: float = 0.0, abs_tol: float | None = None) -> np.ndarray:
    """Indices ``j`` with ``|x[j]| > rel_tol * ||x||_inf``.

    If ``abs_tol`` is given it replaces the relative threshold.
    """
    mag = np.abs(as_signal(x))
    return np.flatnonzero(mag > _threshold(mag, rel_tol, abs_tol))


def zero_norm(x, rel_tol: float = 0.0, abs_tol: float | None = None) -> int:
    """Number of entries above the threshold (see :func:`support`)."""
    mag = np.abs(as_signal(x))
    return int(np.count_nonzero(mag > _threshold(mag, rel_tol, abs_tol)))


def numerical_sparsity(x) -> float:
    """``||x||_1^2 / ||x||_2^2``; raises DomainError on the zero signal."""
    mag = np.abs(as_signal(x))
    scale = mag.max()
    if scale == 0:
        raise DomainError("numerical sparsity is undefined for the zero signal")
    # rescale first so tiny or huge signals don't under/overflow in the squares
    mag = mag / scale
    l1 = mag.sum()
    return float(l1 * l1 / np.sum(mag * mag))


def numerical_sparsity_columns(X: np.ndarray) -> np.ndarray:
    """Numerical sparsity of every column of a 2-D array (all columns nonzero)."""
    mag = np.abs(np.asarray(X))
    scale = mag.max(axis=0)
    if np.any(scale == 0):
        raise DomainError("numerical sparsity is undefined for a zero column")
    mag = mag / scale
    l1 = mag.sum(axis=0)
    return l1 * l1 / np.sum(mag * mag, axis=0)


def translate(x, a: int) -> np.ndarray:
    """``(T^a x)[j] = x[j - a mod n]``."""
    return np.roll(as_signal(x), int(a))


def modulate(x, b: int) -> np.ndarray:
    """``(M^b x)[j] = exp(2 pi i j b / n) x[j]``."""
    x = as_signal(x)
    n = x.size
    # reduce j*b mod n in integers so the phase stays exact for large b
    jb = (np.arange(n, dtype=np.int64) * (int(b) % n)) % n
    return np.exp(2j * np.pi * jb / n) * x


def subgroup_indicator(n: int, d: int) -> np.ndarray:
    """Indicator of the subgroup ``{0, n/d, 2n/d, ...}`` of Z_n (size ``d``)."""
    if n < 1 or d < 1 or n % d:
        raise ArgumentError(f"d={d} must be a positive divisor of n={n}")
    x = np.zeros(n, dtype=np.complex128)
    x[:: n // d] = 1.0
    return x


def unit_vector(n: int, j: int = 0) -> np.ndarray:
    x = np.zeros(n, dtype=np.complex128)
    x[j % n] = 1.0
    return x


def best_k_term(v, k: int) -> np.ndarray:
    """Keep the ``k`` largest-magnitude entries; ties go to the lowest index."""
    v = as_signal(v)
    out = np.zeros_like(v)
    if k <= 0:
        return out
    # stable sort on -|v| puts equal magnitudes in index order
    keep = np.argsort(-np.abs(v), kind="stable")[:k]
    out[keep] = v[keep]
    return out


@dataclass(frozen=True)
class SparsityReport:
    n: int
    l1: float
    l2: float
    linf: float
    zero_norm: int
    ns: float
    tolerance: float

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        # repr() of a float round-trips, i.e. carries 17 significant digits
        return json.dumps(self.to_dict(), indent=2)


def sparsity_report(x, rel_tol: float = 0.0, abs_tol: float | None = None) -> SparsityReport:
    x = as_signal(x)
    l1, l2, linf = norms(x)
    return SparsityReport(
        n=int(x.size),
        l1=l1,
        l2=l2,
        linf=linf,
        zero_norm=zero_norm(x, rel_tol, abs_tol),
        ns=numerical_sparsity(x) if linf > 0 else 0.0,
        tolerance=float(abs_tol if abs_tol is not None else rel_tol),
    )
