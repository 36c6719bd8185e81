"""Unitary operators on C^n: the DFT, Haar-random draws, and user matrices."""
from __future__ import annotations

import itertools
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .errors import ArgumentError
from .rng import generator
from .signal import as_signal

KINDS = ("dft", "inverse_dft", "haar", "custom")
_MAGIC = b"ULAB"
_HEADER = 16


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and n & (n - 1) == 0


@dataclass(frozen=True, eq=False)
class UnitaryOperator:
    """An ``n x n`` unitary matrix tagged with where it came from.

    ``apply``/``adjoint`` route through the FFT when the operator is the
    (inverse) DFT and ``n`` is a power of two; otherwise they use the dense
    matrix.
    """

    matrix: np.ndarray
    kind: str = "custom"
    seed: int | None = None
    fast: bool = field(default=True, compare=False)

    def __post_init__(self):
        m = np.ascontiguousarray(self.matrix, dtype=np.complex128)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ArgumentError(f"operator must be square, got {m.shape}")
        if self.kind not in KINDS:
            raise ArgumentError(f"unknown operator kind {self.kind!r}")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def uses_fft(self) -> bool:
        return self.fast and self.kind in ("dft", "inverse_dft") and _is_power_of_two(self.n)

    def apply(self, x) -> np.ndarray:
        x = as_signal(x)
        if x.size != self.n:
            raise ArgumentError(f"dimension mismatch: operator n={self.n}, signal n={x.size}")
        if self.uses_fft:
            if self.kind == "dft":
                return np.fft.fft(x, norm="ortho")
            return np.fft.ifft(x, norm="ortho")
        return self.matrix @ x

    def adjoint(self, y) -> np.ndarray:
        y = as_signal(y)
        if y.size != self.n:
            raise ArgumentError(f"dimension mismatch: operator n={self.n}, signal n={y.size}")
        if self.uses_fft:
            if self.kind == "dft":
                return np.fft.ifft(y, norm="ortho")
            return np.fft.fft(y, norm="ortho")
        return self.matrix.conj().T @ y

    def apply_columns(self, X: np.ndarray) -> np.ndarray:
        """Apply to every column of a 2-D array."""
        if self.uses_fft:
            f = np.fft.fft if self.kind == "dft" else np.fft.ifft
            return f(X, axis=0, norm="ortho")
        return self.matrix @ X

    def adjoint_columns(self, Y: np.ndarray) -> np.ndarray:
        if self.uses_fft:
            f = np.fft.ifft if self.kind == "dft" else np.fft.fft
            return f(Y, axis=0, norm="ortho")
        return self.matrix.conj().T @ Y

    def inverse(self) -> "UnitaryOperator":
        kind = {"dft": "inverse_dft", "inverse_dft": "dft"}.get(self.kind, "custom")
        return UnitaryOperator(self.matrix.conj().T, kind=kind)

    def unitarity_error(self) -> float:
        """Entrywise ``max |U*U - I|``."""
        gram = self.matrix.conj().T @ self.matrix
        return float(np.abs(gram - np.eye(self.n)).max())

    # -- binary container: 16-byte header ("ULAB", u32 n, u32 kind, u32 reserved = 0)
    # followed by the row-major complex128 LE body

    def to_bytes(self) -> bytes:
        header = _MAGIC + struct.pack("<III", self.n, KINDS.index(self.kind), 0)
        return header + self.matrix.astype("<c16").tobytes(order="C")

    @classmethod
    def from_bytes(cls, data: bytes) -> "UnitaryOperator":
        if len(data) < _HEADER or data[:4] != _MAGIC:
            raise ArgumentError("not a ULAB operator container")
        n, kind, _ = struct.unpack("<III", data[4:_HEADER])
        if kind >= len(KINDS):
            raise ArgumentError(f"bad kind code {kind}")
        body = data[_HEADER:]
        if len(body) != 16 * n * n:
            raise ArgumentError(f"container body has {len(body)} bytes, expected {16 * n * n}")
        mat = np.frombuffer(body, dtype="<c16").reshape(n, n).astype(np.complex128)
        return cls(mat, kind=KINDS[kind])

    def save(self, path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path) -> "UnitaryOperator":
        return cls.from_bytes(Path(path).read_bytes())


def dft_matrix(n: int) -> np.ndarray:
    """Dense ``F[k, j] = exp(-2 pi i j k / n) / sqrt(n)``."""
    if n < 1:
        raise ArgumentError("n must be positive")
    jk = np.outer(np.arange(n), np.arange(n)) % n
    return np.exp(-2j * np.pi * jk / n) / np.sqrt(n)


def dft_operator(n: int, fast: bool = True) -> UnitaryOperator:
    return UnitaryOperator(dft_matrix(n), kind="dft", fast=fast)


def identity_operator(n: int) -> UnitaryOperator:
    return UnitaryOperator(np.eye(n), kind="custom")


def apply(U: UnitaryOperator, x) -> np.ndarray:
    return U.apply(x)


def max_entry_norm(U: UnitaryOperator) -> float:
    """``max |U[i, j]|``, which is the induced 1 -> inf norm."""
    return float(np.abs(U.matrix).max())


def haar_matrix(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR of a complex Ginibre matrix.

    The columns of Q are rephased so that R has a positive real diagonal;
    without this step the law of Q depends on the QR implementation.
    """
    if n < 1:
        raise ArgumentError("n must be positive")
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def haar_unitary(n: int, seed: int) -> UnitaryOperator:
    return UnitaryOperator(haar_matrix(n, generator(seed, n)), kind="haar", seed=int(seed))


def _is_prime(n: int) -> bool:
    return n >= 2 and all(n % p for p in range(2, int(n ** 0.5) + 1))


def min_abs_minor(M: np.ndarray, max_blocks: int = 200_000) -> float:
    """Smallest ``|det|`` over all square submatrices of ``M``."""
    M = np.ascontiguousarray(M, dtype=np.complex128)
    n = M.shape[0]
    best = np.inf
    for s in range(1, n + 1):
        combos = np.array(list(itertools.combinations(range(n), s)), dtype=np.int64)
        chunk = max(1, max_blocks // len(combos))
        for lo in range(0, len(combos), chunk):
            rows = combos[lo:lo + chunk]
            best = min(best, float(kernels.submatrix_dets(M, rows, combos).min()))
    return best


def chebotarev_check(n: int, tol: float = 1e-10) -> bool:
    """True iff every square submatrix of the n-point DFT is invertible.

    Only defined for primes ``n <= 13``; the enumeration is exponential.
    """
    if not _is_prime(n):
        raise ArgumentError(f"n={n} is not prime; the DFT has singular minors there")
    if n > 13:
        raise ArgumentError("enumeration limited to n <= 13")
    return min_abs_minor(dft_matrix(n)) > tol
