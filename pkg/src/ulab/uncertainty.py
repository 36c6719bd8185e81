"""Checks of the 0-norm and numerical-sparsity uncertainty principles.

Four principles are covered, for a unitary ``U`` (the DFT ``F`` where the
principle is Fourier-specific):

* ``mult_zero_norm``: ``||x||_0 ||Fx||_0 >= n``
* ``add_zero_norm``:  ``||x||_0 + ||Fx||_0 >= n + 1`` for prime ``n``
* ``mult_ns``:        ``ns(x) ns(Ux) >= 1 / max|U_ij|^2``
* ``add_ns``:         ``ns(x) + ns(Ux) >= c n`` (holds w.h.p. for Haar ``U``,
  fails for ``F``)

plus the equality characterisation for ``F`` and a randomized search for
small values of ``ns(x) + ns(Ux)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ArgumentError, DomainError
from .gaussian import discrete_gaussian
from .operators import UnitaryOperator, dft_operator, haar_unitary, max_entry_norm
from .rng import generator, parallel_map
from .signal import (
    MACHINE_EPS_CUTOFF,
    as_signal,
    modulate,
    numerical_sparsity,
    numerical_sparsity_columns,
    subgroup_indicator,
    support,
    translate,
    zero_norm,
)

PRINCIPLES = ("mult_zero_norm", "add_zero_norm", "mult_ns", "add_ns")
# entries below this fraction of the peak are treated as exact zeros
ZERO_ROUNDING = 1e-10
EQUALITY_RTOL = 1e-8
# the constant in the high-probability additive bound for Haar matrices
ADDITIVE_CONSTANT = 1 / 450000


@dataclass
class UncertaintyReport:
    n: int
    principle: str
    lhs: float
    bound: float
    satisfied: bool
    witness: np.ndarray = field(repr=False)
    operator_kind: str
    extra: dict = field(default_factory=dict)

    def to_dict(self, include_witness: bool = False) -> dict:
        out = {
            "n": self.n,
            "principle": self.principle,
            "lhs": self.lhs,
            "bound": self.bound,
            "satisfied": self.satisfied,
            "operator_kind": self.operator_kind,
            **self.extra,
        }
        if include_witness:
            out["witness"] = [[float(v.real), float(v.imag)] for v in self.witness]
        return out


def _satisfied(lhs: float, bound: float) -> bool:
    return lhs >= bound - 1e-9 * max(1.0, bound)


def _nonzero(x) -> np.ndarray:
    x = as_signal(x)
    if not np.any(x):
        raise DomainError("uncertainty principles are stated for nonzero signals")
    return x


def _is_prime(n: int) -> bool:
    return n >= 2 and all(n % p for p in range(2, math.isqrt(n) + 1))


def _report(x, principle, lhs, bound, kind, **extra) -> UncertaintyReport:
    return UncertaintyReport(
        n=int(x.size), principle=principle, lhs=float(lhs), bound=float(bound),
        satisfied=_satisfied(lhs, bound), witness=x, operator_kind=kind, extra=extra,
    )


def check_mult_zero_norm(x) -> UncertaintyReport:
    x = _nonzero(x)
    fx = dft_operator(x.size).apply(x)
    a, b = zero_norm(x, ZERO_ROUNDING), zero_norm(fx, ZERO_ROUNDING)
    return _report(x, "mult_zero_norm", a * b, x.size, "dft", zero_norm_x=a, zero_norm_fx=b)


def check_add_zero_norm(x, threshold: float = MACHINE_EPS_CUTOFF) -> UncertaintyReport:
    """Exact counts decide ``satisfied``; counts at the absolute ``threshold``
    are reported alongside to show how fragile the principle is numerically."""
    x = _nonzero(x)
    n = x.size
    if not _is_prime(n):
        raise ArgumentError(f"n={n} is composite; the additive 0-norm principle fails there")
    fx = dft_operator(n).apply(x)
    a, b = zero_norm(x), zero_norm(fx)
    ta, tb = zero_norm(x, abs_tol=threshold), zero_norm(fx, abs_tol=threshold)
    return _report(
        x, "add_zero_norm", a + b, n + 1, "dft",
        zero_norm_x=a, zero_norm_fx=b,
        threshold=threshold, thresholded_x=ta, thresholded_fx=tb,
        thresholded_lhs=ta + tb, thresholded_satisfied=ta + tb >= n + 1,
    )


def check_mult_ns(x, U: UnitaryOperator) -> UncertaintyReport:
    x = _nonzero(x)
    a, b = numerical_sparsity(x), numerical_sparsity(U.apply(x))
    bound = 1.0 / max_entry_norm(U) ** 2
    return _report(x, "mult_ns", a * b, bound, U.kind, ns_x=a, ns_ux=b)


def check_add_ns(x, U: UnitaryOperator, c: float = ADDITIVE_CONSTANT) -> UncertaintyReport:
    """Not a theorem for a fixed ``U``; the report is data."""
    if c <= 0:
        raise ArgumentError("c must be positive")
    x = _nonzero(x)
    a, b = numerical_sparsity(x), numerical_sparsity(U.apply(x))
    return _report(x, "add_ns", a + b, c * x.size, U.kind, ns_x=a, ns_ux=b, c=c)


# --------------------------------------------------------------------------
# equality in the multiplicative principle


@dataclass(frozen=True)
class EqualityCertificate:
    is_extremal: bool
    ratio: float  # ns(x) ns(Fx) / n
    flat_x: bool
    flat_fx: bool
    zero_norm_product_is_n: bool
    support_is_coset: bool


def _flat_on_support(v: np.ndarray, rtol: float) -> bool:
    mag = np.abs(v)
    on = mag[support(v, ZERO_ROUNDING)]
    return bool(on.max() - on.min() <= rtol * on.max())


def is_subgroup_coset(indices, n: int) -> bool:
    """Whether ``indices`` is ``a + K`` for a subgroup ``K`` of Z_n."""
    s = np.unique(np.asarray(indices) % n)
    d = s.size
    if d == 0 or n % d:
        return False
    step = n // d
    return bool(np.all((s - s[0]) % step == 0))


def equality_certificate(x) -> EqualityCertificate:
    """Decide ``ns(x) ns(Fx) = n`` and report the structure behind it.

    Equality forces ``|x|`` and ``|Fx|`` to be constant on their supports,
    which happens exactly for scaled, translated, modulated subgroup
    indicators.
    """
    x = _nonzero(x)
    n = x.size
    fx = dft_operator(n).apply(x)
    ratio = numerical_sparsity(x) * numerical_sparsity(fx) / n
    zx, zf = zero_norm(x, ZERO_ROUNDING), zero_norm(fx, ZERO_ROUNDING)
    return EqualityCertificate(
        is_extremal=abs(ratio - 1.0) <= EQUALITY_RTOL,
        ratio=float(ratio),
        flat_x=_flat_on_support(x, EQUALITY_RTOL),
        flat_fx=_flat_on_support(fx, EQUALITY_RTOL),
        zero_norm_product_is_n=zx * zf == n,
        support_is_coset=is_subgroup_coset(support(x, ZERO_ROUNDING), n),
    )


def comb_family(n: int, d: int, a: int, b: int, c: complex) -> np.ndarray:
    """``c T^a M^b 1_K`` with ``K`` the subgroup of size ``d``."""
    return c * translate(modulate(subgroup_indicator(n, d), b), a)


# --------------------------------------------------------------------------
# searching for small ns(x) + ns(Ux)


@dataclass
class AdditiveSearch:
    """Smallest ``ns(x) + ns(Ux)`` found; an upper bound on the true minimum."""

    minimum_upper_bound: float
    x: np.ndarray = field(repr=False)
    source: str


def _divisors(n: int) -> list[int]:
    return [d for d in range(1, n + 1) if n % d == 0]


def _random_sparse(rng: np.random.Generator, n: int, k: int, count: int) -> np.ndarray:
    X = np.zeros((n, count), dtype=np.complex128)
    for c in range(count):
        idx = rng.choice(n, size=k, replace=False)
        X[idx, c] = rng.standard_normal(k) + 1j * rng.standard_normal(k)
    return X


def _ns_pair(U: UnitaryOperator, X: np.ndarray) -> np.ndarray:
    return numerical_sparsity_columns(X) + numerical_sparsity_columns(U.apply_columns(X))


def _ns_stacked(U: UnitaryOperator, X: np.ndarray) -> np.ndarray:
    """ns of the nullspace vector ``[Ux; -x]`` of ``[I U]``."""
    return numerical_sparsity_columns(np.concatenate([U.apply_columns(X), X], axis=0))


OBJECTIVES = {"sum": _ns_pair, "stacked": _ns_stacked}


def _ns_gradient(Y: np.ndarray) -> np.ndarray:
    """Gradient of ns with respect to (Re, Im), packed as a complex array."""
    mag = np.abs(Y)
    l1 = mag.sum(axis=0)
    l2sq = np.sum(mag * mag, axis=0)
    phase = np.divide(Y, mag, out=np.zeros_like(Y), where=mag > 0)
    return 2 * l1 / l2sq * phase - 2 * l1 ** 2 / l2sq ** 2 * Y


def _gradient(U: UnitaryOperator, X: np.ndarray, objective: str) -> np.ndarray:
    UX = U.apply_columns(X)
    if objective == "sum":
        return _ns_gradient(X) + U.adjoint_columns(_ns_gradient(UX))
    g = _ns_gradient(np.concatenate([UX, X], axis=0))
    # the sign flip on the lower block leaves magnitudes, hence ns, unchanged
    return U.adjoint_columns(g[: U.n]) + g[U.n:]


def _descend(U: UnitaryOperator, X: np.ndarray, steps: int, step0: float, objective: str):
    """Backtracking gradient descent, one column per restart."""
    f = OBJECTIVES[objective]
    X = X / np.linalg.norm(X, axis=0)
    value = f(U, X)
    eta = np.full(X.shape[1], step0)
    for _ in range(steps):
        trial = X - eta * _gradient(U, X, objective)
        trial = trial / np.linalg.norm(trial, axis=0)
        tval = f(U, trial)
        better = tval < value
        X = np.where(better, trial, X)
        value = np.where(better, tval, value)
        eta = np.where(better, eta * 1.2, eta * 0.5)
    return X, value


def minimize_additive_ns(
    U: UnitaryOperator,
    candidate_budget: int = 200,
    seed: int = 0,
    restarts: int = 10,
    steps: int = 200,
    step_size: Optional[float] = None,
    objective: str = "sum",
) -> AdditiveSearch:
    """Upper-bound ``min_x ns(x) + ns(Ux)`` by candidates plus local descent.

    Candidates: standard basis vectors and their pullbacks ``U* e_j``,
    subgroup indicators and their pullbacks, the discrete Gaussian with a
    few translates/modulations and pullbacks, and ``candidate_budget``
    random sparse vectors (half pulled back through ``U*``). The best
    ``restarts`` candidates, lightly perturbed, seed a backtracking
    gradient descent of ``steps`` steps starting at ``step_size``
    (default ``1/n``).

    With ``objective="stacked"`` the quantity minimised is instead
    ``ns([Ux; -x])``, which never exceeds ``ns(x) + ns(Ux)``.
    """
    if objective not in OBJECTIVES:
        raise ArgumentError(f"unknown objective {objective!r}")
    f = OBJECTIVES[objective]
    n = U.n
    rng = generator(seed, n, 0xADD5)
    mat = U.matrix
    best_val = np.inf
    best_x = None
    best_src = ""
    pool_vals: list[np.ndarray] = []
    pool_X: list[np.ndarray] = []

    def consider(X: np.ndarray, label: str, vals: Optional[np.ndarray] = None):
        nonlocal best_val, best_x, best_src
        if vals is None:
            vals = f(U, X)
        i = int(np.argmin(vals))
        if vals[i] < best_val:
            best_val, best_x, best_src = float(vals[i]), X[:, i].copy(), label
        pool_vals.append(vals)
        pool_X.append(X)

    eye = np.eye(n, dtype=np.complex128)
    rows = mat.conj().T.copy()
    if objective == "sum":
        # ns(e_j) = 1 and ns(U e_j) is the ns of column j; likewise for rows
        consider(eye, "basis", 1.0 + numerical_sparsity_columns(mat))
        consider(rows, "basis_pullback", 1.0 + numerical_sparsity_columns(mat.T))
    else:
        consider(eye, "basis")
        consider(rows, "basis_pullback")

    structured = [subgroup_indicator(n, d) for d in _divisors(n)]
    g = discrete_gaussian(n)
    structured.append(g)
    for _ in range(4):
        a, b = rng.integers(n, size=2)
        structured.append(modulate(translate(g, a), b))
    S = np.stack(structured, axis=1)
    consider(S, "structured")
    consider(U.adjoint_columns(S), "structured_pullback")

    if candidate_budget > 0:
        levels = sorted({max(1, int(round(n ** e))) for e in np.linspace(0, 1, 8)})
        per = max(1, candidate_budget // (2 * len(levels)))
        for k in levels:
            consider(_random_sparse(rng, n, k, per), f"random_sparse_{k}")
            consider(U.adjoint_columns(_random_sparse(rng, n, k, per)), f"random_sparse_pullback_{k}")

    if restarts > 0 and steps > 0:
        vals = np.concatenate(pool_vals)
        Xall = np.concatenate(pool_X, axis=1)
        top = np.argsort(vals, kind="stable")[:restarts]
        X0 = Xall[:, top] / np.linalg.norm(Xall[:, top], axis=0)
        noise = rng.standard_normal(X0.shape) + 1j * rng.standard_normal(X0.shape)
        X0 = X0 + 1e-3 * noise / math.sqrt(n)
        X, vals = _descend(U, X0, steps, step_size if step_size else 1.0 / n, objective)
        i = int(np.argmin(vals))
        if vals[i] < best_val:
            best_val, best_x, best_src = float(vals[i]), X[:, i].copy(), "descent"

    return AdditiveSearch(minimum_upper_bound=best_val, x=best_x, source=best_src)


@dataclass
class AdditiveScan:
    n: int
    seeds: list[int]
    haar_minima: list[float]
    threshold: float
    fraction_above_threshold: float
    dft_minimum: Optional[float]

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "seeds": self.seeds,
            "haar_minima": self.haar_minima,
            "threshold": self.threshold,
            "fraction_above_threshold": self.fraction_above_threshold,
            "dft_minimum": self.dft_minimum,
            "note": "minima are upper bounds from a finite candidate search",
        }


def additive_montecarlo(
    n: int,
    num_operators: int,
    candidate_budget: int = 200,
    seed: int = 0,
    include_dft: bool = True,
    restarts: int = 10,
    steps: int = 200,
) -> AdditiveScan:
    """Search ``min ns(x) + ns(Ux)`` for Haar draws seeded ``seed + i``."""
    if n < 4:
        raise ArgumentError("n must be at least 4")
    seeds = [seed + i for i in range(num_operators)]

    def one(s: int) -> float:
        U = haar_unitary(n, s)
        return minimize_additive_ns(U, candidate_budget, s, restarts, steps).minimum_upper_bound

    minima = parallel_map(one, seeds)
    threshold = ADDITIVE_CONSTANT * n
    frac = float(np.mean([m >= threshold for m in minima])) if minima else float("nan")
    dft_min = None
    if include_dft:
        dft_min = minimize_additive_ns(
            dft_operator(n), candidate_budget, seed, restarts, steps
        ).minimum_upper_bound
    return AdditiveScan(n, seeds, [float(m) for m in minima], threshold, frac, dft_min)
