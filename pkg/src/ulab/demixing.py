"""l1 demixing of a Fourier-sparse signal from time-sparse corruption.

Given ``z = x + eps`` with ``Ux`` and ``eps`` sparse, basis pursuit

    minimise ||v||_1  subject to  [I U] v = U z

has the intended solution ``v = [Ux; eps]`` when recovery succeeds, so
``x_hat = U* v_1`` and ``eps_hat = v_2``. (With ``v = [v_1; v_2]`` the
constraint reads ``v_1 + U v_2 = Uz``; the roles of the blocks follow from
``U z = Ux + U eps``.)

The solver is Douglas-Rachford splitting between the affine constraint and
the l1 norm. Because ``A A* = 2I`` for ``A = [I U]`` the projection onto the
constraint set is ``w + A*(b - A w)/2``, exact and cheap.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .errors import ArgumentError, ConvergenceError
from .operators import UnitaryOperator, dft_operator, haar_unitary
from .rng import generator, parallel_map
from .signal import as_signal, best_k_term, modulate, subgroup_indicator, translate

SUCCESS_RTOL = 1e-5
WINDOW = 50
OBJ_RTOL = 1e-10
MAX_ITER = 50_000


@dataclass(eq=False)
class DemixProblem:
    x_true: np.ndarray
    eps_true: np.ndarray
    U: UnitaryOperator
    label: str = "random"

    def __post_init__(self):
        self.x_true = as_signal(self.x_true)
        self.eps_true = as_signal(self.eps_true)
        if self.x_true.size != self.U.n or self.eps_true.size != self.U.n:
            raise ArgumentError("signal lengths must match the operator")

    @property
    def n(self) -> int:
        return self.U.n

    @property
    def z(self) -> np.ndarray:
        return self.x_true + self.eps_true

    def to_dict(self) -> dict:
        if self.U.kind == "dft":
            op = {"kind": "dft"}
        elif self.U.kind == "haar" and self.U.seed is not None:
            op = {"kind": "haar", "seed": self.U.seed}
        else:
            op = {"kind": "custom", "matrix": _pairs(self.U.matrix.ravel())}
        return {"n": self.n, "label": self.label, "operator": op,
                "x_true": _pairs(self.x_true), "eps_true": _pairs(self.eps_true)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "DemixProblem":
        n = int(d["n"])
        op = d["operator"]
        if op["kind"] == "dft":
            U = dft_operator(n)
        elif op["kind"] == "haar":
            U = haar_unitary(n, int(op["seed"]))
        else:
            U = UnitaryOperator(_unpairs(op["matrix"]).reshape(n, n))
        return cls(_unpairs(d["x_true"]), _unpairs(d["eps_true"]), U, d.get("label", "random"))

    @classmethod
    def from_json(cls, text: str) -> "DemixProblem":
        return cls.from_dict(json.loads(text))


def _pairs(v: np.ndarray) -> list:
    return [[float(c.real), float(c.imag)] for c in v]


def _unpairs(p) -> np.ndarray:
    a = np.asarray(p, dtype=float).reshape(-1, 2)
    return a[:, 0] + 1j * a[:, 1]


# --------------------------------------------------------------------------
# solver


@dataclass
class BPSolution:
    v: np.ndarray = field(repr=False)
    residual: float
    objective: float
    iterations: int
    converged: bool
    backend: str
    polished: bool = False


def _operator_fns(U: UnitaryOperator):
    if U.uses_fft:
        fwd, inv = (np.fft.fft, np.fft.ifft) if U.kind == "dft" else (np.fft.ifft, np.fft.fft)
        return (lambda v: fwd(v, norm="ortho")), (lambda v: inv(v, norm="ortho"))
    M = U.matrix
    Mh = M.conj().T
    return (lambda v: M @ v), (lambda v: Mh @ v)


def _polish(U: UnitaryOperator, b: np.ndarray, z: np.ndarray) -> Optional[np.ndarray]:
    """Least squares on the support of the thresholded iterate."""
    n = U.n
    mag = np.abs(z)
    if mag.max() == 0:
        return None
    S = np.flatnonzero(mag > 1e-9 * mag.max())
    if S.size > n:
        return None
    A = np.concatenate([np.eye(n), U.matrix], axis=1)[:, S]
    coef, *_ = np.linalg.lstsq(A, b, rcond=None)
    v = np.zeros(2 * n, dtype=np.complex128)
    v[S] = coef
    return v


def basis_pursuit_IU(b, U: UnitaryOperator, feas_tol: Optional[float] = None,
                     max_iter: int = MAX_ITER, gamma: Optional[float] = None,
                     polish: bool = True) -> BPSolution:
    """``argmin ||v||_1`` subject to ``[I U] v = b``.

    Converged means the feasibility residual is at most ``feas_tol``
    (default ``1e-9 ||b||_2``), the objective changed by at most a relative
    ``1e-10`` over the last 50 iterations, and the splitting fixed-point
    residual is below ``feas_tol``. A non-converged result is returned with
    ``converged=False`` rather than raised.

    With ``polish`` the result is replaced by the least-squares solution on
    the support of the thresholded iterate when that is feasible and has no
    larger l1 norm.
    """
    b = as_signal(b)
    n = U.n
    if b.size != n:
        raise ArgumentError("measurement length must match the operator")
    bnorm = float(np.linalg.norm(b))
    if feas_tol is None:
        feas_tol = 1e-9 * bnorm
    if bnorm == 0:
        return BPSolution(np.zeros(2 * n, dtype=np.complex128), 0.0, 0.0, 0, True, kernels.BACKEND)
    if feas_tol <= 0:
        raise ArgumentError("feas_tol must be positive")
    if gamma is None:
        gamma = 0.1 * bnorm / math.sqrt(n)
    fwd, adj = _operator_fns(U)
    if kernels.BACKEND == "numba" and not U.uses_fft:
        Uh = np.ascontiguousarray(U.matrix.conj().T)
        y, z, it, status = kernels.dr_basis_pursuit_numba(
            U.matrix, Uh, b, gamma, max_iter, feas_tol, feas_tol, WINDOW, OBJ_RTOL)
        backend = "numba"
    else:
        y, z, it, status = kernels.dr_basis_pursuit_numpy(
            fwd, adj, b, gamma, max_iter, feas_tol, feas_tol, WINDOW, OBJ_RTOL)
        backend = "numpy"

    def residual(v):
        return float(np.linalg.norm(v[:n] + fwd(v[n:]) - b))

    v = y
    polished = False
    if polish:
        cand = _polish(U, b, z)
        if cand is not None and residual(cand) <= feas_tol and \
                np.abs(cand).sum() <= np.abs(y).sum() * (1 + 1e-12):
            v, polished = cand, True
    return BPSolution(v, residual(v), float(np.abs(v).sum()), int(it), bool(status == 1),
                      backend, polished)


# --------------------------------------------------------------------------
# demixing


@dataclass
class DemixResult:
    x_hat: np.ndarray = field(repr=False)
    eps_hat: np.ndarray = field(repr=False)
    success: bool
    relative_error: float
    solution: BPSolution

    def to_dict(self) -> dict:
        s = self.solution
        return {"success": self.success, "relative_error": self.relative_error,
                "objective": s.objective, "residual": s.residual,
                "iterations": s.iterations, "converged": s.converged}


def demix(problem: DemixProblem, feas_tol: Optional[float] = None,
          max_iter: int = MAX_ITER) -> DemixResult:
    """Recover ``(x, eps)`` from ``z``; raises ConvergenceError if the solver stalls."""
    U = problem.U
    b = U.apply(problem.z)
    sol = basis_pursuit_IU(b, U, feas_tol, max_iter)
    if not sol.converged:
        raise ConvergenceError(
            f"basis pursuit did not converge in {sol.iterations} iterations "
            f"(residual {sol.residual:.3e})"
        )
    n = problem.n
    x_hat = U.adjoint(sol.v[:n])
    eps_hat = sol.v[n:]
    scale = float(np.linalg.norm(problem.x_true))
    err = float(np.linalg.norm(x_hat - problem.x_true))
    rel = err / scale if scale > 0 else err
    success = err <= SUCCESS_RTOL * scale if scale > 0 else err <= 1e-12
    return DemixResult(x_hat, eps_hat, bool(success), rel, sol)


def planted_problem(U: UnitaryOperator, kx: int, keps: int, seed: int = 0) -> DemixProblem:
    """``Ux`` with ``kx`` nonzeros and ``eps`` with ``keps`` nonzeros, Gaussian values."""
    n = U.n
    if not (0 <= kx <= n and 0 <= keps <= n):
        raise ArgumentError("sparsities must lie in [0, n]")
    rng = generator(seed, n, kx, keps)
    v1 = np.zeros(n, dtype=np.complex128)
    eps = np.zeros(n, dtype=np.complex128)
    i1 = rng.choice(n, size=kx, replace=False)
    i2 = rng.choice(n, size=keps, replace=False)
    v1[i1] = rng.standard_normal(kx) + 1j * rng.standard_normal(kx)
    eps[i2] = rng.standard_normal(keps) + 1j * rng.standard_normal(keps)
    return DemixProblem(U.adjoint(v1), eps, U)


def _balanced_divisor(n: int) -> int:
    """Divisor ``d`` of ``n`` minimising ``max(d, n/d)``."""
    return min((d for d in range(1, n + 1) if n % d == 0), key=lambda d: (max(d, n // d), d))


def comb_problem(n: int, a: int = 0, b: int = 0, c: complex = 1.0) -> DemixProblem:
    """``x = c T^a M^b 1_K`` and ``eps = -x`` with ``|K| = d`` a balanced divisor.

    ``z = 0`` so basis pursuit returns ``v = 0`` while ``Fx`` has ``n/d``
    nonzeros and ``eps`` has ``d``; at a perfect square both are ``sqrt(n)``.
    """
    d = _balanced_divisor(n)
    x = c * modulate(translate(subgroup_indicator(n, d), a), b)
    return DemixProblem(x, -x, dft_operator(n), label="comb")


def comb_fits(n: int, k: int) -> bool:
    d = _balanced_divisor(n)
    return max(d, n // d) <= k


@dataclass
class SweepResult:
    u_kind: str
    n_list: list
    k_grid: list
    trials: int
    rates: dict
    frontier: dict
    exponent: Optional[float]

    def to_dict(self) -> dict:
        return {"u_kind": self.u_kind, "n_list": self.n_list, "k_grid": self.k_grid,
                "trials": self.trials,
                "rates": {f"{n}:{k}": r for (n, k), r in self.rates.items()},
                "frontier": {str(n): f for n, f in self.frontier.items()},
                "exponent": self.exponent}

    def csv_rows(self) -> list:
        return [(n, k, r) for (n, k), r in sorted(self.rates.items())]


def _sweep_operator(u_kind: str, n: int, seed: int) -> UnitaryOperator:
    if u_kind == "dft":
        return dft_operator(n)
    if u_kind == "haar":
        return haar_unitary(n, seed)
    raise ArgumentError(f"unknown operator kind {u_kind!r}")


def _instance_success(u_kind, n, k, t, seed, adversarial):
    if u_kind == "dft" and adversarial and comb_fits(n, k):
        rng = generator(seed, n, k, t, 0xC0B)
        phase = np.exp(2j * np.pi * rng.random())
        prob = comb_problem(n, int(rng.integers(n)), int(rng.integers(n)), phase)
    else:
        prob = planted_problem(_sweep_operator(u_kind, n, seed + t), k, k, seed=seed + 7919 * t)
    try:
        return demix(prob).success
    except ConvergenceError:
        return False


def bottleneck_sweep(n_list: Sequence[int], k_grid: Sequence[int], u_kind: str = "dft",
                     trials: int = 10, seed: int = 0, adversarial: bool = True) -> SweepResult:
    """Success rates of l1 demixing with ``||Ux||_0 = ||eps||_0 = k``.

    For ``dft`` with ``adversarial`` every trial at a ``k`` that admits a
    comb instance uses a randomly translated, modulated and phased comb,
    which always fails. The frontier ``k*(n)`` is the largest grid ``k``
    whose success rate is at least 1/2, and ``exponent`` is the slope of
    ``log k*`` against ``log n``.
    """
    jobs = [(n, k, t) for n in n_list for k in k_grid if k <= n for t in range(trials)]
    outcomes = parallel_map(lambda j: _instance_success(u_kind, *j, seed, adversarial), jobs)
    tally: dict = {}
    for (n, k, _), ok in zip(jobs, outcomes):
        tally.setdefault((n, k), []).append(ok)
    rates = {key: float(np.mean(v)) for key, v in tally.items()}
    frontier = {}
    for n in n_list:
        good = [k for k in k_grid if (n, k) in rates and rates[(n, k)] >= 0.5]
        frontier[n] = max(good) if good else 0
    pts = [(math.log(n), math.log(f)) for n, f in frontier.items() if f > 0]
    exponent = None
    if len({p[0] for p in pts}) >= 2:
        exponent = float(np.polyfit([p[0] for p in pts], [p[1] for p in pts], 1)[0])
    return SweepResult(u_kind, list(n_list), list(k_grid), trials, rates, frontier, exponent)


def stability_ratio(v0, U: UnitaryOperator, k: int, feas_tol: Optional[float] = None) -> float:
    """``sqrt(k) ||Delta(A v0) - v0||_2 / ||v0 - (v0)_k||_1`` for ``A = [I U]``.

    Exactly ``k``-sparse ``v0`` gives 0 if recovered to 1e-10 and ``inf``
    otherwise.
    """
    v0 = as_signal(v0)
    n = U.n
    if v0.size != 2 * n:
        raise ArgumentError("v0 must have length 2n")
    b = v0[:n] + U.apply(v0[n:])
    sol = basis_pursuit_IU(b, U, feas_tol)
    if not sol.converged:
        raise ConvergenceError("basis pursuit did not converge")
    err = float(np.linalg.norm(sol.v - v0))
    tail = float(np.abs(v0 - best_k_term(v0, k)).sum())
    if tail == 0:
        return 0.0 if err <= 1e-10 else math.inf
    return math.sqrt(k) * err / tail
