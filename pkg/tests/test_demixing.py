import json
import math

import numpy as np
import pytest

from oracles import bp_support_oracle
from ulab.demixing import (
    DemixProblem,
    basis_pursuit_IU,
    bottleneck_sweep,
    comb_problem,
    demix,
    planted_problem,
    stability_ratio,
)
from ulab.errors import ArgumentError, ConvergenceError
from ulab.gaussian import discrete_gaussian
from ulab.operators import dft_operator, haar_unitary
from ulab.rng import generator


def _iu(U):
    return np.concatenate([np.eye(U.n), U.matrix], axis=1)


def test_zero_measurement():
    sol = basis_pursuit_IU(np.zeros(8), dft_operator(8))
    assert sol.converged and sol.objective == 0 and not np.any(sol.v)


def test_single_column_measurement():
    U = haar_unitary(16, 0)
    b = U.matrix[:, 0]
    sol = basis_pursuit_IU(b, U)
    assert sol.converged
    assert sol.objective <= 1 + 1e-8
    assert sol.residual <= 1e-9 * np.linalg.norm(b)


def test_bad_feas_tol():
    with pytest.raises(ArgumentError):
        basis_pursuit_IU(np.ones(4), dft_operator(4), feas_tol=0.0)


@pytest.mark.parametrize("seed", range(6))
def test_planted_recovery_against_oracle(seed):
    n = 32
    U = haar_unitary(n, seed)
    rng = generator(seed, 99)
    v0 = np.zeros(2 * n, complex)
    idx = rng.choice(2 * n, 2, replace=False)
    v0[idx] = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    sol = basis_pursuit_IU(v0[:n] + U.apply(v0[n:]), U)
    assert sol.converged
    assert np.linalg.norm(sol.v - v0) <= 1e-6


def test_objective_matches_support_oracle_small():
    # F_n with n >= 5 has coherence below the uniqueness threshold for 2-sparse vectors
    for n in (5, 8):
        U = dft_operator(n)
        A = _iu(U)
        rng = generator(n, 1)
        for _ in range(5):
            v0 = np.zeros(2 * n, complex)
            v0[rng.choice(2 * n, 2, replace=False)] = rng.standard_normal(2) + 1j * rng.standard_normal(2)
            b = A @ v0
            best, _ = bp_support_oracle(A, b)
            sol = basis_pursuit_IU(b, U)
            assert sol.objective == pytest.approx(best, abs=1e-6)


def test_backends_agree():
    from ulab import kernels

    n = 16
    U = haar_unitary(n, 3)
    b = U.matrix[:, 2] + 0.5 * np.eye(n)[5]
    y1, *_ = kernels.dr_basis_pursuit_numpy(lambda v: U.matrix @ v, lambda v: U.matrix.conj().T @ v,
                                            b, 0.05, 5000, 1e-10, 1e-10, 50, 1e-10)
    y2, *_ = kernels.dr_basis_pursuit_numba(U.matrix, U.matrix.conj().T.copy(), b, 0.05, 5000,
                                            1e-10, 1e-10, 50, 1e-10)
    assert np.allclose(y1, y2, atol=1e-9)


def test_non_convergence_reported():
    U = haar_unitary(16, 1)
    b = generator(0).standard_normal(16) + 0j
    sol = basis_pursuit_IU(b, U, max_iter=3)
    assert not sol.converged
    prob = planted_problem(U, 3, 3, seed=0)
    with pytest.raises(ConvergenceError):
        demix(prob, max_iter=3)


@pytest.mark.parametrize("n", [16, 64])
def test_fourier_one_sparse_demix(n):
    U = dft_operator(n)
    prob = DemixProblem(U.adjoint(np.eye(n)[3]), np.zeros(n), U)
    res = demix(prob)
    assert res.success


@pytest.mark.parametrize("n", [16, 64, 256])
def test_comb_failure(n):
    prob = comb_problem(n)
    assert not np.any(prob.z)
    assert np.count_nonzero(np.abs(prob.U.apply(prob.x_true)) > 1e-9) == math.isqrt(n)
    res = demix(prob)
    assert not res.success
    assert res.solution.objective == 0


def test_haar_three_sparse_rate():
    ok = sum(demix(planted_problem(haar_unitary(64, s), 3, 3, seed=s)).success for s in range(20))
    assert ok >= 18


def test_nullspace_perturbation_not_preferred():
    # adding the Gaussian nullspace direction only raises the l1 norm of the intended solution
    n = 64
    U = dft_operator(n)
    g = discrete_gaussian(n)
    prob = planted_problem(U, 2, 2, seed=4)
    v_true = np.concatenate([U.apply(prob.x_true), prob.eps_true])
    b = U.apply(prob.z)
    sol = basis_pursuit_IU(b, U)
    for t in (0.1, 1.0):
        w = v_true + t * np.concatenate([U.apply(g), -g])
        assert np.linalg.norm(_iu(U) @ w - b) <= 1e-9 * np.linalg.norm(b) * 100
        assert sol.objective <= np.abs(w).sum() + 1e-9


def test_problem_json_round_trip():
    for U in (dft_operator(8), haar_unitary(8, 5)):
        prob = planted_problem(U, 2, 1, seed=1)
        back = DemixProblem.from_json(prob.to_json())
        assert np.array_equal(back.U.matrix, prob.U.matrix)
        assert np.array_equal(back.x_true, prob.x_true)
        assert np.array_equal(back.eps_true, prob.eps_true)
    custom = DemixProblem(np.ones(2), np.zeros(2), haar_unitary(2, 0).inverse())
    assert json.loads(custom.to_json())["operator"]["kind"] == "custom"
    assert np.allclose(DemixProblem.from_json(custom.to_json()).U.matrix, custom.U.matrix)


def test_sweep_dft_vs_haar():
    d = bottleneck_sweep([16, 64], [1, 2, 4, 8], "dft", trials=4, seed=0)
    h = bottleneck_sweep([16, 64], [1, 2, 4, 8], "haar", trials=4, seed=0)
    assert d.rates[(16, 4)] == 0 and d.rates[(64, 8)] == 0
    assert h.frontier[64] > d.frontier[64]
    assert d.to_dict()["rates"]["16:4"] == 0


def test_sweep_k0_trivial():
    d = bottleneck_sweep([16], [0], "dft", trials=2)
    assert d.rates[(16, 0)] == 1.0


def test_stability_ratio():
    n = 32
    U = haar_unitary(n, 6)
    rng = generator(6)
    v0 = np.zeros(2 * n, complex)
    v0[rng.choice(2 * n, 2, replace=False)] = [1.0, -0.7j]
    assert stability_ratio(v0, U, 2) == 0.0
    tail = 1e-3 * (rng.standard_normal(2 * n) + 1j * rng.standard_normal(2 * n))
    r = stability_ratio(v0 + tail, U, 2)
    assert 0 < r <= 30


def test_stability_ratio_dense_target_finite():
    n = 16
    U = haar_unitary(n, 0)
    g = discrete_gaussian(n)
    v0 = np.concatenate([U.apply(g), np.zeros(n)])
    r = stability_ratio(v0, U, 4)
    assert np.isfinite(r) and r >= 0
