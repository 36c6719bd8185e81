import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import rip_bruteforce, ro_bruteforce
from ulab.errors import ArgumentError, BudgetError
from ulab.gaussian import discrete_gaussian
from ulab.operators import dft_operator, haar_unitary, max_entry_norm
from ulab.rip import (
    MeasurementMatrix,
    identity_concat,
    iu_rip_montecarlo,
    partial_fourier,
    restricted_isometry_constant,
    restricted_orthogonality,
    rip_report,
    rip_sample_size_k,
    ro_implies_rip_check,
    stacked_nullspace_vector,
    width_constant,
    width_constant_IU,
)
from ulab.signal import numerical_sparsity


def test_unitary_has_zero_constants():
    Phi = MeasurementMatrix(haar_unitary(6, 0).matrix)
    for k in (1, 2, 3):
        assert restricted_orthogonality(Phi, k) < 1e-12
        assert restricted_isometry_constant(Phi, k) < 1e-12
        assert ro_implies_rip_check(Phi, k)


def test_iu_dft_n4_values():
    Phi = identity_concat(dft_operator(4))
    assert restricted_orthogonality(Phi, 1) == pytest.approx(0.5)
    assert restricted_isometry_constant(Phi, 1) == pytest.approx(0.0, abs=1e-12)
    assert restricted_isometry_constant(Phi, 2) == pytest.approx(0.5)
    assert restricted_orthogonality(Phi, 2) == pytest.approx(ro_bruteforce(Phi.matrix, 2))
    assert ro_implies_rip_check(Phi, 2)


@pytest.mark.parametrize("n, seed", [(3, 0), (4, 1), (5, 2), (6, 3)])
def test_structured_matches_bruteforce(n, seed):
    Phi = identity_concat(haar_unitary(n, seed))
    generic = MeasurementMatrix(Phi.matrix)
    for k in (1, 2, 3):
        ro = ro_bruteforce(Phi.matrix, k)
        assert restricted_orthogonality(Phi, k) == pytest.approx(ro, abs=1e-12)
        assert restricted_orthogonality(generic, k) == pytest.approx(ro, abs=1e-12)
        ri = rip_bruteforce(Phi.matrix, k)
        assert restricted_isometry_constant(Phi, k) == pytest.approx(ri, abs=1e-12)
        assert restricted_isometry_constant(Phi, k, structured=False) == pytest.approx(ri, abs=1e-12)


def test_delta2_is_max_entry():
    for s in range(5):
        U = haar_unitary(7, s)
        assert restricted_isometry_constant(identity_concat(U), 2) == pytest.approx(max_entry_norm(U))


@settings(max_examples=15, deadline=None)
@given(st.integers(2, 5), st.integers(4, 8), st.integers(0, 10_000))
def test_delta_le_2theta_fuzzed(m, N, seed):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((m, N)) + 1j * rng.standard_normal((m, N))
    A /= np.linalg.norm(A, axis=0)
    Phi = MeasurementMatrix(A)
    for k in range(1, N // 2 + 1):
        assert ro_implies_rip_check(Phi, k)


def test_monotone_in_k():
    Phi = identity_concat(haar_unitary(8, 11))
    d = [restricted_isometry_constant(Phi, k) for k in range(1, 5)]
    t = [restricted_orthogonality(Phi, k) for k in range(1, 5)]
    assert d == sorted(d) and t == sorted(t)


def test_non_unit_columns_rejected():
    with pytest.raises(ArgumentError):
        ro_implies_rip_check(MeasurementMatrix(2 * np.eye(3)), 1)


def test_budget_guard():
    Phi = identity_concat(haar_unitary(40, 0))
    with pytest.raises(BudgetError):
        restricted_orthogonality(Phi, 4)
    with pytest.raises(BudgetError):
        restricted_isometry_constant(Phi, 6)
    with pytest.raises(ArgumentError):
        restricted_orthogonality(MeasurementMatrix(np.eye(3)), 2)


def test_partial_fourier_columns_unit_norm():
    Phi = partial_fourier(16, [0, 3, 3, 7, 9])
    assert np.allclose(Phi.column_norms(), 1)
    assert ro_implies_rip_check(Phi, 2)


@pytest.mark.parametrize("U", [dft_operator(16), haar_unitary(16, 4)], ids=["dft", "haar"])
def test_nullspace_parametrisation(U):
    Phi = identity_concat(U)
    rng = np.random.default_rng(0)
    for _ in range(20):
        x = rng.standard_normal(16) + 1j * rng.standard_normal(16)
        z = stacked_nullspace_vector(U, x)
        assert np.linalg.norm(Phi.matrix @ z) <= 1e-12 * np.linalg.norm(z) * 10


def test_doubled_gaussian_ns():
    n = 64
    x = discrete_gaussian(n)
    z = stacked_nullspace_vector(dft_operator(n), x)
    assert numerical_sparsity(z) == pytest.approx(2 * numerical_sparsity(x))
    assert numerical_sparsity(z) <= (2 * math.sqrt(2) + 0.2) * math.sqrt(n)


def test_width_constant_dft_grows_with_n():
    # min ns of the nullspace is 2 sqrt(n) (combs), so c >= sqrt(k / (2 sqrt(n)))
    for n in (16, 64):
        est = width_constant_IU(dft_operator(n), 2, budget=60, restarts=3, steps=30)
        assert est.ns_min == pytest.approx(2 * math.sqrt(n))
        assert est.c_lower == pytest.approx(math.sqrt(2 / (2 * math.sqrt(n))))


def test_width_constant_generic_is_lower_bound_for_iu():
    U = haar_unitary(8, 2)
    Phi = MeasurementMatrix(identity_concat(U).matrix)
    est = width_constant(Phi, 2, budget=500)
    # the certificate must really lie in the nullspace
    assert np.linalg.norm(Phi.matrix @ est.certificate) < 1e-10 * np.linalg.norm(est.certificate)
    assert est.c_lower == pytest.approx(math.sqrt(2 / numerical_sparsity(est.certificate)))


@pytest.mark.parametrize("n, delta, k", [(10**6, 0.25, 20), (100, 0.25, 0), (4096, 1.0, 1)])
def test_sample_size_k(n, delta, k):
    assert rip_sample_size_k(n, delta) == k


def test_sample_size_k_is_largest():
    n, delta = 10**6, 0.25
    k = rip_sample_size_k(n, delta)
    c = 256 / delta**2
    assert c * k * math.log(math.e * n / k) <= n
    assert c * (k + 1) * math.log(math.e * n / (k + 1)) > n


def test_iu_montecarlo_beyond_theorem():
    mc = iu_rip_montecarlo(12, 0.25, 6, k=2, seed=3)
    assert mc.theorem_k == 0 and mc.regime == "beyond_theorem"
    assert all(d <= 2 * t + 1e-10 for d, t in zip(mc.deltas, mc.thetas))
    assert all(d < 1 for d in mc.deltas)
    one = iu_rip_montecarlo(32, 0.25, 3, k=1)
    assert max(one.deltas) < 1e-12


def test_rip_report_sampled_is_lower_bound():
    Phi = identity_concat(haar_unitary(6, 1))
    exact = rip_report(Phi, 2)
    sampled = rip_report(Phi, 2, samples=50)
    assert sampled.method == "candidate_lower"
    assert sampled.delta <= exact.delta + 1e-12
    assert sampled.theta <= exact.theta + 1e-12
