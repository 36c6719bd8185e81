import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ulab.errors import ArgumentError, DomainError
from ulab.gaussian import discrete_gaussian
from ulab.operators import dft_operator, haar_unitary, max_entry_norm
from ulab.signal import numerical_sparsity, subgroup_indicator, unit_vector
from ulab.uncertainty import (
    additive_montecarlo,
    check_add_ns,
    check_add_zero_norm,
    check_mult_ns,
    check_mult_zero_norm,
    comb_family,
    equality_certificate,
    is_subgroup_coset,
    minimize_additive_ns,
)


def _divisors(n):
    return [d for d in range(1, n + 1) if n % d == 0]


@pytest.mark.parametrize("n", [4, 6, 12, 30])
def test_mult_zero_norm_equality_on_combs(n):
    for d in _divisors(n):
        rep = check_mult_zero_norm(subgroup_indicator(n, d))
        assert rep.satisfied and rep.lhs == n


def test_mult_zero_norm_impulse():
    rep = check_mult_zero_norm(unit_vector(9, 4))
    assert rep.extra["zero_norm_x"] == 1 and rep.extra["zero_norm_fx"] == 9


@pytest.mark.parametrize("p", [2, 3, 5, 7, 11, 13])
def test_add_zero_norm_prime(p):
    rng = np.random.default_rng(p)
    for k in range(1, p + 1):
        x = np.zeros(p, complex)
        x[rng.choice(p, k, replace=False)] = rng.standard_normal(k) + 1
        rep = check_add_zero_norm(x)
        assert rep.satisfied


def test_add_zero_norm_composite_rejected():
    # counterexample at n = 4: comb of size 2 gives 2 + 2 < 5
    with pytest.raises(ArgumentError):
        check_add_zero_norm(subgroup_indicator(4, 2))


def test_add_zero_norm_thresholded_gaussian_fails():
    # Fx = x, so at the machine-precision cutoff the count is 99 + 99 < 212
    rep = check_add_zero_norm(discrete_gaussian(211).astype(complex))
    assert rep.satisfied
    assert rep.extra["thresholded_x"] == 99
    assert 2 * rep.extra["thresholded_x"] < 211 + 1


def test_zero_signal_rejected():
    with pytest.raises(DomainError):
        check_mult_ns(np.zeros(4), dft_operator(4))


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 40), st.integers(0, 10_000), st.integers(1, 40))
def test_mult_ns_random(n, seed, k):
    k = min(k, n)
    rng = np.random.default_rng(seed)
    x = np.zeros(n, complex)
    x[rng.choice(n, k, replace=False)] = rng.standard_normal(k) + 1j * rng.standard_normal(k)
    for U in (dft_operator(n), haar_unitary(n, seed)):
        rep = check_mult_ns(x, U)
        assert rep.satisfied, rep
        assert rep.bound == pytest.approx(1 / max_entry_norm(U) ** 2)


@pytest.mark.parametrize("n", [4, 9, 12, 16, 36])
def test_equality_family(n):
    rng = np.random.default_rng(n)
    for d in _divisors(n):
        a, b = rng.integers(n, size=2)
        c = complex(rng.standard_normal(), rng.standard_normal())
        x = comb_family(n, d, a, b, c)
        cert = equality_certificate(x)
        assert cert.is_extremal and cert.zero_norm_product_is_n
        assert cert.flat_x and cert.flat_fx and cert.support_is_coset


def test_non_flat_not_extremal():
    cert = equality_certificate(np.array([2, 1, 0, 0], complex))
    assert not cert.is_extremal
    assert not cert.flat_x


@pytest.mark.parametrize(
    "idx, n, expected",
    [([0, 4, 8], 12, True), ([1, 5, 9], 12, True), ([0, 1], 12, False), ([2], 7, True),
     ([0, 3, 6], 12, False), (list(range(12)), 12, True)],
)
def test_is_subgroup_coset(idx, n, expected):
    assert is_subgroup_coset(idx, n) is expected


def test_dft_additive_minimum_is_2_sqrt_n():
    # combs at d = sqrt(n) give 2 sqrt(n); nothing in the search does better
    for n in (16, 64, 256):
        res = minimize_additive_ns(dft_operator(n), candidate_budget=100, restarts=4, steps=50)
        assert res.minimum_upper_bound == pytest.approx(2 * math.sqrt(n))


def test_additive_search_upper_bounds_are_attained():
    U = haar_unitary(32, 1)
    res = minimize_additive_ns(U, candidate_budget=60, restarts=3, steps=30)
    x = res.x
    assert numerical_sparsity(x) + numerical_sparsity(U.apply(x)) == pytest.approx(res.minimum_upper_bound)


def test_stacked_objective_not_larger_than_sum():
    U = haar_unitary(16, 2)
    a = minimize_additive_ns(U, 60, restarts=3, steps=30, objective="sum").minimum_upper_bound
    b = minimize_additive_ns(U, 60, restarts=3, steps=30, objective="stacked").minimum_upper_bound
    assert b <= a + 1e-9


def test_add_ns_report_is_data():
    rep = check_add_ns(subgroup_indicator(64, 8), dft_operator(64))
    assert rep.lhs == pytest.approx(16)
    assert rep.bound == pytest.approx(64 / 450000)


def test_additive_montecarlo_deterministic():
    a = additive_montecarlo(16, 3, 40, seed=5, restarts=2, steps=10)
    b = additive_montecarlo(16, 3, 40, seed=5, restarts=2, steps=10)
    assert a.haar_minima == b.haar_minima
    assert a.seeds == [5, 6, 7]
    assert a.fraction_above_threshold == 1.0
    with pytest.raises(ArgumentError):
        additive_montecarlo(3, 1)
