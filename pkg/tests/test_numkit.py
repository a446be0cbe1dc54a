"""Unit tests for the shared numerical toolkit."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import opinionkit as ok
from opinionkit.numkit import PINV_RCOND, L1Problem


def test_philox_stream_is_reproducible():
    a = ok.philox_stream(42).random(8)
    b = ok.philox_stream(42).random(8)
    assert np.array_equal(a, b)


def test_philox_stream_spawn_keys_are_independent():
    root = ok.philox_stream(42).random(8)
    child = ok.philox_stream(42, 0).random(8)
    other = ok.philox_stream(42, 1).random(8)
    assert not np.array_equal(root, child)
    assert not np.array_equal(child, other)


def test_solve_l1_square_system_is_exact():
    res = ok.solve_l1(L1Problem(phi=np.eye(2), psi=np.array([1.0, -2.0])))
    assert res.ok
    assert np.allclose(res.x, [1.0, -2.0], atol=1e-9)


def test_solve_l1_prefers_the_sparse_solution():
    # col 2 alone explains psi with l1 mass 0.6; any mix of cols 0 and 1
    # needs 0.84, so the minimizer must be the 1-sparse vector.
    phi = np.array([[1.0, 0.0, 0.6], [0.0, 1.0, 0.8]])
    z = np.array([0.0, 0.0, 0.6])
    res = ok.solve_l1(L1Problem(phi=phi, psi=phi @ z))
    assert res.ok
    assert np.allclose(res.x, z, atol=1e-8)


def test_solve_l1_sum_constraint_holds():
    phi = np.array([[1.0, 2.0, 3.0]])
    res = ok.solve_l1(L1Problem(phi=phi, psi=np.array([2.0]), sum_to=1.0))
    assert res.ok
    assert abs(res.x.sum() - 1.0) < 1e-9
    assert abs(phi @ res.x - 2.0).max() < 1e-9


def test_solve_l1_nonneg_excludes_signed_solutions():
    phi = np.array([[1.0, 1.0]])
    psi = np.array([-1.0])
    free = ok.solve_l1(L1Problem(phi=phi, psi=psi))
    cone = ok.solve_l1(L1Problem(phi=phi, psi=psi, nonneg=True))
    assert free.ok
    assert not cone.ok


def test_solve_l1_box_bounds_pin_variables():
    # one equation, two unknowns; x1 is pinned to 0.7 by lo == hi and NaN
    # leaves x0 free, so x0 must close the remaining gap exactly
    phi = np.array([[1.0, 1.0]])
    psi = np.array([1.0])
    lo = np.array([np.nan, 0.7])
    hi = np.array([np.nan, 0.7])
    res = ok.solve_l1(L1Problem(phi=phi, psi=psi, lo=lo, hi=hi))
    assert res.ok
    assert abs(res.x[1] - 0.7) < 1e-9
    assert abs(res.x[0] - 0.3) < 1e-9


def test_solve_l1_zero_weight_frees_a_coordinate():
    # with the cost of x1 zeroed, mass moves onto it even though x0 would
    # otherwise be the cheaper explanation
    phi = np.array([[1.0, 1.0]])
    psi = np.array([1.0])
    weights = np.array([1.0, 0.0])
    res = ok.solve_l1(L1Problem(phi=phi, psi=psi, weights=weights))
    assert res.ok
    assert abs(res.x[1] - 1.0) < 1e-8
    assert abs(res.x[0]) < 1e-8


def test_solve_l1_reports_infeasibility():
    phi = np.array([[1.0, 1.0], [1.0, 1.0]])
    psi = np.array([0.0, 1.0])
    res = ok.solve_l1(L1Problem(phi=phi, psi=psi))
    assert not res.ok


@given(st.integers(0, 10_000))
def test_pseudoinverse_matches_numpy(seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(4, 6))
    assert np.allclose(
        ok.pseudoinverse(a), np.linalg.pinv(a, rcond=PINV_RCOND), atol=1e-10
    )


def test_pseudoinverse_handles_rank_deficiency():
    a = np.outer([1.0, 2.0], [3.0, 4.0, 5.0])
    pinv = ok.pseudoinverse(a)
    assert np.allclose(a @ pinv @ a, a, atol=1e-10)


def test_spark_hand_instance():
    phi = np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 1.0]])
    assert ok.spark(phi) == 3


def test_spark_duplicate_columns():
    phi = np.array([[1.0, 1.0, 0.0], [2.0, 2.0, 1.0]])
    assert ok.spark(phi) == 2


def test_spark_zero_column():
    phi = np.array([[1.0, 0.0], [0.0, 0.0]])
    assert ok.spark(phi) == 1


def test_spark_of_independent_columns_is_count_plus_one():
    assert ok.spark(np.eye(4)) == 5


def test_spark_generic_wide_matrix():
    phi = np.random.default_rng(3).normal(size=(3, 5))
    assert ok.spark(phi) == 4


def test_spark_capacity_guard():
    phi = np.random.default_rng(0).normal(size=(5, 25))
    with pytest.raises(ok.CapacityError):
        ok.spark(phi)


def test_recovery_conditions_consistency():
    rng = np.random.default_rng(201)
    phi = rng.normal(size=(10, 12))
    diag = ok.check_recovery_conditions(phi, s=2)
    assert diag.m == 10 and diag.n == 12 and diag.s == 2
    assert diag.spark_ok == (diag.spark > 4)
    assert diag.sample_bound > 0


def test_recovery_conditions_detect_dependent_columns():
    rng = np.random.default_rng(42)
    phi = rng.normal(size=(6, 12))
    phi[:, 7] = phi[:, 2]
    diag = ok.check_recovery_conditions(phi, s=2)
    assert diag.spark == 2
    assert not diag.spark_ok
    assert not diag.nsp_ok


def test_recovery_sample_bound_grows_with_sparsity():
    phi = np.random.default_rng(7).normal(size=(10, 12))
    b2 = ok.check_recovery_conditions(phi, s=2).sample_bound
    b4 = ok.check_recovery_conditions(phi, s=4).sample_bound
    assert b4 > b2


@given(st.integers(0, 10_000))
def test_spectral_radius_matches_dense_eigenvalues(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 9))
    a = rng.uniform(0.0, 1.0, (n, n))
    expected = np.max(np.abs(np.linalg.eigvals(a)))
    assert abs(ok.spectral_radius(a) - expected) < 1e-8 * max(1.0, expected)


def test_spectral_radius_of_permutation_matrix():
    # periodic structure: plain power iteration would not converge here
    p = np.array([[0.0, 1.0], [1.0, 0.0]])
    assert abs(ok.spectral_radius(p) - 1.0) < 1e-10
