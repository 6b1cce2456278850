import numpy as np
import pytest

from spdelab import core
from spdelab.fem import (FemSpace, assemble_mass, assemble_stiffness, solve_shifted,
                         interp_nonlinearity, gradnorm_sq_of_f, thomas_solve,
                         thomas_pivots, batch_tridiag_solve, measured_inverse_constant,
                         smallest_eigenvalue)


def test_mass_matrix_entries():
    m2 = assemble_mass(FemSpace(2))
    assert np.allclose(m2.diag, [1 / 3]) and m2.lower.size == 0
    m4 = assemble_mass(FemSpace(4))
    assert np.allclose(m4.diag, 1 / 6)
    assert np.allclose(m4.lower, 1 / 24)


def test_mass_row_sums_partition_of_unity():
    space = FemSpace(32)
    ones = np.ones(space.dof)
    rows = space.mass.matvec(ones)
    assert np.allclose(rows[1:-1], space.h, rtol=1e-14)


def test_stiffness_entries_and_constant_kernel():
    k2 = assemble_stiffness(FemSpace(2))
    assert np.allclose(k2.diag, [4.0])
    k4 = assemble_stiffness(FemSpace(4))
    assert np.allclose(k4.diag, 8.0) and np.allclose(k4.upper, -4.0)
    rows = assemble_stiffness(FemSpace(64)).matvec(np.ones(63))
    assert np.allclose(rows[1:-1], 0.0, atol=1e-12)


def test_solve_shifted_examples():
    space = FemSpace(2)
    assert solve_shifted(space, 0.1, np.zeros(1)) == pytest.approx(0.0)
    u = solve_shifted(space, 0.1, np.array([1.0]))
    assert np.isclose(u[0], 1.0 / (1 / 3 + 0.4), rtol=1e-14)


def test_solve_shifted_residual_and_tau_zero():
    rng = np.random.default_rng(0)
    space = FemSpace(64)
    rhs = rng.standard_normal(63)
    for tau in (0.0, 0.05, 2.0):
        u = solve_shifted(space, tau, rhs)
        res = space.mass.shifted(tau, space.stiffness).matvec(u) - rhs
        assert np.max(np.abs(res)) <= 1e-12 * np.max(np.abs(rhs))


def test_negative_tau_rejected():
    with pytest.raises(ValueError):
        solve_shifted(FemSpace(4), -0.1, np.zeros(3))


@pytest.mark.parametrize("N", [2, 3, 16, 100, 1024, 4096])
def test_mass_and_stiffness_positive_definite(N):
    space = FemSpace(N)
    assert np.all(thomas_pivots(space.mass) > 0)
    assert np.all(thomas_pivots(space.stiffness) > 0)


def test_thomas_matches_dense_solve():
    rng = np.random.default_rng(1)
    space = FemSpace(40)
    A = space.mass.shifted(0.3, space.stiffness)
    dense = np.diag(A.diag) + np.diag(A.lower, -1) + np.diag(A.upper, 1)
    rhs = rng.standard_normal(39)
    assert np.allclose(thomas_solve(A, rhs), np.linalg.solve(dense, rhs), rtol=1e-12)


def test_batch_tridiag_solve_matches_per_trial():
    rng = np.random.default_rng(2)
    T, n = 7, 12
    sub = rng.standard_normal((T, n - 1)) * 0.1
    sup = rng.standard_normal((T, n - 1)) * 0.1
    diag = 2.0 + rng.random((T, n))
    rhs = rng.standard_normal((T, n))
    x = batch_tridiag_solve(sub.copy(), diag.copy(), sup.copy(), rhs.copy())
    for t in range(T):
        dense = np.diag(diag[t]) + np.diag(sub[t], -1) + np.diag(sup[t], 1)
        assert np.allclose(x[t], np.linalg.solve(dense, rhs[t]), rtol=1e-10)


def test_interp_nonlinearity_examples():
    assert np.allclose(interp_nonlinearity(core.cubic(), np.zeros(5)), 0.0)
    assert np.allclose(interp_nonlinearity(core.cubic(), np.array([1.0, 2.0])), [-1, -8])
    assert np.allclose(interp_nonlinearity(core.allen_cahn(1, 1), np.array([2.0])), [-6])


def test_gradnorm_variants():
    space = FemSpace(2)
    nl = core.cubic()
    zero = np.zeros(1)
    assert gradnorm_sq_of_f(space, nl, zero, "fprime") == 0.0
    assert gradnorm_sq_of_f(space, nl, zero, "grad") == 0.0
    # single interior node, value 1: f' = -3, quadratic 9 * (1/3)
    assert np.isclose(gradnorm_sq_of_f(space, nl, np.array([1.0]), "fprime"), 3.0)
    with pytest.raises(ValueError):
        gradnorm_sq_of_f(space, nl, zero, "nope")


def test_gradnorm_of_constant_field_is_boundary_dominated():
    space = FemSpace(200)
    A = 2.0
    got = gradnorm_sq_of_f(space, core.cubic(), np.full(space.dof, A), "grad")
    assert np.isclose(got, 2 * (A ** 3) ** 2 / space.h, rtol=1e-10)


def test_inverse_inequality_calibration():
    for N in (8, 32, 256):
        c_inv = measured_inverse_constant(FemSpace(N), samples=400, seed=1)
        assert c_inv ** 2 <= 12.0 + 1e-9
    # the polished measurement approaches the exact constant sqrt(12)
    c_inv = measured_inverse_constant(FemSpace(64), samples=400, seed=2)
    assert c_inv ** 2 > 11.5


@pytest.mark.parametrize("N", [16, 64, 256])
def test_smallest_generalized_eigenvalue(N):
    lam = smallest_eigenvalue(FemSpace(N))
    assert lam >= np.pi ** 2 * (1 - 10.0 / N ** 2)
    assert lam <= np.pi ** 2 * (1 + 10.0 / N ** 2)


def test_restriction_hits_shared_nodes():
    fine, coarse = FemSpace(64), FemSpace(16)
    vals = np.sin(3 * np.pi * fine.nodes)
    got = coarse.restrict_from(fine, vals)
    assert np.allclose(got, np.sin(3 * np.pi * coarse.nodes), rtol=1e-12)
    with pytest.raises(ValueError):
        FemSpace(24).restrict_from(fine, vals)
