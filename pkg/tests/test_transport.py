import numpy as np
import pytest
from numpy.testing import assert_allclose

from pdfactor.errors import DimensionMismatch, NotPositiveDefinite
from pdfactor.transport import ot_map, ot_residual

from _helpers import random_orthogonal, random_spd, rng


def test_map_from_identity_is_sqrt():
    assert_allclose(ot_map(np.eye(2), np.diag([4.0, 1.0])), np.diag([2.0, 1.0]), atol=1e-14)


def test_map_between_equal_covariances_is_identity():
    S = random_spd(rng(20), 4)
    assert_allclose(ot_map(S, S), np.eye(4), atol=1e-12)


def test_known_2x2_map():
    # Sb was precomputed as M Sa M for M = [[2,1],[1,1]].
    Sa = np.diag([0.25, 4.0])
    Sb = np.array([[5.0, 4.5], [4.5, 4.25]])
    M = ot_map(Sa, Sb)
    assert_allclose(M, [[2.0, 1.0], [1.0, 1.0]], atol=1e-12)
    assert ot_residual(M, Sa, Sb) <= 1e-12


def test_residual_trivial_cases():
    S = random_spd(rng(21), 3)
    assert ot_residual(np.eye(3), S, S) == 0.0
    assert ot_residual(np.diag([2.0, 1.0]), np.eye(2), np.diag([4.0, 1.0])) == 0.0


def test_residual_detects_perturbation():
    Sa = random_spd(rng(22), 3)
    Sb = random_spd(rng(23), 3)
    M = ot_map(Sa, Sb)
    assert ot_residual(M + 1e-3 * np.eye(3), Sa, Sb) > 0.0


def test_defining_equation_residual():
    r = rng(24)
    for n in (2, 3, 5, 7, 10):
        Sa = random_spd(r, n, cond_max=1e4)
        Sb = random_spd(r, n, cond_max=1e4)
        M = ot_map(Sa, Sb)
        assert np.allclose(M, M.T)
        assert np.min(np.linalg.eigvalsh(M)) > 0
        assert ot_residual(M, Sa, Sb) <= 1e-9 * (1 + np.linalg.norm(Sb))


def test_inverse_symmetry():
    r = rng(25)
    Sa = random_spd(r, 4)
    Sb = random_spd(r, 4)
    fwd = ot_map(Sa, Sb)
    back = ot_map(Sb, Sa)
    assert_allclose(back, np.linalg.inv(fwd), atol=1e-9 * np.linalg.norm(back))


def test_congruence_equivariance():
    r = rng(26)
    Sa = random_spd(r, 5)
    Sb = random_spd(r, 5)
    U = random_orthogonal(r, 5)
    lhs = ot_map(U @ Sa @ U.T, U @ Sb @ U.T)
    rhs = U @ ot_map(Sa, Sb) @ U.T
    assert_allclose(lhs, rhs, atol=1e-9 * (1 + np.linalg.norm(rhs)))


def test_determinant_ratio():
    r = rng(27)
    Sa = random_spd(r, 4)
    Sb = random_spd(r, 4)
    M = ot_map(Sa, Sb)
    expected = np.sqrt(np.linalg.det(Sb) / np.linalg.det(Sa))
    assert_allclose(np.linalg.det(M), expected, rtol=1e-9)


def test_rejects_indefinite_input():
    with pytest.raises(NotPositiveDefinite):
        ot_map(np.diag([1.0, -1.0]), np.eye(2))
    with pytest.raises(NotPositiveDefinite):
        ot_map(np.eye(2), np.diag([0.0, 1.0]))


def test_rejects_mismatched_sizes():
    with pytest.raises(DimensionMismatch):
        ot_map(np.eye(2), np.eye(3))
    with pytest.raises(DimensionMismatch):
        ot_residual(np.eye(2), np.eye(2), np.eye(3))
