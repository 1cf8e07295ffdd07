import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cplab.errors import (
    DimensionMismatch,
    EigenvalueCollision,
    NonFiniteInput,
    SingularOperator,
)
from cplab.matcore import (
    anticommutator,
    as_cmat,
    canonical_order,
    commutator,
    eig_diagonalize,
    fro,
    sylvester_ad_solve,
)

E12 = np.array([[0, 1], [0, 0]], dtype=complex)
E21 = np.array([[0, 0], [1, 0]], dtype=complex)


def cmats(n):
    parts = arrays(np.float64, (2, n, n), elements=st.floats(-2, 2))
    return parts.map(lambda a: a[0] + 1j * a[1])


def test_commutator_of_nilpotents():
    np.testing.assert_array_equal(commutator(E12, E21), np.diag([1, -1]))


def test_commutator_with_identity_and_self():
    b = np.arange(9).reshape(3, 3) + 1j
    assert fro(commutator(np.eye(3), b)) == 0
    assert fro(commutator(b, b)) == 0


def test_anticommutator_examples():
    b = np.array([[1, 2j], [3, 4]])
    np.testing.assert_array_equal(anticommutator(np.eye(2), b), 2 * b)
    np.testing.assert_array_equal(anticommutator(np.diag([1, 2]), np.diag([3, 4])), np.diag([6, 16]))
    np.testing.assert_array_equal(anticommutator(E12, E21), np.eye(2))


def test_shape_and_finiteness_checks():
    with pytest.raises(DimensionMismatch):
        commutator(np.eye(2), np.eye(3))
    with pytest.raises(NonFiniteInput):
        as_cmat([[np.nan, 0], [0, 1]])
    with pytest.raises(DimensionMismatch):
        as_cmat(np.ones((2, 3)))


@settings(max_examples=50, deadline=None)
@given(cmats(3), cmats(3), cmats(3))
def test_jacobi_identity(a, b, c):
    j = commutator(a, commutator(b, c)) + commutator(b, commutator(c, a)) + commutator(c, commutator(a, b))
    assert fro(j) <= 1e-12 * max(1.0, fro(a) * fro(b) * fro(c))


def test_eig_already_diagonal():
    d = eig_diagonalize(np.diag([3, 1 + 1j]))
    np.testing.assert_allclose(d.lam, [1 + 1j, 3])
    np.testing.assert_allclose(np.abs(d.V), [[0, 1], [1, 0]], atol=1e-15)


def test_eig_swap_matrix():
    d = eig_diagonalize(np.array([[0, 1], [1, 0]]))
    np.testing.assert_allclose(d.lam, [-1, 1], atol=1e-15)
    v_minus, v_plus = d.V[:, 0], d.V[:, 1]
    assert abs(v_minus[0] + v_minus[1]) < 1e-12
    assert abs(v_plus[0] - v_plus[1]) < 1e-12


def test_eig_jordan_block_is_collision():
    with pytest.raises(EigenvalueCollision):
        eig_diagonalize(np.array([[1, 1], [0, 1]]))


def test_canonical_order_is_lexicographic():
    vals = np.array([2 + 0j, 1 + 5j, 1 - 1j])
    np.testing.assert_array_equal(canonical_order(vals), [2, 1, 0])


def test_eig_reassembly():
    rng = np.random.default_rng(0)
    for n in (2, 4, 8):
        m = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        d = eig_diagonalize(m)
        assert fro(d.reassemble() - m) <= 1e-10 * fro(m)
        assert fro(m @ d.V - d.V @ np.diag(d.lam)) <= 1e-10 * fro(m)


def test_sylvester_zero_shift():
    r = np.array([[1, 2j], [3, -4]])
    np.testing.assert_allclose(sylvester_ad_solve(np.zeros((2, 2)), r), r)


def test_sylvester_diagonal_closed_form():
    k = np.diag([0.3 + 0.1j, -0.2j, 0.7])
    r = np.arange(9).reshape(3, 3) + 1j
    kap = np.diag(k)
    expected = r / (1 + kap[:, None] - kap[None, :])
    np.testing.assert_allclose(sylvester_ad_solve(k, r), expected, rtol=1e-14)


def test_sylvester_dense_oracle():
    rng = np.random.default_rng(3)
    n = 3
    k = 0.3 * (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    r = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    # row-major vec: vec(kY) = (k x I) vec Y, vec(Yk) = (I x k^T) vec Y
    op = np.eye(n * n) + np.kron(k, np.eye(n)) - np.kron(np.eye(n), k.T)
    dense = np.linalg.solve(op, r.ravel()).reshape(n, n)
    np.testing.assert_allclose(sylvester_ad_solve(k, r), dense, atol=1e-12)


def test_sylvester_singular_factor():
    with pytest.raises(SingularOperator):
        sylvester_ad_solve(np.diag([0, -1]), E12)


def test_sylvester_defective_shift_falls_back():
    k = np.array([[0.2, 1.0], [0.0, 0.2]])
    r = np.array([[1, 2], [3, 4]], dtype=complex)
    y = sylvester_ad_solve(k, r)
    assert fro(y + k @ y - y @ k - r) <= 1e-12 * fro(r)


@settings(max_examples=40, deadline=None)
@given(cmats(3), cmats(3))
def test_sylvester_substitution_residual(kk, r):
    k = 0.1 * kk
    if fro(r) < 1e-6:
        return
    y = sylvester_ad_solve(k, r)
    assert fro(y + k @ y - y @ k - r) <= 1e-12 * fro(r)
