import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ddmor import dense
from ddmor.errors import DimensionMismatch, Singular, SingularPencil, ValidationError


def _rng_matrix(rng, m, n, cplx=True):
    M = rng.standard_normal((m, n))
    return M + 1j * rng.standard_normal((m, n)) if cplx else M


# -- svd ----------------------------------------------------------------------

def test_svd_identity():
    _, s, _ = dense.svd(np.eye(3))
    np.testing.assert_allclose(s, [1, 1, 1])


def test_svd_diagonal():
    U, s, V = dense.svd(np.diag([3.0, 1.0]))
    np.testing.assert_allclose(s, [3, 1])
    np.testing.assert_allclose(np.abs(U), np.eye(2), atol=1e-15)
    np.testing.assert_allclose(np.abs(V), np.eye(2), atol=1e-15)


def test_svd_matches_eig_of_gram():
    M = _rng_matrix(np.random.default_rng(11), 4, 3)
    _, s, _ = dense.svd(M)
    lam = np.sort(np.linalg.eigvalsh(dense.ct(M) @ M))[::-1]
    np.testing.assert_allclose(s, np.sqrt(lam), rtol=1e-12)


def test_svd_rejects_nonfinite():
    with pytest.raises(ValidationError):
        dense.svd(np.array([[1.0, np.nan]]))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 40), st.integers(1, 40), st.integers(0, 2**31))
def test_svd_reconstruction(m, n, seed):
    M = _rng_matrix(np.random.default_rng(seed), m, n)
    U, s, V = dense.svd(M)
    assert np.linalg.norm(U * s @ dense.ct(V) - M) <= 1e-10 * np.linalg.norm(M)
    assert np.all(np.diff(s) <= 0)


def test_svd_reconstruction_200():
    M = _rng_matrix(np.random.default_rng(3), 200, 200)
    U, s, V = dense.svd(M)
    assert np.linalg.norm(U * s @ dense.ct(V) - M) <= 1e-10 * np.linalg.norm(M)


# -- eig ----------------------------------------------------------------------

def test_eig_diagonal_sorted():
    _, lam = dense.eig(np.diag([2.0, -1.0]))
    np.testing.assert_allclose(lam, [-1, 2])


def test_eig_rotation():
    _, lam = dense.eig(np.array([[0.0, 1.0], [-1.0, 0.0]]))
    np.testing.assert_allclose(lam, [-1j, 1j], atol=1e-15)


def test_eig_companion():
    _, lam = dense.eig(np.array([[3.0, -2.0], [1.0, 0.0]]))
    np.testing.assert_allclose(lam, [1, 2], rtol=1e-13)


def test_eig_residual():
    M = _rng_matrix(np.random.default_rng(5), 6, 6)
    T, lam = dense.eig(M)
    assert np.linalg.norm(M @ T - T * lam) <= 1e-8 * np.linalg.norm(M, 2)


def test_eig_jordan_block_refused():
    from ddmor.errors import NonDiagonalizable
    with pytest.raises(NonDiagonalizable):
        dense.eig(np.array([[1.0, 1.0], [0.0, 1.0]]))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 8), st.integers(0, 2**31))
def test_eig_similarity_invariance(n, seed):
    rng = np.random.default_rng(seed)
    M = _rng_matrix(rng, n, n)
    Qm, _ = np.linalg.qr(_rng_matrix(rng, n, n))
    X = Qm @ np.diag(1.0 + rng.random(n)) @ dense.ct(Qm)      # well conditioned
    lam1 = dense.eigvals(M)
    lam2 = dense.eigvals(np.linalg.solve(X, M @ X))
    np.testing.assert_allclose(np.sort_complex(lam1), np.sort_complex(lam2),
                               atol=1e-8 * max(1.0, np.abs(lam1).max()))


# -- solve --------------------------------------------------------------------

def test_solve_identity():
    B = np.arange(6.0).reshape(3, 2)
    np.testing.assert_array_equal(dense.solve(np.eye(3), B), B)


def test_solve_scalar():
    np.testing.assert_allclose(dense.solve([[2.0]], [[4.0]]), [[2.0]])


def test_solve_residual():
    rng = np.random.default_rng(9)
    A = _rng_matrix(rng, 5, 5) + 5 * np.eye(5)
    B = _rng_matrix(rng, 5, 2)
    X = dense.solve(A, B)
    assert np.linalg.norm(A @ X - B) <= 1e-10 * np.linalg.norm(A) * np.linalg.norm(X)


def test_solve_singular():
    with pytest.raises(Singular):
        dense.solve(np.array([[1.0, 2.0], [2.0, 4.0]]), np.ones((2, 1)))


def test_solve_shape_mismatch():
    with pytest.raises(DimensionMismatch):
        dense.solve(np.eye(2), np.ones((3, 1)))


# -- expm ---------------------------------------------------------------------

def test_expm_zero():
    np.testing.assert_array_equal(dense.expm(np.zeros((3, 3))), np.eye(3))


def test_expm_scalar():
    np.testing.assert_allclose(dense.expm([[1.0]]), [[2.718281828459045]], rtol=1e-15)


def test_expm_nilpotent():
    np.testing.assert_allclose(dense.expm([[0.0, 1.0], [0.0, 0.0]]), [[1, 1], [0, 1]])


def test_expm_overflow():
    from ddmor.errors import Overflow
    with pytest.raises(Overflow):
        dense.expm([[1000.0]])


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 6), st.floats(0.1, 10.0), st.integers(0, 2**31))
def test_expm_inverse(n, norm, seed):
    M = _rng_matrix(np.random.default_rng(seed), n, n)
    M *= norm / np.linalg.norm(M, 2)
    np.testing.assert_allclose(dense.expm(M) @ dense.expm(-M), np.eye(n), atol=1e-9)


# -- Lyapunov / Stein ---------------------------------------------------------

def test_lyap_cauchy():
    Q = dense.lyap_ct(np.diag([1.0, 2.0]), np.ones((2, 2)), mode="diagonal")
    np.testing.assert_allclose(Q, [[1 / 2, 1 / 3], [1 / 3, 1 / 4]], rtol=1e-15)
    np.testing.assert_allclose(dense.lyap_ct_kron(np.diag([1.0, 2.0]), np.ones((2, 2))), Q,
                               rtol=1e-14)


def test_lyap_scalar():
    np.testing.assert_allclose(dense.lyap_ct([[1.0]], [[2.0]]), [[1.0]])


def test_lyap_singular_pencil():
    with pytest.raises(SingularPencil):
        dense.lyap_ct(np.diag([1j, 2.0]), np.eye(2), mode="diagonal")


def test_stein_scalar():
    np.testing.assert_allclose(dense.stein_dt([[0.5]], [[1.0]]), [[4 / 3]], rtol=1e-15)


def test_stein_memoryless():
    M = np.array([[2.0, 1.0], [1.0, 3.0]])
    np.testing.assert_array_equal(dense.stein_dt(np.zeros((2, 2)), M), M)


def test_stein_singular_pencil():
    with pytest.raises(SingularPencil):
        dense.stein_dt(np.diag([1.0, 0.5]), np.eye(2), mode="diagonal")


def test_dense_mode_nondiagonal_residual():
    rng = np.random.default_rng(4)
    X = rng.standard_normal((4, 4)) + 4 * np.eye(4)
    S = np.linalg.solve(X, np.diag([1.0, 2.0, 0.5 + 1j, 3.0]) @ X)
    M = rng.standard_normal((4, 4))
    M = M @ M.T
    Q = dense.lyap_ct(S, M)
    assert np.linalg.norm(-dense.ct(S) @ Q - Q @ S + M) <= 1e-10 * np.linalg.norm(M)
    Sd = S / 4.0
    Qd = dense.stein_dt(Sd, M)
    assert np.linalg.norm(dense.ct(Sd) @ Qd @ Sd - Qd + M) <= 1e-10 * np.linalg.norm(M)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 8), st.integers(0, 2**31))
def test_closed_forms_match_kronecker(n, seed):
    rng = np.random.default_rng(seed)
    s = rng.uniform(0.1, 3.0, n) + 1j * rng.uniform(-5, 5, n)
    L = _rng_matrix(rng, 2, n)
    M = dense.ct(L) @ L
    S = np.diag(s)
    Q = dense.lyap_ct(S, M, mode="diagonal")
    assert np.linalg.norm(Q - dense.lyap_ct_kron(S, M)) <= 1e-12 * np.linalg.norm(Q)
    assert np.linalg.norm(-dense.ct(S) @ Q - Q @ S + M) <= 1e-10 * np.linalg.norm(M)
    Sd = np.diag(rng.uniform(0.05, 0.95, n) * np.exp(1j * rng.uniform(-np.pi, np.pi, n)))
    Qd = dense.stein_dt(Sd, M, mode="diagonal")
    assert np.linalg.norm(Qd - dense.stein_dt_kron(Sd, M)) <= 1e-12 * np.linalg.norm(Qd)
    assert np.linalg.norm(dense.ct(Sd) @ Qd @ Sd - Qd + M) <= 1e-10 * np.linalg.norm(M)
