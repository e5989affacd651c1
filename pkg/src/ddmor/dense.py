"""Dense complex matrix kernels.

Thin, checked wrappers over LAPACK (through numpy/scipy) plus the
Lyapunov and Stein solvers for the small interpolation-data matrices,
which are diagonal by construction and therefore solved in closed form.
"""
import warnings

import numpy as np
import scipy.linalg as sla

from .errors import (DimensionMismatch, NonDiagonalizable, Overflow, Singular,
                     SingularPencil, ValidationError)

COND_LIMIT = 1e14


def as_matrix(M, name="matrix"):
    """Return `M` as a finite 2-D complex-or-real ndarray."""
    M = np.asarray(M)
    if M.ndim == 0:
        M = M.reshape(1, 1)
    elif M.ndim == 1:
        M = M.reshape(-1, 1)
    if M.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-D, got shape {M.shape}")
    if not np.issubdtype(M.dtype, np.number):
        raise ValidationError(f"{name} must be numeric")
    if not np.all(np.isfinite(M)):
        raise ValidationError(f"{name} has non-finite entries")
    if not np.iscomplexobj(M):
        M = M.astype(float)
    return M


def _square(M, name):
    M = as_matrix(M, name)
    if M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got {M.shape}")
    return M


def ct(M):
    """Conjugate transpose."""
    return np.conj(M).T


def herm(M):
    """Hermitian part."""
    return 0.5 * (M + ct(M))


def svd(M, full=False):
    """Singular value decomposition ``M = U @ diag(s) @ V^*``.

    Returns ``(U, s, V)`` with `s` nonincreasing; `V` itself, not its
    adjoint, so that ``U[:, :k]`` and ``V[:, :k]`` pair up directly.
    """
    M = as_matrix(M, "M")
    U, s, Vh = np.linalg.svd(M, full_matrices=full)
    return U, s, ct(Vh)


def eig(M, rtol=1e-8):
    """Eigendecomposition ``M @ T = T @ diag(lam)``.

    Eigenvalues are sorted by (real part, imaginary part). Raises
    :class:`NonDiagonalizable` if the eigenvector matrix fails the
    residual check.
    """
    M = _square(M, "M")
    lam, T = np.linalg.eig(M)
    order = np.lexsort((lam.imag, lam.real))
    lam, T = lam[order], T[:, order]
    scale = max(np.linalg.norm(M, 2), np.finfo(float).tiny)
    resid = np.linalg.norm(M @ T - T * lam, 2)
    if resid > rtol * scale or np.linalg.cond(T) > COND_LIMIT:
        raise NonDiagonalizable(
            f"eigenvector residual {resid:.3e} (cond {np.linalg.cond(T):.3e})")
    return T, lam


def eigvals(M):
    """Eigenvalues only, same ordering as :func:`eig`."""
    lam = np.linalg.eigvals(_square(M, "M"))
    return lam[np.lexsort((lam.imag, lam.real))]


def _lu(A):
    # an exactly singular pivot is reported through the condition check
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        return sla.lu_factor(A, check_finite=False)


def rcond(A):
    """Reciprocal 1-norm condition number estimate (LAPACK ``gecon``)."""
    A = _square(A, "A")
    if A.size == 0:
        return 1.0
    lu, piv = _lu(A)
    gecon, = sla.get_lapack_funcs(("gecon",), (lu,))
    anorm = np.linalg.norm(A, 1)
    if anorm == 0.0:
        return 0.0
    rc, info = gecon(lu, anorm, norm="1")
    return float(rc)


def solve(A, B, cond_limit=COND_LIMIT):
    """Solve ``A X = B``; raise :class:`Singular` past the condition limit."""
    A = _square(A, "A")
    B = as_matrix(B, "B")
    if A.shape[0] != B.shape[0]:
        raise DimensionMismatch(f"solve: A is {A.shape}, B is {B.shape}")
    lu, piv = _lu(A)
    gecon, = sla.get_lapack_funcs(("gecon",), (lu,))
    anorm = np.linalg.norm(A, 1)
    rc = gecon(lu, anorm, norm="1")[0] if anorm > 0 else 0.0
    if rc * cond_limit < 1.0:
        raise Singular(f"matrix condition estimate {1 / max(rc, 1e-300):.3e} "
                       f"exceeds {cond_limit:.1e}")
    return sla.lu_solve((lu, piv), B, check_finite=False)


def expm(M):
    """Matrix exponential (scaling and squaring with a Pade core)."""
    M = _square(M, "M")
    with np.errstate(over="raise", invalid="raise"):
        try:
            X = sla.expm(M)
        except FloatingPointError as exc:
            raise Overflow(str(exc)) from None
    if not np.all(np.isfinite(X)):
        raise Overflow("matrix exponential overflowed")
    return X


def chol_lower(M):
    """Lower Cholesky factor of a Hermitian positive definite matrix.

    Raises ``numpy.linalg.LinAlgError`` when `M` is not positive definite.
    """
    return np.linalg.cholesky(herm(as_matrix(M, "M")))


# -- Lyapunov / Stein --------------------------------------------------------

def _pencil_tol(d):
    return 1e-13 * max(1.0, float(np.max(np.abs(d))) if d.size else 1.0)


def _cauchy_ct(s_left, s_right, M):
    den = np.conj(s_left)[:, None] + s_right[None, :]
    if np.any(np.abs(den) <= _pencil_tol(den)):
        raise SingularPencil("s_i* + s_j vanishes for some pair")
    return M / den


def _cauchy_dt(s_left, s_right, M):
    den = 1.0 - np.conj(s_left)[:, None] * s_right[None, :]
    if np.any(np.abs(den) <= 1e-13):
        raise SingularPencil("1 - s_i* s_j vanishes for some pair")
    return M / den


def _check_pair(S, M):
    S = _square(S, "S")
    M = _square(M, "M")
    if S.shape != M.shape:
        raise DimensionMismatch(f"S is {S.shape}, M is {M.shape}")
    return S, M


def _diagonalize(S):
    if np.count_nonzero(S - np.diag(np.diag(S))) == 0:
        return None, np.diag(S)
    T, d = eig(S)
    return T, d


def lyap_ct(S, M, mode="dense"):
    """Solve ``-S^* Q - Q S + M = 0``.

    ``mode="diagonal"`` uses only the diagonal of `S` (the closed form
    ``Q[i, j] = M[i, j] / (conj(s_i) + s_j)``). ``mode="dense"``
    diagonalizes `S` first, so it covers any diagonalizable `S`.
    """
    S, M = _check_pair(S, M)
    if mode in ("diagonal", "diagonal-closed-form"):
        d = np.diag(S)
        return _cauchy_ct(d, d, M)
    if mode != "dense":
        raise ValidationError(f"unknown mode {mode!r}")
    T, d = _diagonalize(S)
    if T is None:
        return _cauchy_ct(d, d, M)
    Mt = ct(T) @ M @ T
    Qt = _cauchy_ct(d, d, Mt)
    Tinv = np.linalg.inv(T)
    return ct(Tinv) @ Qt @ Tinv


def stein_dt(S, M, mode="dense"):
    """Solve ``S^* Q S - Q + M = 0``.

    Closed form for diagonal `S`: ``Q[i, j] = M[i, j] / (1 - conj(s_i) s_j)``.
    """
    S, M = _check_pair(S, M)
    if mode in ("diagonal", "diagonal-closed-form"):
        d = np.diag(S)
        return _cauchy_dt(d, d, M)
    if mode != "dense":
        raise ValidationError(f"unknown mode {mode!r}")
    T, d = _diagonalize(S)
    if T is None:
        return _cauchy_dt(d, d, M)
    Mt = ct(T) @ M @ T
    Qt = _cauchy_dt(d, d, Mt)
    Tinv = np.linalg.inv(T)
    return ct(Tinv) @ Qt @ Tinv


def lyap_ct_kron(S, M):
    """Brute-force vectorized solve of ``-S^* Q - Q S + M = 0`` (small n)."""
    S, M = _check_pair(S, M)
    n = S.shape[0]
    eye = np.eye(n)
    # vec(S^* Q) = (I kron S^*) vec Q ; vec(Q S) = (S^T kron I) vec Q  (column-major)
    K = np.kron(eye, ct(S)) + np.kron(S.T, eye)
    q = np.linalg.solve(K, M.reshape(-1, order="F"))
    return q.reshape(n, n, order="F")


def stein_dt_kron(S, M):
    """Brute-force vectorized solve of ``S^* Q S - Q + M = 0`` (small n)."""
    S, M = _check_pair(S, M)
    n = S.shape[0]
    K = np.eye(n * n) - np.kron(S.T, ct(S))
    q = np.linalg.solve(K, M.reshape(-1, order="F"))
    return q.reshape(n, n, order="F")
