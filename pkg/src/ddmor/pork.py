"""Pseudo-optimal rational Krylov (PORK) reduced models and Gramians.

Input PORK fixes the right interpolation data ``(S_b, L_b)`` and picks
``E_r = I`` and ``B_r`` so that the reduced controllability Gramian is the
inverse of the observability Gramian of ``(-S_b, L_b)``; output PORK is
the dual. The discrete-time flavors use the barred data
``S_bar = S^{-1}`` and ``L_bar = L S^{-1}`` (input) or ``S^{-1} L``
(output) and Stein instead of Lyapunov equations.
"""
import warnings
from dataclasses import dataclass

import numpy as np

from . import dense, systems
from .dense import ct
from .errors import (BadShift, IllConditioned, NotControllable, NotObservable,
                     ValidationError)

GRAMIAN_COND_LIMIT = 1e12
LIGHT_ZETA_LIMIT = 1e-2


@dataclass(frozen=True, eq=False)
class PorkResult:
    """ROM with ``E_r = I`` plus the interpolation-data Gramian.

    factor : ``L`` with ``L L^* = gramian^{-1}``; this is the reduced
        controllability (input side) or observability (output side)
        Gramian factor.
    """

    rom: systems.StateSpace
    gramian: np.ndarray
    factor: np.ndarray
    side: str
    domain: str

    @property
    def reduced_gramian(self):
        return self.factor @ ct(self.factor)


def _is_diag(S):
    return np.count_nonzero(S - np.diag(np.diag(S))) == 0


def _mode(S):
    return "diagonal" if _is_diag(S) else "dense"


def input_gramian_ct(S_b, L_b):
    """``Q_s`` with ``-S_b^* Q_s - Q_s S_b + L_b^* L_b = 0``."""
    return dense.herm(dense.lyap_ct(S_b, ct(L_b) @ L_b, mode=_mode(S_b)))


def output_gramian_ct(S_c, L_c):
    """``P_s`` with ``-S_c P_s - P_s S_c^* + L_c L_c^* = 0``."""
    Sh = ct(S_c)
    return dense.herm(dense.lyap_ct(Sh, L_c @ ct(L_c), mode=_mode(Sh)))


def input_gramian_dt(Sbar_b, Lbar_b):
    """``Q_bar`` with ``S^* Q S - Q + L^* L = 0`` for the barred input data."""
    return dense.herm(dense.stein_dt(Sbar_b, ct(Lbar_b) @ Lbar_b, mode=_mode(Sbar_b)))


def output_gramian_dt(Sbar_c, Lbar_c):
    """``P_bar`` with ``S P S^* - P + L L^* = 0`` for the barred output data."""
    Sh = ct(Sbar_c)
    return dense.herm(dense.stein_dt(Sh, Lbar_c @ ct(Lbar_c), mode=_mode(Sh)))


def inverse_factor(G, error=NotObservable, cond_limit=GRAMIAN_COND_LIMIT):
    """``L`` with ``L L^* = G^{-1}`` via the Cholesky factor of `G`.

    With ``G = R R^*`` (``R`` lower triangular), ``L = R^{-*}``.
    """
    G = dense.herm(np.asarray(G))
    try:
        R = np.linalg.cholesky(G)
    except np.linalg.LinAlgError:
        w = np.linalg.eigvalsh(G)
        if w[-1] > 0 and w[0] > -1e-8 * w[-1]:
            # semidefinite to roundoff: numerically singular, not indefinite
            raise IllConditioned(
                "Gramian is numerically singular (clustered or too many points); "
                "use the light (lightly damped) Gramian mode") from None
        raise error("Gramian is not positive definite") from None
    d = np.abs(np.diag(R))
    if d.min() == 0 or (d.max() / d.min()) ** 2 > cond_limit:
        raise IllConditioned(
            f"Gramian condition ~{(d.max() / max(d.min(), 1e-300)) ** 2:.2e} exceeds "
            f"{cond_limit:.0e}; use the light (lightly damped) Gramian mode")
    Rinv = np.linalg.solve(R, np.eye(R.shape[0]))
    return ct(Rinv)


def _check_ct(S):
    if np.any(np.linalg.eigvals(S).real <= 0):
        raise BadShift("continuous-time PORK needs Re(sigma) > 0")


def _check_dt(Sbar):
    if np.any(np.abs(np.linalg.eigvals(Sbar)) >= 1):
        raise BadShift("discrete-time PORK needs |sigma| > 1 (spectral radius of S_bar < 1)")


def _check_input_data(L_b):
    if np.any(np.linalg.norm(L_b, axis=0) == 0):
        raise NotObservable("a zero column of L_b leaves a mode unobservable")


def _check_output_data(L_c):
    if np.any(np.linalg.norm(L_c, axis=1) == 0):
        raise NotControllable("a zero row of L_c leaves a mode uncontrollable")


def ipork_ct(S_b, L_b, CV):
    """Input PORK: ``(I, -Q^{-1} S_b^* Q, Q^{-1} L_b^*, CV)``."""
    S_b, L_b, CV = (np.atleast_2d(np.asarray(M, dtype=complex)) for M in (S_b, L_b, CV))
    _check_ct(S_b)
    _check_input_data(L_b)
    Q = input_gramian_ct(S_b, L_b)
    F = inverse_factor(Q, NotObservable)
    A = -dense.solve(Q, ct(S_b) @ Q)
    B = dense.solve(Q, ct(L_b))
    rom = systems.StateSpace(None, A, B, CV, systems.CONTINUOUS)
    return PorkResult(rom, Q, F, "input", systems.CONTINUOUS)


def opork_ct(S_c, L_c, WB):
    """Output PORK: ``(I, -P S_c^* P^{-1}, W^* B, L_c^* P^{-1})``."""
    S_c, L_c, WB = (np.atleast_2d(np.asarray(M, dtype=complex)) for M in (S_c, L_c, WB))
    _check_ct(S_c)
    _check_output_data(L_c)
    P = output_gramian_ct(S_c, L_c)
    F = inverse_factor(P, NotControllable)
    A = ct(dense.solve(P, S_c @ P))       # P S_c^* P^{-1} = (P^{-1} S_c P)^*
    A = -A
    C = ct(dense.solve(P, L_c))           # L_c^* P^{-1}
    rom = systems.StateSpace(None, A, WB, C, systems.CONTINUOUS)
    return PorkResult(rom, P, F, "output", systems.CONTINUOUS)


def ipork_dt(Sbar_b, Lbar_b, CV):
    """Discrete input PORK: ``(I, Q^{-1} S^* Q, Q^{-1} L^*, CV)``."""
    Sbar_b, Lbar_b, CV = (np.atleast_2d(np.asarray(M, dtype=complex))
                          for M in (Sbar_b, Lbar_b, CV))
    _check_dt(Sbar_b)
    _check_input_data(Lbar_b)
    Q = input_gramian_dt(Sbar_b, Lbar_b)
    F = inverse_factor(Q, NotObservable)
    A = dense.solve(Q, ct(Sbar_b) @ Q)
    B = dense.solve(Q, ct(Lbar_b))
    rom = systems.StateSpace(None, A, B, CV, systems.DISCRETE)
    return PorkResult(rom, Q, F, "input", systems.DISCRETE)


def opork_dt(Sbar_c, Lbar_c, WB):
    """Discrete output PORK: ``(I, P S^* P^{-1}, W^* B, L^* P^{-1})``."""
    Sbar_c, Lbar_c, WB = (np.atleast_2d(np.asarray(M, dtype=complex))
                          for M in (Sbar_c, Lbar_c, WB))
    _check_dt(Sbar_c)
    _check_output_data(Lbar_c)
    P = output_gramian_dt(Sbar_c, Lbar_c)
    F = inverse_factor(P, NotControllable)
    A = ct(dense.solve(P, Sbar_c @ P))
    C = ct(dense.solve(P, Lbar_c))
    rom = systems.StateSpace(None, A, WB, C, systems.DISCRETE)
    return PorkResult(rom, P, F, "output", systems.DISCRETE)


# -- block data ---------------------------------------------------------------

def block_input_data(points, m):
    """``S_b = diag(sigma) kron I_m`` and ``L_b = [1 ... 1] kron I_m``."""
    points = np.atleast_1d(np.asarray(points, dtype=complex))
    S = np.kron(np.diag(points), np.eye(m))
    L = np.kron(np.ones((1, points.size)), np.eye(m)).astype(complex)
    return S, L


def block_output_data(points, p):
    """``S_c = diag(mu) kron I_p`` and ``L_c = [1 ... 1]^T kron I_p``."""
    points = np.atleast_1d(np.asarray(points, dtype=complex))
    S = np.kron(np.diag(points), np.eye(p))
    L = np.kron(np.ones((points.size, 1)), np.eye(p)).astype(complex)
    return S, L


def bar_input(S_b, L_b):
    """``(S_b^{-1}, L_b S_b^{-1})``."""
    Sbar = np.linalg.inv(S_b)
    return Sbar, L_b @ Sbar


def bar_output(S_c, L_c):
    """``(S_c^{-1}, S_c^{-1} L_c)``."""
    Sbar = np.linalg.inv(S_c)
    return Sbar, Sbar @ L_c


def exact_inverse_factor(domain, points, block, side):
    """Factor of the exact block PORK Gramian inverse for a point list."""
    systems.check_domain(domain)
    if side == "input":
        S, L = block_input_data(points, block)
        if domain == systems.CONTINUOUS:
            _check_ct(S)
            return inverse_factor(input_gramian_ct(S, L), NotObservable)
        Sb, Lb = bar_input(S, L)
        _check_dt(Sb)
        return inverse_factor(input_gramian_dt(Sb, Lb), NotObservable)
    if side == "output":
        S, L = block_output_data(points, block)
        if domain == systems.CONTINUOUS:
            _check_ct(S)
            return inverse_factor(output_gramian_ct(S, L), NotControllable)
        Sb, Lb = bar_output(S, L)
        _check_dt(Sb)
        return inverse_factor(output_gramian_dt(Sb, Lb), NotControllable)
    raise ValidationError("side must be 'input' or 'output'")


def light_diagonal(domain, points):
    """Diagonal of the light Gramian inverse: ``2 Re sigma`` (CT) or
    ``|sigma|^2 - 1`` (DT)."""
    points = np.atleast_1d(np.asarray(points, dtype=complex))
    if domain == systems.CONTINUOUS:
        d = 2.0 * points.real
        if np.any(d <= 0):
            raise BadShift("light Gramians need Re(sigma) > 0")
    elif domain == systems.DISCRETE:
        d = np.abs(points) ** 2 - 1.0
        if np.any(d <= 0):
            raise BadShift("light Gramians need |sigma| > 1")
    else:
        systems.check_domain(domain)
    return d


def light_gramians(domain, shifts, block=1):
    """Closed-form Gramian inverse and factor for lightly damped shifts.

    Parameters
    ----------
    domain : str
    shifts : ShiftSet or array_like
        Interpolation points (negated ADI shifts in continuous time).
    block : int
        Identity block size (``m`` on the input side, ``p`` on the output
        side).

    Returns
    -------
    inv_diag : ndarray
        Diagonal of the approximate Gramian inverse, repeated per block.
    L : ndarray
        ``diag(sqrt(inv_diag))``.
    """
    zetas = getattr(shifts, "zetas", None)
    pts = getattr(shifts, "shifts", shifts)
    if zetas is not None and np.any(np.asarray(zetas) > LIGHT_ZETA_LIMIT):
        warnings.warn("light Gramians assume damping <= 1e-2; accuracy will suffer",
                      stacklevel=2)
    d = np.repeat(light_diagonal(domain, pts), block)
    return d, np.diag(np.sqrt(d))
