"""Square-root balanced truncation of data quadruplets.

A quadruplet ``(Eq, Aq, Bq, Cq)`` stands for ``(W~^* E V~, ...)``. When
``V~ L_p`` and ``W~ L_q`` are low-rank factors of the controllability and
observability Gramians (through quadrature weights or through the ADI /
PORK connection), the SVD of ``L_q^* Eq L_p`` plays the role of
``Z_q^* E Z_p`` in the square-root algorithm and never needs the
realization.
"""
import csv
from dataclasses import dataclass, field

import numpy as np

from . import dense, pork, systems
from .dense import ct
from .errors import (BadShift, DimensionMismatch, GridMismatch, NotControllable,
                     NotObservable, RankTooLow, ValidationError)
from .interp import InterpolationData
from .quadrature import SampleSet, ShiftSet
from .quadruplet import _pair_transform, build_loewner, realify as realify_quadruplet

RANK_RTOL = 1e-12
DEFAULT_TRUNCATION_RTOL = 1e-10


@dataclass(eq=False)
class BtReport:
    """Outcome of a balancing compression.

    hsv_estimates : all singular values of ``L_q^* Eq L_p``, nonincreasing.
    monitors : Gramian-quality traces, when computed.
    meta : shift or node provenance.
    """

    hsv_estimates: np.ndarray
    r: int
    monitors: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def rows(self):
        return [(k + 1, float(v)) for k, v in enumerate(self.hsv_estimates)]

    def to_csv(self, path, count=None):
        """Write ``index,hsv_estimate`` rows (all values unless `count`)."""
        rows = self.rows() if count is None else self.rows()[:count]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["index", "hsv_estimate"])
            w.writerows((k, repr(v)) for k, v in rows)


def _real_if_close(rom, tol=1e-10):
    mats = (rom.E, rom.A, rom.B, rom.C)
    if all(np.linalg.norm(np.imag(M)) <= tol * max(np.linalg.norm(M), 1e-300) for M in mats):
        return systems.StateSpace(*(np.real(M) for M in mats), rom.domain)
    return rom


def balance_compress(q, L_p, L_q, r=None):
    """Square-root balancing of a quadruplet with given Gramian factors.

    Parameters
    ----------
    q : DataQuadruplet
    L_p : ndarray
        Right factor (columns of `Eq` by ``k``).
    L_q : ndarray
        Left factor (rows of `Eq` by ``k``).
    r : int, optional
        Reduced order. Defaults to the number of estimates above
        ``1e-10`` times the largest.

    Returns
    -------
    rom : StateSpace
        ``(W^* Eq V, W^* Aq V, W^* Bq, Cq V)`` with ``E_r = I`` up to
        rounding; real when the data are.
    report : BtReport
    """
    L_p, L_q = np.atleast_2d(L_p), np.atleast_2d(L_q)
    if L_p.shape[0] != q.Eq.shape[1] or L_q.shape[0] != q.Eq.shape[0]:
        raise DimensionMismatch(
            f"factors {L_p.shape}, {L_q.shape} do not fit Eq {q.Eq.shape}")
    U, s, V = dense.svd(ct(L_q) @ q.Eq @ L_p)
    s = np.clip(s, 0.0, None)
    if s.size == 0 or s[0] == 0:
        raise RankTooLow("L_q^* Eq L_p is zero")
    numrank = int(np.sum(s > RANK_RTOL * s[0]))
    if r is None:
        r = int(np.sum(s > DEFAULT_TRUNCATION_RTOL * s[0]))
    r = int(r)
    if r < 1 or r > numrank:
        raise RankTooLow(f"r={r} exceeds the numerical rank {numrank}")
    scale = 1.0 / np.sqrt(s[:r])
    W = L_q @ U[:, :r] * scale
    Vr = L_p @ V[:, :r] * scale
    Er, Ar, Br, Cr = q.project(Vr, W)
    rom = _real_if_close(systems.StateSpace(Er, Ar, Br, Cr, q.domain))
    return rom, BtReport(s, r)


# -- QuadBT -------------------------------------------------------------------

def _factor_diag(weights, block):
    return np.kron(np.diag(weights), np.eye(block))


def _check_grid(points, expected, what):
    points = np.asarray(points)
    if points.size != expected.size or not np.allclose(points, expected, rtol=1e-12, atol=1e-14):
        raise GridMismatch(f"quadruplet {what} grid differs from the quadrature nodes")


def quadbt(q, rule_p, rule_q, r=None):
    """QuadBT: balance with diagonal quadrature factors.

    Supported quadruplets and rules:

    * ``loewner`` CT at ``j omega`` with rules on the frequency axis,
    * ``loewner`` DT at ``exp(j xi)`` with rules on ``[-pi, pi]``,
    * ``impulse-ct`` with rules on the time axis,
    * ``hankel-dt`` (rules may be ``None``: unit weights).

    The factors are ``diag(sqrt(w / 2pi)) kron I`` for frequency rules and
    ``diag(sqrt(w)) kron I`` for time rules.
    """
    if q.kind == "loewner":
        if q.domain == systems.CONTINUOUS:
            _check_grid(q.right_points, 1j * rule_p.nodes, "right")
            _check_grid(q.left_points, 1j * rule_q.nodes, "left")
        else:
            _check_grid(q.right_points, np.exp(1j * rule_p.nodes), "right")
            _check_grid(q.left_points, np.exp(1j * rule_q.nodes), "left")
        fp, fq = rule_p.factors(True), rule_q.factors(True)
    elif q.kind == "impulse-ct":
        _check_grid(q.right_points, rule_p.nodes, "right")
        _check_grid(q.left_points, rule_q.nodes, "left")
        fp, fq = rule_p.factors(False), rule_q.factors(False)
    elif q.kind == "hankel-dt":
        n_p, n_q = q.right_points.size, q.left_points.size
        fp = np.ones(n_p) if rule_p is None else rule_p.factors(False)
        fq = np.ones(n_q) if rule_q is None else rule_q.factors(False)
        if fp.size != n_p or fq.size != n_q:
            raise GridMismatch("rule sizes differ from the Hankel horizons")
    else:
        raise ValidationError(f"quadbt does not handle {q.kind!r} quadruplets")
    L_p = _factor_diag(fp, q.right_block)
    L_q = _factor_diag(fq, q.left_block)
    rom, report = balance_compress(q, L_p, L_q, r)
    report.meta.update(kind=q.kind, n_p=len(fp), n_q=len(fq))
    return rom, report


# -- ADI / PORK based BT ------------------------------------------------------

def _points(shifts):
    return np.asarray(getattr(shifts, "shifts", shifts), dtype=complex)


def pork_factors(domain, interp, m, p, gramian_mode="exact", shifts=None):
    """Factors ``L_p, L_q`` with ``L_p L_p^* = Q_s^{-1}`` and
    ``L_q L_q^* = P_s^{-1}`` for the given interpolation data.

    In ``"light"`` mode the closed-form diagonal approximations are used
    (`shifts` may carry the damping values for the warning check).
    """
    systems.check_domain(domain)
    if gramian_mode == "light":
        sp, sq = shifts if shifts is not None else (interp.right_points, interp.left_points)
        bp = m if interp.right_dirs is None else 1
        bq = p if interp.left_dirs is None else 1
        return pork.light_gramians(domain, sp, bp)[1], pork.light_gramians(domain, sq, bq)[1]
    if gramian_mode != "exact":
        raise ValidationError("gramian_mode must be 'exact' or 'light'")
    S_b, L_b = interp.right_matrices(m)
    S_c, L_c = interp.left_matrices(p)
    if domain == systems.CONTINUOUS:
        Q = pork.input_gramian_ct(S_b, L_b)
        P = pork.output_gramian_ct(S_c, L_c)
    else:
        Q = pork.input_gramian_dt(*pork.bar_input(S_b, L_b))
        P = pork.output_gramian_dt(*pork.bar_output(S_c, L_c))
    return pork.inverse_factor(Q, NotObservable), pork.inverse_factor(P, NotControllable)


def _real_factor(L, tol=1e-8):
    """Real factor with the same Gram matrix as `L` when ``L L^*`` is real.

    The transformed factor ``T^* L`` is complex even though its Gram
    matrix is real for conjugate-closed data; refactoring keeps the SVD
    (and therefore the ROM) real without changing the singular values.
    """
    G = L @ ct(L)
    if np.linalg.norm(G.imag) > tol * np.linalg.norm(G):
        raise ValidationError("transformed Gramian factor is not real")
    return np.linalg.cholesky(dense.herm(G.real))


def _pork_bt(domain, right_samples, left_samples, shifts, r, gramian_mode, dirs,
             tangential, realify):
    if not isinstance(right_samples, SampleSet) or not isinstance(left_samples, SampleSet):
        raise ValidationError("samples must be SampleSet objects")
    if right_samples.domain != domain:
        raise ValidationError(f"samples are not {domain}")
    sp, sq = shifts
    for s in (sp, sq):
        if isinstance(s, ShiftSet) and s.domain != domain:
            raise ValidationError("shift set domain differs from the algorithm")
    sig, mu = _points(sp), _points(sq)
    if domain == systems.CONTINUOUS and (np.any(sig.real <= 0) or np.any(mu.real <= 0)):
        raise BadShift("continuous-time interpolation points need Re > 0")
    if domain == systems.DISCRETE and (np.any(np.abs(sig) <= 1) or np.any(np.abs(mu) <= 1)):
        raise BadShift("discrete-time interpolation points need modulus > 1")
    right = right_samples.subset(sig)
    left = left_samples.subset(mu)
    if dirs is not None and tangential:
        dirs = dirs.normalized()
    interp = dirs if dirs is not None else InterpolationData(sig, mu)
    q = build_loewner(right, left, interp if dirs is not None else None)
    L_p, L_q = pork_factors(domain, interp, q.m, q.p, gramian_mode,
                            shifts=(sp, sq) if gramian_mode == "light" else None)
    if realify:
        Tv = _pair_transform(sig, q.right_dirs, q.right_block, dirs_are_rows=False)
        Tw = _pair_transform(mu, q.left_dirs, q.left_block, dirs_are_rows=True)
        q = realify_quadruplet(q)
        L_p, L_q = _real_factor(ct(Tv) @ L_p), _real_factor(ct(Tw) @ L_q)
    rom, report = balance_compress(q, L_p, L_q, r)
    report.meta.update(domain=domain, n_p=sig.size, n_q=mu.size, gramian_mode=gramian_mode)
    report.monitors.update(zip(("input_trace", "output_trace"),
                               _monitor_from_factors(q, L_p, L_q)))
    return rom, report


def dd_adi_bt(right_samples, left_samples, shifts, r=None, gramian_mode="exact",
              dirs=None, tangential=False, realify=False):
    """Data-driven low-rank ADI balanced truncation (continuous time).

    Parameters
    ----------
    right_samples, left_samples : SampleSet
        Samples covering the right points ``sigma_i`` and left points
        ``mu_j``; where they coincide a derivative is required.
    shifts : pair of ShiftSet or array_like
        ``(sigma, mu)``: interpolation points, i.e. negated ADI shifts.
    r : int, optional
    gramian_mode : ``"exact"`` or ``"light"``
    dirs : InterpolationData, optional
        Tangential directions; block interpolation when omitted.
    tangential : bool
        Normalize `dirs` to unit norm first.
    realify : bool
        Work with the real form of a conjugate-closed quadruplet.
    """
    return _pork_bt(systems.CONTINUOUS, right_samples, left_samples, shifts, r,
                    gramian_mode, dirs, tangential, realify)


def dd_pork_dtbt(right_samples, left_samples, shifts, r=None, gramian_mode="exact",
                 dirs=None, tangential=False, realify=False):
    """Data-driven PORK-based discrete-time balanced truncation.

    Same contract as :func:`dd_adi_bt` with points outside the unit
    circle; the factors come from the Stein Gramians of the barred data.
    """
    return _pork_bt(systems.DISCRETE, right_samples, left_samples, shifts, r,
                    gramian_mode, dirs, tangential, realify)


# -- monitors -----------------------------------------------------------------

def _monitor_from_factors(q, L_p, L_q):
    CL = q.Cq @ L_p
    BL = ct(L_q) @ q.Bq
    return float(np.trace(CL @ ct(CL)).real), float(np.trace(ct(BL) @ BL).real)


def gramian_monitor(q, Q_s=None, P_s=None):
    """Non-intrusive Gramian-quality traces.

    Returns ``(trace(Cq Q_s^{-1} Cq^*), trace(Bq^* P_s^{-1} Bq))``; either
    entry is ``None`` when its Gramian is omitted. Both grow toward
    ``||G||_H2^2`` as the shift set is enlarged. The discrete-time
    Gramians ``Q_bar``, ``P_bar`` are passed the same way.
    """
    out = []
    if Q_s is not None:
        Q_s = np.atleast_2d(Q_s)
        if Q_s.shape != (q.Cq.shape[1],) * 2:
            raise DimensionMismatch("Q_s does not match the columns of Cq")
        out.append(float(np.trace(q.Cq @ dense.solve(Q_s, ct(q.Cq))).real))
    else:
        out.append(None)
    if P_s is not None:
        P_s = np.atleast_2d(P_s)
        if P_s.shape != (q.Bq.shape[0],) * 2:
            raise DimensionMismatch("P_s does not match the rows of Bq")
        out.append(float(np.trace(ct(q.Bq) @ dense.solve(P_s, q.Bq)).real))
    else:
        out.append(None)
    return tuple(out)
