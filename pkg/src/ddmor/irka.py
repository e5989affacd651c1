"""Data-driven IRKA: a fixed-point loop over a fixed data quadruplet.

Every iteration builds small projectors ``V_hat`` and ``W_hat`` from the
current interpolation data so that ``V~ V_hat`` and ``W~ W_hat``
approximate the rational Krylov bases of the (unknown) realization. The
interim ROM is ``(W_hat^* Eq V_hat, W_hat^* Aq V_hat, W_hat^* Bq, Cq V_hat)``
and its mirrored poles and residue directions become the next
interpolation data. No new samples are ever requested.

Strategies expose ``projectors(interp) -> (V_hat, W_hat_star)`` and work on
one quadruplet kind:

=====================  ===========  =========================================
strategy               quadruplet   projector blocks
=====================  ===========  =========================================
FrequencyQuadCT        loewner CT   ``(w/2pi) L_b (S_b - j w I)^{-1}``
TimeQuadCT             impulse-ct   ``w L_b exp(-S_b t)``
PorkCT                 loewner CT   surrogate I-PORK / O-PORK resolvents
FrequencyQuadDT        loewner DT   ``(w/2pi) Lbar_b (exp(-j xi) I - Sbar_b)^{-1}``
TimeDT                 hankel-dt    ``Lbar_b Sbar_b^i``
PorkDT                 loewner DT   surrogate discrete PORK resolvents
KrylovStrategy         system       exact rational Krylov (intrusive)
=====================  ===========  =========================================
"""
import csv
from dataclasses import dataclass, field

import numpy as np

from . import dense, pork, systems
from .dense import ct
from .errors import (BadShift, DimensionMismatch, GridMismatch, NotControllable,
                     NotObservable, ShiftOnAxis, ShiftOnCircle, SingularReducedE,
                     SurrogatePoleHit, ValidationError)
from .interp import InterpolationData

TWO_PI = 2.0 * np.pi
E_SINGULAR_RTOL = 1e-12


@dataclass(frozen=True)
class IrkaConfig:
    """Stopping rule and safeguards.

    tol : relative change of the reduced eigenvalues that ends the loop.
    max_iter : iteration cap.
    stability_reflection : mirror unstable interim poles into the stable
        region before using them as interpolation points.
    """

    tol: float = 1e-6
    max_iter: int = 50
    stability_reflection: bool = True

    def __post_init__(self):
        if not self.tol > 0:
            raise ValidationError("tol must be positive")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ValidationError("max_iter must be a positive integer")


@dataclass(eq=False)
class IrkaReport:
    """Iteration history.

    eigenvalues[i] are the reduced eigenvalues of iterate ``i + 1``;
    tracked[i] is the non-intrusive error term
    ``||G_r^{(i)}||^2 - 2 Re trace(C_r^{(i+1)} (C_r^{(i)} T_r^{(i)})^T)``
    for iterate ``i + 1`` (``nan`` where no successor exists; see
    :func:`track_h2` for the discrete-time weighting). Adding
    ``||G||_H2^2`` turns it into an estimate of ``||G - G_r^{(i)}||^2``.
    iterates[i] is the interim ROM of iterate ``i + 1`` (complex, with
    ``E_r`` row and column equilibrated).
    """

    iterations: int = 0
    converged: bool = False
    eigenvalues: list = field(default_factory=list)
    changes: list = field(default_factory=list)
    tracked: list = field(default_factory=list)
    rom_norms: list = field(default_factory=list)
    reflected: list = field(default_factory=list)
    iterates: list = field(default_factory=list)
    real_rom: bool = False
    interpolation: InterpolationData = None

    def to_csv(self, path):
        """Rows ``iteration, k, re_lambda, im_lambda, tracked``."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", "k", "re_lambda", "im_lambda", "tracked"])
            for i, lam in enumerate(self.eigenvalues):
                t = self.tracked[i] if i < len(self.tracked) else float("nan")
                for k, v in enumerate(lam):
                    w.writerow([i + 1, k + 1, repr(float(v.real)), repr(float(v.imag)),
                                repr(float(t))])


# -- helpers ------------------------------------------------------------------

def _domain_check(interp, domain):
    s = np.concatenate([interp.right_points, interp.left_points])
    if domain == systems.CONTINUOUS:
        if np.any(s.real == 0):
            raise ShiftOnAxis("interpolation point on the imaginary axis")
        if np.any(s.real < 0):
            raise BadShift("continuous-time interpolation points need Re > 0")
    else:
        if np.any(np.abs(np.abs(s) - 1.0) <= 1e-14):
            raise ShiftOnCircle("interpolation point on the unit circle")
        if np.any(np.abs(s) < 1):
            raise BadShift("discrete-time interpolation points need modulus > 1")


def _dirs(interp, m, p):
    """Directions as ``b`` (m x r) and ``c`` (r x p); block data is refused."""
    r = interp.r
    if interp.left_points.size != r:
        raise DimensionMismatch("IRKA needs as many left as right points")
    b = interp.right_dirs
    c = interp.left_dirs
    if b is None:
        if m != 1:
            raise ValidationError("IRKA interpolation data must be tangential for m > 1")
        b = np.ones((1, r))
    if c is None:
        if p != 1:
            raise ValidationError("IRKA interpolation data must be tangential for p > 1")
        c = np.ones((r, 1))
    return np.asarray(b, complex), np.asarray(c, complex)


def _check_points(points, expected, what):
    if points is None or np.asarray(points).size != expected.size or \
            not np.allclose(points, expected, rtol=1e-12, atol=1e-14):
        raise GridMismatch(f"quadruplet {what} grid differs from the strategy nodes")


# -- projector functions ------------------------------------------------------

def proj_quad_ct(side, rule, interp, m=1, p=1):
    """Frequency-domain quadrature projector (continuous time).

    Parameters
    ----------
    side : ``"input"`` or ``"output"``
    rule : QuadratureRule
        Nodes ``omega_i`` on the real line with measure weights ``w_i``.
    interp : InterpolationData
    m, p : int
        Block sizes of the quadruplet.

    Returns
    -------
    ndarray
        ``V_hat`` (``n m x r``) with blocks ``(w_i/2pi) b diag(1/(sigma - j w_i))``
        for the input side; ``W_hat^*`` (``r x n p``) with blocks
        ``(w_i/2pi) diag(1/(mu - j nu_i)) c`` for the output side.
    """
    b, c = _dirs(interp, m, p)
    w = rule.measure(True) / TWO_PI
    x = rule.nodes
    if side == "input":
        sig = interp.right_points
        if np.any(sig.real == 0):
            raise ShiftOnAxis("sigma on the imaginary axis")
        R = w[:, None] / (sig[None, :] - 1j * x[:, None])          # (n, r)
        return (R[:, None, :] * b[None, :, :]).reshape(-1, b.shape[1])
    if side == "output":
        mu = interp.left_points
        if np.any(mu.real == 0):
            raise ShiftOnAxis("mu on the imaginary axis")
        R = w[:, None] / (mu[None, :] - 1j * x[:, None])           # (n, r)
        return (R.T[:, :, None] * c[:, None, :]).reshape(c.shape[0], -1)
    raise ValidationError("side must be 'input' or 'output'")


def proj_quad_td_ct(side, rule, interp, m=1, p=1):
    """Time-domain quadrature projector (continuous time).

    Blocks ``w_i b diag(exp(-sigma t_i))`` (input) and
    ``w_i diag(exp(-mu tau_i)) c`` (output); `rule` carries time nodes and
    measure weights.
    """
    b, c = _dirs(interp, m, p)
    w = rule.measure(False)
    t = rule.nodes
    if side == "input":
        R = w[:, None] * np.exp(-np.outer(t, interp.right_points))
        return (R[:, None, :] * b[None, :, :]).reshape(-1, b.shape[1])
    if side == "output":
        R = w[:, None] * np.exp(-np.outer(t, interp.left_points))
        return (R.T[:, :, None] * c[:, None, :]).reshape(c.shape[0], -1)
    raise ValidationError("side must be 'input' or 'output'")


def proj_quad_dt(side, rule, interp, m=1, p=1):
    """Frequency-domain quadrature projector (discrete time).

    With ``Sbar = S^{-1}`` and ``Lbar = L S^{-1}``, blocks are
    ``(w_i/2pi) Lbar_b (exp(-j xi_i) I - Sbar_b)^{-1}`` (input) and the dual
    ``(w_i/2pi) (exp(-j xi_i) I - Sbar_c)^{-1} Lbar_c`` (output).
    """
    b, c = _dirs(interp, m, p)
    w = rule.measure(True) / TWO_PI
    z = np.exp(-1j * rule.nodes)
    if side == "input":
        sig = interp.right_points
        if np.any(np.abs(np.abs(sig) - 1.0) <= 1e-14):
            raise ShiftOnCircle("sigma on the unit circle")
        sb = 1.0 / sig
        R = w[:, None] * sb[None, :] / (z[:, None] - sb[None, :])
        return (R[:, None, :] * b[None, :, :]).reshape(-1, b.shape[1])
    if side == "output":
        mu = interp.left_points
        if np.any(np.abs(np.abs(mu) - 1.0) <= 1e-14):
            raise ShiftOnCircle("mu on the unit circle")
        sc = 1.0 / mu
        R = w[:, None] * sc[None, :] / (z[:, None] - sc[None, :])
        return (R.T[:, :, None] * c[:, None, :]).reshape(c.shape[0], -1)
    raise ValidationError("side must be 'input' or 'output'")


def proj_td_dt(side, horizon, interp, m=1, p=1):
    """Truncated-sum projector (discrete time): blocks ``Lbar_b Sbar_b^i``
    (input) or ``Sbar_c^i Lbar_c`` (output) for ``i = 0 .. horizon-1``."""
    b, c = _dirs(interp, m, p)
    i = np.arange(int(horizon))
    if side == "input":
        sb = 1.0 / interp.right_points
        R = sb[None, :] ** (i[:, None] + 1)
        return (R[:, None, :] * b[None, :, :]).reshape(-1, b.shape[1])
    if side == "output":
        sc = 1.0 / interp.left_points
        R = sc[None, :] ** (i[:, None] + 1)
        return (R.T[:, :, None] * c[:, None, :]).reshape(c.shape[0], -1)
    raise ValidationError("side must be 'input' or 'output'")


def pork_surrogate(domain, side, points, block):
    """Surrogate state matrix and port matrix built from sample points alone.

    Input side returns ``(A_alpha, B_alpha)``, output side
    ``(A_beta, C_beta)``; they are the I-PORK / O-PORK ROM matrices
    (continuous or discrete) of the block interpolation data.
    """
    if side == "input":
        S, L = pork.block_input_data(points, block)
        if domain == systems.CONTINUOUS:
            Q = pork.input_gramian_ct(S, L)
            pork.inverse_factor(Q, NotObservable)
            return -dense.solve(Q, ct(S) @ Q), dense.solve(Q, ct(L))
        Sb, Lb = pork.bar_input(S, L)
        Q = pork.input_gramian_dt(Sb, Lb)
        pork.inverse_factor(Q, NotObservable)
        return dense.solve(Q, ct(Sb) @ Q), dense.solve(Q, ct(Lb))
    if side == "output":
        S, L = pork.block_output_data(points, block)
        if domain == systems.CONTINUOUS:
            P = pork.output_gramian_ct(S, L)
            pork.inverse_factor(P, NotControllable)
            return -ct(dense.solve(P, S @ P)), ct(dense.solve(P, L))
        Sb, Lb = pork.bar_output(S, L)
        P = pork.output_gramian_dt(Sb, Lb)
        pork.inverse_factor(P, NotControllable)
        return ct(dense.solve(P, Sb @ P)), ct(dense.solve(P, Lb))
    raise ValidationError("side must be 'input' or 'output'")


def _surrogate_solve(A, points, rhs, what):
    """``(s_k I - A)^{-1} rhs_k`` for every point, batched."""
    n = A.shape[0]
    M = points[:, None, None] * np.eye(n)[None] - A[None]
    try:
        X = np.linalg.solve(M, rhs)
    except np.linalg.LinAlgError:
        raise SurrogatePoleHit(f"a {what} value coincides with a surrogate pole") from None
    if not np.all(np.isfinite(X)):
        raise SurrogatePoleHit(f"a {what} value coincides with a surrogate pole")
    return X


def _pork_columns(domain, side, surrogate, interp, m, p):
    b, c = _dirs(interp, m, p)
    A, X = surrogate
    if side == "input":
        rhs = (X @ b).T[:, :, None]                                  # (r, n, 1)
        return _surrogate_solve(A, interp.right_points, rhs, "sigma")[:, :, 0].T
    # rows c_k X (mu_k I - A)^{-1} = ((mu_k I - A)^{-T} (c_k X)^T)^T
    rhs = (c @ X)[:, :, None]
    return _surrogate_solve(np.swapaxes(A, 0, 1), interp.left_points, rhs, "mu")[:, :, 0]


def proj_pork_ct(side, sample_points, interp, m=1, p=1, surrogate=None):
    """PORK-surrogate projector (continuous time).

    Input side: columns ``(sigma_k I - A_alpha)^{-1} B_alpha b_k`` with
    ``A_alpha = -Q^{-1} S^* Q`` and ``B_alpha = Q^{-1} L^*``. Output side:
    ``W_hat^*`` rows ``c_k C_beta (mu_k I - A_beta)^{-1}``.
    """
    if surrogate is None:
        surrogate = pork_surrogate(systems.CONTINUOUS, side, sample_points,
                                   m if side == "input" else p)
    return _pork_columns(systems.CONTINUOUS, side, surrogate, interp, m, p)


def proj_pork_dt(side, sample_points, interp, m=1, p=1, surrogate=None):
    """PORK-surrogate projector (discrete time), with
    ``A_alpha = Qbar^{-1} Sbar^* Qbar`` and ``B_alpha = Qbar^{-1} Lbar^*``."""
    if surrogate is None:
        surrogate = pork_surrogate(systems.DISCRETE, side, sample_points,
                                   m if side == "input" else p)
    return _pork_columns(systems.DISCRETE, side, surrogate, interp, m, p)


# -- strategies ---------------------------------------------------------------

class Strategy:
    """Base class: a domain, the quadruplet kind it serves, and projectors."""

    domain = systems.CONTINUOUS
    kind = "loewner"

    def check(self, q):
        if q.kind != self.kind or q.domain != self.domain:
            raise ValidationError(
                f"{type(self).__name__} needs a {self.domain} {self.kind} quadruplet, "
                f"got {q.domain} {q.kind}")
        if not q.is_block:
            raise ValidationError("IRKA strategies need block quadruplets")

    def band(self):
        """Magnitude range of the sampling grid."""
        raise NotImplementedError

    def data_band(self, q):
        """Magnitude range used by :func:`default_init`; defaults to
        :meth:`band`."""
        return self.band()

    def projectors(self, interp, m, p):
        raise NotImplementedError


class FrequencyQuadCT(Strategy):
    """Quadrature on ``j omega``; the quadruplet is the Loewner quadruplet
    at ``j * rule_p.nodes`` (right) and ``j * rule_q.nodes`` (left)."""

    def __init__(self, rule_p, rule_q=None):
        self.rule_p, self.rule_q = rule_p, rule_q or rule_p

    def check(self, q):
        super().check(q)
        _check_points(q.right_points, 1j * self.rule_p.nodes, "right")
        _check_points(q.left_points, 1j * self.rule_q.nodes, "left")

    def band(self):
        x = np.abs(np.concatenate([self.rule_p.nodes, self.rule_q.nodes]))
        x = x[x > 0]
        return x.min(), x.max()

    def data_band(self, q, lo=1e-3, hi=1.0 - 1e-3):
        """Frequencies holding the central 99.8% of the sampled H2 energy.

        A mapped infinite-axis rule reaches far beyond the system's
        bandwidth; points spread over the whole grid then make the first
        reduced ``E_r`` singular.
        """
        w = np.abs(self.rule_p.nodes)
        blocks = np.split(q.Cq, w.size, axis=1)
        energy = self.rule_p.weights * np.array([np.linalg.norm(b) ** 2 for b in blocks])
        order = np.argsort(w)
        cum = np.cumsum(energy[order])
        if not cum[-1] > 0:
            return self.band()
        cum /= cum[-1]
        a, b = w[order][np.searchsorted(cum, [lo, hi])]
        return (a, b) if 0 < a < b else self.band()

    def projectors(self, interp, m, p):
        return (proj_quad_ct("input", self.rule_p, interp, m, p),
                proj_quad_ct("output", self.rule_q, interp, m, p))


class TimeQuadCT(Strategy):
    """Quadrature on impulse-response time nodes (impulse-ct quadruplet)."""

    kind = "impulse-ct"

    def __init__(self, rule_p, rule_q=None):
        self.rule_p, self.rule_q = rule_p, rule_q or rule_p

    def check(self, q):
        Strategy.check(self, q)
        _check_points(q.right_points, self.rule_p.nodes, "right")
        _check_points(q.left_points, self.rule_q.nodes, "left")

    def band(self):
        t = self.rule_p.nodes
        t = t[t > 0]
        return 1.0 / t.max(), 1.0 / t.min()

    def projectors(self, interp, m, p):
        return (proj_quad_td_ct("input", self.rule_p, interp, m, p),
                proj_quad_td_ct("output", self.rule_q, interp, m, p))


class PorkCT(Strategy):
    """Loewner quadruplet at alpha (right) and beta (left) with PORK
    surrogates standing in for the Krylov bases."""

    def __init__(self, alpha, beta=None):
        self.alpha = np.atleast_1d(np.asarray(alpha, complex))
        self.beta = self.alpha if beta is None else np.atleast_1d(np.asarray(beta, complex))
        self._sur = {}

    def check(self, q):
        super().check(q)
        _check_points(q.right_points, self.alpha, "right")
        _check_points(q.left_points, self.beta, "left")

    def band(self):
        x = np.abs(np.concatenate([self.alpha, self.beta]))
        return x.min(), x.max()

    def _surrogates(self, m, p):
        key = (m, p)
        if key not in self._sur:
            self._sur[key] = (pork_surrogate(self.domain, "input", self.alpha, m),
                              pork_surrogate(self.domain, "output", self.beta, p))
        return self._sur[key]

    def projectors(self, interp, m, p):
        sa, sb = self._surrogates(m, p)
        return (_pork_columns(self.domain, "input", sa, interp, m, p),
                _pork_columns(self.domain, "output", sb, interp, m, p))


class FrequencyQuadDT(Strategy):
    """Quadrature on the unit circle: nodes ``xi`` in ``[-pi, pi]``."""

    domain = systems.DISCRETE

    def __init__(self, rule_p, rule_q=None):
        self.rule_p, self.rule_q = rule_p, rule_q or rule_p

    def check(self, q):
        super().check(q)
        _check_points(q.right_points, np.exp(1j * self.rule_p.nodes), "right")
        _check_points(q.left_points, np.exp(1j * self.rule_q.nodes), "left")

    def band(self):
        return 0.0, np.pi

    def projectors(self, interp, m, p):
        return (proj_quad_dt("input", self.rule_p, interp, m, p),
                proj_quad_dt("output", self.rule_q, interp, m, p))


class TimeDT(Strategy):
    """Truncated power sums over a Hankel quadruplet."""

    domain = systems.DISCRETE
    kind = "hankel-dt"

    def __init__(self, n_p, n_q=None):
        self.n_p, self.n_q = int(n_p), int(n_q if n_q is not None else n_p)

    def check(self, q):
        Strategy.check(self, q)
        if (q.right_points.size, q.left_points.size) != (self.n_p, self.n_q):
            raise GridMismatch("Hankel horizons differ from the strategy horizons")

    def band(self):
        return 0.0, np.pi

    def projectors(self, interp, m, p):
        return (proj_td_dt("input", self.n_p, interp, m, p),
                proj_td_dt("output", self.n_q, interp, m, p))


class PorkDT(PorkCT):
    """Discrete-time PORK surrogates (points outside the unit circle)."""

    domain = systems.DISCRETE

    def band(self):
        return 0.0, np.pi


class KrylovStrategy(Strategy):
    """Exact rational Krylov projectors from a realization (intrusive)."""

    kind = "system"

    def __init__(self, sys):
        self.sys = sys
        self.domain = sys.domain

    def check(self, q):
        if q.kind != "system":
            raise ValidationError("KrylovStrategy needs a 'system' quadruplet")

    def band(self):
        mags = np.abs(self.sys.poles())
        return mags.min(), mags.max()

    def projectors(self, interp, m, p):
        b, c = _dirs(interp, m, p)
        E, A, B, C = self.sys.E, self.sys.A, self.sys.B, self.sys.C
        V = np.hstack([dense.solve(s * E - A, B @ b[:, [k]])
                       for k, s in enumerate(interp.right_points)])
        Wh = np.vstack([ct(dense.solve(ct(s * E - A), ct(c[[k], :] @ C)))
                        for k, s in enumerate(interp.left_points)])
        return V, Wh


# -- initialization -----------------------------------------------------------

def _lead_dirs(q, r):
    """Leading singular directions of the stacked ``Cq`` / ``Bq`` blocks."""
    m, p = q.m, q.p
    Cb = q.Cq.reshape(p, -1, m).transpose(1, 0, 2).reshape(-1, m)
    Bb = q.Bq.reshape(-1, p, m).transpose(1, 0, 2).reshape(p, -1)
    b = np.linalg.svd(Cb, full_matrices=False)[2][0].conj()
    c = np.linalg.svd(Bb, full_matrices=False)[0][:, 0].conj()
    return np.tile(b[:, None], (1, r)), np.tile(c[None, :], (r, 1))


def default_points(domain, r, band=None):
    """Deterministic interpolation points.

    CT: ``r`` log-spaced real points across `band`; DT: ``r`` points of
    modulus 1.2 with phases ``(2k - r - 1) pi / r`` (conjugate-closed).
    """
    if domain == systems.CONTINUOUS:
        lo, hi = band
        lo = max(lo, hi * 1e-6) if hi > 0 else 1e-3
        return np.geomspace(lo, hi, r).astype(complex)
    k = np.arange(1, r + 1)
    return 1.2 * np.exp(1j * (2 * k - r - 1) * np.pi / r)


def default_init(q, strategy, r):
    """Default interpolation data for :func:`irka_run`."""
    pts = default_points(strategy.domain, r, strategy.data_band(q))
    if q.m == 1 and q.p == 1:
        b, c = np.ones((1, r), complex), np.ones((r, 1), complex)
    else:
        b, c = _lead_dirs(q, r)
    return InterpolationData.symmetric(pts, b, c)


def default_init_from_system(sys, r):
    """Default initialization for intrusive IRKA (band from the poles)."""
    mags = np.abs(sys.poles())
    pts = default_points(sys.domain, r, (mags.min(), mags.max()))
    if sys.m == 1 and sys.p == 1:
        return InterpolationData.symmetric(pts, np.ones((1, r)), np.ones((r, 1)))
    b = np.linalg.svd(sys.B, full_matrices=False)[2][0].conj()
    c = np.linalg.svd(sys.C, full_matrices=False)[0][:, 0].conj()
    return InterpolationData.symmetric(pts, np.tile(b[:, None], (1, r)),
                                       np.tile(c[None, :], (r, 1)))


def init_from_rom(rom):
    """Interpolation data at the mirrored poles of a seed ROM, with its
    residue directions (``-lambda`` in continuous time, ``1/lambda`` in
    discrete time), e.g. a balanced-truncation ROM."""
    E, A, B, C = (np.asarray(M, complex) for M in (rom.E, rom.A, rom.B, rom.C))
    T, lam = dense.eig(np.linalg.solve(E, A))
    if rom.is_continuous:
        sig = -lam
    else:
        if np.any(lam == 0):
            raise BadShift("a zero pole has no reciprocal interpolation point")
        sig = 1.0 / lam
    sig, _ = _reflect(sig, rom.domain)
    b = np.linalg.solve(T, np.linalg.solve(E, B)).T
    c = (C @ T).T
    return InterpolationData.symmetric(sig, b, c)


# -- the loop -----------------------------------------------------------------

def _pair(prev, new):
    """Permutation of `new` greedily matched to `prev` by nearest neighbor."""
    n = prev.size
    D = np.abs(prev[:, None] - new[None, :])
    perm = -np.ones(n, int)
    taken = np.zeros(n, bool)
    for _ in range(n):
        D_masked = np.where(taken[None, :] | (perm[:, None] >= 0), np.inf, D)
        i, j = np.unravel_index(np.argmin(D_masked), D.shape)
        perm[i] = j
        taken[j] = True
    return perm


def _reduced_h2_sq(E, A, B, C, domain):
    """``||G_r||_H2^2`` of a small (possibly complex) iterate."""
    rom = systems.StateSpace(None, np.linalg.solve(E, A), np.linalg.solve(E, B), C, domain)
    if not rom.is_stable():
        return float("nan")
    return systems.h2_norm(rom) ** 2


def track_h2(C_next, C_prev, T_prev, norm_prev_sq, lam_prev=None):
    """Non-intrusive tracked error term for the previous iterate.

    ``||G_r^{(i-1)}||^2 - 2 Re trace(C_r^{(i)} W (C_r^{(i-1)} T_r^{(i-1)})^T)``;
    adding ``||G||^2`` estimates ``||G - G_r^{(i-1)}||_H2^2``. Only an
    approximation: its accuracy follows that of the projectors.

    ``W = I`` in continuous time. In discrete time pass the previous
    eigenvalues as `lam_prev`; then ``W = diag(1 / lambda)``, because the
    discrete H2 inner product of ``G`` with ``c b^T / (z - lambda)`` is
    ``c^T G(1/lambda) b / lambda`` rather than ``c^T G(-lambda) b``.

    The transpose matches the direction update used by :func:`irka_run`
    (``b_k``, ``c_k`` taken from rows of ``T^{-1} E_r^{-1} B_r`` and columns
    of ``C_r T`` without conjugation). With conjugated directions the same
    trace would pair each residue with the conjugate of its own value and
    misestimate the cross term whenever the poles are complex.
    """
    X = np.atleast_2d(C_prev) @ T_prev
    Cn = np.atleast_2d(C_next)
    if lam_prev is not None:
        Cn = Cn / np.asarray(lam_prev)[None, :]
    cross = np.trace(Cn @ X.T)
    return float(norm_prev_sq - 2.0 * cross.real)


def _reflect(sig, domain):
    if domain == systems.CONTINUOUS:
        bad = sig.real <= 0
        out = np.where(bad, -sig.conj(), sig)
    else:
        bad = np.abs(sig) <= 1
        out = np.where(bad, sig / np.abs(sig) ** 2, sig)
    return out, bool(np.any(bad))


def _equilibration(M):
    """Diagonal scalings ``(dl, dr)`` with ``diag(dl) M diag(dr)`` having
    unit-norm columns and then unit-norm rows."""
    cn = np.linalg.norm(M, axis=0)
    dr = 1.0 / np.where(cn > 0, cn, 1.0)
    rn = np.linalg.norm(M * dr[None, :], axis=1)
    dl = 1.0 / np.where(rn > 0, rn, 1.0)
    return dl, dr


def _is_conj_closed(lam, tol=1e-8):
    scale = max(1.0, np.abs(lam).max())
    return all(np.min(np.abs(lam - np.conj(x))) <= tol * scale for x in lam)


def irka_run(q, strategy, init, cfg=None):
    """Run data-driven IRKA on a fixed quadruplet.

    Parameters
    ----------
    q : DataQuadruplet
        Compatible with `strategy` (checked).
    strategy : Strategy
    init : InterpolationData or int
        Initial points and tangential directions, or the order ``r`` to
        use :func:`default_init`.
    cfg : IrkaConfig, optional

    Returns
    -------
    rom : StateSpace
        Last interim ROM; converted to a real block-diagonal form when its
        poles are conjugate-closed (``report.real_rom``).
    report : IrkaReport

    Raises
    ------
    SingularReducedE
        When some interim ``E_r`` is numerically singular.
    """
    cfg = cfg or IrkaConfig()
    strategy.check(q)
    if isinstance(init, (int, np.integer)):
        init = default_init(q, strategy, int(init))
    domain = strategy.domain
    m, p = q.m, q.p
    interp = init
    _domain_check(interp, domain)
    report = IrkaReport()
    prev = None   # (C_r, T, ||G_r||^2) of the previous iterate
    lam_prev = None
    rom_mats = None
    for it in range(1, int(cfg.max_iter) + 1):
        V, Wh = strategy.projectors(interp, m, p)
        Er, Ar = Wh @ q.Eq @ V, Wh @ q.Aq @ V
        Br, Cr = Wh @ q.Bq, q.Cq @ V
        C_samples = Cr      # sampled values G(sigma_k) b_k, needed unscaled below
        # A diagonal equivalence transform leaves eigenvalues, direction
        # updates and the tracked term unchanged but keeps E_r well scaled.
        dl, dr = _equilibration(Er)
        Er, Ar = dl[:, None] * Er * dr[None, :], dl[:, None] * Ar * dr[None, :]
        Br, Cr = dl[:, None] * Br, Cr * dr[None, :]
        sv = np.linalg.svd(Er, compute_uv=False)
        if sv[-1] <= E_SINGULAR_RTOL * sv[0]:
            report.iterations = it
            raise SingularReducedE(
                f"reduced E is numerically singular at iteration {it} "
                f"(sigma_min/sigma_max = {sv[-1] / sv[0]:.2e})")
        rom_mats = (Er, Ar, Br, Cr)
        T, lam = dense.eig(np.linalg.solve(Er, Ar))
        if lam_prev is not None:
            perm = _pair(lam_prev, lam)
            T, lam = T[:, perm], lam[perm]
            change = float(np.max(np.abs(lam - lam_prev) / np.maximum(np.abs(lam_prev), 1e-300)))
        else:
            change = float("inf")
        norm_sq = _reduced_h2_sq(Er, Ar, Br, Cr, domain)
        if prev is not None:
            report.tracked.append(track_h2(
                C_samples, prev[0], prev[1], prev[2],
                lam_prev if domain == systems.DISCRETE else None))
        report.eigenvalues.append(lam.copy())
        report.changes.append(change)
        report.rom_norms.append(norm_sq)
        report.iterates.append(systems.StateSpace(Er, Ar, Br, Cr, domain))
        report.iterations = it
        if change < cfg.tol:
            report.converged = True
            break
        sig = -lam if domain == systems.CONTINUOUS else 1.0 / lam
        flagged = False
        if cfg.stability_reflection:
            sig, flagged = _reflect(sig, domain)
        report.reflected.append(flagged)
        Tinv_EB = np.linalg.solve(T, np.linalg.solve(Er, Br))      # r x m
        # Transposes, not conjugate transposes: for conjugate-closed real
        # data both choices span the same bases, but only this one pairs
        # each residue with the sample at its own mirrored pole, which the
        # tracked error term relies on.
        b, c = Tinv_EB.T, (Cr @ T).T
        interp = InterpolationData.symmetric(sig, b, c)
        prev, lam_prev = (Cr, T, norm_sq), lam
    report.tracked.append(float("nan"))
    report.interpolation = interp
    Er, Ar, Br, Cr = rom_mats
    rom = systems.StateSpace(Er, Ar, Br, Cr, domain)
    if _is_conj_closed(lam):
        real, ok = systems.real_modal_form(rom)
        if ok:
            rom = real
            report.real_rom = True
    return rom, report
