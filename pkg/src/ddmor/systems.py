"""Descriptor state-space systems and their intrusive analysis.

Everything here has full access to the realization ``(E, A, B, C)``: exact
transfer function and impulse response values, Gramians, Hankel singular
values, the square-root balanced truncation and IRKA baselines, norms,
and the synthetic benchmark generators. The data-driven modules never
call into this file except through sampling.
"""
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from . import dense
from .dense import ct
from .errors import (BadParams, DimensionMismatch, DomainMismatch, PointIsPole,
                     RankDeficient, Singular, Unstable, ValidationError)

CONTINUOUS = "continuous"
DISCRETE = "discrete"
DOMAINS = (CONTINUOUS, DISCRETE)


def check_domain(domain):
    if domain not in DOMAINS:
        raise ValidationError(f"domain must be one of {DOMAINS}, got {domain!r}")
    return domain


@dataclass(frozen=True, eq=False)
class StateSpace:
    """``G(s) = C (sE - A)^{-1} B`` with a continuous/discrete tag."""

    E: np.ndarray
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    domain: str = CONTINUOUS

    def __post_init__(self):
        A = dense.as_matrix(self.A, "A")
        n = A.shape[0]
        E = np.eye(n) if self.E is None else dense.as_matrix(self.E, "E")
        B = dense.as_matrix(self.B, "B")
        C = dense.as_matrix(self.C, "C")
        if A.shape != (n, n) or E.shape != (n, n):
            raise DimensionMismatch(f"A {A.shape} and E {E.shape} must be {n}x{n}")
        if B.shape[0] != n:
            raise DimensionMismatch(f"B has {B.shape[0]} rows, expected {n}")
        if C.shape[1] != n:
            raise DimensionMismatch(f"C has {C.shape[1]} columns, expected {n}")
        check_domain(self.domain)
        if n and dense.rcond(E) * dense.COND_LIMIT < 1.0:
            raise Singular("E is numerically singular")
        for name, M in zip("EABC", (E, A, B, C)):
            object.__setattr__(self, name, M)

    @classmethod
    def from_abc(cls, A, B, C, E=None, domain=CONTINUOUS):
        return cls(E, A, B, C, domain)

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def m(self):
        return self.B.shape[1]

    @property
    def p(self):
        return self.C.shape[0]

    @property
    def is_continuous(self):
        return self.domain == CONTINUOUS

    @property
    def is_real(self):
        return not any(np.iscomplexobj(M) and np.any(M.imag)
                       for M in (self.E, self.A, self.B, self.C))

    def standard(self):
        """Equivalent realization with ``E = I``."""
        return StateSpace(None, dense.solve(self.E, self.A),
                          dense.solve(self.E, self.B), self.C, self.domain)

    def poles(self):
        return dense.eigvals(dense.solve(self.E, self.A))

    def is_stable(self):
        lam = self.poles()
        if self.is_continuous:
            return bool(np.all(lam.real < 0))
        return bool(np.all(np.abs(lam) < 1))

    def transform(self, T, Tl=None):
        """State transform ``x = T xt``; left transform defaults to ``T^{-1}``."""
        T = np.asarray(T)
        Tl = np.linalg.inv(T) if Tl is None else np.asarray(Tl)
        return StateSpace(Tl @ self.E @ T, Tl @ self.A @ T, Tl @ self.B,
                          self.C @ T, self.domain)

    def __repr__(self):
        return f"StateSpace(n={self.n}, m={self.m}, p={self.p}, {self.domain})"


@dataclass(frozen=True)
class PoleResidueForm:
    """``G(s) = sum_k l_k r_k^* / (s - lambda_k)``."""

    poles: np.ndarray
    left: np.ndarray   # p x n, column k is l_k
    right: np.ndarray  # m x n, column k is r_k

    def __call__(self, s):
        return (self.left / (s - self.poles)) @ ct(self.right)


def pole_residue(sys):
    """Pole-residue form of a system with simple poles."""
    T, lam = dense.eig(dense.solve(sys.E, sys.A))
    gap = np.abs(lam[:, None] - lam[None, :]) + np.eye(lam.size)
    if lam.size > 1 and gap.min() <= 1e-10 * max(1.0, np.abs(lam).max()):
        raise ValidationError("poles are not simple")
    left = sys.C @ T
    right = ct(np.linalg.solve(T, dense.solve(sys.E, sys.B)))
    return PoleResidueForm(lam, left, right)


# -- evaluation ---------------------------------------------------------------

def tf_eval(sys, s, with_derivative=False):
    """Value of ``C (sE - A)^{-1} B`` and optionally its derivative."""
    K = s * sys.E - sys.A
    try:
        X = dense.solve(K, sys.B)
    except Singular:
        raise PointIsPole(f"s = {s} is (numerically) a pole") from None
    G = sys.C @ X
    if not with_derivative:
        return G
    dG = -sys.C @ dense.solve(K, sys.E @ X)
    return G, dG


def freqresp(sys, points):
    """Stacked values at many points, shape ``(len(points), p, m)``."""
    points = np.atleast_1d(np.asarray(points, dtype=complex))
    out = np.empty((points.size, sys.p, sys.m), dtype=complex)
    # one eigendecomposition when possible, per-point solves otherwise
    try:
        T, lam = dense.eig(dense.solve(sys.E, sys.A))
        if np.linalg.cond(T) > 1e8:
            raise ValidationError
        left = sys.C @ T
        right = np.linalg.solve(T, dense.solve(sys.E, sys.B))
        den = points[:, None] - lam[None, :]
        if np.any(np.abs(den) < 1e-14 * (1 + np.abs(lam).max())):
            raise PointIsPole("sampling point coincides with a pole")
        out[:] = np.einsum("pk,nk,km->npm", left, 1.0 / den, right)
    except (ValidationError, dense.NonDiagonalizable):
        for k, s in enumerate(points):
            out[k] = tf_eval(sys, s)
    return out


def sigma_max(sys, points):
    """Largest singular value of the response at each point."""
    return np.linalg.norm(freqresp(sys, points), ord=2, axis=(1, 2))


def impulse_ct(sys, t, with_derivative=False):
    """``h(t) = C exp(E^{-1} A t) E^{-1} B`` (and ``h'(t)``)."""
    if not sys.is_continuous:
        raise DomainMismatch("impulse_ct needs a continuous-time system")
    if t < 0:
        raise ValidationError("t must be nonnegative")
    Et_A = dense.solve(sys.E, sys.A)
    Et_B = dense.solve(sys.E, sys.B)
    X = dense.expm(Et_A * t) @ Et_B
    h = sys.C @ X
    if not with_derivative:
        return h
    return h, sys.C @ (dense.expm(Et_A * t) @ (Et_A @ Et_B))


def impulse_ct_many(sys, times, with_derivative=False):
    """Vectorized :func:`impulse_ct` through a modal decomposition."""
    if not sys.is_continuous:
        raise DomainMismatch("impulse_ct needs a continuous-time system")
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if np.any(times < 0):
        raise ValidationError("times must be nonnegative")
    try:
        T, lam = dense.eig(dense.solve(sys.E, sys.A))
        if np.linalg.cond(T) > 1e8:
            raise ValidationError
    except (ValidationError, dense.NonDiagonalizable):
        res = [impulse_ct(sys, t, with_derivative) for t in times]
        if not with_derivative:
            return np.array(res)
        return np.array([r[0] for r in res]), np.array([r[1] for r in res])
    left = sys.C @ T
    right = np.linalg.solve(T, dense.solve(sys.E, sys.B))
    ex = np.exp(np.outer(times, lam))
    h = np.einsum("pk,nk,km->npm", left, ex, right)
    if sys.is_real:
        h = h.real
    if not with_derivative:
        return h
    dh = np.einsum("pk,nk,km->npm", left, ex * lam, right)
    if sys.is_real:
        dh = dh.real
    return h, dh


def impulse_dt(sys, k):
    """``h(k) = C (E^{-1} A)^k E^{-1} B``."""
    if sys.is_continuous:
        raise DomainMismatch("impulse_dt needs a discrete-time system")
    if k < 0 or int(k) != k:
        raise ValidationError("k must be a nonnegative integer")
    Et_A = dense.solve(sys.E, sys.A)
    X = dense.solve(sys.E, sys.B)
    return sys.C @ np.linalg.matrix_power(Et_A, int(k)) @ X


def impulse_dt_many(sys, count):
    """``h(0), ..., h(count - 1)`` stacked, shape ``(count, p, m)``."""
    if sys.is_continuous:
        raise DomainMismatch("impulse_dt needs a discrete-time system")
    Et_A = dense.solve(sys.E, sys.A)
    X = dense.solve(sys.E, sys.B)
    out = np.empty((count, sys.p, sys.m), dtype=np.result_type(X, sys.C))
    for k in range(count):
        out[k] = sys.C @ X
        X = Et_A @ X
    return out


# -- Gramians and norms -------------------------------------------------------

def _require_stable(sys):
    if not sys.is_stable():
        raise Unstable("system is not asymptotically stable")


def gramians(sys):
    """Controllability and observability Gramians ``(P, Q)``.

    Continuous: ``A P E^* + E P A^* + B B^* = 0`` and
    ``A^* Q E + E^* Q A + C^* C = 0``; discrete: the Stein analogues
    ``A P A^* - E P E^* + B B^* = 0`` and ``A^* Q A - E^* Q E + C^* C = 0``.
    """
    _require_stable(sys)
    At = dense.solve(sys.E, sys.A)
    Bt = dense.solve(sys.E, sys.B)
    if sys.is_continuous:
        P = sla.solve_continuous_lyapunov(At, -Bt @ ct(Bt))
        Qt = sla.solve_continuous_lyapunov(ct(At), -ct(sys.C) @ sys.C)
    else:
        # the Schur-based bilinear route; scipy's default for small n is a
        # Kronecker solve that loses digits on poorly conditioned Gramians
        P = sla.solve_discrete_lyapunov(At, Bt @ ct(Bt), method="bilinear")
        Qt = sla.solve_discrete_lyapunov(ct(At), ct(sys.C) @ sys.C, method="bilinear")
    Einv = np.linalg.inv(sys.E)
    Q = ct(Einv) @ Qt @ Einv
    return dense.herm(P), dense.herm(Q)


def psd_factor(P):
    """``Z`` with ``Z Z^* = P`` from the eigendecomposition (clips negatives)."""
    w, U = np.linalg.eigh(dense.herm(P))
    w = np.clip(w, 0.0, None)
    keep = w > w.max() * 1e-15 if w.size and w.max() > 0 else np.zeros_like(w, bool)
    return U[:, keep] * np.sqrt(w[keep])


def hsv(sys):
    """Hankel singular values, nonincreasing."""
    P, Q = gramians(sys)
    Zp, Zq = psd_factor(P), psd_factor(Q)
    return np.linalg.svd(ct(Zq) @ sys.E @ Zp, compute_uv=False)


def h2_norm(sys):
    """``sqrt(trace(C P C^*))``."""
    P, _ = gramians(sys)
    return float(np.sqrt(max(np.trace(sys.C @ P @ ct(sys.C)).real, 0.0)))


def h2_norm_dual(sys):
    """``sqrt(trace(B^* Q B))``; equals :func:`h2_norm`."""
    _, Q = gramians(sys)
    return float(np.sqrt(max(np.trace(ct(sys.B) @ Q @ sys.B).real, 0.0)))


def error_system(sys, rom):
    """Realization of ``G - G_r``."""
    if sys.domain != rom.domain:
        raise DomainMismatch("system and ROM live in different domains")
    if (sys.m, sys.p) != (rom.m, rom.p):
        raise DimensionMismatch("input/output dimensions differ")
    return StateSpace(sla.block_diag(sys.E, rom.E), sla.block_diag(sys.A, rom.A),
                      np.vstack([sys.B, rom.B]), np.hstack([sys.C, -rom.C]),
                      sys.domain)


def h2_error(sys, rom):
    return h2_norm(error_system(sys, rom))


def frequency_grid(sys, n=400):
    """Evaluation grid: log-spaced frequencies (CT) or uniform on [0, pi] (DT)."""
    if not sys.is_continuous:
        return np.linspace(0.0, np.pi, n)
    mags = np.abs(sys.poles())
    mags = mags[mags > 0]
    lo = 0.1 * mags.min() if mags.size else 1e-3
    hi = 10.0 * mags.max() if mags.size else 1e3
    return np.logspace(np.log10(lo), np.log10(hi), n)


def grid_points(sys, omegas):
    """Map grid frequencies to ``j omega`` or ``exp(j omega)``."""
    omegas = np.asarray(omegas, dtype=float)
    return 1j * omegas if sys.is_continuous else np.exp(1j * omegas)


def hinf_grid(sys, omegas=None):
    """Grid approximation of the H-infinity norm."""
    if omegas is None:
        omegas = frequency_grid(sys)
    return float(sigma_max(sys, grid_points(sys, omegas)).max())


def hinf_rel_error(sys, rom, omegas=None):
    """``max_w ||G - G_r|| / max_w ||G||`` on the truth's grid."""
    if omegas is None:
        omegas = frequency_grid(sys)
    pts = grid_points(sys, omegas)
    err = np.linalg.norm(freqresp(sys, pts) - freqresp(rom, pts), ord=2, axis=(1, 2))
    return float(err.max() / sigma_max(sys, pts).max())


# -- intrusive reduction ------------------------------------------------------

def intrusive_bt(sys, r):
    """Square-root balanced truncation to order `r`.

    Returns the ROM; Hankel singular values are available through
    :func:`hsv`.
    """
    P, Q = gramians(sys)
    Zp, Zq = psd_factor(P), psd_factor(Q)
    U, s, V = dense.svd(ct(Zq) @ sys.E @ Zp)
    numrank = int(np.sum(s > 1e-12 * s[0])) if s.size else 0
    if r < 1 or r > numrank:
        raise RankDeficient(f"r={r} exceeds the {numrank} nonnegligible HSVs")
    scale = 1.0 / np.sqrt(s[:r])
    W = Zq @ U[:, :r] * scale
    Vr = Zp @ V[:, :r] * scale
    rom = StateSpace(ct(W) @ sys.E @ Vr, ct(W) @ sys.A @ Vr, ct(W) @ sys.B,
                     sys.C @ Vr, sys.domain)
    if sys.is_real:
        rom = _real_if_close(rom)
    return rom


def _real_if_close(sys, tol=1e-10):
    mats = [sys.E, sys.A, sys.B, sys.C]
    if all(np.linalg.norm(np.imag(M)) <= tol * max(np.linalg.norm(M), 1e-300)
           for M in mats):
        return StateSpace(*(np.real(M) for M in mats), sys.domain)
    return sys


def intrusive_irka(sys, r, init=None, config=None):
    """IRKA with exact Krylov projectors built from the realization."""
    from .irka import IrkaConfig, KrylovStrategy, default_init_from_system, irka_run
    from .quadruplet import DataQuadruplet

    config = config or IrkaConfig()
    init = init if init is not None else default_init_from_system(sys, r)
    q = DataQuadruplet(sys.E, sys.A, sys.B, sys.C, kind="system",
                       domain=sys.domain)
    return irka_run(q, KrylovStrategy(sys), init, config)


def real_modal_form(sys, tol=1e-8):
    """Real block-diagonal realization of a system whose poles are
    conjugate-closed and whose transfer function is real.

    Returns ``(rom, ok)``; when the poles cannot be paired, the input
    realization is returned with ``ok=False``.
    """
    T, lam = dense.eig(dense.solve(sys.E, sys.A))
    Bm = np.linalg.solve(T, dense.solve(sys.E, sys.B))
    Cm = sys.C @ T
    n = lam.size
    used = np.zeros(n, bool)
    blocksA, colsB, colsC = [], [], []
    scale = max(1.0, np.abs(lam).max()) if n else 1.0
    for k in range(n):
        if used[k]:
            continue
        used[k] = True
        if abs(lam[k].imag) <= tol * scale:
            b, c = Bm[k], Cm[:, k]
            # real pole: rotate the modal coordinate so that b is real
            idx = np.argmax(np.abs(b))
            ph = b[idx] / abs(b[idx]) if abs(b[idx]) > 0 else 1.0
            b, c = b / ph, c * ph
            if np.linalg.norm(b.imag) > 1e-6 * max(np.linalg.norm(b), 1e-300) or \
                    np.linalg.norm(c.imag) > 1e-6 * max(np.linalg.norm(c), 1e-300):
                return sys, False
            blocksA.append(np.array([[lam[k].real]]))
            colsB.append(b.real[None, :])
            colsC.append(c.real[:, None])
            continue
        cand = [j for j in range(n) if not used[j]
                and abs(lam[j] - np.conj(lam[k])) <= tol * scale]
        if not cand:
            return sys, False
        j = min(cand, key=lambda i: abs(lam[i] - np.conj(lam[k])))
        used[j] = True
        bk, bj = Bm[k], Bm[j]
        # rescale mode j so that its input row is the conjugate of mode k's
        idx = np.argmax(np.abs(bk))
        if abs(bj[idx]) == 0:
            return sys, False
        alpha = np.conj(bk[idx]) / bj[idx]
        bj = bj * alpha
        cj = Cm[:, j] / alpha
        ck = Cm[:, k]
        if np.linalg.norm(bj - np.conj(bk)) > 1e-6 * np.linalg.norm(bk) or \
                np.linalg.norm(cj - np.conj(ck)) > 1e-6 * max(np.linalg.norm(ck), 1e-300):
            return sys, False
        a, w = lam[k].real, lam[k].imag
        blocksA.append(np.array([[a, w], [-w, a]]))
        colsB.append(np.sqrt(2.0) * np.vstack([bk.real, -bk.imag]))
        colsC.append(np.sqrt(2.0) * np.column_stack([ck.real, ck.imag]))
    A = sla.block_diag(*blocksA)
    B = np.vstack(colsB)
    C = np.hstack(colsC)
    return StateSpace(None, A, B, C, sys.domain), True


# -- benchmarks ---------------------------------------------------------------

def _butterworth_dt(order, cutoff):
    if int(order) != order or order < 1:
        raise BadParams("order must be a positive integer")
    if not 0 < cutoff < np.pi:
        raise BadParams("cutoff must lie in (0, pi)")
    order = int(order)
    wa = 2.0 * np.tan(cutoff / 2.0)
    k = np.arange(1, order + 1)
    analog = wa * np.exp(1j * np.pi * (2 * k + order - 1) / (2 * order))
    zp = (2.0 + analog) / (2.0 - analog)
    sections = []
    for z in zp[zp.imag > 1e-12]:
        a1, a2 = -2.0 * z.real, abs(z) ** 2
        g = (1.0 + a1 + a2) / 4.0
        # g (z + 1)^2 / (z^2 + a1 z + a2), unit DC gain
        sections.append((np.array([[-a1, -a2], [1.0, 0.0]]), np.array([[1.0], [0.0]]),
                         g * np.array([[2.0 - a1, 1.0 - a2]]), np.array([[g]])))
    if order % 2:
        z = zp[np.abs(zp.imag) <= 1e-12][0].real
        g = (1.0 - z) / 2.0
        sections.append((np.array([[z]]), np.array([[1.0]]),
                         np.array([[g * (1.0 + z)]]), np.array([[g]])))
    A = np.zeros((0, 0))
    B = np.zeros((0, 1))
    C = np.zeros((1, 0))
    D = np.ones((1, 1))
    for a, b, c, d in sections:
        n1, n2 = A.shape[0], a.shape[0]
        A = np.block([[A, np.zeros((n1, n2))], [b @ C, a]])
        B = np.vstack([B, b @ D])
        C = np.hstack([d @ C, c])
        D = d @ D
    # one-sample output delay makes the realization strictly proper
    n = A.shape[0]
    Ad = np.block([[A, np.zeros((n, 1))], [C, np.zeros((1, 1))]])
    Bd = np.vstack([B, D])
    Cd = np.zeros((1, n + 1))
    Cd[0, -1] = 1.0
    return StateSpace(None, Ad, Bd, Cd, DISCRETE)


def _random_stable(n, m=1, p=1, domain=CONTINUOUS, seed=0, re_band=(-2.0, -0.05),
                   imag_max=5.0, mod_band=(0.05, 0.95)):
    if int(n) != n or n < 1 or m < 1 or p < 1:
        raise BadParams("n, m, p must be positive integers")
    check_domain(domain)
    n = int(n)
    rng = np.random.default_rng(seed)
    n_real = n % 2 + 2 * (n // 10)
    n_pairs = (n - n_real) // 2
    blocks = []
    if domain == CONTINUOUS:
        lo, hi = re_band
        for x in rng.uniform(lo, hi, n_real):
            blocks.append(np.array([[x]]))
        for a, w in zip(rng.uniform(lo, hi, n_pairs), rng.uniform(0.1, imag_max, n_pairs)):
            blocks.append(np.array([[a, w], [-w, a]]))
    else:
        lo, hi = mod_band
        for x, sgn in zip(rng.uniform(lo, hi, n_real), rng.choice([-1.0, 1.0], n_real)):
            blocks.append(np.array([[sgn * x]]))
        for rad, th in zip(rng.uniform(lo, hi, n_pairs), rng.uniform(0.05, np.pi - 0.05, n_pairs)):
            a, w = rad * np.cos(th), rad * np.sin(th)
            blocks.append(np.array([[a, w], [-w, a]]))
    Ad = sla.block_diag(*blocks)
    Qm, R = np.linalg.qr(rng.standard_normal((n, n)))
    Qm = Qm * np.sign(np.diag(R))
    A = Qm @ Ad @ Qm.T
    B = rng.standard_normal((n, m))
    C = rng.standard_normal((p, n))
    return StateSpace(None, A, B, C, domain)


def _diffusion_chain(n, length=1.0, diffusivity=1.0):
    """Linear finite elements for ``u_t = k u_xx`` with a boundary input
    at the left end and the right-end value as output; ``E`` is the
    consistent mass matrix."""
    if int(n) != n or n < 2:
        raise BadParams("diffusion-chain needs n >= 2")
    n = int(n)
    h = length / (n + 1)
    off = np.ones(n - 1)
    E = h / 6.0 * (4.0 * np.eye(n) + np.diag(off, 1) + np.diag(off, -1))
    A = -diffusivity / h * (2.0 * np.eye(n) - np.diag(off, 1) - np.diag(off, -1))
    B = np.zeros((n, 1))
    B[0, 0] = diffusivity / h
    C = np.zeros((1, n))
    C[0, -1] = 1.0
    return StateSpace(E, A, B, C, CONTINUOUS)


ILLUSTRATIVE = {
    "A": [[-3.2556, 1.1671], [-1.1671, -0.4906]],
    "B": [[-1.1810], [-0.1793]],
    "C": [[1.1810, -0.1793]],
}
# signal generator whose eigenvalues (2.6141, 1.1321) are each repeated so
# that values and derivatives are excited at both points
ILLUSTRATIVE_GENERATOR = {
    "S": [[2.6141, 5.2282, 3.4406, 3.4406], [0.0, 2.6141, 3.4406, 3.4406],
          [0.0, 0.0, 1.1321, 2.2642], [0.0, 0.0, 0.0, 1.1321]],
    "L": [[-2.2865, -2.2865, -1.5047, -1.5047]],
    "w0": [1.0, 2.0, 3.0, 4.0],
    "points": [2.6141, 1.1321],
}


def _illustrative():
    d = ILLUSTRATIVE
    return StateSpace(None, np.array(d["A"]), np.array(d["B"]), np.array(d["C"]), CONTINUOUS)


def generate_benchmark(kind, params=None, seed=0):
    """Build one of the synthetic benchmark systems.

    kind : ``"butterworth-dt"`` (params ``order``, ``cutoff``),
        ``"random-stable"`` (``n``, optional ``m``, ``p``, ``domain``,
        ``re_band``, ``imag_max``, ``mod_band``) or ``"diffusion-chain"``
        (``n``, optional ``length``, ``diffusivity``) or ``"illustrative"``
        (a fixed stable second-order system, no parameters).
    """
    params = dict(params or {})
    try:
        if kind == "butterworth-dt":
            return _butterworth_dt(params.pop("order"), params.pop("cutoff"), **params)
        if kind == "random-stable":
            return _random_stable(seed=seed, **params)
        if kind == "diffusion-chain":
            return _diffusion_chain(**params)
        if kind == "illustrative":
            if params:
                raise BadParams("the illustrative system takes no parameters")
            return _illustrative()
    except TypeError as exc:
        raise BadParams(str(exc)) from None
    except KeyError as exc:
        raise BadParams(f"missing parameter {exc}") from None
    raise BadParams(f"unknown benchmark kind {kind!r}")


def simulate_signal_generator(sys, S, L, w0, times):
    """Drive a continuous-time plant from zero state with ``u = L w``,
    ``w' = S w``, ``w(0) = w0``; exact sampling of the joint flow.

    Returns ``(w, y)`` with shapes ``(N, nw)`` and ``(N, p)``.
    """
    if not sys.is_continuous:
        raise DomainMismatch("signal-generator experiments are continuous-time")
    S = dense.as_matrix(S, "S")
    L = np.atleast_2d(np.asarray(L, dtype=float))
    nw, n = S.shape[0], sys.n
    At = dense.solve(sys.E, sys.A)
    Bt = dense.solve(sys.E, sys.B)
    M = np.block([[At, Bt @ L], [np.zeros((nw, n)), S]])
    z0 = np.concatenate([np.zeros(n), np.asarray(w0, dtype=float).ravel()])
    Z = np.array([dense.expm(M * t) @ z0 for t in np.asarray(times, dtype=float)])
    return Z[:, n:].real, (Z[:, :n] @ sys.C.T).real
