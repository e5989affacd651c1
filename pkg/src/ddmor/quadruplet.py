"""Data quadruplets: Loewner, impulse-data and Hankel realizations.

Every data-driven algorithm in the package compresses one of these
four-matrix objects. A quadruplet ``(Eq, Aq, Bq, Cq)`` stands for
``(W~^* E V~, W~^* A V~, W~^* B, C V~)`` for some implicit interpolatory
(or quadrature) bases ``V~`` and ``W~`` that are never formed.
"""
from dataclasses import dataclass

import numpy as np

from . import dense, systems
from .dense import ct
from .errors import (DimensionMismatch, MissingDerivative, NotConjugateClosed,
                     RankDeficientRegressor, TooFewSamples, UnobservableGenerator,
                     ValidationError)
from .interp import InterpolationData
from .quadrature import ImpulseSamples, SampleSet

__all__ = ["DataQuadruplet", "InterpolationData", "build_loewner", "build_impulse_ct",
           "build_hankel_dt", "realify", "estimate_from_trajectories", "COINCIDENCE_RTOL"]

COINCIDENCE_RTOL = 1e-12
KINDS = ("loewner", "impulse-ct", "hankel-dt", "system")


@dataclass(frozen=True, eq=False)
class DataQuadruplet:
    """Four data matrices plus the provenance needed to reinterpret them.

    right_points / left_points hold the sampling points (Loewner), the
    time nodes (impulse-ct) or the step indices (hankel-dt). The
    directions follow :class:`InterpolationData` conventions and are
    ``None`` in block mode.
    """

    Eq: np.ndarray
    Aq: np.ndarray
    Bq: np.ndarray
    Cq: np.ndarray
    kind: str = "loewner"
    domain: str = systems.CONTINUOUS
    right_points: np.ndarray = None
    left_points: np.ndarray = None
    right_dirs: np.ndarray = None
    left_dirs: np.ndarray = None

    def __post_init__(self):
        Eq, Aq = np.asarray(self.Eq), np.asarray(self.Aq)
        Bq, Cq = np.atleast_2d(self.Bq), np.atleast_2d(self.Cq)
        if self.kind not in KINDS:
            raise ValidationError(f"kind must be one of {KINDS}")
        systems.check_domain(self.domain)
        if Eq.shape != Aq.shape or Eq.ndim != 2:
            raise DimensionMismatch("Eq and Aq must have equal 2-D shapes")
        if Bq.shape[0] != Eq.shape[0] or Cq.shape[1] != Eq.shape[1]:
            raise DimensionMismatch(
                f"Eq {Eq.shape}, Bq {Bq.shape}, Cq {Cq.shape} are inconsistent")
        for name, M in zip(("Eq", "Aq", "Bq", "Cq"), (Eq, Aq, Bq, Cq)):
            if not np.all(np.isfinite(M)):
                raise ValidationError(f"{name} has non-finite entries")
            object.__setattr__(self, name, M)
        for name in ("right_points", "left_points"):
            v = getattr(self, name)
            if v is not None:
                object.__setattr__(self, name, np.atleast_1d(np.asarray(v)))

    @property
    def m(self):
        return self.Bq.shape[1]

    @property
    def p(self):
        return self.Cq.shape[0]

    @property
    def shape(self):
        return self.Eq.shape

    @property
    def is_block(self):
        return self.right_dirs is None and self.left_dirs is None

    @property
    def right_block(self):
        """Columns of `Eq` per right point (``m`` in block mode, else 1)."""
        return self.m if self.right_dirs is None else 1

    @property
    def left_block(self):
        return self.p if self.left_dirs is None else 1

    def as_system(self):
        """The interpolant ``(Eq, Aq, Bq, Cq)`` as a :class:`StateSpace`."""
        if self.Eq.shape[0] != self.Eq.shape[1]:
            raise DimensionMismatch("only square quadruplets are realizations")
        return systems.StateSpace(self.Eq, self.Aq, self.Bq, self.Cq, self.domain)

    def project(self, V, W):
        """``(W^* Eq V, W^* Aq V, W^* Bq, Cq V)``."""
        Wh = ct(W)
        return Wh @ self.Eq @ V, Wh @ self.Aq @ V, Wh @ self.Bq, self.Cq @ V

    def interpolation_data(self):
        return InterpolationData(self.right_points, self.left_points,
                                 self.right_dirs, self.left_dirs)


# -- Loewner ------------------------------------------------------------------

def _coincident(a, b):
    return abs(a - b) <= COINCIDENCE_RTOL * max(1.0, abs(a), abs(b))


def _derivative_at(s, right, left):
    for ss in (right, left):
        k = ss.locate(s)
        if k is not None and ss.has_derivative(k):
            return ss.derivatives[k]
    raise MissingDerivative(f"confluent point {s} needs a derivative sample")


def build_loewner(right, left, dirs=None):
    """Loewner quadruplet from right samples ``G(sigma_j)`` and left
    samples ``G(mu_i)``.

    Parameters
    ----------
    right, left : SampleSet
        Samples at the right and left points. Where a right and a left
        point coincide, a derivative sample must be present in either set.
    dirs : InterpolationData, optional
        Tangential directions. Its point lists must equal the sample
        points; ``None`` gives block (full-matrix) interpolation.

    Returns
    -------
    DataQuadruplet
        ``Eq[i, j] = -(c_i G(sigma_j) b_j - c_i G(mu_i) b_j) / (sigma_j - mu_i)``,
        ``Aq[i, j] = -(sigma_j c_i G(sigma_j) b_j - mu_i c_i G(mu_i) b_j) / (sigma_j - mu_i)``,
        ``Bq`` stacks ``c_i G(mu_i)`` and ``Cq`` lines up ``G(sigma_j) b_j``.
        Coincident pairs use the Hermite limits ``-c G'(s) b`` and
        ``-(c G(s) b + s c G'(s) b)``.
    """
    if not isinstance(right, SampleSet) or not isinstance(left, SampleSet):
        raise ValidationError("build_loewner expects SampleSet inputs")
    if (right.p, right.m) != (left.p, left.m):
        raise DimensionMismatch("right and left samples have different shapes")
    if right.domain != left.domain:
        raise ValidationError("right and left samples live in different domains")
    sig, mu = right.points, left.points
    Gs, Gm = right.values, left.values
    p, m = right.p, right.m
    b = c = None
    if dirs is not None:
        if dirs.right_dirs is not None:
            b = np.asarray(dirs.right_dirs, dtype=complex)
            if b.shape != (m, sig.size):
                raise DimensionMismatch(f"right directions must be {m}x{sig.size}")
        if dirs.left_dirs is not None:
            c = np.asarray(dirs.left_dirs, dtype=complex)
            if c.shape != (mu.size, p):
                raise DimensionMismatch(f"left directions must be {mu.size}x{p}")
    # right data as (n_p, p, kr) and left data as (n_q, kl, m)
    R = Gs if b is None else np.einsum("jpm,mj->jp", Gs, b)[:, :, None]
    Lf = Gm if c is None else np.einsum("ip,ipm->im", c, Gm)[:, None, :]
    bl = np.broadcast_to(np.eye(m), (sig.size, m, m)) if b is None else b.T[:, :, None]
    cl = np.broadcast_to(np.eye(p), (mu.size, p, p)) if c is None else c[:, None, :]
    # c_i G(sigma_j) b_j and c_i G(mu_i) b_j as (n_q, n_p, kl, kr) tensors
    cGs = np.einsum("iap,jpk->ijak", cl, R)
    cGm = np.einsum("iam,jmk->ijak", Lf, bl)
    den = sig[None, :] - mu[:, None]
    conf = np.abs(den) <= COINCIDENCE_RTOL * np.maximum(
        1.0, np.maximum(np.abs(sig)[None, :], np.abs(mu)[:, None]))
    safe = np.where(conf, 1.0, den)[:, :, None, None]
    E4 = -(cGs - cGm) / safe
    A4 = -(sig[None, :, None, None] * cGs - mu[:, None, None, None] * cGm) / safe
    for i, j in zip(*np.nonzero(conf)):
        dG = _derivative_at(sig[j], right, left)
        bj = np.eye(m) if b is None else b[:, [j]]
        ci = np.eye(p) if c is None else c[[i], :]
        cdb = ci @ dG @ bj
        E4[i, j] = -cdb
        A4[i, j] = -(ci @ Gs[j] @ bj + sig[j] * cdb)
    nq, npt, kl, kr = E4.shape
    Eq = E4.transpose(0, 2, 1, 3).reshape(nq * kl, npt * kr)
    Aq = A4.transpose(0, 2, 1, 3).reshape(nq * kl, npt * kr)
    Bq = Lf.reshape(nq * kl, m)
    Cq = R.transpose(1, 0, 2).reshape(p, npt * R.shape[2])
    return DataQuadruplet(Eq, Aq, Bq, Cq, "loewner", right.domain, sig, mu,
                          None if b is None else b, None if c is None else c)


# -- time-domain quadruplets --------------------------------------------------

def _blocks(H):
    """(n_q, n_p, p, m) block tensor -> (n_q p, n_p m) matrix."""
    nq, npt, p, m = H.shape
    return H.transpose(0, 2, 1, 3).reshape(nq * p, npt * m)


def build_impulse_ct(samples, t_nodes, tau_nodes):
    """Impulse-data quadruplet ``Eq[i, j] = h(tau_i + t_j)``,
    ``Aq[i, j] = h'(tau_i + t_j)``, ``Bq`` stacks ``h(tau_i)``, ``Cq``
    lines up ``h(t_j)``.

    samples : ImpulseSamples covering the nodes and all pairwise sums,
        with derivatives.
    """
    if not isinstance(samples, ImpulseSamples):
        raise ValidationError("build_impulse_ct expects ImpulseSamples")
    t_nodes = np.atleast_1d(np.asarray(t_nodes, dtype=float))
    tau_nodes = np.atleast_1d(np.asarray(tau_nodes, dtype=float))
    sums = (tau_nodes[:, None] + t_nodes[None, :]).ravel()
    H = samples.lookup(sums)
    dH = samples.lookup(sums, derivative=True)
    p, m = H.shape[1:]
    H = H.reshape(tau_nodes.size, t_nodes.size, p, m)
    dH = dH.reshape(tau_nodes.size, t_nodes.size, p, m)
    Bq = samples.lookup(tau_nodes).reshape(tau_nodes.size * p, m)
    Ct = samples.lookup(t_nodes)
    Cq = Ct.transpose(1, 0, 2).reshape(p, t_nodes.size * m)
    return DataQuadruplet(_blocks(H), _blocks(dH), Bq, Cq, "impulse-ct",
                          systems.CONTINUOUS, t_nodes, tau_nodes)


def build_hankel_dt(h, n_p, n_q):
    """Hankel quadruplet from ``h(0), ..., h(n_p + n_q - 1)``.

    ``Eq[i, j] = h(i + j)``, ``Aq[i, j] = h(i + j + 1)`` for
    ``i < n_q``, ``j < n_p``; ``Bq`` stacks ``h(0..n_q-1)`` and ``Cq``
    lines up ``h(0..n_p-1)``.
    """
    h = np.asarray(h)
    if h.ndim == 1:
        h = h.reshape(-1, 1, 1)
    n_p, n_q = int(n_p), int(n_q)
    if n_p < 1 or n_q < 1:
        raise ValidationError("n_p and n_q must be positive")
    if h.shape[0] < n_p + n_q:
        raise TooFewSamples(f"need {n_p + n_q} impulse samples, got {h.shape[0]}")
    p, m = h.shape[1:]
    idx = np.arange(n_q)[:, None] + np.arange(n_p)[None, :]
    Eq = _blocks(h[idx])
    Aq = _blocks(h[idx + 1])
    Bq = h[:n_q].reshape(n_q * p, m)
    Cq = h[:n_p].transpose(1, 0, 2).reshape(p, n_p * m)
    return DataQuadruplet(Eq, Aq, Bq, Cq, "hankel-dt", systems.DISCRETE,
                          np.arange(n_p), np.arange(n_q))


# -- realification ------------------------------------------------------------

_PAIR = np.array([[1.0, -1.0j], [1.0, 1.0j]]) / np.sqrt(2.0)


def _pair_transform(points, dirs, block, dirs_are_rows, tol=1e-10):
    """Unitary ``T`` turning conjugate-pair columns into real ones."""
    n = points.size
    T = np.zeros((n * block, n * block), dtype=complex)
    used = np.zeros(n, bool)
    scale = max(1.0, np.abs(points).max()) if n else 1.0
    for k in range(n):
        if used[k]:
            continue
        used[k] = True
        sl_k = slice(k * block, (k + 1) * block)
        dk = None if dirs is None else (dirs[k] if dirs_are_rows else dirs[:, k])
        if abs(points[k].imag) <= tol * scale and (dk is None or np.allclose(dk.imag, 0, atol=tol)):
            T[sl_k, sl_k] = np.eye(block)
            continue
        match = None
        for j in range(n):
            if used[j] or abs(points[j] - np.conj(points[k])) > tol * scale:
                continue
            dj = None if dirs is None else (dirs[j] if dirs_are_rows else dirs[:, j])
            if dk is None or np.allclose(dj, np.conj(dk), atol=tol * max(1.0, np.abs(dk).max())):
                match = j
                break
        if match is None:
            raise NotConjugateClosed(f"point {points[k]} has no conjugate partner")
        used[match] = True
        sl_j = slice(match * block, (match + 1) * block)
        eye = np.eye(block)
        T[sl_k, sl_k] = _PAIR[0, 0] * eye
        T[sl_k, sl_j] = _PAIR[0, 1] * eye
        T[sl_j, sl_k] = _PAIR[1, 0] * eye
        T[sl_j, sl_j] = _PAIR[1, 1] * eye
    return T


def realify(q, tol=1e-10):
    """Real quadruplet by a unitary change of basis on both sides.

    For every conjugate pair of points (with conjugate directions) the
    two columns ``x, conj(x)`` of the implicit basis become
    ``sqrt(2) Re x, sqrt(2) Im x``. Requires conjugate-closed provenance.
    """
    if q.kind != "loewner":
        if all(np.isrealobj(M) or not np.any(np.imag(M)) for M in (q.Eq, q.Aq, q.Bq, q.Cq)):
            return q
        raise NotConjugateClosed("only Loewner quadruplets can be realified")
    Tv = _pair_transform(np.asarray(q.right_points, complex), q.right_dirs,
                         q.right_block, dirs_are_rows=False)
    Tw = _pair_transform(np.asarray(q.left_points, complex), q.left_dirs,
                         q.left_block, dirs_are_rows=True)
    Eq, Aq, Bq, Cq = q.project(Tv, Tw)
    out = []
    for M in (Eq, Aq, Bq, Cq):
        nrm = max(np.linalg.norm(M), 1e-300)
        if np.linalg.norm(M.imag) > 1e3 * tol * nrm:
            raise NotConjugateClosed("samples are not conjugate-symmetric")
        out.append(M.real.copy())
    return DataQuadruplet(*out, kind=q.kind, domain=q.domain,
                          right_points=q.right_points, left_points=q.left_points,
                          right_dirs=q.right_dirs, left_dirs=q.left_dirs)


# -- signal-generator trajectories -------------------------------------------

def estimate_from_trajectories(S, L, w0, y, w, start, count):
    """Interpolant from a single signal-generator experiment.

    Parameters
    ----------
    S, L : ndarray
        Generator ``w' = S w``, ``u = L w`` (``nw x nw`` and ``m x nw``).
    w0 : ndarray
        Generator initial state.
    y : ndarray
        Recorded plant output, ``(N, p)``.
    w : ndarray
        Generator state trajectory on the same grid, ``(N, nw)``.
    start, count : int
        Row window ``start .. start + count - 1`` used in the regression.

    Returns
    -------
    StateSpace
        ``(I, -S^T, L^T, Ct)`` with ``Ct = Y^T W (W^T W)^{-1}``, whose
        values at the eigenvalues of ``S`` estimate the plant's.
    """
    S = dense.as_matrix(S, "S")
    L = np.atleast_2d(np.asarray(L, dtype=float))
    w0 = np.asarray(w0, dtype=float).reshape(-1, 1)
    nw = S.shape[0]
    obs = np.vstack([L @ np.linalg.matrix_power(S, k) for k in range(nw)])
    if np.linalg.matrix_rank(obs) < nw:
        raise UnobservableGenerator("the pair (S, L) is not observable")
    ctr = np.hstack([np.linalg.matrix_power(S, k) @ w0 for k in range(nw)])
    if np.linalg.matrix_rank(ctr) < nw:
        raise UnobservableGenerator("the pair (S, w0) is not controllable")
    y = np.asarray(y, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    w = np.asarray(w, dtype=float)
    if start < 0 or start + count > y.shape[0]:
        raise ValidationError("regression window exceeds the recording")
    Wm = w[start:start + count]
    Ym = y[start:start + count]
    if np.linalg.matrix_rank(Wm) < nw:
        raise RankDeficientRegressor("move the window or lengthen it")
    Ct = np.linalg.solve(Wm.T @ Wm, Wm.T @ Ym).T
    return systems.StateSpace(None, -S.T, L.T, Ct, systems.CONTINUOUS)
