"""Quadrature rules, shift generation and sample acquisition.

Weight convention
-----------------
A :class:`QuadratureRule` carries either *measure* weights (the ordinary
``sum_i w_i f(x_i) ~ integral f``) or *factor* weights, the un-squared
numbers that multiply a Gramian factor column, so that ``w_i**2`` times
the integrand is the ``i``-th term of ``(1/2pi) integral`` (frequency
data) or ``integral`` (time data). Both views are available from any rule
through :meth:`QuadratureRule.measure` and :meth:`QuadratureRule.factors`.
"""
from dataclasses import dataclass, field

import numpy as np

from . import systems
from .errors import (BadDamping, BadRange, BadShift, DimensionMismatch,
                     MissingDerivative, MissingSample, NodeAtSingularity,
                     ValidationError)

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and positive weights.

    domain : ``"interval"``, ``"frequency-axis"`` or ``"time-axis"``.
    factor_weights : when true, `weights` already are Gramian factor
        weights (see module docstring).
    """

    nodes: np.ndarray
    weights: np.ndarray
    domain: str = "interval"
    factor_weights: bool = False
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.nodes, dtype=float))
        w = np.atleast_1d(np.asarray(self.weights, dtype=float))
        if x.shape != w.shape or x.ndim != 1:
            raise DimensionMismatch("nodes and weights must be equal-length vectors")
        if np.any(np.diff(x) <= 0):
            raise ValidationError("nodes must be strictly increasing")
        if np.any(w <= 0) or not np.all(np.isfinite(w)):
            raise ValidationError("weights must be positive and finite")
        object.__setattr__(self, "nodes", x)
        object.__setattr__(self, "weights", w)

    def __len__(self):
        return self.nodes.size

    def measure(self, frequency=True):
        """Ordinary quadrature weights."""
        if not self.factor_weights:
            return self.weights
        return self.weights ** 2 * (TWO_PI if frequency else 1.0)

    def factors(self, frequency=True):
        """Gramian factor weights (``sqrt(w / 2pi)`` or ``sqrt(w)``)."""
        if self.factor_weights:
            return self.weights
        return np.sqrt(self.weights / (TWO_PI if frequency else 1.0))

    def mirrored(self):
        """Rule on ``[-b, -a] u [a, b]`` from a rule on ``[a, b]``, ``a > 0``."""
        if self.nodes[0] <= 0:
            raise BadRange("mirroring needs strictly positive nodes")
        return QuadratureRule(np.concatenate([-self.nodes[::-1], self.nodes]),
                              np.concatenate([self.weights[::-1], self.weights]),
                              self.domain, self.factor_weights,
                              dict(self.meta, mirrored=True))

    def integrate(self, f):
        """``sum_i w_i f(x_i)`` with measure weights."""
        return np.sum(self.measure(self.domain != "time-axis") * f(self.nodes))


def gauss_legendre(n):
    """Gauss-Legendre rule on ``[-1, 1]``."""
    if int(n) != n or n < 1:
        raise ValidationError("n must be a positive integer")
    x, w = np.polynomial.legendre.leggauss(int(n))
    return QuadratureRule(x, w, "interval", meta={"rule": "gauss-legendre"})


def exp_trapezoid(f_min, f_max, n):
    """Log-spaced trapezoid rule on ``[f_min, f_max]`` (rad/s).

    Stores factor weights ``sqrt(delta_i / 2pi)``, with ``delta_i`` the
    trapezoid cell width around node ``i``.
    """
    if not (np.isfinite(f_min) and np.isfinite(f_max)) or not 0 < f_min < f_max:
        raise BadRange("need 0 < f_min < f_max")
    if int(n) != n or n < 2:
        raise BadRange("need n >= 2")
    x = np.geomspace(f_min, f_max, int(n))
    gaps = np.diff(x)
    delta = np.zeros_like(x)
    delta[:-1] += gaps / 2.0
    delta[1:] += gaps / 2.0
    return QuadratureRule(x, np.sqrt(delta / TWO_PI), "frequency-axis",
                          factor_weights=True,
                          meta={"rule": "exp-trapezoid", "f_min": f_min, "f_max": f_max})


def map_domain(rule, target, a=None, b=None, domain=None):
    """Move a rule on ``[-1, 1]`` to the real line or to ``[a, b]``.

    target : ``"infinite-axis"`` uses ``y = tan(pi x / 2)``;
        ``"interval"`` is affine. `domain` overrides the resulting domain
        tag (``"frequency-axis"`` for the real line, ``"interval"`` or
        ``"time-axis"`` otherwise).
    """
    if rule.factor_weights:
        raise ValidationError("map_domain expects a rule with measure weights")
    x, w = rule.nodes, rule.weights
    if target == "infinite-axis":
        if np.any(np.abs(np.abs(x) - 1.0) < 1e-15):
            raise NodeAtSingularity("node at +-1 maps to infinity")
        y = np.tan(np.pi * x / 2.0)
        wy = w * (np.pi / 2.0) / np.cos(np.pi * x / 2.0) ** 2
        tag = domain or "frequency-axis"
    elif target == "interval":
        if a is None or b is None or not b > a:
            raise BadRange("interval target needs a < b")
        y = a + (b - a) * (x + 1.0) / 2.0
        wy = w * (b - a) / 2.0
        tag = domain or ("time-axis" if a >= 0 else "interval")
    else:
        raise ValidationError(f"unknown target {target!r}")
    return QuadratureRule(y, wy, tag, meta=dict(rule.meta, target=target, a=a, b=b))


# -- shifts -------------------------------------------------------------------

@dataclass(frozen=True)
class ShiftSet:
    """Interpolation points / negated ADI shifts with their provenance.

    CT shifts have positive real part, DT shifts lie outside the unit
    circle. `side` is ``"input"`` (sigma) or ``"output"`` (mu).
    """

    shifts: np.ndarray
    zetas: np.ndarray
    domain: str = systems.CONTINUOUS
    side: str = "input"

    def __post_init__(self):
        s = np.atleast_1d(np.asarray(self.shifts, dtype=complex))
        z = np.broadcast_to(np.asarray(self.zetas, dtype=float), s.shape).copy()
        object.__setattr__(self, "shifts", s)
        object.__setattr__(self, "zetas", z)
        systems.check_domain(self.domain)
        if self.side not in ("input", "output"):
            raise ValidationError("side must be 'input' or 'output'")
        if self.domain == systems.CONTINUOUS and np.any(s.real <= 0):
            raise BadShift("continuous-time shifts need Re > 0")
        if self.domain == systems.DISCRETE and np.any(np.abs(s) <= 1):
            raise BadShift("discrete-time shifts need modulus > 1")

    def __len__(self):
        return self.shifts.size

    def with_side(self, side):
        return ShiftSet(self.shifts, self.zetas, self.domain, side)

    def is_conjugate_closed(self, tol=1e-12):
        s = self.shifts
        return all(np.min(np.abs(s - np.conj(x))) <= tol * max(1.0, abs(x)) for x in s)


def gen_shifts(domain, zeta, omegas, conjugate_closure=False, real_shifts=False,
               side="input"):
    """Damped shifts from frequencies.

    CT: ``sigma = zeta |w| / sqrt(1 - zeta^2) + j w``; DT:
    ``sigma = exp(zeta |w| / sqrt(1 - zeta^2)) exp(j w)``.
    With `real_shifts`, the imaginary part (CT) or phase (DT) is dropped
    and ``zeta = 1`` is allowed, meaning a real shift equal to ``|w|``
    (CT) or ``exp(|w|)`` (DT).
    """
    systems.check_domain(domain)
    omegas = np.atleast_1d(np.asarray(omegas, dtype=float))
    zeta = np.broadcast_to(np.asarray(zeta, dtype=float), omegas.shape)
    if np.any(zeta <= 0) or np.any(zeta > 1) or (np.any(zeta == 1) and not real_shifts):
        raise BadDamping("damping must satisfy 0 < zeta < 1 (zeta = 1 needs real_shifts)")
    if np.any(omegas == 0) and not real_shifts:
        raise BadShift("omega = 0 gives a zero-damping shift; pass real_shifts")
    below = zeta < 1
    ratio = np.ones_like(zeta)
    ratio[below] = zeta[below] / np.sqrt(1.0 - zeta[below] ** 2)
    decay = ratio * np.abs(omegas)
    if domain == systems.CONTINUOUS:
        s = decay + (0.0 if real_shifts else 1j * omegas)
    else:
        s = np.exp(decay) * (1.0 if real_shifts else np.exp(1j * omegas))
    if conjugate_closure:
        cplx = np.abs(s.imag) > 0
        s = np.concatenate([s, np.conj(s[cplx])])
        zeta = np.concatenate([zeta, zeta[cplx]])
    return ShiftSet(s, zeta, domain, side)


# -- samples ------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SampleSet:
    """Transfer-function samples ``G(s_k)`` (and optionally ``G'(s_k)``).

    values : ``(N, p, m)``; derivatives : ``(N, p, m)`` with NaN rows
    where no derivative was measured, or ``None``.
    """

    points: np.ndarray
    values: np.ndarray
    derivatives: np.ndarray = None
    domain: str = systems.CONTINUOUS

    def __post_init__(self):
        pts = np.atleast_1d(np.asarray(self.points, dtype=complex))
        vals = np.asarray(self.values, dtype=complex)
        if vals.ndim == 1:
            vals = vals.reshape(-1, 1, 1)
        if vals.ndim != 3 or vals.shape[0] != pts.size:
            raise DimensionMismatch(f"values must be ({pts.size}, p, m), got {vals.shape}")
        ders = self.derivatives
        if ders is not None:
            ders = np.asarray(ders, dtype=complex)
            if ders.ndim == 1:
                ders = ders.reshape(-1, 1, 1)
            if ders.shape != vals.shape:
                raise DimensionMismatch("derivatives must match values in shape")
        systems.check_domain(self.domain)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "derivatives", ders)

    def __len__(self):
        return self.points.size

    @property
    def p(self):
        return self.values.shape[1]

    @property
    def m(self):
        return self.values.shape[2]

    def has_derivative(self, k):
        return self.derivatives is not None and bool(np.all(np.isfinite(self.derivatives[k])))

    def locate(self, s, rtol=1e-12):
        """Index of the sample at `s`, or ``None``."""
        d = np.abs(self.points - s)
        k = int(np.argmin(d)) if d.size else -1
        if k >= 0 and d[k] <= rtol * max(1.0, abs(s)):
            return k
        return None

    def subset(self, points, need_derivative=False):
        """Samples at the requested points (in order); raises if absent."""
        idx = []
        for s in np.atleast_1d(points):
            k = self.locate(s)
            if k is None:
                raise MissingSample(f"no sample at {s}")
            if need_derivative and not self.has_derivative(k):
                raise MissingDerivative(f"no derivative sample at {s}")
            idx.append(k)
        idx = np.array(idx, dtype=int)
        ders = None if self.derivatives is None else self.derivatives[idx]
        return SampleSet(self.points[idx], self.values[idx], ders, self.domain)

    def merged(self, other):
        """Union of two sample sets; duplicate points keep any derivative."""
        if (self.p, self.m) != (other.p, other.m):
            raise DimensionMismatch("sample sets have different shapes")
        pts = list(self.points)
        vals = list(self.values)
        nan = np.full((self.p, self.m), np.nan, dtype=complex)
        ders = [self.derivatives[k] if self.has_derivative(k) else nan for k in range(len(self))]
        for k, s in enumerate(other.points):
            j = self.locate(s)
            d = other.derivatives[k] if other.has_derivative(k) else None
            if j is None:
                pts.append(s)
                vals.append(other.values[k])
                ders.append(nan if d is None else d)
            elif d is not None and not np.all(np.isfinite(ders[j])):
                ders[j] = d
        ders = np.array(ders)
        if not np.any(np.isfinite(ders)):
            ders = None
        return SampleSet(np.array(pts), np.array(vals), ders, self.domain)


def acquire_samples(source, points, need_derivative_at=(), all_derivatives=False):
    """Sample a system (oracle) or validate a loaded :class:`SampleSet`.

    Points are deduplicated (relative tolerance 1e-12) keeping first
    occurrence order; a point repeated in the input list is a confluent
    request and gets a derivative attached automatically.
    """
    points = np.atleast_1d(np.asarray(points, dtype=complex))
    uniq, repeated = [], set()
    for s in points:
        hit = next((i for i, u in enumerate(uniq)
                    if abs(u - s) <= 1e-12 * max(1.0, abs(s))), None)
        if hit is None:
            uniq.append(s)
        else:
            repeated.add(hit)
    need = np.atleast_1d(np.asarray(need_derivative_at, dtype=complex))
    want = np.zeros(len(uniq), bool)
    for i, u in enumerate(uniq):
        want[i] = all_derivatives or i in repeated or bool(
            np.any(np.abs(need - u) <= 1e-12 * max(1.0, abs(u))))
    uniq = np.array(uniq, dtype=complex)

    if isinstance(source, SampleSet):
        return source.subset(uniq) if not np.any(want) else _subset_with_mask(source, uniq, want)
    if not isinstance(source, systems.StateSpace):
        raise ValidationError("source must be a StateSpace oracle or a SampleSet")
    vals = systems.freqresp(source, uniq)
    ders = None
    if np.any(want):
        ders = np.full(vals.shape, np.nan, dtype=complex)
        for i in np.flatnonzero(want):
            ders[i] = systems.tf_eval(source, uniq[i], with_derivative=True)[1]
    return SampleSet(uniq, vals, ders, source.domain)


def _subset_with_mask(source, pts, want):
    sub = source.subset(pts)
    for i in np.flatnonzero(want):
        if not sub.has_derivative(i):
            raise MissingDerivative(f"no derivative sample at {pts[i]}")
    return sub


def samples_from_signal_generator(sys, S, L, w0, t_end=10.0, dt=0.01, start=120,
                                  count=None, points=None):
    """Values and derivatives at the generator eigenvalues, estimated from
    one simulated input/output experiment.

    The plant is driven by ``u = L w``, ``w' = S w``; a least-squares fit
    of ``y`` against ``w`` over rows ``start .. start + count - 1`` gives
    an interpolant that is then evaluated (with derivatives) at `points`
    (default: the distinct eigenvalues of `S`). `count` defaults to
    ``n * nw + 450`` rows, the window of the illustrative experiment.
    """
    from .quadruplet import estimate_from_trajectories

    S = np.asarray(S, dtype=float)
    times = np.arange(0.0, t_end + dt / 2, dt)
    w, y = systems.simulate_signal_generator(sys, S, L, w0, times)
    if count is None:
        count = sys.n * S.shape[0] + 450
    interp = estimate_from_trajectories(S, L, w0, y, w, start, count)
    if points is None:
        ev = np.linalg.eigvals(S)
        points = []
        for x in ev:
            if not any(abs(x - p) <= 1e-8 * max(1.0, abs(x)) for p in points):
                points.append(x)
    return acquire_samples(interp, points, all_derivatives=True)


@dataclass(frozen=True, eq=False)
class ImpulseSamples:
    """Impulse-response samples ``h(t_k)`` (and ``h'(t_k)``) on a time list."""

    times: np.ndarray
    values: np.ndarray
    derivatives: np.ndarray = None

    def __post_init__(self):
        t = np.atleast_1d(np.asarray(self.times, dtype=float))
        v = np.asarray(self.values)
        if v.ndim == 1:
            v = v.reshape(-1, 1, 1)
        if v.shape[0] != t.size:
            raise DimensionMismatch("one value per time required")
        d = self.derivatives
        if d is not None:
            d = np.asarray(d)
            if d.ndim == 1:
                d = d.reshape(-1, 1, 1)
            if d.shape != v.shape:
                raise DimensionMismatch("derivatives must match values")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "derivatives", d)

    def lookup(self, times, derivative=False, rtol=1e-12):
        """Values at the requested times, shape ``(len(times), p, m)``."""
        times = np.atleast_1d(np.asarray(times, dtype=float))
        order = np.argsort(self.times)
        ts = self.times[order]
        pos = np.clip(np.searchsorted(ts, times), 0, ts.size - 1)
        lo = np.clip(pos - 1, 0, ts.size - 1)
        pick = np.where(np.abs(ts[lo] - times) < np.abs(ts[pos] - times), lo, pos)
        if np.any(np.abs(ts[pick] - times) > rtol * np.maximum(1.0, np.abs(times))):
            bad = times[np.abs(ts[pick] - times) > rtol * np.maximum(1.0, np.abs(times))][0]
            raise MissingSample(f"no impulse sample at t = {bad}")
        src = self.derivatives if derivative else self.values
        if src is None:
            raise MissingDerivative("no impulse derivative samples")
        return src[order[pick]]


def impulse_sample_times(t_nodes, tau_nodes):
    """All times needed by the impulse quadruplet: the nodes and their sums."""
    t_nodes = np.asarray(t_nodes, dtype=float)
    tau_nodes = np.asarray(tau_nodes, dtype=float)
    sums = (tau_nodes[:, None] + t_nodes[None, :]).ravel()
    return np.unique(np.concatenate([t_nodes, tau_nodes, sums]))


def acquire_impulse_ct(sys, t_nodes, tau_nodes):
    """Oracle impulse samples for :func:`quadruplet.build_impulse_ct`."""
    times = impulse_sample_times(t_nodes, tau_nodes)
    h, dh = systems.impulse_ct_many(sys, times, with_derivative=True)
    return ImpulseSamples(times, h, dh)


def acquire_impulse_dt(sys, count):
    """``h(0), ..., h(count - 1)``."""
    return systems.impulse_dt_many(sys, int(count))
