import csv

import numpy as np
import pytest

from ddmor import irka, quadrature as Q, quadruplet as QD, systems
from ddmor.errors import (GridMismatch, ShiftOnAxis, SingularReducedE,
                          SurrogatePoleHit, ValidationError)
from ddmor.interp import InterpolationData

from conftest import rel

TWO_PI = 2 * np.pi


def _match(a, b):
    """Largest distance from an entry of `a` to its nearest entry of `b`."""
    a, b = np.asarray(a), np.asarray(b)
    return max(np.min(np.abs(b - x)) for x in a)


def _one(points):
    pts = np.atleast_1d(np.asarray(points, complex))
    return InterpolationData.symmetric(pts, np.ones((1, pts.size)), np.ones((pts.size, 1)))


# -- projectors: scalar examples ---------------------------------------------

def test_proj_quad_ct_single_node():
    rule = Q.QuadratureRule([0.0], [TWO_PI], "frequency-axis")
    V = irka.proj_quad_ct("input", rule, _one(1.0))
    W = irka.proj_quad_ct("output", rule, _one(1.0))
    np.testing.assert_allclose(V, [[1.0]])
    np.testing.assert_allclose(W, [[1.0]])


def test_proj_quad_ct_refuses_axis_point():
    rule = Q.QuadratureRule([0.0], [TWO_PI])
    with pytest.raises(ShiftOnAxis):
        irka.proj_quad_ct("input", rule, _one(2j))


def test_proj_quad_td_ct_blocks():
    rule = Q.QuadratureRule([0.0, 1.0], [0.5, 0.5], "time-axis")
    V = irka.proj_quad_td_ct("input", rule, _one(1.0))
    np.testing.assert_allclose(V[:, 0], [0.5, 0.5 * np.exp(-1)])


def test_proj_pork_ct_scalar():
    A, B = irka.pork_surrogate("continuous", "input", [1.0], 1)
    np.testing.assert_allclose(A, [[-1.0]])
    np.testing.assert_allclose(B, [[2.0]])
    V = irka.proj_pork_ct("input", [1.0], _one(3.0))
    np.testing.assert_allclose(V, [[0.5]])


def test_proj_pork_dt_scalar():
    A, B = irka.pork_surrogate("discrete", "input", [2.0], 1)
    np.testing.assert_allclose(A, [[0.5]])
    np.testing.assert_allclose(B, [[1.5]])
    V = irka.proj_pork_dt("input", [2.0], _one(3.0))
    np.testing.assert_allclose(V, [[0.6]])


@pytest.mark.parametrize("domain, pts, expect", [
    ("continuous", [0.5, 1.0 + 2j, 1.0 - 2j, 3.0], lambda p: -np.conj(p)),
    ("discrete", [1.5, 2.0j, -2.0j, -3.0], lambda p: 1 / np.conj(p)),
])
def test_pork_surrogate_eigenvalues(domain, pts, expect):
    A, _ = irka.pork_surrogate(domain, "input", pts, 1)
    got = np.linalg.eigvals(A)
    assert _match(got, expect(np.array(pts))) < 1e-10
    assert _match(expect(np.array(pts)), got) < 1e-10


def test_proj_pork_surrogate_pole_hit():
    with pytest.raises(SurrogatePoleHit):
        irka.proj_pork_ct("input", [1.0], _one(-1.0 + 0j))


def test_proj_quad_dt_single_node():
    rule = Q.QuadratureRule([0.0], [TWO_PI])
    np.testing.assert_allclose(irka.proj_quad_dt("input", rule, _one(2.0)), [[1.0]])


def test_proj_td_dt_geometric():
    V = irka.proj_td_dt("input", 6, _one(2.0))[:, 0]
    assert V[0] == 0.5
    np.testing.assert_allclose(V[1:] / V[:-1], 0.5)


def test_proj_td_dt_tail_bound():
    sigma, n = 1.25, 60
    head = irka.proj_td_dt("input", n, _one(sigma))[:, 0]
    full = 1.0 / (sigma - 1.0)                  # sum_{i>=1} sigma^{-i}
    remainder = abs(full - head.sum())
    lbar = 1 / sigma
    assert 0.8 ** 61 / 0.2 * lbar * sigma >= remainder * (1 - 1e-12)
    assert remainder > 0


# -- projectors: Krylov approximation ----------------------------------------

@pytest.fixture(scope="module")
def ct10():
    return systems.generate_benchmark("random-stable", {"n": 10}, seed=3)


@pytest.fixture(scope="module")
def dt10():
    return systems.generate_benchmark("random-stable", {"n": 10, "domain": "discrete"}, seed=3)


PTS_CT = np.array([0.3, 1.0 + 0.5j, 2.0])


def test_quad_ct_krylov_approximation(ct10):
    rule = Q.map_domain(Q.gauss_legendre(300), "infinite-axis")
    smp = Q.acquire_samples(ct10, 1j * rule.nodes, all_derivatives=True)
    q = QD.build_loewner(smp, smp)
    d = _one(PTS_CT)
    V = irka.proj_quad_ct("input", rule, d)
    W = irka.proj_quad_ct("output", rule, d)
    G = systems.freqresp(ct10, PTS_CT)[:, 0, 0]
    assert rel((q.Cq @ V)[0], G) < 1e-6
    assert rel((W @ q.Bq)[:, 0], G) < 1e-6


def test_quad_td_ct_krylov_approximation(ct10):
    rule = Q.map_domain(Q.gauss_legendre(200), "interval", 0.0, 40.0)
    imp = Q.acquire_impulse_ct(ct10, rule.nodes, rule.nodes)
    q = QD.build_impulse_ct(imp, rule.nodes, rule.nodes)
    V = irka.proj_quad_td_ct("input", rule, _one(PTS_CT))
    G = systems.freqresp(ct10, PTS_CT)[:, 0, 0]
    assert rel((q.Cq @ V)[0], G) < 1e-6


def test_quad_dt_krylov_approximation(dt10):
    pts = np.array([1.5, 2.0 + 1j, -3.0])
    rule = Q.map_domain(Q.gauss_legendre(200), "interval", -np.pi, np.pi)
    smp = Q.acquire_samples(dt10, np.exp(1j * rule.nodes), all_derivatives=True)
    q = QD.build_loewner(smp, smp)
    V = irka.proj_quad_dt("input", rule, _one(pts))
    G = systems.freqresp(dt10, pts)[:, 0, 0]
    assert rel((q.Cq @ V)[0], G) < 1e-3


def test_td_dt_krylov_approximation(dt10):
    pts = np.array([1.5, 2.0 + 1j, -3.0])
    h = Q.acquire_impulse_dt(dt10, 401)
    q = QD.build_hankel_dt(h, 200, 200)
    V = irka.proj_td_dt("input", 200, _one(pts))
    G = systems.freqresp(dt10, pts)[:, 0, 0]
    assert rel((q.Cq @ V)[0], G) < 1e-8


def test_pork_ct_krylov_approximation(ct10):
    grid = systems.frequency_grid(ct10)
    sh = Q.gen_shifts("continuous", 0.1, np.geomspace(grid[0], grid[-1], 40),
                      conjugate_closure=True)
    smp = Q.acquire_samples(ct10, sh.shifts, all_derivatives=True)
    q = QD.build_loewner(smp, smp)
    V = irka.proj_pork_ct("input", sh.shifts, _one(PTS_CT))
    G = systems.freqresp(ct10, PTS_CT)[:, 0, 0]
    assert rel((q.Cq @ V)[0], G) < 1e-3


# -- the loop -----------------------------------------------------------------

def _fd_quadruplet(g, n=300):
    rule = Q.map_domain(Q.gauss_legendre(n), "infinite-axis")
    smp = Q.acquire_samples(g, 1j * rule.nodes, all_derivatives=True)
    return QD.build_loewner(smp, smp), irka.FrequencyQuadCT(rule)


def test_order_one_ct_converges_to_mirror_pole():
    g = systems.StateSpace(None, [[-2.0]], [[1.0]], [[1.0]])
    q, st = _fd_quadruplet(g, 200)
    rom, rep = irka.irka_run(q, st, _one(0.7))
    assert rep.converged
    np.testing.assert_allclose(rom.poles(), [-2.0], rtol=1e-6)
    np.testing.assert_allclose(rep.interpolation.right_points, [2.0], rtol=1e-6)


def test_order_one_dt_converges_to_mirror_pole():
    g = systems.StateSpace(None, [[0.5]], [[1.0]], [[1.0]], "discrete")
    h = Q.acquire_impulse_dt(g, 161)
    q = QD.build_hankel_dt(h, 80, 80)
    rom, rep = irka.irka_run(q, irka.TimeDT(80), _one(1.3))
    assert rep.converged
    np.testing.assert_allclose(rom.poles(), [0.5], rtol=1e-8)
    np.testing.assert_allclose(rep.interpolation.right_points, [2.0], rtol=1e-8)


def test_intrusive_one_step_full_order():
    g = systems.generate_benchmark("random-stable", {"n": 4}, seed=5)
    init = irka.default_init_from_system(g, 4)
    _, rep = systems.intrusive_irka(g, 4, init, irka.IrkaConfig(max_iter=1))
    lam = g.poles()
    assert _match(rep.eigenvalues[0], lam) < 1e-8 * np.abs(lam).max()
    assert _match(lam, rep.eigenvalues[0]) < 1e-8 * np.abs(lam).max()


def test_fd_irka_matches_intrusive():
    g = systems.generate_benchmark("random-stable", {"n": 10}, seed=3)
    init = irka.default_init_from_system(g, 4)
    rI, _ = systems.intrusive_irka(g, 4, init)
    q, st = _fd_quadruplet(g)
    rom, rep = irka.irka_run(q, st, init)
    assert rep.converged and rep.real_rom and rom.is_real
    lamI = rI.poles()
    assert max(np.min(np.abs(lamI - x)) / abs(x) for x in rom.poles()) < 1e-3
    eI, e = systems.h2_error(g, rI), systems.h2_error(g, rom)
    assert abs(e - eI) / eI < 0.1


def test_tracked_error_ct():
    g = systems.generate_benchmark("random-stable", {"n": 10}, seed=3)
    init = irka.default_init_from_system(g, 4)
    q, st = _fd_quadruplet(g)
    _, rep = irka.irka_run(q, st, init)
    G2 = systems.h2_norm(g) ** 2
    for i in range(2, rep.iterations - 1):
        true = systems.h2_error(g, rep.iterates[i]) ** 2
        est = G2 + rep.tracked[i]
        assert abs(est - true) / true < 1e-2


def test_tracked_error_dt():
    g = systems.generate_benchmark("random-stable", {"n": 10, "domain": "discrete"}, seed=3)
    h = Q.acquire_impulse_dt(g, 601)
    q = QD.build_hankel_dt(h, 300, 300)
    _, rep = irka.irka_run(q, irka.TimeDT(300), irka.default_init_from_system(g, 4))
    G2 = systems.h2_norm(g) ** 2
    assert rep.iterations > 3
    for i in range(2, rep.iterations - 1):
        true = systems.h2_error(g, rep.iterates[i]) ** 2
        assert abs(G2 + rep.tracked[i] - true) / true < 1e-2


def test_track_h2_dt_weighting():
    # G = 1/(z - 0.5) tracked against itself: the term equals -||G||^2 = -4/3
    C, T, lam = np.array([[1.0]]), np.array([[1.0]]), np.array([0.5])
    G_at_mirror = 1.0 / (2.0 - 0.5)
    term = irka.track_h2(np.array([[G_at_mirror]]), C, T, 4 / 3, lam)
    assert term == pytest.approx(-4 / 3)


def test_tracked_term_at_exact_recovery():
    g = systems.generate_benchmark("random-stable", {"n": 2}, seed=5)
    q, st = _fd_quadruplet(g, 400)
    _, rep = irka.irka_run(q, st, _one([0.5, 2.0]))
    G2 = systems.h2_norm(g) ** 2
    assert abs(G2 + rep.tracked[-2]) < 1e-6 * G2


def test_track_h2_scaling_invariance():
    rng = np.random.default_rng(0)
    Cn = rng.standard_normal((2, 3)) + 1j * rng.standard_normal((2, 3))
    Cp = rng.standard_normal((2, 3))
    T = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    D = np.diag([2.0, -0.5j, 3 + 1j])
    a = irka.track_h2(Cn, Cp, T, 1.7)
    b = irka.track_h2(Cn @ np.linalg.inv(D), Cp, T @ D, 1.7)
    assert a == pytest.approx(b, rel=1e-10)


def test_irka_deterministic():
    g = systems.generate_benchmark("random-stable", {"n": 10}, seed=3)
    q, st = _fd_quadruplet(g, 200)
    init = irka.default_init_from_system(g, 4)
    r1, a = irka.irka_run(q, st, init)
    r2, b = irka.irka_run(q, st, init)
    assert a.iterations == b.iterations
    for x, y in zip(a.eigenvalues, b.eigenvalues):
        np.testing.assert_array_equal(x, y)
    np.testing.assert_array_equal(r1.A, r2.A)


def test_pork_irka_matches_intrusive():
    g = systems.generate_benchmark("random-stable", {"n": 10}, seed=3)
    init = irka.default_init_from_system(g, 4)
    rI, _ = systems.intrusive_irka(g, 4, init)
    grid = systems.frequency_grid(g)
    sh = Q.gen_shifts("continuous", 0.1, np.geomspace(grid[0], 50, 50), conjugate_closure=True)
    smp = Q.acquire_samples(g, sh.shifts, all_derivatives=True)
    rom, rep = irka.irka_run(QD.build_loewner(smp, smp), irka.PorkCT(sh.shifts), init)
    assert rep.converged
    lamI = rI.poles()
    assert max(np.min(np.abs(lamI - x)) / abs(x) for x in rom.poles()) < 1e-3


def test_singular_reduced_e():
    g = systems.StateSpace(None, [[-1.0]], [[1.0]], [[1.0]])
    q, st = _fd_quadruplet(g, 50)
    # two points but a first-order quadruplet: E_r has rank one
    with pytest.raises(SingularReducedE):
        irka.irka_run(q, st, _one([1.0, 2.0]))


def test_grid_mismatch():
    g = systems.StateSpace(None, [[-1.0]], [[1.0]], [[1.0]])
    q, _ = _fd_quadruplet(g, 50)
    other = irka.FrequencyQuadCT(Q.map_domain(Q.gauss_legendre(40), "infinite-axis"))
    with pytest.raises(GridMismatch):
        irka.irka_run(q, other, 1)


def test_config_validation():
    with pytest.raises(ValidationError):
        irka.IrkaConfig(tol=0)
    with pytest.raises(ValidationError):
        irka.IrkaConfig(max_iter=0)


def test_report_csv(tmp_path):
    g = systems.generate_benchmark("random-stable", {"n": 6}, seed=3)
    q, st = _fd_quadruplet(g, 200)
    _, rep = irka.irka_run(q, st, irka.default_init_from_system(g, 2))
    path = tmp_path / "irka.csv"
    rep.to_csv(path)
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["iteration", "k", "re_lambda", "im_lambda", "tracked"]
    assert len(rows) == 1 + 2 * rep.iterations
