import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ddmor import dense, pork, quadrature as Q, systems
from ddmor.errors import BadShift, IllConditioned, NotObservable

from conftest import rel


def _points(domain, k, rng):
    if domain == systems.CONTINUOUS:
        return rng.uniform(0.2, 2.0, k) + 1j * rng.uniform(-2.0, 2.0, k)
    return rng.uniform(1.1, 2.0, k) * np.exp(1j * rng.uniform(-3.0, 3.0, k))


def pork_rom(g, pts, side):
    """PORK ROM of `g` from samples at `pts` (block data)."""
    Gs = [systems.tf_eval(g, s) for s in pts]
    ctime = g.domain == systems.CONTINUOUS
    if side == "input":
        S, L = pork.block_input_data(pts, g.m)
        if ctime:
            return pork.ipork_ct(S, L, np.hstack(Gs))
        return pork.ipork_dt(*pork.bar_input(S, L), np.hstack(Gs))
    S, L = pork.block_output_data(pts, g.p)
    if ctime:
        return pork.opork_ct(S, L, np.vstack(Gs))
    return pork.opork_dt(*pork.bar_output(S, L), np.vstack(Gs))


def test_ipork_ct_scalar():
    res = pork.ipork_ct([[1.0]], [[1.0]], [[0.5]])
    np.testing.assert_allclose(res.gramian, [[0.5]])
    r = res.rom
    np.testing.assert_allclose([r.E[0, 0], r.A[0, 0], r.B[0, 0], r.C[0, 0]], [1, -1, 2, 0.5])
    np.testing.assert_allclose(systems.tf_eval(r, 3.0), [[0.25]])


def test_ipork_cauchy():
    res = pork.ipork_ct(np.diag([1.0, 2.0]), [[1.0, 1.0]], [[1.0, 1.0]])
    np.testing.assert_allclose(res.gramian, [[1 / 2, 1 / 3], [1 / 3, 1 / 4]], rtol=1e-14)


def test_opork_cauchy_and_scalar():
    res = pork.opork_ct(np.diag([1.0, 2.0]), [[1.0], [1.0]], [[1.0], [1.0]])
    np.testing.assert_allclose(res.gramian, [[1 / 2, 1 / 3], [1 / 3, 1 / 4]], rtol=1e-14)
    r = pork.opork_ct([[1.0]], [[1.0]], [[0.5]]).rom
    np.testing.assert_allclose(systems.tf_eval(r, 3.0), [[0.25]])


def test_ipork_dt_order_one(first_order_dt):
    res = pork_rom(first_order_dt, np.array([2.0]), "input")
    np.testing.assert_allclose(res.rom.poles(), [0.5])
    np.testing.assert_allclose(systems.tf_eval(res.rom, 1.7), systems.tf_eval(first_order_dt, 1.7))
    res = pork_rom(first_order_dt, np.array([2.0]), "output")
    np.testing.assert_allclose(systems.tf_eval(res.rom, 1.7), systems.tf_eval(first_order_dt, 1.7))


def test_stein_gramian_closed_form():
    pts = np.array([2.0, 1.5 + 0.5j, -3.0])
    S, L = pork.block_input_data(pts, 1)
    Sb, Lb = pork.bar_input(S, L)
    Q_dense = dense.stein_dt(Sb, dense.ct(Lb) @ Lb, mode="dense")
    sb = 1 / pts
    closed = (dense.ct(Lb) @ Lb) / (1 - np.conj(sb)[:, None] * sb[None, :])
    np.testing.assert_allclose(pork.input_gramian_dt(Sb, Lb), closed, rtol=1e-13)
    np.testing.assert_allclose(Q_dense, closed, rtol=1e-13)


def test_pork_invariants():
    pts = np.array([0.5 + 1j, 0.5 - 1j, 2.0])
    res = pork.ipork_ct(*pork.block_input_data(pts, 2), np.ones((1, 6)))
    np.testing.assert_array_equal(res.rom.E, np.eye(6))
    G = res.gramian
    np.testing.assert_allclose(G, dense.ct(G))
    assert np.all(np.linalg.eigvalsh(G) > 0)
    np.testing.assert_allclose(res.reduced_gramian @ G, np.eye(6), atol=1e-10)


@pytest.mark.parametrize("domain", systems.DOMAINS)
@pytest.mark.parametrize("side", ["input", "output"])
@pytest.mark.parametrize("seed", range(4))
def test_energy_identity(domain, side, seed):
    rng = np.random.default_rng(seed)
    g = systems.generate_benchmark("random-stable", {"n": 6, "m": 2, "p": 2, "domain": domain},
                                   seed=seed)
    rom = pork_rom(g, _points(domain, 2, rng), side).rom
    err = systems.h2_error(g, rom) ** 2
    ident = systems.h2_norm(g) ** 2 - systems.h2_norm(rom) ** 2
    assert abs(err - ident) <= 1e-8 * err


@pytest.mark.parametrize("domain", systems.DOMAINS)
def test_interpolation_at_shifts(domain):
    rng = np.random.default_rng(3)
    g = systems.generate_benchmark("random-stable", {"n": 6, "domain": domain}, seed=3)
    pts = _points(domain, 3, rng)
    rom = pork_rom(g, pts, "input").rom
    for s in pts:
        assert rel(systems.tf_eval(rom, s), systems.tf_eval(g, s)) < 1e-8


def test_dt_reduced_gramian_is_inverse():
    """Discrete I-PORK: A_r equals Q^-1 S^* Q and the reduced Stein
    controllability Gramian is Q^-1."""
    rng = np.random.default_rng(0)
    g = systems.generate_benchmark("random-stable", {"n": 6, "domain": "discrete"}, seed=0)
    pts = _points("discrete", 3, rng)
    res = pork_rom(g, pts, "input")
    Sb, _ = pork.bar_input(*pork.block_input_data(pts, 1))
    Qb = res.gramian
    np.testing.assert_allclose(res.rom.A, np.linalg.solve(Qb, dense.ct(Sb) @ Qb), atol=1e-12)
    P, _ = systems.gramians(res.rom)
    np.testing.assert_allclose(P, np.linalg.inv(Qb), rtol=1e-10, atol=1e-12)


@pytest.mark.parametrize("domain", systems.DOMAINS)
def test_monotone_decay(domain):
    rng = np.random.default_rng(5)
    g = systems.generate_benchmark("random-stable", {"n": 10, "domain": domain}, seed=5)
    pts = _points(domain, 6, rng)
    errs = [systems.h2_error(g, pork_rom(g, pts[:k], "input").rom) for k in range(1, 7)]
    assert all(b <= a + 1e-10 for a, b in zip(errs, errs[1:]))


def test_bad_shift():
    with pytest.raises(BadShift):
        pork.ipork_ct([[-1.0]], [[1.0]], [[1.0]])
    with pytest.raises(BadShift):
        pork.ipork_dt([[2.0]], [[1.0]], [[1.0]])


def test_not_observable():
    with pytest.raises(NotObservable):
        pork.ipork_ct(np.diag([1.0, 2.0]), [[1.0, 0.0]], [[1.0, 1.0]])


def test_ill_conditioned_suggests_light_mode():
    pts = np.geomspace(1.0, 3.0, 20)   # clustered real points: Cauchy matrix near singular
    with pytest.raises(IllConditioned, match="light"):
        pork.exact_inverse_factor("continuous", pts, 1, "input")


def test_light_values():
    d, L = pork.light_gramians("continuous", np.array([0.001 + 1j]))
    assert L[0, 0] == pytest.approx(0.0447214, abs=1e-7)
    assert 1 / d[0] == pytest.approx(500.0)
    _, L = pork.light_gramians("discrete", np.array([1.1]))
    assert L[0, 0] == pytest.approx(0.4582576, abs=1e-7)


def test_light_bad_shift():
    with pytest.raises(BadShift):
        pork.light_gramians("continuous", np.array([-1.0 + 1j]))
    with pytest.raises(BadShift):
        pork.light_gramians("discrete", np.array([0.5]))


def test_light_warns_for_heavy_damping():
    sh = Q.gen_shifts("continuous", 0.1, [1.0])
    with pytest.warns(UserWarning):
        pork.light_gramians("continuous", sh)


def test_light_matches_exact_diagonal():
    sh = Q.gen_shifts("continuous", 1e-4, np.geomspace(0.1, 10, 12), conjugate_closure=True)
    d, L = pork.light_gramians("continuous", sh)
    F = pork.exact_inverse_factor("continuous", sh.shifts, 1, "input")
    exact = np.sqrt(np.real(np.diag(F @ dense.ct(F))))
    assert np.max(np.abs(np.diag(L) - exact) / exact) <= 1e-3


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**31))
def test_inverse_factor_property(k, seed):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(0.5, 3.0, k) + 1j * rng.uniform(-1, 1, k) * 3
    F = pork.exact_inverse_factor("continuous", pts, 1, "input")
    S, L = pork.block_input_data(pts, 1)
    G = pork.input_gramian_ct(S, L)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        np.testing.assert_allclose(F @ dense.ct(F) @ G, np.eye(k), atol=1e-6)
