import csv
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ddmor import bt, io, quadrature as Q, quadruplet as QD, systems
from ddmor.cli import emit_plotdata, run_command, sigma_plot_rows
from ddmor.errors import FileFormat, ValidationError


# -- round trips --------------------------------------------------------------

def test_samples_round_trip(tmp_path):
    g = systems.generate_benchmark("random-stable", {"n": 5, "m": 2, "p": 3}, seed=1)
    smp = Q.acquire_samples(g, [0.5, 1 + 2j, 1 - 2j], need_derivative_at=[0.5])
    path = tmp_path / "s.jsonl"
    io.save(smp, path)
    back = io.load_dataset(path)
    np.testing.assert_array_equal(back.points, smp.points)
    np.testing.assert_array_equal(back.values, smp.values)
    assert back.has_derivative(0) and not back.has_derivative(1)
    np.testing.assert_array_equal(back.derivatives[0], smp.derivatives[0])


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 6), st.integers(0, 10**6))
def test_statespace_round_trip_bit_exact(n, seed):
    g = systems.generate_benchmark("random-stable", {"n": n}, seed=seed)
    back = io.from_dict(json.loads(json.dumps(io.to_dict(g))))
    for a, b in zip((g.E, g.A, g.B, g.C), (back.E, back.A, back.B, back.C)):
        np.testing.assert_array_equal(a, b)


def test_quadruplet_rule_shifts_round_trip(tmp_path):
    g = systems.generate_benchmark("random-stable", {"n": 4}, seed=2)
    smp = Q.acquire_samples(g, [1.0, 2.0 + 1j, 2.0 - 1j], all_derivatives=True)
    q = QD.build_loewner(smp, smp)
    rule = Q.exp_trapezoid(1e-2, 1e2, 7).mirrored()
    sh = Q.gen_shifts("discrete", 1e-3, [0.1, 2.0], conjugate_closure=True).with_side("output")
    for obj in (q, rule, sh):
        path = tmp_path / "x.json"
        io.save(obj, path)
        back = io.load_dataset(path)
        assert type(back) is type(obj)
    assert back.side == "output"
    np.testing.assert_array_equal(back.shifts, sh.shifts)
    io.save(q, tmp_path / "q.json")
    bq = io.load_dataset(tmp_path / "q.json")
    np.testing.assert_array_equal(bq.Aq, q.Aq)
    np.testing.assert_array_equal(bq.right_points, q.right_points)


def test_truncated_samples_file(tmp_path, first_order):
    smp = Q.acquire_samples(first_order, [1.0, 2.0, 3.0, 4.0])
    path = tmp_path / "s.jsonl"
    io.save(smp, path)
    text = path.read_text()
    path.write_text(text[:-15])
    with pytest.raises(FileFormat) as exc:
        io.load_dataset(path)
    assert exc.value.line == 5


def test_unknown_tag(tmp_path):
    path = tmp_path / "x.json"
    path.write_text(json.dumps({"type": "banana"}))
    with pytest.raises(FileFormat) as exc:
        io.load_dataset(path)
    assert "statespace" in str(exc.value) and "samples" in str(exc.value)


# -- plot data ----------------------------------------------------------------

def test_sigma_plot_first_order(tmp_path, first_order):
    path = tmp_path / "sigma.csv"
    emit_plotdata(first_order, path, omegas=[0.1, 1.0, 10.0])
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["frequency", "magnitude_db"]
    assert float(rows[2][1]) == pytest.approx(-3.0103, abs=1e-4)


def test_sigma_plot_default_grid(first_order):
    assert len(sigma_plot_rows(first_order)) == 400


def test_emit_plotdata_refuses_empty(tmp_path):
    with pytest.raises(ValidationError):
        emit_plotdata(bt.BtReport(np.array([]), 0), tmp_path / "e.csv")


# -- command line -------------------------------------------------------------

def test_gen_butterworth(tmp_path):
    out = tmp_path / "sys.json"
    code = run_command(["gen", "--kind", "butterworth-dt", "--order", "40",
                        "--cutoff", "0.6", "--out", str(out)])
    assert code == 0
    g = io.load_dataset(out)
    # 40 filter states plus the one-sample delay that makes it strictly proper
    assert g.n == 41 and g.domain == "discrete"


def test_illustrative_pipeline(tmp_path, capsys):
    p = lambda name: str(tmp_path / name)  # noqa: E731
    assert run_command(["gen", "--kind", "illustrative", "--out", p("sys.json")]) == 0
    assert run_command(["sample", "--system", p("sys.json"), "--signal-generator",
                        "--out", p("s.jsonl")]) == 0
    assert run_command(["quad", "--kind", "points", "--points", "2.6141,1.1321",
                        "--out", p("shifts.json")]) == 0
    assert run_command(["reduce-bt", "--algo", "dd-adi", "--samples", p("s.jsonl"),
                        "--shifts", p("shifts.json"), "--r", "2", "--out", p("rom.json"),
                        "--report", p("hsv.csv")]) == 0
    with open(p("hsv.csv")) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["index", "hsv_estimate"] and len(rows) == 3
    assert [r[0] for r in rows[1:]] == ["1", "2"]
    np.testing.assert_allclose([float(r[1]) for r in rows[1:]], [0.2141, 0.0330], atol=2e-3)
    capsys.readouterr()
    assert run_command(["compare", "--truth", p("sys.json"), "--rom", p("rom.json"),
                        "--metric", "hinf-grid"]) == 0
    value = float(capsys.readouterr().out.strip())
    assert 0 < value < 0.5


def test_sampling_is_deterministic(tmp_path):
    p = lambda name: str(tmp_path / name)  # noqa: E731
    run_command(["gen", "--kind", "random-stable", "--n", "6", "--seed", "4", "--out", p("g.json")])
    run_command(["quad", "--kind", "shifts", "--n", "5", "--conjugate-closure", "--out", p("sh.json")])
    for name in ("a.jsonl", "b.jsonl"):
        run_command(["sample", "--system", p("g.json"), "--shifts", p("sh.json"),
                     "--derivatives", "--out", p(name)])
    assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()


def test_exit_code_validation(tmp_path, capsys):
    assert run_command(["gen", "--kind", "nope", "--out", str(tmp_path / "x")]) == 2
    assert run_command(["reduce-bt", "--algo", "dd-adi", "--samples",
                        str(tmp_path / "missing.jsonl"), "--out", str(tmp_path / "r")]) == 2
    assert run_command([]) == 2


def test_exit_code_numerical(tmp_path):
    p = lambda name: str(tmp_path / name)  # noqa: E731
    io.save(systems.StateSpace(None, [[-1.0]], [[1.0]], [[1.0]]), p("g.json"))
    run_command(["quad", "--kind", "gauss-legendre", "--n", "40", "--map", "infinite-axis",
                 "--out", p("rule.json")])
    run_command(["sample", "--system", p("g.json"), "--rule", p("rule.json"),
                 "--derivatives", "--out", p("s.jsonl")])
    # a first-order system cannot support an order-3 interpolant
    code = run_command(["reduce-irka", "--strategy", "fd-ct", "--samples", p("s.jsonl"),
                        "--rule", p("rule.json"), "--r", "3", "--out", p("rom.json")])
    assert code == 3
