"""Command-line pipelines: ``ddmor <subcommand> ...``.

Subcommands
-----------
gen          build a benchmark system (JSON)
sample       sample a system at shifts, rule nodes or through the
             signal-generator experiment (JSON lines); the only
             subcommand that queries a system
quad         write a quadrature rule or a shift set (JSON)
reduce-bt    data-driven balanced truncation from sample files
reduce-irka  data-driven IRKA from sample files
compare      error of a ROM against a reference system; optional
             sigma-plot CSV

Exit codes: 0 success, 2 invalid input, 3 numerical failure. The
``DDMOR_LOG`` environment variable sets the log level (default WARNING).
"""
import argparse
import csv
import logging
import os
import sys
import tempfile

import numpy as np

from . import bt, io, irka, quadrature, quadruplet, systems
from .errors import NumericalError, ValidationError

log = logging.getLogger("ddmor")

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 2, 3
SIGMA_GRID_POINTS = 400


# -- plot data ----------------------------------------------------------------

def _atomic_csv(path, header, rows):
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=".csv")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            w.writerows(rows)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def sigma_plot_rows(sys, omegas=None):
    """``(frequency, magnitude_db)`` of the largest singular value."""
    if omegas is None:
        omegas = systems.frequency_grid(sys, SIGMA_GRID_POINTS)
    omegas = np.asarray(omegas, dtype=float)
    mag = systems.sigma_max(sys, systems.grid_points(sys, omegas))
    return [(float(w), float(20.0 * np.log10(v))) for w, v in zip(omegas, mag)]


def emit_plotdata(report, path, omegas=None):
    """Write plot data as CSV with a stable column order.

    `report` may be a :class:`bt.BtReport` (``index, hsv_estimate`` rows), an
    :class:`irka.IrkaReport` (per-iteration eigenvalues and tracked term)
    or a :class:`systems.StateSpace` (``frequency, magnitude_db`` over a
    400-point grid unless `omegas` is given).
    """
    if isinstance(report, bt.BtReport):
        rows = report.rows()
        if not rows:
            raise ValidationError("empty report")
        _atomic_csv(path, ["index", "hsv_estimate"], [(k, repr(v)) for k, v in rows])
    elif isinstance(report, irka.IrkaReport):
        if not report.eigenvalues:
            raise ValidationError("empty report")
        rows = []
        for i, lam in enumerate(report.eigenvalues):
            t = report.tracked[i] if i < len(report.tracked) else float("nan")
            rows.extend([i + 1, k + 1, repr(float(v.real)), repr(float(v.imag)), repr(float(t))]
                        for k, v in enumerate(lam))
        _atomic_csv(path, ["iteration", "k", "re_lambda", "im_lambda", "tracked"], rows)
    elif isinstance(report, systems.StateSpace):
        rows = sigma_plot_rows(report, omegas)
        _atomic_csv(path, ["frequency", "magnitude_db"], [(repr(w), repr(v)) for w, v in rows])
    else:
        raise ValidationError(f"no plot data for {type(report).__name__}")


# -- helpers ------------------------------------------------------------------

def _load(path, cls, what):
    obj = io.load_dataset(path)
    if not isinstance(obj, cls):
        raise ValidationError(f"{path}: expected a {what} file, got {type(obj).__name__}")
    return obj


def _floats(text):
    try:
        return [complex(x.replace(" ", "")) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ValidationError(f"cannot parse point list {text!r}") from None


def _rule_points(rule, domain):
    x = rule.nodes
    return 1j * x if domain == systems.CONTINUOUS else np.exp(1j * x)


# -- subcommands --------------------------------------------------------------

def cmd_gen(args):
    params = {}
    if args.kind == "butterworth-dt":
        params = {"order": args.order, "cutoff": args.cutoff}
    elif args.kind == "random-stable":
        params = {"n": args.n, "m": args.m, "p": args.p, "domain": args.domain}
    elif args.kind == "diffusion-chain":
        params = {"n": args.n}
    params = {k: v for k, v in params.items() if v is not None}
    sys_ = systems.generate_benchmark(args.kind, params, seed=args.seed)
    io.save(sys_, args.out)
    log.info("wrote %s (n=%d)", args.out, sys_.n)


def cmd_sample(args):
    sys_ = _load(args.system, systems.StateSpace, "statespace")
    if args.signal_generator:
        g = systems.ILLUSTRATIVE_GENERATOR
        smp = quadrature.samples_from_signal_generator(sys_, g["S"], g["L"], g["w0"])
    else:
        pts = []
        for path in args.shifts or []:
            pts.extend(_load(path, quadrature.ShiftSet, "shifts").shifts)
        for path in args.rule or []:
            pts.extend(_rule_points(_load(path, quadrature.QuadratureRule, "rule"), sys_.domain))
        if args.points:
            pts.extend(_floats(args.points))
        if not pts:
            raise ValidationError("nothing to sample: give --shifts, --rule or --points")
        smp = quadrature.acquire_samples(sys_, pts, all_derivatives=args.derivatives)
    io.save(smp, args.out)


def cmd_quad(args):
    if args.kind == "gauss-legendre":
        rule = quadrature.gauss_legendre(args.n)
        if args.map == "infinite-axis":
            rule = quadrature.map_domain(rule, "infinite-axis")
        elif args.map == "interval":
            rule = quadrature.map_domain(rule, "interval", args.a, args.b)
        obj = rule
    elif args.kind == "exp-trapezoid":
        obj = quadrature.exp_trapezoid(args.f_min, args.f_max, args.n)
        if args.mirror:
            obj = obj.mirrored()
    elif args.kind == "shifts":
        if args.domain == systems.CONTINUOUS:
            om = np.geomspace(args.f_min, args.f_max, args.n)
        else:
            k = np.arange(1, args.n + 1)
            om = (2 * k - args.n - 1) * np.pi / args.n
        obj = quadrature.gen_shifts(args.domain, args.zeta, om,
                                    conjugate_closure=args.conjugate_closure)
    elif args.kind == "points":
        pts = np.array(_floats(args.points or ""))
        obj = quadrature.ShiftSet(pts, 1.0, args.domain)
    else:  # pragma: no cover - argparse restricts choices
        raise ValidationError(f"unknown rule kind {args.kind!r}")
    io.save(obj, args.out)


def cmd_reduce_bt(args):
    smp = _load(args.samples, quadrature.SampleSet, "samples")
    left = _load(args.left_samples, quadrature.SampleSet, "samples") if args.left_samples else smp
    if args.algo == "quadbt":
        rule_p = _load(args.rule, quadrature.QuadratureRule, "rule")
        rule_q = _load(args.left_rule, quadrature.QuadratureRule, "rule") if args.left_rule else rule_p
        q = quadruplet.build_loewner(smp.subset(_rule_points(rule_p, smp.domain)),
                                     left.subset(_rule_points(rule_q, smp.domain)))
        rom, report = bt.quadbt(q, rule_p, rule_q, args.r)
    else:
        if not args.shifts:
            raise ValidationError(f"--algo {args.algo} needs --shifts")
        sp = _load(args.shifts, quadrature.ShiftSet, "shifts")
        sq = _load(args.left_shifts, quadrature.ShiftSet, "shifts") if args.left_shifts else sp
        fn = bt.dd_adi_bt if args.algo == "dd-adi" else bt.dd_pork_dtbt
        rom, report = fn(smp, left, (sp, sq.with_side("output")), args.r, args.gramian_mode,
                         realify=args.realify)
    io.save(rom, args.out)
    if args.report:
        emit_plotdata(report, args.report)
    print(" ".join(f"{v:.6g}" for v in report.hsv_estimates[:report.r]))


def cmd_reduce_irka(args):
    smp = _load(args.samples, quadrature.SampleSet, "samples")
    cfg = irka.IrkaConfig(tol=args.tol, max_iter=args.max_iter)
    if args.strategy in ("fd-ct", "fd-dt"):
        if not args.rule:
            raise ValidationError(f"--strategy {args.strategy} needs --rule")
        rule = _load(args.rule, quadrature.QuadratureRule, "rule")
        pts = _rule_points(rule, smp.domain)
        strat = (irka.FrequencyQuadCT if args.strategy == "fd-ct" else irka.FrequencyQuadDT)(rule)
    else:
        if not args.shifts:
            raise ValidationError(f"--strategy {args.strategy} needs --shifts")
        pts = _load(args.shifts, quadrature.ShiftSet, "shifts").shifts
        strat = (irka.PorkCT if args.strategy == "pork-ct" else irka.PorkDT)(pts)
    sub = smp.subset(pts)
    q = quadruplet.build_loewner(sub, sub)
    init = irka.init_from_rom(_load(args.init_rom, systems.StateSpace, "statespace")) \
        if args.init_rom else args.r
    rom, report = irka.irka_run(q, strat, init, cfg)
    io.save(rom, args.out)
    if args.report:
        emit_plotdata(report, args.report)
    print(f"iterations={report.iterations} converged={report.converged}")


def cmd_compare(args):
    truth = _load(args.truth, systems.StateSpace, "statespace")
    rom = _load(args.rom, systems.StateSpace, "statespace")
    if args.metric == "hinf-grid":
        val = systems.hinf_rel_error(truth, rom)
    else:
        val = systems.h2_error(truth, rom) / systems.h2_norm(truth)
    print(repr(val))
    if args.plot:
        emit_plotdata(rom, args.plot, systems.frequency_grid(truth, SIGMA_GRID_POINTS))


# -- parser -------------------------------------------------------------------

def build_parser():
    ap = argparse.ArgumentParser(prog="ddmor", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="build a benchmark system")
    g.add_argument("--kind", required=True,
                   choices=["butterworth-dt", "random-stable", "diffusion-chain", "illustrative"])
    g.add_argument("--order", type=int)
    g.add_argument("--cutoff", type=float)
    g.add_argument("--n", type=int)
    g.add_argument("--m", type=int)
    g.add_argument("--p", type=int)
    g.add_argument("--domain", choices=systems.DOMAINS)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("sample", help="sample a system (the only oracle access)")
    s.add_argument("--system", required=True)
    s.add_argument("--shifts", action="append")
    s.add_argument("--rule", action="append")
    s.add_argument("--points", help="comma-separated complex points, e.g. 1,2+3j")
    s.add_argument("--derivatives", action="store_true", help="also sample G'(s)")
    s.add_argument("--signal-generator", action="store_true",
                   help="estimate samples from the built-in signal-generator experiment")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sample)

    q = sub.add_parser("quad", help="write a quadrature rule or shift set")
    q.add_argument("--kind", required=True,
                   choices=["gauss-legendre", "exp-trapezoid", "shifts", "points"])
    q.add_argument("--n", type=int, default=100)
    q.add_argument("--map", choices=["none", "infinite-axis", "interval"], default="none")
    q.add_argument("--a", type=float)
    q.add_argument("--b", type=float)
    q.add_argument("--f-min", type=float, default=1e-3)
    q.add_argument("--f-max", type=float, default=1e3)
    q.add_argument("--mirror", action="store_true")
    q.add_argument("--zeta", type=float, default=1e-4)
    q.add_argument("--conjugate-closure", action="store_true")
    q.add_argument("--points")
    q.add_argument("--domain", choices=systems.DOMAINS, default=systems.CONTINUOUS)
    q.add_argument("--out", required=True)
    q.set_defaults(func=cmd_quad)

    b = sub.add_parser("reduce-bt", help="data-driven balanced truncation")
    b.add_argument("--algo", required=True, choices=["dd-adi", "dd-pork-dt", "quadbt"])
    b.add_argument("--samples", required=True)
    b.add_argument("--left-samples")
    b.add_argument("--shifts")
    b.add_argument("--left-shifts")
    b.add_argument("--rule")
    b.add_argument("--left-rule")
    b.add_argument("--r", type=int)
    b.add_argument("--gramian-mode", choices=["exact", "light"], default="exact")
    b.add_argument("--realify", action="store_true")
    b.add_argument("--out", required=True)
    b.add_argument("--report")
    b.set_defaults(func=cmd_reduce_bt)

    i = sub.add_parser("reduce-irka", help="data-driven IRKA")
    i.add_argument("--strategy", required=True, choices=["fd-ct", "pork-ct", "fd-dt", "pork-dt"])
    i.add_argument("--samples", required=True)
    i.add_argument("--rule")
    i.add_argument("--shifts")
    i.add_argument("--r", type=int, default=2)
    i.add_argument("--init-rom")
    i.add_argument("--tol", type=float, default=1e-6)
    i.add_argument("--max-iter", type=int, default=50)
    i.add_argument("--out", required=True)
    i.add_argument("--report")
    i.set_defaults(func=cmd_reduce_irka)

    c = sub.add_parser("compare", help="relative error of a ROM")
    c.add_argument("--truth", required=True)
    c.add_argument("--rom", required=True)
    c.add_argument("--metric", choices=["hinf-grid", "h2"], default="hinf-grid")
    c.add_argument("--plot")
    c.set_defaults(func=cmd_compare)
    return ap


def run_command(argv=None):
    """Parse `argv` and run; returns the exit code."""
    logging.basicConfig(level=os.environ.get("DDMOR_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def main():
    sys.exit(run_command())


if __name__ == "__main__":
    main()
