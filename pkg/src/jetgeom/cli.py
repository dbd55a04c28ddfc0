"""Batch front end: classify metric files, analyze their symmetry algebra,
and run the built-in self-test.

Exit codes: 0 success, 1 self-test failure, 2 parse error, 3 precondition
failure.  Stdout carries line-oriented ``key = value`` records (reals with
17 significant digits, arrays as bracketed row-major lists); diagnostics go
to stderr.
"""

import argparse
import sys

import numpy as np

from .algebroid import fiber_basis
from .curvature import constant_curvature_fit, mc_constants
from .errors import JetGeomError, MetricFileError
from .geometry import cholesky_frame_exprs
from .integrator import PathSpec, killing_algebra, monodromy_defect
from .jets import RIEMANNIAN
from .metricfile import load_metric_file
from .selftest import run_selftest

EXIT_OK = 0
EXIT_SELFTEST = 1
EXIT_PARSE = 2
EXIT_PRECONDITION = 3

PASS_TOL = 1e-6


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (tuple, list, np.ndarray)):
        return "[" + ", ".join(_fmt(v) for v in np.ravel(np.asarray(value))) + "]"
    return str(value)


def _emit(key, value):
    print(f"{key} = {_fmt(value)}")


def default_loops(domain, base_point, step, scale: float = 0.5):
    """Axis-plane rectangles around the base point, scaled to fit the box."""
    base = np.asarray(base_point, dtype=float)
    lo = np.asarray(domain.lo)
    hi = np.asarray(domain.hi)
    room = np.minimum(base - lo, hi - base) * scale
    loops = []
    n = base.shape[0]
    for i in range(n):
        for j in range(i + 1, n):
            if room[i] < 1e-9 or room[j] < 1e-9:
                continue
            ei = np.zeros(n)
            ej = np.zeros(n)
            ei[i] = room[i]
            ej[j] = room[j]
            loops.append(PathSpec.polyline(
                [base, base + ei, base + ei + ej, base + ej, base], step=step))
    return loops


def _load(path):
    mf = load_metric_file(path)
    g = mf.build()
    return mf, g


def cmd_classify(path) -> int:
    try:
        mf, g = _load(path)
    except MetricFileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except JetGeomError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    verdict = constant_curvature_fit(g, mf.analysis_points(), tol=PASS_TOL)
    _emit("file", path)
    _emit("kind", g.kind)
    _emit("dimension", g.n)
    _emit("class", verdict.label)
    _emit("c", verdict.c)
    _emit("residual", verdict.residual)
    _emit("fiber_dim", len(fiber_basis(g, g.base_point)))
    _emit("check_constant_curvature",
          "pass" if verdict.residual <= PASS_TOL else "fail")
    return EXIT_OK


def cmd_killing(path) -> int:
    try:
        mf, g = _load(path)
    except MetricFileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except JetGeomError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    points = mf.analysis_points()
    verdict = constant_curvature_fit(g, points, tol=PASS_TOL)
    loops = default_loops(g.domain, g.base_point, step=mf.rk_step)
    _emit("file", path)
    _emit("class", verdict.label)
    _emit("c", verdict.c)
    _emit("residual", verdict.residual)
    if verdict.residual > PASS_TOL:
        # defect witness: transport still runs, path-dependence is the point
        defect = monodromy_defect(g, g.base_point, loops) if loops else 0.0
        _emit("monodromy_defect", defect)
        _emit("check_constant_curvature", "fail")
        print("error: metric does not have constant curvature; "
              f"fit residual {verdict.residual:.3e}", file=sys.stderr)
        return EXIT_PRECONDITION
    basis = killing_algebra(g, g.base_point, samples=points, tol=PASS_TOL)
    defect = monodromy_defect(g, g.base_point, loops) if loops else 0.0
    _emit("dim", basis.dimension)
    _emit("signature", basis.signature)
    _emit("monodromy_defect", defect)
    if g.kind == RIEMANNIAN:
        frame = cholesky_frame_exprs(g.metric)
        mc = mc_constants(g, frame, points[:8], tol=PASS_TOL)
        _emit("mc_defect", mc.defect)
        _emit("check_mc_constancy", "pass" if mc.defect <= PASS_TOL else "fail")
    _emit("jacobi_residual", basis.jacobi_residual)
    _emit("closure_residual", basis.closure_residual)
    _emit("check_monodromy", "pass" if defect <= PASS_TOL else "fail")
    _emit("check_jacobi", "pass" if basis.jacobi_residual <= 1e-8 else "fail")
    return EXIT_OK


def cmd_selftest(corrupt_convention: bool = False) -> int:
    results = run_selftest(corrupt_convention=corrupt_convention)
    all_ok = True
    for res in results:
        _emit("suite", res.name)
        _emit("checks", res.checks)
        _emit("failures", len(res.failures))
        if res.failures:
            all_ok = False
            _emit("failed_suite", res.name)
            for msg in res.failures[:5]:
                print(f"  {res.name}: {msg}", file=sys.stderr)
    _emit("selftest", "pass" if all_ok else "fail")
    return EXIT_OK if all_ok else EXIT_SELFTEST


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="jetgeom",
        description="Classify metrics as space forms and analyze their "
                    "symmetry algebra through jet-groupoid curvature.")
    sub = parser.add_subparsers(dest="command", required=True)
    p_classify = sub.add_parser(
        "classify", help="constant-curvature classification of a metric file")
    p_classify.add_argument("file")
    p_killing = sub.add_parser(
        "killing", help="symmetry algebra, monodromy and structure constants")
    p_killing.add_argument("file")
    p_selftest = sub.add_parser(
        "selftest", help="run the built-in property suites")
    p_selftest.add_argument(
        "--corrupt-convention", action="store_true",
        help="negative control: flip the calibrated sign and expect failure")
    args = parser.parse_args(argv)
    if args.command == "classify":
        return cmd_classify(args.file)
    if args.command == "killing":
        return cmd_killing(args.file)
    return cmd_selftest(corrupt_convention=args.corrupt_convention)


if __name__ == "__main__":
    sys.exit(main())
