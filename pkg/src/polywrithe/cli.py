"""
Command-line interface.

::

    polywrithe generate closed-helix --turns 3 --radius 1 --pitch 0.33 \\
        --inscribe 1000 -o helix1000.txt
    polywrithe writhe helix1000.txt --certify --b2 1 --b3 1
    polywrithe delta closed-helix helix1000.txt
    polywrithe convergence closed-helix --n 100 250 500 1000 \\
        --max-edge 0.506 0.203 0.101 0.051 --b2 1 --b3 1
    polywrithe check closed-helix helix1000.txt

Exit status: 0 success, 1 numerical failure, 2 bad input, 3 a hypothesis
failed (the result is still printed).
"""

import argparse
import hashlib
import json
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .bounds import (DerivativeBounds, error_bound, estimate_derivative_bounds,
                     lemma_chord_bounds, lemma_tangent_angle, arclength_bounds)
from .curves import (closed_helix_writhe, default_derivative_bounds, inscribe,
                     inscribe_with_max_edge, make_curve, max_edge_length,
                     read_polygon, write_polygon, write_samples)
from .errors import (ConvergenceError, DomainError, HypothesisError,
                     NumericalIntegrityError)
from .fuller import check_hypotheses, delta_writhe_polygonal
from .writhe import (QuadratureSpec, writhe_polygonal, writhe_polygonal_oracle,
                     writhe_smooth_quadrature)

EXIT_OK, EXIT_NUMERICAL, EXIT_INPUT, EXIT_HYPOTHESIS = 0, 1, 2, 3


class InputError(Exception):
    pass


@dataclass
class RunReport:
    """Everything one command computed, serializable to JSON."""

    command: list
    inputs_digest: str
    results: dict
    timings: dict = field(default_factory=dict)
    version: str = __version__

    def to_json(self):
        return json.dumps(asdict(self), indent=2, sort_keys=True,
                          default=_jsonable)

    @classmethod
    def from_json(cls, text):
        return cls(**json.loads(text))


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if hasattr(obj, "to_dict"):
        return obj.to_dict()
    if hasattr(obj, "__dataclass_fields__"):
        return asdict(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _normalize(obj):
    """Round-trip through JSON so reports compare equal after reloading."""
    return json.loads(json.dumps(obj, default=_jsonable))


def _digest(args, paths):
    h = hashlib.sha256()
    h.update(json.dumps(args, sort_keys=True, default=str).encode())
    for p in paths:
        with open(p, "rb") as fh:
            h.update(fh.read())
    return h.hexdigest()


# ---------------------------------------------------------------------------
# Input helpers
# ---------------------------------------------------------------------------

def _generator_params(args):
    params = {}
    for key in ("turns", "radius", "pitch", "closure_radius", "a", "b", "p",
                "q", "major", "minor"):
        val = getattr(args, key, None)
        if val is not None:
            params[key] = val
    return params


def _curve(spec, args=None):
    try:
        return make_curve(spec, _generator_params(args) if args else None)
    except DomainError as exc:
        raise InputError(str(exc)) from None


def _load_polygon(path):
    if not os.path.exists(path):
        raise InputError(f"no such file: {path}")
    try:
        return read_polygon(path)
    except DomainError as exc:
        raise InputError(str(exc)) from None


def _load_params(path):
    try:
        vals = np.loadtxt(path, comments="#", ndmin=1)
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read parameters from {path}: {exc}")
    return np.asarray(vals, dtype=float).ravel()


def _attach_params(p, args):
    if getattr(args, "params", None):
        from .curves import PolygonalCurve
        t = _load_params(args.params)
        if t.size != p.n:
            raise InputError("parameter file length does not match polygon")
        p = PolygonalCurve(p.vertices, params=t, meta=p.meta)
    if p.params is None:
        raise InputError("polygon has no inscription parameters; use "
                         "--params or a file written by 'generate'")
    return p


def _derivative_bounds(args, curve):
    given = [getattr(args, f"b{k}", None) for k in (1, 2, 3, 4)]
    if all(v is not None for v in given[1:3]):
        base = default_derivative_bounds(curve) if curve is not None else None
        fill = list(base) if base else [1.0, 1.0, 1.0, 1.0]
        vals = [g if g is not None else f for g, f in zip(given, fill)]
        return DerivativeBounds(*vals, provenance="analytic")
    if curve is None:
        raise InputError("--certify needs --b2 and --b3 or a generator")
    base = default_derivative_bounds(curve)
    if base is not None:
        vals = [g if g is not None else f for g, f in zip(given, base)]
        return DerivativeBounds(*vals, provenance="analytic")
    est = estimate_derivative_bounds(curve)
    vals = [g if g is not None else e for g, e in
            zip(given, (est.B1, est.B2, est.B3, est.B4))]
    return DerivativeBounds(*vals, provenance="estimated")


def _quad_spec(args):
    tol = getattr(args, "tolerance", None)
    return QuadratureSpec() if tol is None else QuadratureSpec(rel_tol=tol)


def reference_writhe(curve, q):
    """Exact writhe when known in closed form, else tightened quadrature."""
    spec = getattr(curve, "spec", None) or {}
    if spec.get("name") == "closed-helix":
        return closed_helix_writhe(spec["turns"], spec["pitch"]), "analytic"
    if spec.get("name") in ("circle", "ellipse"):
        return 0.0, "analytic"
    return writhe_smooth_quadrature(curve, q.tightened(10.0)), "numeric"


def _fmt(v):
    return f"{v:.6g}"


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_generate(args, out):
    curve = _curve(args.generator, args)
    if args.max_edge is not None and args.inscribe is None:
        raise InputError("--max-edge needs --inscribe N")
    results = {"generator": curve.generator, "period": curve.period}
    try:
        if args.inscribe is not None:
            if args.max_edge is not None:
                p = inscribe_with_max_edge(curve, args.inscribe, args.max_edge)
            else:
                p = inscribe(curve, n=args.inscribe)
            write_polygon(args.output, p, curve.generator)
            results.update(kind="polygon", n=p.n, max_edge=max_edge_length(p))
        else:
            write_samples(args.output, curve, args.samples, curve.generator)
            results.update(kind="samples", samples=args.samples)
    except OSError as exc:
        raise InputError(f"cannot write {args.output}: {exc}") from None
    except DomainError as exc:
        raise InputError(str(exc)) from None
    results["output"] = args.output
    print(f"wrote {results['kind']} file {args.output}", file=out)
    return results, EXIT_OK


def cmd_writhe(args, out):
    status = EXIT_OK
    results = {}
    curve = None
    if os.path.exists(args.input):
        p, meta = _load_polygon(args.input)
        if "generator" in meta:
            curve = _curve(meta["generator"])
    else:
        curve = _curve(args.input, args)
        p = None
        if args.inscribe is not None:
            p = (inscribe_with_max_edge(curve, args.inscribe, args.max_edge)
                 if args.max_edge is not None
                 else inscribe(curve, n=args.inscribe))
    if p is None:
        q = _quad_spec(args)
        res = writhe_smooth_quadrature(curve, q, details=True)
        results.update(kind="smooth", writhe=res.value,
                       error_estimate=res.error, generator=curve.generator)
        print(f"Wr = {res.value:.10f}  (quadrature, error estimate "
              f"{res.error:.2e})", file=out)
        return results, status
    try:
        w = writhe_polygonal(p)
    except DomainError as exc:
        raise InputError(str(exc)) from None
    x = max_edge_length(p)
    results.update(kind="polygon", n=p.n, writhe=w, max_edge=x)
    print(f"Wr = {w:.10f}  (polygon, n = {p.n}, x = {_fmt(x)})", file=out)
    if args.oracle:
        o = writhe_polygonal_oracle(p)
        results.update(oracle=o, oracle_difference=o - w)
        print(f"oracle quadrature = {o:.10f}  difference = {o - w:.3e}",
              file=out)
    if args.certify:
        b = _derivative_bounds(args, curve)
        cert = error_bound(p.n, x, b)
        results["certificate"] = cert.to_dict()
        flag = "valid" if cert.valid else "INVALID"
        print(f"certificate ({flag}): |Wr(C) - Wr(C_n)| < {_fmt(cert.bound)}"
              f" + {cert.tail}", file=out)
        for h in cert.hypotheses:
            print(f"  {h.name}: {_fmt(h.value)} vs {_fmt(h.threshold)} "
                  f"{'pass' if h.passed else 'FAIL'}", file=out)
        if not cert.valid:
            status = EXIT_HYPOTHESIS
    return results, status


def _smooth_and_polygon(args):
    curve = _curve(args.smooth, args)
    p, meta = _load_polygon(args.polygon)
    return curve, _attach_params(p, args)


def cmd_delta(args, out):
    curve, p = _smooth_and_polygon(args)
    status = EXIT_OK
    rep = check_hypotheses(curve, p, tube_radius=args.tube_radius,
                           bounds=_derivative_bounds(args, curve))
    failed = [i.name for i in rep.theorem_hypotheses() if not i.passed]
    if failed:
        print("warning: hypotheses failed: " + ", ".join(failed), file=out)
        status = EXIT_HYPOTHESIS
    d = delta_writhe_polygonal(curve, p, args.samples_per_span, check=False)
    wp = writhe_polygonal(p)
    ref, kind = reference_writhe(curve, _quad_spec(args))
    direct = wp - ref
    results = {
        "total": d.total, "region_sum": float(np.sum(d.decomposition.region)),
        "triangle_sum": float(np.sum(d.decomposition.triangle)),
        "writhe_polygon": wp, "writhe_smooth": ref, "reference": kind,
        "direct_difference": direct, "agreement": d.total - direct,
        "hypotheses_failed": failed,
    }
    print(f"corner decomposition total = {d.total:.10g}", file=out)
    print(f"  region terms {results['region_sum']:.6g} sr, triangle terms "
          f"{results['triangle_sum']:.6g} sr", file=out)
    print(f"direct Wr(C_n) - Wr(C) = {direct:.10g} ({kind} reference)",
          file=out)
    print(f"agreement = {d.total - direct:.3e}", file=out)
    return results, status


def convergence_rows(curve, ns, max_edges=None, bounds=None, reference=None):
    """Rows ``(n, Wr(C_n), |error|, x, bound, valid)`` of a refinement study."""
    rows = []
    for k, n in enumerate(ns):
        if max_edges is not None:
            p = inscribe_with_max_edge(curve, n, max_edges[k])
        else:
            p = inscribe(curve, n=n)
        w = writhe_polygonal(p, check=False)
        x = max_edge_length(p)
        row = {"n": int(n), "writhe": w, "error": abs(w - reference),
               "x": x}
        if bounds is not None:
            cert = error_bound(p.n, x, bounds)
            row.update(bound=cert.bound, valid=cert.valid)
        rows.append(row)
    return rows


def fit_slope(ns, errors):
    ns = np.asarray(ns, dtype=float)
    errors = np.asarray(errors, dtype=float)
    keep = errors > 0
    if np.count_nonzero(keep) < 2:
        return None
    return float(np.polyfit(np.log(ns[keep]), np.log(errors[keep]), 1)[0])


def cmd_convergence(args, out):
    curve = _curve(args.generator, args)
    if args.max_edge is not None and len(args.max_edge) != len(args.n):
        raise InputError("--max-edge needs one value per --n")
    q = _quad_spec(args)
    ref, kind = reference_writhe(curve, q)
    b = _derivative_bounds(args, curve)
    try:
        rows = convergence_rows(curve, args.n, args.max_edge, b, ref)
    except DomainError as exc:
        raise InputError(str(exc)) from None
    degenerate = all(r["error"] < 1e-12 for r in rows)
    slope = None if degenerate else fit_slope([r["n"] for r in rows],
                                              [r["error"] for r in rows])
    print(f"# reference Wr(C) = {ref:.10g} ({kind})", file=out)
    print("n\tWr(C_n)\t|Wr(C_n)-Wr(C)|\tx\talpha*n*x^3\thypothesis",
          file=out)
    for r in rows:
        note = "ok" if r["valid"] else "FAIL 1/x>5*B2"
        print("\t".join([str(r["n"]), _fmt(r["writhe"]), _fmt(r["error"]),
                         _fmt(r["x"]), _fmt(r["bound"]), note]), file=out)
    print("# log-log series: log10(n) log10(error) log10(bound)", file=out)
    for r in rows:
        le = math.log10(r["error"]) if r["error"] > 0 else float("-inf")
        print(f"# {math.log10(r['n']):.6g} {le:.6g} "
              f"{math.log10(r['bound']):.6g}", file=out)
    if degenerate:
        print("# errors vanish identically (degenerate, e.g. planar curve)",
              file=out)
    else:
        print(f"# fitted slope of log error vs log n: {slope:.4f}", file=out)
    results = {"reference": ref, "reference_kind": kind, "rows": rows,
               "slope": slope, "degenerate": degenerate,
               "bounds": b.to_dict()}
    if args.output:
        with open(args.output, "w") as fh:
            fh.write("n,writhe,error,x,bound,valid\n")
            for r in rows:
                fh.write(f"{r['n']},{r['writhe']!r},{r['error']!r},"
                         f"{r['x']!r},{r['bound']!r},{int(r['valid'])}\n")
    return results, EXIT_OK


def cmd_check(args, out):
    curve, p = _smooth_and_polygon(args)
    b = _derivative_bounds(args, curve)
    rep = check_hypotheses(curve, p, bounds=b, tube_radius=args.tube_radius)
    K = arclength_bounds(b).K
    x = max_edge_length(p)
    chord = lemma_chord_bounds(curve, 1.01 * x, K, polygon=p)
    tangent = lemma_tangent_angle(curve, p, K)
    lines = []
    for it in rep.items:
        lines.append((it.name, it.passed, it.value, it.threshold,
                      " (sampled)" if it.sampled else ""))
    for name, ok, val, thr, note in lines:
        print(f"{'pass' if ok else 'FAIL'}  {name}: {_fmt(val)} vs "
              f"{_fmt(thr)}{note}", file=out)
    print(f"{'pass' if chord.passed else 'FAIL'}  chord deficit lemma: "
          f"worst deviation/bound {_fmt(chord.details['worst_ratio'])}, "
          f"margin {_fmt(chord.margin)}", file=out)
    for lemma in (chord, tangent):
        if not lemma.regime_ok:
            print(f"note: {lemma.name} outside its stated regime "
                  f"({lemma.regime})", file=out)
    tangent_dict = asdict(tangent)
    tangent_dict["details"].pop("edge_angles", None)
    results = {
        "items": [asdict(i) for i in rep.items],
        "lemma_chord": asdict(chord), "lemma_tangent": tangent_dict,
        "passed": rep.passed and chord.passed,
        "certificate": rep.certificate.to_dict(),
    }
    return results, EXIT_OK if results["passed"] else EXIT_HYPOTHESIS


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _add_generator_flags(p):
    g = p.add_argument_group("generator parameters")
    g.add_argument("--turns", type=int)
    g.add_argument("--radius", type=float)
    g.add_argument("--pitch", type=float, help="pitch angle in radians")
    g.add_argument("--closure-radius", type=float)
    g.add_argument("--a", type=float, help="ellipse semi-axis")
    g.add_argument("--b", type=float, help="ellipse semi-axis")
    g.add_argument("--p", type=int, help="torus knot winding")
    g.add_argument("--q", type=int, help="torus knot winding")
    g.add_argument("--major", type=float)
    g.add_argument("--minor", type=float)


def _add_bound_flags(p):
    g = p.add_argument_group("derivative bounds")
    for k in (1, 2, 3, 4):
        g.add_argument(f"--b{k}", type=float, help=f"bound on |C^({k})|")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="polywrithe",
        description="Writhe of polygons and smooth curves with error "
                    "certificates for inscribed polygons.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a curve or inscribed polygon")
    p.add_argument("generator", help="name, optionally name:key=value,...")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--inscribe", type=int, metavar="N")
    p.add_argument("--max-edge", type=float,
                   help="with --inscribe: make the longest edge exactly this")
    p.add_argument("--samples", type=int, default=1000)
    _add_generator_flags(p)

    p = sub.add_parser("writhe", help="writhe of a polygon file or curve")
    p.add_argument("input", help="polygon file or generator spec")
    p.add_argument("--inscribe", type=int, metavar="N")
    p.add_argument("--max-edge", type=float)
    p.add_argument("--tolerance", type=float)
    p.add_argument("--oracle", action="store_true",
                   help="also integrate the polygon by brute force")
    p.add_argument("--certify", action="store_true")
    _add_generator_flags(p)
    _add_bound_flags(p)

    for name, helptext in (("delta", "polygonal writhe difference"),
                           ("check", "hypothesis report")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("smooth", help="generator spec of the smooth curve")
        p.add_argument("polygon", help="inscribed polygon file")
        p.add_argument("--params", help="file of inscription parameters")
        p.add_argument("--tube-radius", type=float)
        p.add_argument("--tolerance", type=float)
        p.add_argument("--samples-per-span", type=int, default=32)
        _add_generator_flags(p)
        _add_bound_flags(p)

    p = sub.add_parser("convergence", help="refinement study table")
    p.add_argument("generator")
    p.add_argument("--n", type=int, nargs="+",
                   default=[100, 250, 500, 1000])
    p.add_argument("--max-edge", type=float, nargs="+")
    p.add_argument("--tolerance", type=float)
    p.add_argument("--output", help="also write the table as CSV")
    _add_generator_flags(p)
    _add_bound_flags(p)

    for p in sub.choices.values():
        p.add_argument("--json", action="store_true",
                       help="print a JSON report instead of text")
    return parser


COMMANDS = {"generate": cmd_generate, "writhe": cmd_writhe,
            "delta": cmd_delta, "convergence": cmd_convergence,
            "check": cmd_check}


def run(argv=None, out=None):
    """Run the CLI; returns ``(exit status, RunReport or None)``."""
    out = sys.stdout if out is None else out
    parser = build_parser()
    args = parser.parse_args(argv)
    argv = list(sys.argv[1:] if argv is None else argv)
    text = out
    if args.json:
        import io
        text = io.StringIO()
    paths = [a for a in argv if os.path.isfile(a)]
    start = time.perf_counter()
    try:
        results, status = COMMANDS[args.command](args, text)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT, None
    except HypothesisError as exc:
        print(f"hypothesis failure: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS, None
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT, None
    except (ConvergenceError, NumericalIntegrityError,
            ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL, None
    elapsed = time.perf_counter() - start
    digest = _digest(vars(args), sorted(set(paths)))
    report = RunReport(["polywrithe"] + argv, digest, _normalize(results),
                       {"total_seconds": elapsed})
    if args.json:
        print(report.to_json(), file=out)
    return status, report


def main(argv=None):
    status, _ = run(argv)
    return status


if __name__ == "__main__":
    sys.exit(main())
