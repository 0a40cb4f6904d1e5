"""Command-line entry point: ``qultra {eval,spectrum,certify,table,measure}``.

Exit codes: 0 all hard checks pass, 1 a computational check failed, 2 invalid input.
"""

import argparse
import csv
from datetime import datetime, timezone
import io
import json
import math
import os
import sys

from .errors import MethodDisagreementError, ParameterError, QUltraError, SpectrumViolationError
from .params import FamilyParams, RepParams
from .repops import build_operator, jacobi_offdiag
from .spectral import match_spectrum, spectral_measure, spectrum_tolerance
from .ultraspherical import ctilde, ctilde_series, dual_dtilde, mu
from .verify import big_h, certify, log_dual_weight, nearest_rational, primal_weights

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class UsageError(Exception):
    pass


def _num(x):
    return format(x, ".17g")


def _clean(obj):
    """Make a report JSON-safe: non-finite floats become strings, tuples lists."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else str(obj)
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def _emit(text, out):
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json(obj, args):
    if getattr(args, "timestamp", False):
        obj = dict(obj)
        obj["timestamp"] = datetime.now(timezone.utc).isoformat()
    return json.dumps(_clean(obj), indent=2) + "\n"


def _csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_num(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def _rep(args):
    if args.a is None:
        raise UsageError("--a is required")
    return RepParams(args.q, args.a)


def _positive(name, value, minimum=1):
    if value < minimum:
        raise UsageError(f"--{name} must be at least {minimum}")


# ---------------------------------------------------------------- subcommands


def cmd_eval(args):
    if args.c is None and args.a is None:
        raise UsageError("one of --c or --a is required")
    c = args.c if args.c is not None else args.a * args.a
    fam = FamilyParams(args.q, c)
    if args.n < 0:
        raise UsageError("--n must be non-negative")
    if args.dual:
        x = int(args.x)
        if x != args.x or x < 0:
            raise UsageError("--dual needs a non-negative integer --x")
        _emit(_num(dual_dtilde(args.n, x, fam)) + "\n", args.out)
        return EXIT_OK
    if args.method == "both":
        rec = ctilde(args.n, fam, args.x, "recurrence")
        ser = ctilde_series(args.n, fam, args.x)[0]
        try:
            ctilde(args.n, fam, args.x, "both")
            status = EXIT_OK
        except MethodDisagreementError:
            status = EXIT_FAIL
        _emit(f"recurrence {_num(rec)}\nseries {_num(ser)}\ndifference {_num(abs(rec - ser))}\n", args.out)
        return status
    _emit(_num(ctilde(args.n, fam, args.x, args.method)) + "\n", args.out)
    return EXIT_OK


def cmd_spectrum(args):
    rep = _rep(args)
    _positive("size", args.size, 2)
    _positive("top", args.top)
    tol = args.tol if args.tol is not None else spectrum_tolerance(rep.q)
    T = build_operator(args.size, rep)
    measure = spectral_measure(T)
    report = match_spectrum(measure.nodes, rep, args.top, tol=1e-9, norm=T.norm_inf())
    matched = [{"analytic": a, "computed": c, "rel_err": e} for a, c, e in report.matched]
    if args.format == "csv":
        text = _csv(["analytic", "computed", "rel_err"], [(m["analytic"], m["computed"], m["rel_err"]) for m in matched])
    elif args.format == "text":
        lines = [f"{m['analytic']:+.12g}  {m['computed']:+.17g}  {m['rel_err']:.3e}" for m in matched]
        lines.append(f"max_rel_err {report.max_rel_err:.3e} (tolerance {tol:g})")
        text = "\n".join(lines) + "\n"
    else:
        text = _json(
            {"params": {"q": rep.q, "a": rep.a}, "size": args.size, "matched": matched, "max_rel_err": report.max_rel_err},
            args,
        )
    _emit(text, args.out)
    return EXIT_OK if report.max_rel_err <= tol else EXIT_FAIL


def _summary(report):
    lines = [f"certification q={report.params['q']} a={report.params['a']}: {report.verdict.upper()}"]
    for name, chk in report.checks.items():
        kind = "hard" if chk.hard else "ledger"
        lines.append(f"  {name:30s} {chk.verdict:8s} {chk.residual:.3e} (tol {chk.tolerance:g}, {kind})")
    lines.append("ledger (computed / claimed):")
    for e in report.ledger:
        rat = "-" if e.nearest_rational is None else _num(e.nearest_rational)
        lines.append(f"  {e.name:40s} offset {e.offset:.12g}  nearest {rat}  {'stable' if e.stable else 'unstable'}")
    return "\n".join(lines) + "\n"


def cmd_certify(args):
    rep = _rep(args)
    for name in ("degree", "nodes", "size"):
        _positive(name, getattr(args, name), 2 if name == "size" else 1)
    report = certify(
        rep,
        (args.degree, args.nodes, args.size),
        weight_perturbation=args.inject_weight_bug or 0.0,
        threads=args.threads,
    )
    if args.format == "text":
        text = _summary(report)
    else:
        text = _json(report.to_dict(), args)
    _emit(text, args.out)
    if args.out and args.format != "text":
        sys.stderr.write(_summary(report))
    return EXIT_OK if report.verdict == "pass" else EXIT_FAIL


def cmd_table(args):
    rep = _rep(args)
    _positive("rows", args.rows)
    q, a = rep.q, rep.a
    if args.kind == "primal-weights":
        w = primal_weights(args.rows, rep)
        header = ["n", "node_plus", "node_minus", "weight"]
        rows = [(n, a * q ** (n + 1), -a * q ** (n + 1), w[n]) for n in range(args.rows)]
    elif args.kind == "jacobi":
        header = ["n", "offdiag"]
        rows = [(n, jacobi_offdiag(n, rep)) for n in range(args.rows)]
    elif args.kind == "dual-weights":
        header = ["m", "mu", "weight"]
        rows = [(m, mu(m, -a * a, q), math.exp(log_dual_weight(m, rep))) for m in range(args.rows)]
    elif args.kind == "polynomial-values":
        x = args.x if args.x is not None else a * q
        header = ["n", "x", "value"]
        rows = [(n, x, ctilde(n, rep.family, x)) for n in range(args.rows)]
    else:
        raise UsageError(f"unknown table kind {args.kind!r}")
    _emit(_csv(header, rows), args.out)
    return EXIT_OK


def cmd_measure(args):
    rep = _rep(args)
    _positive("size", args.size, 2)
    T = build_operator(args.size, rep)
    m = spectral_measure(T)
    q, a = rep.q, rep.a
    w = primal_weights(args.pairs + 1, rep)
    H = big_h(rep)
    ratios, offsets = [], []
    for k in range(args.pairs):
        for s in (1, -1):
            m0 = m.mass_at(s * a * q ** (k + 1))
            m1 = m.mass_at(s * a * q ** (k + 2))
            mr, wr = m0 / m1, w[k] / w[k + 1]
            ratios.append({"k": k, "sign": s, "mass_ratio": mr, "weight_ratio": wr, "rel_err": abs(mr / wr - 1.0)})
            # printed normalization puts mass w_k / H on each node
            off = m0 / (w[k] / H)
            offsets.append({"k": k, "sign": s, "offset": off, "nearest_rational": nearest_rational(off)})
    mass_sum = math.fsum(m.masses)
    body = {
        "params": {"q": q, "a": a},
        "size": args.size,
        "nodes": list(m.nodes),
        "masses": list(m.masses),
        "mass_sum": mass_sum,
        "ratios": ratios,
        "offsets": offsets,
        "flagged": list(m.flagged),
    }
    _emit(_json(body, args), args.out)
    ok = abs(mass_sum - 1.0) <= 1e-12 and all(r["rel_err"] <= 1e-6 for r in ratios)
    return EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------- parser


def _env_threads():
    try:
        return int(os.environ.get("QORTHO_THREADS", "1"))
    except ValueError:
        return 1


def build_parser():
    p = argparse.ArgumentParser(prog="qultra", description="Discrete q-ultraspherical polynomials: evaluation and certification.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--q", type=float, required=True)
        sp.add_argument("--a", type=float)
        sp.add_argument("--out", default=None)
        sp.add_argument("--timestamp", action="store_true", help="add a UTC timestamp to JSON output")
        sp.add_argument("--threads", type=int, default=_env_threads())

    sp = sub.add_parser("eval", help="evaluate C~_n(x) or the dual D~_n")
    common(sp)
    sp.add_argument("--c", type=float)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--x", type=float, required=True)
    sp.add_argument("--method", choices=("series", "recurrence", "both"), default="recurrence")
    sp.add_argument("--dual", action="store_true")
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("spectrum", help="eigenvalues of the truncated Jacobi matrix")
    common(sp)
    sp.add_argument("--size", type=int, default=80)
    sp.add_argument("--top", type=int, default=10)
    sp.add_argument("--tol", type=float, default=None)
    sp.add_argument("--format", choices=("json", "csv", "text"), default="json")
    sp.set_defaults(func=cmd_spectrum)

    sp = sub.add_parser("certify", help="run every identity check and write the report")
    common(sp)
    sp.add_argument("--degree", type=int, default=20)
    sp.add_argument("--nodes", type=int, default=40)
    sp.add_argument("--size", type=int, default=80)
    sp.add_argument("--format", choices=("json", "text"), default="json")
    sp.add_argument("--inject-weight-bug", type=float, nargs="?", const=1e-6, default=None, help=argparse.SUPPRESS)
    sp.set_defaults(func=cmd_certify)

    sp = sub.add_parser("table", help="CSV tables of weights, couplings and values")
    common(sp)
    sp.add_argument("--rows", type=int, required=True)
    sp.add_argument("--kind", required=True)
    sp.add_argument("--x", type=float, default=None, help="evaluation point for polynomial-values (default a q)")
    sp.set_defaults(func=cmd_table)

    sp = sub.add_parser("measure", help="spectral measure against the discrete weights")
    common(sp)
    sp.add_argument("--size", type=int, default=80)
    sp.add_argument("--pairs", type=int, default=4)
    sp.set_defaults(func=cmd_measure)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (UsageError, ParameterError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT
    except (SpectrumViolationError, MethodDisagreementError, QUltraError, ArithmeticError) as exc:
        sys.stderr.write(f"check failed: {exc}\n")
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
