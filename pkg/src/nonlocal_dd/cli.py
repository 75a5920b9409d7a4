"""Command-line driver. Every subcommand writes CSV (header row first) to stdout or --out.

Exit codes: 0 success, 2 usage or parameter error, 1 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import sys
from dataclasses import fields
from fractions import Fraction

import numpy as np
import scipy.sparse as sp

from . import __version__
from .analysis import STANDARD_FUNCTIONS, fit_power_law, local_limit_check
from .assembly import QuadratureSpec, export_matrix
from .errors import NumericalError, ParameterError
from .experiments import (ExperimentConfig, build_problem, default_workers, run_sweep,
                          with_overrides)
from .strips import SHAPES, strip_quantification

COMMANDS = ("assemble", "spectrum", "sweep-h", "sweep-delta", "schur", "equivalence",
            "local-limit", "poincare-fit", "strips", "version")


def _real(text):
    try:
        return float(Fraction(text.strip()))
    except (ValueError, ZeroDivisionError):
        raise ValueError(f"not a number: {text!r}") from None


def _list(conv):
    def parse(text):
        items = [t for t in str(text).replace(";", ",").split(",") if t.strip()]
        if not items:
            raise ValueError("empty list")
        return tuple(conv(t) for t in items)
    return parse


def _int(text):
    return int(str(text).strip())



CONVERTERS = {
    "dim": _int, "n": _list(_int), "delta": _list(_real), "bc": str.strip, "kernel": str.strip,
    "quadrature": str.strip, "norm": str.strip, "layout": str.strip, "target": str.strip,
    "out": str.strip, "export_matrix": str.strip, "seed": _int, "workers": _int, "trials": _int,
    "function": str.strip, "boundary": str.strip, "shape": _list(str.strip), "m": _list(_int),
    "resolution": _int, "method": str.strip, "from_csv": str.strip,
}

# flag -> help text; the converter comes from CONVERTERS
_COMMON = {
    "dim": "spatial dimension (1, 2 or 3)",
    "n": "intervals per side, comma-separated list allowed",
    "delta": "horizon(s), comma-separated; fractions such as 1/3 allowed",
    "bc": "neumann or dirichlet",
    "kernel": "canonical or scaled1d",
    "quadrature": "midpoint, subdiv:<q> or exact",
    "norm": "euclidean or max (neighbourhood shape)",
    "layout": "vertex (unknowns at mesh vertices) or cell (unknowns per element)",
    "target": "stiffness or schur",
    "out": "write CSV here instead of stdout",
    "export-matrix": "write the assembled matrix (Matrix Market)",
    "seed": "random seed",
    "workers": "worker processes (default: NONLOCAL_WORKERS or CPU count)",
    "trials": "random right-hand sides per configuration",
}


def _add_common(p, skip=()):
    for flag, help_text in _COMMON.items():
        if flag not in skip:
            dest = flag.replace("-", "_")
            p.add_argument(f"--{flag}", dest=dest, type=CONVERTERS[dest], default=None, help=help_text)
    p.add_argument("--config", default=None, help="file of key = value lines (# comments)")


def build_parser():
    parser = argparse.ArgumentParser(prog="nonlocal-dd", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    for name, help_text in [
        ("assemble", "assemble K and report its structure"),
        ("spectrum", "extreme eigenvalues of K (or S with --target schur)"),
        ("sweep-h", "fixed delta, several n"),
        ("sweep-delta", "fixed n, several delta"),
        ("schur", "condition of the interface Schur complement"),
        ("equivalence", "substructured versus monolithic solves and residuals"),
        ("poincare-fit", "power-law exponents of the eigenvalues in delta"),
    ]:
        p = sub.add_parser(name, help=help_text)
        _add_common(p)
        if name == "poincare-fit":
            p.add_argument("--from-csv", dest="from_csv", type=CONVERTERS["from_csv"], default=None,
                           help="fit an existing sweep CSV instead of running one")

    p = sub.add_parser("local-limit", help="3 delta^-3 a(u,u) against |u|_H1^2 in 1D")
    _add_common(p, skip=("dim", "bc", "kernel", "quadrature", "norm", "layout", "target",
                         "export-matrix", "workers", "trials", "seed"))
    p.add_argument("--function", type=CONVERTERS["function"], default=None,
                   help=f"one of {', '.join(STANDARD_FUNCTIONS)}")
    p.add_argument("--boundary", type=CONVERTERS["boundary"], default=None,
                   help="extend (u defined beyond the interval) or restrict")

    p = sub.add_parser("strips", help="boundary strips against annulus bounds")
    _add_common(p, skip=("dim", "n", "bc", "kernel", "quadrature", "norm", "layout", "target",
                         "export-matrix", "workers", "trials", "seed"))
    p.add_argument("--shape", type=CONVERTERS["shape"], default=None, help=f"{', '.join(SHAPES)}")
    p.add_argument("--m", type=CONVERTERS["m"], default=None, help="strip exponent(s): width delta^m/2")
    p.add_argument("--resolution", type=CONVERTERS["resolution"], default=None)
    p.add_argument("--method", type=CONVERTERS["method"], default=None, help="distance or marking")

    sub.add_parser("version", help="print the version")
    return parser


def read_config(path, allowed):
    """Parse ``key = value`` lines; unknown keys are rejected."""
    values = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ParameterError("config", f"cannot read {path}: {exc.strerror}") from None
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if not sep:
            raise ParameterError("config", f"{path}:{lineno}: expected key = value")
        if key not in allowed:
            raise ParameterError("config", f"{path}:{lineno}: unknown key {key!r}")
        try:
            values[key] = CONVERTERS[key](value.strip())
        except ValueError as exc:
            raise ParameterError(key, f"{path}:{lineno}: {exc}") from None
    return values


def _merged(args):
    """Command-line values override config-file values, which override defaults."""
    given = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    if args.config:
        for key, value in read_config(args.config, set(given)).items():
            if given.get(key) is None:
                given[key] = value
    return given


def _experiment_config(opts, **defaults):
    names = {f.name for f in fields(ExperimentConfig)}
    cfg = ExperimentConfig(**defaults)
    cfg = with_overrides(cfg, **{k: v for k, v in opts.items() if k in names})
    if opts.get("workers") is None:
        cfg = with_overrides(cfg, workers=default_workers())
    return cfg.validate()


def _fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.5e}"
    return str(value)


def render_csv(rows, header=None):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = header or list(rows[0].keys())
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(row[k]) for k in header])
    return buf.getvalue()


def _emit(text, out):
    if out:
        try:
            with open(out, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            raise OSError(exc.errno, f"cannot write {out}: {exc.strerror}") from None
    else:
        sys.stdout.write(text)


def _single(cfg, field_name):
    values = getattr(cfg, field_name)
    if len(values) != 1:
        raise ParameterError(field_name, f"this command takes a single value, got {len(values)}")
    return values[0]


def cmd_assemble(opts):
    cfg = _experiment_config(opts)
    rows = []
    for n, delta in cfg.points():
        grid, K = build_problem(cfg, n, delta)
        lower = sp.tril(K).tocoo()
        scale = abs(K).max()
        rows.append(dict(dim=cfg.dim, n=n, h=1.0 / n, delta=delta, bc=cfg.bc, kernel=cfg.kernel,
                         quadrature=QuadratureSpec.parse(cfg.quadrature).label, norm=cfg.norm,
                         layout=cfg.layout, order=K.shape[0], stored_entries=lower.nnz,
                         diag_max=float(K.diagonal().max()),
                         row_sum_max=float(np.max(np.abs(K @ np.ones(K.shape[0])))) / scale,
                         asymmetry=float(abs(K - K.T).max()) / scale))
        if cfg.export_matrix:
            if len(cfg.points()) != 1:
                raise ParameterError("export-matrix", "needs a single (n, delta) configuration")
            export_matrix(K, cfg.export_matrix)
    return render_csv(rows)


def cmd_sweep(opts, kind=None, fixed=None):
    cfg = _experiment_config(opts)
    if fixed:
        _single(cfg, fixed)
    return render_csv(run_sweep(cfg, kind))


def cmd_poincare_fit(opts):
    cfg = _experiment_config(opts)
    if opts.get("from_csv"):
        try:
            with open(opts["from_csv"], encoding="utf-8") as fh:
                records = list(csv.DictReader(fh))
        except OSError as exc:
            raise ParameterError("from-csv", f"cannot read {opts['from_csv']}: {exc.strerror}") from None
        if not records:
            raise ParameterError("from-csv", "no data rows")
        echo = {k: records[0].get(k, "") for k in ("dim", "n", "bc", "kernel", "quadrature", "norm", "layout")}
        echo["target"] = "schur" if "n_gamma" in records[0] else "stiffness"
        data = {k: [float(r[k]) for r in records] for k in ("delta", "lambda_min", "lambda_max", "kappa")}
    else:
        _single(cfg, "n")
        rows = run_sweep(cfg)
        echo = dict(dim=cfg.dim, n=cfg.n[0], bc=cfg.bc, kernel=cfg.kernel, quadrature=cfg.quadrature,
                    norm=cfg.norm, layout=cfg.layout, target=cfg.target)
        data = {k: [r[k] for r in rows] for k in ("delta", "lambda_min", "lambda_max", "kappa")}
    out = []
    for quantity in ("lambda_min", "lambda_max", "kappa"):
        fit = fit_power_law(data["delta"], data[quantity])
        out.append(dict(echo, quantity=quantity, exponent=fit.exponent,
                        log_prefactor=fit.log_prefactor, r_squared=fit.r_squared, count=fit.count))
    return render_csv(out)


def cmd_local_limit(opts):
    name = opts.get("function") or "sin"
    if name not in STANDARD_FUNCTIONS:
        raise ParameterError("function", f"expected one of {', '.join(STANDARD_FUNCTIONS)}, got {name!r}")
    deltas = opts.get("delta") or (0.1, 0.05, 0.025)
    ns = opts.get("n")
    if ns is not None and len(ns) != 1:
        raise ParameterError("n", "local-limit takes a single n")
    n = ns[0] if ns else int(np.ceil(20 / min(deltas)))
    boundary = opts.get("boundary") or "extend"
    report = local_limit_check(STANDARD_FUNCTIONS[name], deltas, n, boundary)
    order = report.fit.exponent if report.fit else float("nan")
    rows = [dict(function=name, n=n, boundary=boundary, delta=r.delta, scaled_energy=r.scaled_energy,
                 local_energy=r.local_energy, error=r.error, fitted_order=order) for r in report.rows]
    return render_csv(rows)


def cmd_strips(opts):
    shapes = opts.get("shape") or tuple(SHAPES)
    deltas = opts.get("delta") or (0.1, 0.05)
    ms = opts.get("m") or (1, 2, 3)
    method = opts.get("method") or "distance"
    rows = []
    for shape in shapes:
        for delta in deltas:
            for m in ms:
                res = opts.get("resolution")
                if res is None:
                    need = int(np.ceil(4.0 / delta ** m))
                    res = max(2000, need + need % 2)
                rep = strip_quantification(shape, delta, m, res, method)
                for s in rep.strips:
                    rows.append(dict(shape=shape, delta=delta, m=m, resolution=res, width=rep.width,
                                     method=method, j=s.j, measured=s.measured,
                                     uncertainty=s.uncertainty, inner=s.inner, outer=s.outer,
                                     full=int(s.full), within_bounds=int(s.within_bounds)))
    return render_csv(rows)


HANDLERS = {
    "assemble": cmd_assemble,
    "spectrum": lambda o: cmd_sweep(o),
    "sweep-h": lambda o: cmd_sweep(o, fixed="delta"),
    "sweep-delta": lambda o: cmd_sweep(o, fixed="n"),
    "schur": lambda o: cmd_sweep(o, kind="schur"),
    "equivalence": lambda o: cmd_sweep(o, kind="equivalence"),
    "poincare-fit": cmd_poincare_fit,
    "local-limit": cmd_local_limit,
    "strips": cmd_strips,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command == "version":
        print(f"nonlocal-dd {__version__}")
        return 0
    try:
        opts = _merged(args)
        text = HANDLERS[args.command](opts)
        _emit(text, opts.get("out"))
    except ParameterError as exc:
        print(f"nonlocal-dd {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, OSError) as exc:
        print(f"nonlocal-dd {args.command}: failed: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
