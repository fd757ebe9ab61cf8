"""Command-line front end: ``levykern <command> ...``.

Exit codes: 0 success, 1 verification failure, 2 usage error, 3 config error.
Options can come from an INI file (``--config``, section ``[levykern]``);
flags given on the command line win.
"""
from __future__ import annotations

import argparse
import configparser
import hashlib
import io
import json
import platform
import sys
from xml.sax.saxutils import escape

import numpy as np

from . import bernstein as bf
from . import bounds, verify
from .errors import ConfigError, DomainError, LevyKernError
from .geometry import parse_domain
from .levy_kernel import ProcessSpec, free_kernel
from .simulate import (PathConfig, estimate_exit_time, estimate_green, estimate_lambda1,
                       estimate_survival)
from .simulate.engine import _process_plan, pick_backend

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_CONFIG = 0, 1, 2, 3
VERIFY_KINDS = ("hk", "survival", "green", "largetime", "hT")
SECTION = "levykern"


# ---------------------------------------------------------------------------
# parsing helpers


def _floats(text, what):
    try:
        return [float(v) for v in str(text).replace(" ", "").split(",") if v]
    except ValueError:
        raise ConfigError(f"{what}: expected comma-separated numbers, got {text!r}") from None


def _points(text, what):
    """'0.5,0;1,0' -> [[0.5, 0], [1, 0]]; plain '0.1,0.2' lists 1-d points."""
    text = str(text).strip()
    if ";" not in text:
        return [[v] for v in _floats(text, what)]
    return [_floats(tok, what) for tok in text.split(";") if tok.strip()]


def _pairs(text):
    """'x/y;x/y' with comma-separated coordinates."""
    out = []
    for tok in str(text).split(";"):
        if not tok.strip():
            continue
        a, sep, b = tok.partition("/")
        if not sep:
            raise ConfigError(f"pairs: expected x/y, got {tok!r}")
        out.append((_floats(a, "pairs"), _floats(b, "pairs")))
    return out


def _process(args, d):
    if not args.process:
        raise ConfigError("--process is required")
    f = bf.parse_family(args.process)
    try:
        return ProcessSpec(d, f, jump_mode=args.jump_mode or "sbm")
    except LevyKernError as exc:
        raise ConfigError(str(exc)) from None


def _domain(args):
    if not args.domain:
        raise ConfigError("--domain is required")
    return parse_domain(args.domain, d=args.dim)


def _path_config(args):
    if args.seed is None:
        raise ConfigError("--seed is required for Monte Carlo runs")
    try:
        return PathConfig(h=float(args.h), horizon=float(args.horizon),
                          n_paths=int(args.paths), base_seed=int(args.seed), eps=float(args.eps))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad path configuration: {exc}") from None


def _fmt(v) -> str:
    return repr(float(v))


# ---------------------------------------------------------------------------
# output


def report_csv(report: verify.RatioReport) -> str:
    """CSV text: t, x coordinates, y coordinates, empirical, stderr, shape, ratio."""
    pts = report.points
    dx = len(pts[0].x) if pts else 1
    dy = len(pts[0].y) if pts else 1
    names = lambda s, k: [s] if k == 1 else [f"{s}{i + 1}" for i in range(k)]
    cols = ["t"] + names("x", dx) + (names("y", dy) if dy else [])
    buf = io.StringIO()
    buf.write(",".join(cols + ["empirical", "stderr", "shape", "ratio"]) + "\n")
    for q in pts:
        row = [q.t, *q.x, *q.y, q.empirical, q.stderr, q.shape, q.ratio]
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue()


def emit_csv(report, path):
    try:
        with open(path, "w", newline="") as fh:
            fh.write(report_csv(report))
    except OSError as exc:
        raise OSError(f"cannot write CSV {path}: {exc.strerror}") from None


def report_svg(report: verify.RatioReport, width=640, height=400) -> str:
    """Log-log scatter of included ratios against t with the min-max band."""
    inc = report.included_points
    m = 50.0
    lines = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
             f'viewBox="0 0 {width} {height}">',
             f'<title>{escape(report.name)}</title>',
             f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>']
    if inc:
        ts = np.log10([q.t for q in inc])
        rs = np.log10([q.ratio for q in inc])
        t0, t1 = float(ts.min()) - 0.1, float(ts.max()) + 0.1
        r0, r1 = float(rs.min()) - 0.2, float(rs.max()) + 0.2
        X = lambda v: m + (v - t0) / (t1 - t0) * (width - 2 * m)
        Y = lambda v: height - m - (v - r0) / (r1 - r0) * (height - 2 * m)
        yb, ya = Y(float(rs.max())), Y(float(rs.min()))
        lines.append(f'<rect x="{m:.3f}" y="{yb:.3f}" width="{width - 2 * m:.3f}" '
                     f'height="{ya - yb:.3f}" fill="#dde8f5"/>')
        for tv, rv in zip(ts, rs):
            lines.append(f'<circle cx="{X(tv):.3f}" cy="{Y(rv):.3f}" r="3" fill="#1f4e8c"/>')
        lines.append(f'<text x="{m:.0f}" y="{height - 15}" font-size="12">log10 t in '
                     f'[{t0:.3f}, {t1:.3f}]</text>')
        lines.append(f'<text x="{m:.0f}" y="20" font-size="12">log10 ratio in [{r0:.3f}, {r1:.3f}]; '
                     f'spread {report.spread:.6g}</text>')
    else:
        lines.append('<text x="50" y="40" font-size="12">no included points</text>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def emit_svg(report, path):
    try:
        with open(path, "w") as fh:
            fh.write(report_svg(report))
    except OSError as exc:
        raise OSError(f"cannot write SVG {path}: {exc.strerror}") from None


def _versions():
    from importlib import metadata

    out = {"python": platform.python_version()}
    for name in ("artifact", "numpy", "scipy", "numba"):
        try:
            out[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            out[name] = None
    return out


# ---------------------------------------------------------------------------
# argument parser

# options shared by every command and readable from the INI file
_OPTIONS = {
    "process": dict(help="family, e.g. stable:alpha=1.0"),
    "jump_mode": dict(help="sbm or perturbed"),
    "domain": dict(help="ball:r=1,d=2 | annulus:rin=1,rout=2 | intervals:(-1,1)|(2,3)"),
    "dim": dict(type=int, help="dimension when the domain string has none"),
    "seed": dict(type=int, help="64-bit base seed (required for Monte Carlo)"),
    "paths": dict(type=int, help="number of paths"),
    "h": dict(type=float, help="time step"),
    "horizon": dict(type=float, help="simulation horizon"),
    "eps": dict(type=float, help="small-jump cutoff"),
    "t_grid": dict(help="comma-separated times"),
    "x_grid": dict(help="points: '0.1,0.5' in d=1 or '0,0;0.5,0'"),
    "pairs": dict(help="Green pairs 'x/y;x/y'"),
    "shape": dict(help="shape name"),
    "cap": dict(type=float, help="spread cap; exceeding it fails the run"),
    "cell_width": dict(type=float, help="histogram cell side"),
    "ball_eps": dict(type=float, help="Green target ball radius"),
    "T": dict(type=float, help="h_T time scale"),
    "rtol": dict(type=float, help="quadrature tolerance"),
    "backend": dict(choices=("auto", "numba", "numpy"), help="kernel backend"),
    "csv": dict(help="CSV output path"),
    "svg": dict(help="SVG output path"),
    "manifest": dict(help="manifest output path"),
}

_DEFAULTS = {"jump_mode": "sbm", "paths": 10000, "h": 1e-3, "horizon": 1.0, "eps": 1e-4,
             "rtol": 1e-10, "backend": "auto"}


def _add_common(sp):
    sp.add_argument("--config", help="INI file with a [levykern] section")
    for name, kw in _OPTIONS.items():
        sp.add_argument("--" + name.replace("_", "-"), dest=name, default=None, **kw)


def build_parser():
    ap = argparse.ArgumentParser(prog="levykern", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("phi", help="evaluate phi, Phi or Phi^-1")
    sp.add_argument("--family", required=True)
    sp.add_argument("--eval", required=True, type=float, dest="value")
    sp.add_argument("--which", choices=("phi", "Phi", "Phi_inv"), default="phi")

    sp = sub.add_parser("kernel", help="free heat kernel p(t, r)")
    _add_common(sp)
    sp.add_argument("--t", type=float, required=True)
    sp.add_argument("--r", type=float, required=True)

    sp = sub.add_parser("shape", help="evaluate an analytic shape at one point")
    _add_common(sp)
    sp.add_argument("--t", type=float)
    sp.add_argument("--x")
    sp.add_argument("--y")
    sp.add_argument("--a", type=float)
    sp.add_argument("--r", type=float)
    sp.add_argument("--lam1", type=float)

    sp = sub.add_parser("simulate", help="Monte Carlo estimate")
    _add_common(sp)
    sp.add_argument("what", choices=("survival", "green", "lambda1", "exit"))
    sp.add_argument("--x", required=True)
    sp.add_argument("--y")
    sp.add_argument("--t", type=float)

    sp = sub.add_parser("verify", help="ratio-spread verification")
    _add_common(sp)
    sp.add_argument("kind", choices=VERIFY_KINDS)

    sp = sub.add_parser("report", help="rerun a verify run from its manifest")
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--csv", help="where to write the regenerated CSV")
    sp.add_argument("--check", action="store_true",
                    help="fail unless the CSV is byte-identical to the recorded one")
    return ap


def _merge_config(args):
    """Fill unset options from the INI file, then from defaults."""
    path = getattr(args, "config", None)
    if path:
        cp = configparser.ConfigParser()
        try:
            with open(path) as fh:
                cp.read_file(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        except configparser.Error as exc:
            raise ConfigError(f"malformed config {path}: {exc}") from None
        if not cp.has_section(SECTION):
            raise ConfigError(f"config {path} has no [{SECTION}] section")
        for key, raw in cp.items(SECTION):
            name = key.replace("-", "_")
            if name not in _OPTIONS:
                raise ConfigError(f"unknown config key {key!r} in {path}")
            if getattr(args, name) is None:
                conv = _OPTIONS[name].get("type", str)
                try:
                    setattr(args, name, conv(raw))
                except ValueError:
                    raise ConfigError(f"config key {key!r}: bad value {raw!r}") from None
    for name, val in _DEFAULTS.items():
        if getattr(args, name, None) is None and hasattr(args, name):
            setattr(args, name, val)
    return args


# ---------------------------------------------------------------------------
# commands


def cmd_phi(args, out):
    f = bf.parse_family(args.family)
    if args.which == "phi":
        v = bf.phi_scalar(f, args.value)
    elif args.which == "Phi":
        v = bf.capital_phi_scalar(f, args.value)
    else:
        v = bf.capital_phi_inv_scalar(f, args.value)
    print(format(v, ".15g"), file=out)
    return EXIT_OK


def cmd_kernel(args, out):
    p = _process(args, args.dim or 1)
    print(format(free_kernel(p, args.t, args.r), ".15g"), file=out)
    return EXIT_OK


def _one_point(D, text, what):
    if text is None:
        raise ConfigError(f"--{what} is required")
    pts = _points(text, what) if D.d > 1 else [[v] for v in _floats(text, what)]
    if len(pts) != 1:
        raise ConfigError(f"--{what} must be a single point")
    return pts[0][0] if D.d == 1 else np.array(pts[0])


def cmd_shape(args, out):
    name = args.shape or "global"
    if name == "hT":
        if args.a is None or args.r is None:
            raise ConfigError("shape hT needs --a and --r")
        f = bf.parse_family(args.process or "")
        res = bounds.h_T_closed(f, args.a, args.r)
        print(f"{res.value!r} {res.regime}", file=out)
        return EXIT_OK
    D = _domain(args)
    p = _process(args, D.d)
    if name == "global":
        if args.t is None or args.r is None:
            raise ConfigError("shape global needs --t and --r")
        res = bounds.global_shape(p, args.t, args.r)
    elif name == "survival":
        v = bounds.survival_shape(p, D, args.t, _one_point(D, args.x, "x"))
        print(repr(v), file=out)
        return EXIT_OK
    elif name == "c11":
        res = bounds.c11_shape(p, D, args.t, _one_point(D, args.x, "x"), _one_point(D, args.y, "y"))
    elif name == "large":
        if args.lam1 is None:
            raise ConfigError("shape large needs --lam1")
        res = bounds.large_time_shape(p, D, args.t, _one_point(D, args.x, "x"),
                                      _one_point(D, args.y, "y"), args.lam1)
    elif name in verify.GREEN_SHAPES:
        v = verify.green_shape_value(p, D, _one_point(D, args.x, "x"),
                                     _one_point(D, args.y, "y"), name, T=args.T)
        print(repr(v), file=out)
        return EXIT_OK
    else:
        raise ConfigError(f"unknown shape {name!r}")
    print(f"{res.value!r} {res.regime}", file=out)
    return EXIT_OK


def _use_numba(args):
    return None if args.backend == "auto" else args.backend == "numba"


def cmd_simulate(args, out):
    D = _domain(args)
    p = _process(args, D.d)
    cfg = _path_config(args)
    x = _one_point(D, args.x, "x")
    if args.what == "survival":
        est = estimate_survival(p, D, x, args.t if args.t is not None else cfg.horizon, cfg)
    elif args.what == "green":
        y = _one_point(D, args.y, "y")
        eps = args.ball_eps or verify.default_ball_eps(D, x, y)
        est = estimate_green(p, D, x, y, eps, cfg)
    elif args.what == "lambda1":
        tg = _floats(args.t_grid, "t-grid") if args.t_grid else [cfg.horizon / 2, cfg.horizon]
        est = estimate_lambda1(p, D, x, tg, cfg)
    else:
        est = estimate_exit_time(p, D, x, cfg)
    print(f"value={est.value!r} stderr={est.stderr!r} n={est.n}", file=out)
    return EXIT_OK


def _verify_report(args):
    """Run the verification described by args; returns (report, resolved options)."""
    kind = args.kind
    if kind == "hT":
        f = bf.parse_family(args.process or "")
        T = args.T if args.T is not None else 1.0
        grid = verify.admissible_grid(f, T, 24, 24)
        return verify.verify_hT(f, T, grid, rtol=args.rtol, cap=args.cap)
    D = _domain(args)
    p = _process(args, D.d)
    cfg = _path_config(args)
    use = _use_numba(args)
    if kind in ("hk", "survival", "largetime"):
        tg = _floats(args.t_grid, "t-grid") if args.t_grid else (
            list(verify.default_t_grid()) if kind != "largetime" else [3.0, 4.0, 5.0, 6.0])
        xs = _points(args.x_grid, "x-grid") if args.x_grid else verify.default_x_grid(D)
        if kind == "hk":
            return verify.verify_heat_kernel(p, D, tg, xs, args.shape or "c11", cfg,
                                             cell_width=args.cell_width, use_numba=use,
                                             cap=args.cap)
        if kind == "survival":
            return verify.verify_survival(p, D, tg, xs, cfg, use_numba=use, cap=args.cap)
        return verify.verify_large_time(p, D, tg, xs, cfg, variant=args.shape or "boundary",
                                        cell_width=args.cell_width, use_numba=use, cap=args.cap)
    if not args.pairs:
        raise ConfigError("verify green needs --pairs")
    pairs = _pairs(args.pairs)
    return verify.verify_green(p, D, pairs, cfg, shape=args.shape or "general",
                               ball_eps=args.ball_eps, use_numba=use, cap=args.cap)


def _resolved(args):
    keys = ["kind"] + list(_OPTIONS)
    return {k: getattr(args, k, None) for k in keys if k not in ("csv", "svg", "manifest")}


def _backend_used(args):
    if args.kind == "hT":
        return None
    if args.backend != "auto":
        return args.backend
    D = _domain(args)
    p = _process(args, D.d)
    mode = _process_plan(p, _path_config(args))[0]
    return "numba" if pick_backend(mode, D.d) else "numpy"


def _write_outputs(report, args, opts):
    text = report_csv(report)
    if args.csv:
        emit_csv(report, args.csv)
    if args.svg:
        emit_svg(report, args.svg)
    if args.manifest:
        man = {"command": "verify", "options": opts, "seed": opts.get("seed"),
               "versions": _versions(), "backend": _backend_used(args),
               "outputs": {"csv": args.csv, "svg": args.svg,
                           "csv_sha256": hashlib.sha256(text.encode()).hexdigest()},
               "summary": {"spread": report.spread, "excluded": report.n_excluded,
                           "passed": report.passed}}
        try:
            with open(args.manifest, "w") as fh:
                json.dump(man, fh, indent=2, sort_keys=True)
                fh.write("\n")
        except OSError as exc:
            raise OSError(f"cannot write manifest {args.manifest}: {exc.strerror}") from None
    return text


def cmd_verify(args, out):
    report = _verify_report(args)
    if args.manifest is None and args.csv:
        # every run with outputs leaves a manifest beside them
        args.manifest = args.csv + ".manifest.json"
    opts = _resolved(args)
    if args.backend == "auto" and args.kind != "hT":
        # pin the backend so the manifest reproduces the run bit for bit
        opts["backend"] = _backend_used(args)
    _write_outputs(report, args, opts)
    print(report.summary(), file=out)
    if report.extra:
        print("  " + " ".join(f"{k}={v!r}" for k, v in sorted(report.extra.items())), file=out)
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_report(args, out):
    try:
        with open(args.manifest) as fh:
            man = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read manifest {args.manifest}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"manifest {args.manifest} is not valid JSON: {exc}") from None
    opts = man.get("options")
    if man.get("command") != "verify" or not isinstance(opts, dict):
        raise ConfigError("manifest does not describe a verify run")
    ns = argparse.Namespace(**{k: None for k in _OPTIONS})
    for k, v in opts.items():
        setattr(ns, k, v)
    ns.csv = args.csv
    ns.svg = None
    ns.manifest = None
    _merge_config(ns)
    report = _verify_report(ns)
    text = report_csv(report)
    if args.csv:
        emit_csv(report, args.csv)
    same = hashlib.sha256(text.encode()).hexdigest() == man.get("outputs", {}).get("csv_sha256")
    print(report.summary(), file=out)
    print("reproduced: " + ("identical CSV" if same else "CSV differs"), file=out)
    if args.check and not same:
        return EXIT_FAIL
    return EXIT_OK if report.passed else EXIT_FAIL


COMMANDS = {"phi": cmd_phi, "kernel": cmd_kernel, "shape": cmd_shape, "simulate": cmd_simulate,
            "verify": cmd_verify, "report": cmd_report}


def run(argv=None, out=None) -> int:
    """Parse argv, run the command and return its exit code."""
    out = out or sys.stdout
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        if args.command not in ("phi", "report"):
            _merge_config(args)
        return COMMANDS[args.command](args, out)
    except (ConfigError, DomainError) as exc:
        print(f"levykern: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"levykern: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except LevyKernError as exc:
        print(f"levykern: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
