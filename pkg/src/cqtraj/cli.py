"""Command-line front end.

Every output starts with a ``#``-prefixed JSON manifest line that fully
describes the run.  CSV numbers use ``repr`` (shortest round-trip form) and
no timestamps are written, so an identical command yields identical bytes.

Exit codes: 0 success, 1 usage error, 2 numerical failure, 3 a check failed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from importlib.metadata import PackageNotFoundError, version

import numpy as np
from scipy.optimize import brentq

from . import analysis, checks
from .eigenstate import OscillatorModel, field_structure, in_pole_guard, log_level, stream_invariant, velocity
from .errors import CqtrajError
from .probability import born_density, born_density_by_integral, density_function
from .report import Report
from .trajectory import IntegratorConfig, integrate, start_on_level

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_VERIFY = 0, 1, 2, 3


def _tool_version() -> str:
    try:
        return version("artifact")
    except PackageNotFoundError:
        return "unknown"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# argument parsing helpers


def _parse_axis(text: str) -> tuple[float, float, int]:
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"axis spec {text!r} must be lo:hi:count")
    lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
    if count < 1 or not (math.isfinite(lo) and math.isfinite(hi)) or (count > 1 and hi <= lo):
        raise argparse.ArgumentTypeError(f"bad axis spec {text!r}")
    return lo, hi, count


def _parse_grid(text: str):
    axes = text.split(",")
    if len(axes) not in (1, 2):
        raise argparse.ArgumentTypeError("grid must be 'lo:hi:n' or 'lo:hi:n,lo:hi:n'")
    return [_parse_axis(a) for a in axes]


def _parse_point(text: str) -> complex:
    try:
        xr, xi = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"start {text!r} must be 'xr,xi'") from None
    return complex(xr, xi)


def _parse_levels(text: str):
    if text.strip() == "separatrix":
        return "separatrix"
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"levels {text!r} must be a comma list or 'separatrix'") from None
    if any(v <= 0 for v in vals):
        raise argparse.ArgumentTypeError("levels must be positive")
    return vals


def _axis_points(axis):
    lo, hi, count = axis
    return np.linspace(lo, hi, count)


# ---------------------------------------------------------------------------
# output


def _manifest(args, **extra) -> dict:
    m = {
        "subcommand": args.command,
        "n": args.n,
        "tool_version": _tool_version(),
        "seed": args.seed,
        "tol": args.tol,
        "out": args.out,
    }
    for key in ("grid", "levels", "start", "method", "si", "mass", "omega", "quick"):
        if hasattr(args, key):
            val = getattr(args, key)
            if key == "start" and val:
                val = [[z.real, z.imag] for z in val]
            m[key] = val
    m.update(extra)
    return m


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _write(args, text: str):
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)


def _csv_text(manifest: dict, header: list[str], rows) -> str:
    buf = io.StringIO()
    buf.write("# " + json.dumps(manifest, sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _json_text(manifest: dict, payload: dict) -> str:
    return "# " + json.dumps(manifest, sort_keys=True) + "\n" + json.dumps(payload, sort_keys=True, indent=2) + "\n"


def read_output(path: str) -> tuple[dict, str]:
    """Split a written file into its manifest and body."""
    with open(path) as fh:
        first = fh.readline()
        body = fh.read()
    if not first.startswith("# "):
        raise ValueError(f"{path} has no manifest header")
    return json.loads(first[2:]), body


# ---------------------------------------------------------------------------
# subcommands


def _config(args) -> IntegratorConfig:
    return IntegratorConfig(rel_tol=args.tol) if args.tol is not None else IntegratorConfig()


def _separatrix_starts(model, eps=1e-3):
    """Points eps off each top-level pole on outgoing separatrix branches."""
    fs = field_structure(model)
    phis = np.linspace(0.0, 2 * math.pi, 1441)[:-1] + 1e-7
    starts = []
    for p, lp in zip(fs.poles, fs.pole_log_levels):
        if abs(lp - fs.separatrix_log_level) > 1e-9 * max(1.0, abs(lp)):
            continue
        ring = np.asarray(log_level(model, p + eps * np.exp(1j * phis))) - fs.separatrix_log_level
        sign = np.sign(ring)
        for k in range(len(phis)):
            if sign[k] != sign[(k + 1) % len(phis)]:
                a, b = phis[k], phis[(k + 1) % len(phis)] + (2 * math.pi if k == len(phis) - 1 else 0.0)
                g = lambda t: float(log_level(model, p + eps * np.exp(1j * t))) - fs.separatrix_log_level
                phi = brentq(g, a, b)
                z = complex(p + eps * np.exp(1j * phi))
                v = velocity(model, z)
                if ((z - p) * v.conjugate()).real > 0:
                    starts.append(z)
    return starts


def cmd_trace(args) -> int:
    model = OscillatorModel(n=args.n)
    config = _config(args)
    jobs = []  # (label, start, kwargs)
    if args.levels == "separatrix":
        if model.n == 0:
            raise CqtrajError("n=0 has no separatrix")
        for z in _separatrix_starts(model):
            jobs.append(("separatrix", z, {"stop_radius": 5e-4}))
    elif args.levels:
        for lv in args.levels:
            jobs.append((f"level={lv!r}", complex(start_on_level(model, lv), 0.0), {}))
    for z in args.start or []:
        jobs.append(("start", z, {}))
    if not jobs:
        raise argparse.ArgumentTypeError("trace needs --levels or --start")
    rows = []
    blocks = []
    for b, (label, z, kw) in enumerate(jobs):
        try:
            traj = integrate(model, z, config, **kw)
        except CqtrajError as exc:
            raise CqtrajError(f"trajectory from start {z.real!r},{z.imag!r} failed: {exc}") from exc
        inv = np.asarray(stream_invariant(model, traj.points))
        blocks.append({"block": b, "label": label, "start": [z.real, z.imag], "closed": traj.closed,
                       "period": traj.period, "stop_reason": traj.stop_reason})
        for t, X, lv in zip(traj.times, traj.points, inv):
            rows.append((b, t, X.real, X.imag, lv))
    text = _csv_text(_manifest(args, blocks=blocks), ["block", "t", "X_r", "X_i", "invariant_level"], rows)
    _write(args, text)
    return EXIT_OK


def _density_worker(payload):
    n, method, rel_tol, points = payload
    model = OscillatorModel(n=n)
    fn = density_function(model, method, IntegratorConfig(rel_tol=rel_tol) if rel_tol else None)
    out = []
    for X in points:
        if model.n and in_pole_guard(model.n, X):
            out.append(None)
            continue
        try:
            out.append(float(fn(X)))
        except CqtrajError:
            out.append(None)
    return out


def cmd_density(args) -> int:
    model = OscillatorModel(n=args.n)
    if args.method == "combined" and model.n == 0:
        raise CqtrajError("combined density is undefined for n=0")
    grid = args.grid or [(-2.0, 2.0, 81), (-1.0, 1.0, 41)]
    if len(grid) != 2:
        raise argparse.ArgumentTypeError("density needs a two-axis grid")
    xr, xi = _axis_points(grid[0]), _axis_points(grid[1])
    points = [complex(a, b) for a in xr for b in xi]
    chunks = [points[k : k + 256] for k in range(0, len(points), 256)]
    payloads = [(args.n, args.method, args.tol, c) for c in chunks]
    if args.jobs > 1 and args.method in ("conserved", "combined"):
        with ProcessPoolExecutor(args.jobs) as pool:
            parts = list(pool.map(_density_worker, payloads))
    else:
        parts = [_density_worker(p) for p in payloads]
    values = [v for part in parts for v in part]
    u_sep = field_structure(model).separatrix_log_level if model.n else math.inf
    rows = []
    for X, v in zip(points, values):
        region = "inside" if model.n and float(log_level(model, X)) <= u_sep else "outside"
        masked = v is None
        rows.append((X.real, X.imag, "nan" if masked else v, args.method, region, int(masked)))
    header = ["X_r", "X_i", "value", "method", "region", "masked"]
    _write(args, _csv_text(_manifest(args, grid=[list(g) for g in grid]), header, rows))
    return EXIT_OK


def cmd_born(args) -> int:
    model = OscillatorModel(n=args.n)
    grid = args.grid or [(-4.0, 4.0, 161)]
    rows = []
    for x in _axis_points(grid[0]):
        closed = float(born_density(model, x))
        if model.n and in_pole_guard(model.n, complex(x)):
            rows.append((x, "nan", closed, "nan"))
            continue
        p_int = born_density_by_integral(model, x)
        rows.append((x, p_int, closed, abs(p_int / closed - 1.0) if closed > 0 else abs(p_int - closed)))
    header = ["x_r", "P_integral", "P_closed_form", "rel_error"]
    _write(args, _csv_text(_manifest(args, grid=[list(g) for g in grid]), header, rows))
    return EXIT_OK


def _report_out(args, report: Report) -> int:
    _write(args, _json_text(_manifest(args), report.to_dict()))
    return EXIT_OK


def cmd_fraction(args) -> int:
    model = OscillatorModel(n=args.n)
    return _report_out(args, analysis.fraction_inside(model, _config(args)))


def cmd_width(args) -> int:
    rep = analysis.xi_max(OscillatorModel(n=args.n), _config(args))
    if args.si:
        m = analysis.si_model(args.n, args.mass, args.omega)
        rep.details["si_width_m"] = rep.computed_value / m.alpha
    return _report_out(args, rep)


def cmd_classical(args) -> int:
    xi = analysis.xi_max(OscillatorModel(n=args.n)).computed_value
    if args.si:
        rep = analysis.classical_width(analysis.si_model(args.n, args.mass, args.omega), xi)
    else:
        m = OscillatorModel(n=args.n, mass=args.mass, angular_frequency=args.omega)
        rep = Report(
            claim=f"separatrix width in oscillator units, n={args.n}",
            paper_value=None,
            computed_value=xi / m.alpha,
            tolerance=None,
            details={"xi_max_dimensionless": xi, "alpha": m.alpha},
        )
    return _report_out(args, rep)


def cmd_verify(args) -> int:
    reports = reports_mem = checks.run_all(quick=args.quick, seed=args.seed, n=args.n_given)
    payload = {name: r.to_dict() for name, r in reports.items()}
    _write(args, _json_text(_manifest(args), payload))
    if args.out not in (None, "-"):
        # re-judge from the file, not from memory
        _, body = read_output(args.out)
        reports = {k: Report.from_dict(v) for k, v in json.loads(body).items()}
    ok = True
    for name, r in reports.items():
        runtime = getattr(reports_mem.get(name), "runtime_s", float("nan"))
        print(f"{'PASS' if r.passed else 'FAIL'}  {name}: {r.claim} ({runtime:.1f} s)", file=sys.stderr)
        ok &= bool(r.passed)
    return EXIT_OK if ok else EXIT_VERIFY


COMMANDS = {
    "trace": cmd_trace,
    "density": cmd_density,
    "born": cmd_born,
    "fraction": cmd_fraction,
    "width": cmd_width,
    "classical": cmd_classical,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--n", type=int, default=None, help="quantum number (default 1)")
    common.add_argument("--tol", type=float, default=None, help="integrator relative tolerance")
    common.add_argument("--out", default="-", help="output path, '-' for stdout")
    common.add_argument("--seed", type=int, default=None, help="seed for random test points")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for density grids")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="cqtraj", description="Complex quantum trajectories of oscillator eigenstates.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("trace", parents=[common], help="trace orbits to CSV")
    p.add_argument("--levels", type=_parse_levels, help="comma list of invariant levels, or 'separatrix'")
    p.add_argument("--start", type=_parse_point, action="append", help="start point 'xr,xi' (repeatable)")

    p = sub.add_parser("density", parents=[common], help="density grid to CSV")
    p.add_argument("--method", choices=["conserved", "wyatt", "combined", "source"], default="wyatt")
    p.add_argument("--grid", type=_parse_grid, help="'xr0:xr1:n,xi0:xi1:m'")

    p = sub.add_parser("born", parents=[common], help="real-axis Born density check to CSV")
    p.add_argument("--grid", type=_parse_grid, help="'x0:x1:n'")

    sub.add_parser("fraction", parents=[common], help="probability fraction inside the separatrix")

    for name, helptext in (("width", "max |X_i| on the separatrix"), ("classical", "separatrix width in physical units")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("--si", action="store_true", help="SI units (metres)")
        p.add_argument("--mass", type=float, default=1.0)
        p.add_argument("--omega", type=float, default=1.0)

    p = sub.add_parser("verify", parents=[common], help="run the check suite")
    p.add_argument("--quick", action="store_true")
    return parser


VALUE_FLAGS = ("--grid", "--start", "--levels")


def _join_negative_values(argv):
    """Glue values such as ``-2:2:10`` to their flag so argparse keeps them."""
    out = []
    k = 0
    while k < len(argv):
        tok = argv[k]
        if tok in VALUE_FLAGS and k + 1 < len(argv) and re.match(r"^-[\d.]", argv[k + 1]):
            out.append(f"{tok}={argv[k + 1]}")
            k += 2
            continue
        out.append(tok)
        k += 1
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = parser.parse_args(_join_negative_values(argv))
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(name)s: %(message)s")
    args.n_given = args.n
    if args.n is None:
        args.n = 1
    if args.n < 0 or args.n > 10:
        parser.error("--n must be between 0 and 10")
    if args.tol is not None and not 0 < args.tol < 1:
        parser.error("--tol must be in (0, 1)")
    if args.jobs < 1:
        parser.error("--jobs must be positive")
    for key in ("mass", "omega"):
        if getattr(args, key, 1.0) <= 0:
            parser.error(f"--{key} must be positive")
    try:
        return COMMANDS[args.command](args)
    except argparse.ArgumentTypeError as exc:
        parser.error(str(exc))
    except (CqtrajError, ValueError) as exc:
        print(f"cqtraj {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
