"""Command-line front end: orbit construction, simulation, spectrum analysis,
SIRS runs, bifurcation sweeps, and the cross-module verification suite.

Exit codes: 0 success; 1 failed verification; 2 no orbit / invalid range /
bad usage; 3 positivity loss during integration; 4 unusable history file.

Flag defaults may be supplied by a flat ``key=value`` config file
(``--config``), and ``DELAY_LOGISTIC_OUTDIR`` sets the directory for
relative output paths.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path

import mpmath
import numpy as np

from . import __version__, ddesim, spectrum, verify
from .elliptic import HOPF_RATE, modulus_from_rate
from .orbit import build_orbit

__all__ = ["main"]

_OUTDIR_ENV = "DELAY_LOGISTIC_OUTDIR"


def _fmt(value) -> str:
    """17 significant digits; mpf values keep their wide exponents."""
    if isinstance(value, mpmath.mpf):
        return mpmath.nstr(value, 17, strip_zeros=False)
    return format(float(value), ".17g")


def _resolve(path: str) -> Path:
    p = Path(path)
    outdir = os.environ.get(_OUTDIR_ENV)
    if outdir and not p.is_absolute():
        p = Path(outdir) / p
    p.parent.mkdir(parents=True, exist_ok=True)
    return p


def _write_csv(path: Path, header: str, columns) -> None:
    lines = [header]
    for row in zip(*columns):
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def _load_config(path: str) -> dict:
    defaults = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise SystemExit(f"error: cannot read config file: {exc}")
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise SystemExit(f"error: malformed config line: {raw!r}")
        key, value = line.split("=", 1)
        defaults[key.strip().replace("-", "_")] = value.strip()
    return defaults


def _parse_history(spec_str: str, r: float):
    """History source: 'closedform', 'constant:<c>', or 'file:<path>'."""
    if spec_str == "closedform":
        params = build_orbit(r)
        return params.x_at, params
    if spec_str.startswith("constant:"):
        c = float(spec_str.split(":", 1)[1])
        if not c > 0.0:
            raise ValueError("constant history must be positive")
        return (lambda t: c), None
    if spec_str.startswith("file:"):
        path = spec_str.split(":", 1)[1]
        try:
            data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
            ts, xs = data[:, 0], data[:, 1]
        except Exception as exc:
            raise _HistoryFileError(f"cannot read history file {path!r}: {exc}")
        if ts[0] > -1.0 + 1e-9 or ts[-1] < -1e-9 or np.any(np.diff(ts) <= 0):
            raise _HistoryFileError("history file must cover [-1, 0] with increasing t")
        if np.any(xs <= 0.0):
            raise _HistoryFileError("history values must be positive")
        return (lambda t: float(np.interp(t, ts, xs))), None
    raise ValueError(f"unknown history source {spec_str!r}")


class _HistoryFileError(ValueError):
    pass


def cmd_periodic(args) -> int:
    if args.r is None:
        print("error: --r is required (flag or config file)", file=sys.stderr)
        return 2
    if args.r <= HOPF_RATE:
        print("no periodic orbit for r <= pi^2/2", file=sys.stderr)
        return 2
    params = build_orbit(args.r)
    if args.format == "json":
        text = params.to_json() + "\n"
        if args.output:
            _resolve(args.output).write_text(text)
        else:
            sys.stdout.write(text)
        return 0
    out = _resolve(args.output or f"periodic_r{args.r:g}.csv")
    t = np.linspace(-1.0, 3.0, 2001)
    _write_csv(out, "t,x,y", (t, params.x_at(t), params.y_at(t)))
    out.with_suffix(".json").write_text(params.to_json() + "\n")
    print(
        f"r={args.r:.6g}: k={params.k:.6g} a={params.a:.6g} "
        f"b={float(params.b):.6g} -> {out} and {out.with_suffix('.json')}"
    )
    return 0


def cmd_simulate(args) -> int:
    try:
        phi, params = _parse_history(args.seed, args.r)
    except _HistoryFileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        traj = ddesim.integrate_dde(phi, args.r, args.t_end, args.h)
    except ddesim.PositivityLossError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    out = _resolve(args.output or f"simulate_r{args.r:g}.csv")
    _write_csv(out, "t,x,y", (traj.t, traj.x, traj.y))
    made = [str(out)]
    if params is not None:
        x_ref = params.x_at(traj.t)
        y_ref = params.y_at(traj.t)
        ref = out.with_name(out.stem + "_exact" + out.suffix)
        _write_csv(ref, "t,x,y", (traj.t, x_ref, y_ref))
        dev_x = float(np.max(np.abs(traj.x - x_ref)))
        dev_y = float(np.max(np.abs(traj.y - y_ref)))
        summary = out.with_name(out.stem + "_summary.json")
        summary.write_text(
            '{"r": %s, "h": %s, "t_end": %s, "max_deviation_x": %s, '
            '"max_deviation_y": %s}\n'
            % tuple(_fmt(v) for v in (args.r, args.h, args.t_end, dev_x, dev_y))
        )
        made += [str(ref), str(summary)]
        print(f"max |x_num - x_exact| = {dev_x:.6g}")
    print("wrote " + ", ".join(made))
    return 0


def cmd_spectrum(args) -> int:
    if args.r is None:
        print("error: --r is required (flag or config file)", file=sys.stderr)
        return 2
    report = spectrum.find_roots(args.r)
    text = report.to_json() + "\n"
    if args.output:
        _resolve(args.output).write_text(text)
        print(f"r={args.r:.6g}: verdict={report.verdict}, {len(report.roots)} roots")
    else:
        sys.stdout.write(text)
    return 0


def cmd_sirs(args) -> int:
    if args.limit_check:
        dists = {gt: ddesim.sirs_limit_distance(args.r, gt) for gt in (10.0, 50.0, 100.0)}
        items = ", ".join(f'"{int(gt)}": {_fmt(d)}' for gt, d in dists.items())
        sys.stdout.write('{"r": %s, "sup_distance_by_gamma_tau": {%s}}\n' % (_fmt(args.r), items))
        return 0
    try:
        params = ddesim.SirsParams(beta=args.beta, gamma=args.gamma, tau=args.tau)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    i_eq = ddesim.endemic_equilibrium(params)
    try:
        traj = ddesim.integrate_sirs(
            params, lambda s: args.history_scale * i_eq, args.t_end, args.h
        )
    except ddesim.PositivityLossError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    out = _resolve(args.output or "sirs.csv")
    _write_csv(out, "t,S,I,R", (traj.t, traj.s, traj.i, traj.r))
    print(f"I_e = {i_eq:.6g}; wrote {out}")
    return 0


def cmd_verify(args) -> int:
    results = verify.run_checks(r=args.r, perturb_k=args.perturb_k)
    print(verify.format_table(results))
    return 0 if all(c.passed for c in results) else 1


def cmd_bifurcation(args) -> int:
    if args.r_min is None or args.r_max is None:
        print("error: --r-min and --r-max are required (flag or config file)", file=sys.stderr)
        return 2
    if not (args.steps >= 2 and args.r_max > args.r_min):
        print("error: need r-max > r-min and steps >= 2", file=sys.stderr)
        return 2
    rs = np.linspace(args.r_min, args.r_max, args.steps)
    ks, a_vals, b_vals = [], [], []
    for r in rs:
        if r <= HOPF_RATE:
            ks.append(0.0)
            a_vals.append(1.0)
            b_vals.append(1.0)
        else:
            p = build_orbit(float(r))
            ks.append(p.k)
            a_vals.append(p.a)
            b_vals.append(p.b)
    out = _resolve(args.output or "bifurcation.csv")
    _write_csv(out, "r,k,a,b", (rs, ks, a_vals, b_vals))
    print(f"wrote {out} ({args.steps} rows over [{args.r_min:g}, {args.r_max:g}])")
    return 0


def _build_parser() -> tuple[argparse.ArgumentParser, list[argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(
        prog="delay-logistic",
        description="Period-2 orbits of the distributed-delay logistic equation.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--config", help="flat key=value file supplying flag defaults")
    sub = parser.add_subparsers(dest="command", required=True)
    subparsers = []

    p = sub.add_parser("periodic", help="closed-form orbit: params JSON + sampled CSV")
    subparsers.append(p)
    p.add_argument("--r", type=float, help="growth rate (> pi^2/2)")
    p.add_argument("--output", help="CSV path (JSON lands beside it)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_periodic)

    p = sub.add_parser("simulate", help="integrate the delay equation")
    subparsers.append(p)
    p.add_argument("--r", type=float, default=10.0)
    p.add_argument("--h", type=float, default=1e-3, help="step (1/N, N >= 100)")
    p.add_argument("--t-end", type=float, default=20.0)
    p.add_argument(
        "--seed",
        default="closedform",
        help="history on [-1,0]: closedform | constant:<c> | file:<csv>",
    )
    p.add_argument("--output")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("spectrum", help="characteristic roots and stability verdict")
    subparsers.append(p)
    p.add_argument("--r", type=float)
    p.add_argument("--output")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("sirs", help="temporary-immunity SIRS run (CSV t,S,I,R)")
    subparsers.append(p)
    p.add_argument("--beta", type=float, default=3.0, help="transmission coefficient")
    p.add_argument("--gamma", type=float, default=1.0, help="recovery rate")
    p.add_argument("--tau", type=float, default=2.0, help="immune period")
    p.add_argument("--h", type=float, default=1e-2)
    p.add_argument("--t-end", type=float, default=100.0)
    p.add_argument(
        "--history-scale", type=float, default=0.9,
        help="infective history = scale * endemic equilibrium",
    )
    p.add_argument(
        "--limit-check", action="store_true",
        help="sweep gamma*tau in {10,50,100} against the delay equation at rate r",
    )
    p.add_argument("--r", type=float, default=10.0, help="rate for --limit-check")
    p.add_argument("--output")
    p.set_defaults(func=cmd_sirs)

    p = sub.add_parser("verify", help="run every module invariant check")
    subparsers.append(p)
    p.add_argument("--r", type=float, default=10.0)
    p.add_argument(
        "--perturb-k", type=float, default=0.0,
        help="inject a modulus inconsistency (the suite must catch it)",
    )
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bifurcation", help="sweep r and emit the branch data r,k,a,b")
    subparsers.append(p)
    p.add_argument("--r-min", type=float)
    p.add_argument("--r-max", type=float)
    p.add_argument("--steps", type=int, default=81)
    p.add_argument("--output")
    p.set_defaults(func=cmd_bifurcation)
    return parser, subparsers


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subparsers = _build_parser()
    if "--config" in argv:
        cfg_path = argv[argv.index("--config") + 1]
        raw = _load_config(cfg_path)
        typed = {}
        for key, value in raw.items():
            if key in ("steps",):
                typed[key] = int(value)
            elif key in ("r", "h", "t_end", "beta", "gamma", "tau",
                         "history_scale", "perturb_k", "r_min", "r_max"):
                typed[key] = float(value)
            else:
                typed[key] = value
        for sp in subparsers:
            sp.set_defaults(**typed)
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
