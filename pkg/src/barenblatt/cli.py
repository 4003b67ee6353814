"""Command-line experiment runner.

Exit codes: 0 success, 1 usage error, 2 certification or acceptance
failure, 3 solver failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
import time
from importlib import metadata
from pathlib import Path

import numpy as np

from . import comparison as cmp
from .profiles import bump_data, const_data, log_tail_data, tail_ratio_bounds, zero_data
from .rates import (DEFAULT_WINDOW, SLOPE_TOL, band_check, extract_series, fit_rate,
                    suite_config, theorem_suite)
from .solver import SolverConfig, SolverError, sandwich_check, solve
from .special_functions import (ModelParams, hat_phi_inequality_residual, hat_phi_profile,
                                phi_profile, rho_profile)

EXIT_OK, EXIT_USAGE, EXIT_FAIL, EXIT_SOLVER = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "%.17g" % float(x)
    return str(x)


def write_csv(path, header, rows):
    """Comma-separated, 17 significant digits, LF line endings."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    text = buf.getvalue()
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else str(f)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if hasattr(obj, "__dataclass_fields__"):
        return _jsonable({k: getattr(obj, k) for k in obj.__dataclass_fields__})
    return obj


def config_hash(resolved: dict) -> str:
    payload = json.dumps(_jsonable(resolved), sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()


def write_manifest(out_dir, command, resolved, constants, verdicts, started):
    manifest = {
        "command": command,
        "parameters": resolved,
        "constants": constants,
        # the output location is not part of the configuration
        "config_hash": config_hash({"command": command,
                                    "parameters": {k: v for k, v in resolved.items() if k != "out"}}),
        "version": _version(),
        "wall_time_s": time.time() - started,
        "verdicts": verdicts,
        "passed": all(v.get("passed", False) for v in verdicts.values()),
    }
    path = Path(out_dir) / "manifest.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(manifest), indent=2, sort_keys=True) + "\n")
    return manifest


def read_config(path) -> dict:
    """Flat key=value file; '#' starts a comment; dashes in keys become underscores."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = (p.strip() for p in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------

DEFAULTS = {
    "special": {"table": "phi", "gamma": 0.5, "D": 1.0, "zmax": 20.0, "points": 201, "out": None},
    "simulate": {"data": "log-tail", "B": 1.0, "b": None, "gamma": 0.5, "D": 1.0, "n": 5,
                 "t_end": 1e3, "n_xi": 2048, "bc": "pinned", "out": "run"},
    "verify": {"kind": "super", "gamma": 0.5, "D": 1.0, "n": 5, "A": None, "a": None,
               "grid_preset": "full", "out": None},
    "rates": {"sweep": "gamma=0.25,0.5,0.75", "family": "log-tail", "window": "1e2:1e4",
              "n": 5, "D": 1.0, "B": 1.0, "n_xi": 2048, "out": "rates"},
    "reproduce": {"n": 5, "D": 1.0, "gamma": 0.5, "grid_preset": "fast", "n_xi": 2048,
                  "out": None},
}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="barenblatt", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sup = argparse.SUPPRESS

    def add(name, help_):
        sp = sub.add_parser(name, help=help_, argument_default=sup)
        sp.add_argument("--config", help="key=value file; explicit flags take precedence")
        return sp

    s = add("special", "tabulate a profile with its derivatives and ODE residual")
    s.add_argument("--table", choices=["phi", "rho", "hat"])
    s.add_argument("--gamma", type=float)
    s.add_argument("--D", type=float)
    s.add_argument("--zmax", type=float)
    s.add_argument("--points", type=int)
    s.add_argument("--out")

    s = add("simulate", "solve the radial equation and write trajectory.csv")
    s.add_argument("--data", choices=["log-tail", "bump", "zero", "const"])
    s.add_argument("--B", type=float, help="tail constant, bump amplitude or constant value")
    s.add_argument("--b", type=float, help="lower tail constant for the subsolution bound")
    s.add_argument("--gamma", type=float)
    s.add_argument("--D", type=float)
    s.add_argument("--n", type=int)
    s.add_argument("--t-end", dest="t_end", type=float)
    s.add_argument("--n-xi", dest="n_xi", type=int)
    s.add_argument("--bc", choices=["pinned", "zero-curvature"])
    s.add_argument("--out")

    s = add("verify", "certify a comparison function on a grid")
    s.add_argument("--kind", choices=["super", "sub"])
    s.add_argument("--gamma", type=float)
    s.add_argument("--D", type=float)
    s.add_argument("--n", type=int)
    s.add_argument("--A", type=float)
    s.add_argument("--a", type=float)
    s.add_argument("--grid-preset", dest="grid_preset", choices=["fast", "full"])
    s.add_argument("--out")

    s = add("rates", "fit decay rates over a gamma sweep")
    s.add_argument("--sweep")
    s.add_argument("--family", choices=["log-tail", "bump", "const-tail"])
    s.add_argument("--window")
    s.add_argument("--n", type=int)
    s.add_argument("--D", type=float)
    s.add_argument("--B", type=float)
    s.add_argument("--n-xi", dest="n_xi", type=int)
    s.add_argument("--out")

    s = add("reproduce", "run a full theorem pipeline")
    s.add_argument("theorem", choices=["thm1", "thm2"])
    s.add_argument("--n", type=int)
    s.add_argument("--D", type=float)
    s.add_argument("--gamma", type=float)
    s.add_argument("--grid-preset", dest="grid_preset", choices=["fast", "full"])
    s.add_argument("--n-xi", dest="n_xi", type=int)
    s.add_argument("--out")
    return p


def _subparser(parser, name):
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[name]
    raise KeyError(name)  # pragma: no cover


def resolve(parser, ns) -> dict:
    """Merge defaults, config file and explicit flags, converting config strings."""
    cmd = ns.command
    merged = dict(DEFAULTS[cmd])
    flags = {k: v for k, v in vars(ns).items() if k not in ("command", "config")}
    if getattr(ns, "config", None):
        types = {a.dest: a for a in _subparser(parser, cmd)._actions}
        for key, raw in read_config(ns.config).items():
            if key not in merged:
                raise UsageError(f"unknown config key {key!r} for {cmd}")
            action = types.get(key)
            try:
                value = action.type(raw) if action is not None and action.type else raw
            except ValueError as exc:
                raise UsageError(f"bad value for {key}: {raw!r}") from exc
            if action is not None and action.choices and value not in action.choices:
                raise UsageError(f"bad value for {key}: {raw!r}")
            merged[key] = value
    merged.update(flags)
    return merged


# --------------------------------------------------------------------------
# Commands
# --------------------------------------------------------------------------

def cmd_special(opts) -> int:
    z = np.linspace(0.0, opts["zmax"], opts["points"])
    g = opts["gamma"]
    if opts["table"] == "phi":
        v, d1, d2 = phi_profile(g).evaluate(z)
        res = d2 + 0.5 * z * d1 + 0.5 * g * v
    elif opts["table"] == "rho":
        lam = (g / 2 + 1) / opts["D"]
        v, d1, d2 = rho_profile(lam).evaluate(z)
        safe = np.where(z > 0, z, 1.0)
        res = np.where(z > 0, d2 + d1 / safe + lam * v, 2 * d2 + lam * v)
    else:
        v, d1, d2 = hat_phi_profile(g).evaluate(z)
        res = hat_phi_inequality_residual(g, z)
    write_csv(opts["out"], ["z", "value", "d1", "d2", "residual"], zip(z, v, d1, d2, res))
    return EXIT_OK


def make_data(kind: str, B: float, gamma: float):
    if kind == "log-tail":
        return log_tail_data(B, gamma)
    if kind == "bump":
        return bump_data(B)
    if kind == "zero":
        return zero_data()
    return const_data(B)


def trajectory_rows(traj):
    r = traj.r
    ok = np.isfinite(r)
    for k, t in enumerate(traj.times):
        v = traj.v(k)
        for j in np.nonzero(ok)[0]:
            yield t, r[j], traj.phi[k, j], v[j]


def _comparison_pair(params, phi0, B, b):
    """Upper and lower comparison functions bound to phi0, with their constants."""
    sp = cmp.select_super_params(params)
    A = cmp.select_A(phi0, sp, B)
    sb = cmp.select_sub_params(params)
    a = cmp.select_a(phi0, b, sb)
    upper = cmp.matched_super(sp.with_A(A))
    lower = cmp.sub_solution(sb.with_a(a))
    constants = {"super": {"xi0": sp.xi0, "t0": sp.t0, "A": A, **sp.constants,
                           **cmp.amplitude_terms(phi0, sp, B)},
                 "sub": {"xi0": sb.xi0, "a": a, "r0": sb.r0, **sb.constants}}
    return upper, lower, constants


def cmd_simulate(opts, started) -> int:
    params = ModelParams(opts["n"], opts["D"], opts["gamma"])
    phi0 = make_data(opts["data"], opts["B"], opts["gamma"])
    config = SolverConfig(t_end=opts["t_end"], n_xi=opts["n_xi"], bc=opts["bc"],
                          output_times=tuple(np.geomspace(opts["t_end"] / 1e3, opts["t_end"], 16)))
    out = Path(opts["out"])
    constants, verdicts = {}, {}
    traj = solve(phi0, config, params)
    verdicts["solver"] = {"passed": True, **traj.stats}
    if opts["data"] == "log-tail" and opts["gamma"] < 1:
        b_scan, B_scan = tail_ratio_bounds(phi0, opts["gamma"])
        b = b_scan if opts["b"] is None else opts["b"]
        upper, lower, constants = _comparison_pair(params, phi0, max(opts["B"], B_scan), b)
        rep = sandwich_check(traj, lower, upper)
        verdicts["sandwich"] = {"passed": rep.passed, "precondition": rep.precondition,
                                "min_upper_margin": float(np.min(rep.upper_margin)) if rep.ran else None,
                                "min_lower_margin": float(np.min(rep.lower_margin)) if rep.ran else None,
                                "tol": rep.tol}
    write_csv(out / "trajectory.csv", ["t", "r", "phi", "v"], trajectory_rows(traj))
    resolved = dict(opts, solver=config, data_descriptor=phi0.descriptor,
                    trajectory_hash=traj.config_hash)
    m = write_manifest(out, "simulate", resolved, constants, verdicts, started)
    print(f"simulate: {traj.stats['steps']} steps, wrote {out / 'trajectory.csv'}")
    return EXIT_OK if m["passed"] else EXIT_FAIL


def cmd_verify(opts) -> int:
    params = ModelParams(opts["n"], opts["D"], opts["gamma"])
    if opts["kind"] == "super":
        sp = cmp.select_super_params(params)
        if opts["A"] is not None:
            sp = sp.with_A(opts["A"])
        fn = cmp.matched_super(sp)
    else:
        sb = cmp.select_sub_params(params)
        if opts["a"] is not None:
            sb = sb.with_a(opts["a"])
        fn = cmp.sub_solution(sb)
    rep = cmp.certify(fn, cmp.certification_grid(fn, opts["grid_preset"]), opts["kind"])
    write_csv(opts["out"], ["check", "statistic", "relation", "threshold", "result"], rep.rows())
    print(rep.summary_line())
    return EXIT_OK if rep.passed else EXIT_FAIL


def _parse_sweep(text: str):
    key, _, vals = text.partition("=")
    if key.strip() != "gamma" or not vals:
        raise UsageError("--sweep must look like gamma=0.25,0.5")
    try:
        return [float(v) for v in vals.split(",")]
    except ValueError as exc:
        raise UsageError(f"bad sweep values {vals!r}") from exc


def _parse_window(text: str):
    try:
        lo, hi = (float(v) for v in text.split(":"))
    except ValueError as exc:
        raise UsageError(f"--window must look like 1e2:1e4, got {text!r}") from exc
    if not 0 < lo < hi:
        raise UsageError("window must satisfy 0 < lo < hi")
    return lo, hi


def cmd_rates(opts, started) -> int:
    gammas = _parse_sweep(opts["sweep"])
    window = _parse_window(opts["window"])
    rows = theorem_suite(opts["n"], opts["D"], opts["family"], gammas, B=opts["B"],
                         window=window, n_xi=opts["n_xi"])
    out = Path(opts["out"])
    header = ["gamma", "p_sup", "p_origin", "band_lo", "band_hi", "pass"]
    write_csv(out / "rates.csv", header, ([r.as_record()[h] for h in header] for r in rows))
    print(f"{'gamma':>6} {'p_sup':>9} {'p_origin':>9} {'band_lo':>10} {'band_hi':>10}  verdict")
    for r in rows:
        tag = "PASS" if r.passed else ("ERROR " + r.error if r.error else "FAIL")
        if r.exploratory:
            tag += " (ceiling only)"
        print(f"{r.gamma:6.3g} {r.p_sup:9.4f} {r.p_origin:9.4f} {r.band_lo:10.4g} {r.band_hi:10.4g}  {tag}")
    verdicts = {f"gamma={r.gamma:g}": {"passed": r.passed, "error": r.error} for r in rows}
    write_manifest(out, "rates", dict(opts, window=window, gammas=gammas), {}, verdicts, started)
    if any(r.error for r in rows):
        return EXIT_SOLVER
    return EXIT_OK if all(r.passed for r in rows) else EXIT_FAIL


def reproduce_thm1(opts):
    g = opts["gamma"]
    if not 0 < g < 1:
        raise UsageError("thm1 needs gamma in (0, 1)")
    params = ModelParams(opts["n"], opts["D"], g)
    phi0 = log_tail_data(1.0, g)
    b, B = tail_ratio_bounds(phi0, g)
    upper, lower, constants = _comparison_pair(params, phi0, max(B, 1.0), b)
    verdicts = {}
    for name, fn in (("certify_super", upper), ("certify_sub", lower)):
        rep = cmp.certify(fn, cmp.certification_grid(fn, opts["grid_preset"]), phi0=phi0)
        verdicts[name] = {"passed": rep.passed, "summary": rep.summary_line(),
                          "checks": {c.id: c.statistic for c in rep.checks}}
    config = suite_config(DEFAULT_WINDOW, 16, opts["n_xi"])
    config = config.with_(output_times=tuple(np.unique(np.concatenate(
        [np.geomspace(1, 1e2, 8), config.output_times]))))
    traj = solve(phi0, config, params)
    sw = sandwich_check(traj, lower, upper)
    verdicts["sandwich"] = {"passed": sw.passed, "precondition": sw.precondition,
                            "min_upper_margin": float(np.min(sw.upper_margin)) if sw.ran else None,
                            "min_lower_margin": float(np.min(sw.lower_margin)) if sw.ran else None,
                            "tol": sw.tol}
    origin = extract_series(traj, "origin")
    fit = fit_rate(origin)
    band = band_check(origin, g / 2)
    verdicts["rates"] = {"passed": band.passed and abs(fit.slope + g / 2) <= SLOPE_TOL,
                         "slope": fit.slope, "stderr": fit.stderr, "band_lo": band.lo,
                         "band_hi": band.hi, "band_ratio": band.ratio}
    summary = (f"thm1 gamma={g:g}: slope={fit.slope:.4f} (target {-g / 2:g}), "
               f"band=[{band.lo:.4g}, {band.hi:.4g}]")
    return params, constants, verdicts, summary, traj


def reproduce_thm2(opts):
    params = ModelParams(opts["n"], opts["D"], opts["gamma"])
    phi0 = bump_data()
    traj = solve(phi0, suite_config(DEFAULT_WINDOW, 16, opts["n_xi"]), params)
    sup = extract_series(traj, "sup")
    half = band_check(sup, 0.5)
    faster = band_check(sup, 0.6)
    fit = fit_rate(sup)
    verdicts = {
        "ceiling": {"passed": half.passed, "band_lo": half.lo, "band_hi": half.hi,
                    "slope": fit.slope},
        "exponent_0.6": {"passed": True, "band_lo": faster.lo, "band_hi": faster.hi,
                         "start_to_end": faster.decay_factor,
                         "note": "informational; weighted series grows like t^0.1"},
    }
    summary = (f"thm2: exponent=0.5 band_lo={half.lo:.6g} band_hi={half.hi:.6g} "
               f"{'PASS' if half.passed else 'FAIL'}")
    return params, {}, verdicts, summary, traj


def cmd_reproduce(opts, started) -> int:
    fn = reproduce_thm1 if opts["theorem"] == "thm1" else reproduce_thm2
    params, constants, verdicts, summary, traj = fn(opts)
    out = Path(opts["out"] or f"reproduce-{opts['theorem']}")
    series = np.column_stack([traj.times, traj.origin(), traj.sup()])
    write_csv(out / "series.csv", ["t", "phi_origin", "phi_sup"], series)
    resolved = dict(opts, params=params, solver=traj.config, trajectory_hash=traj.config_hash)
    m = write_manifest(out, f"reproduce {opts['theorem']}", resolved, constants, verdicts, started)
    print(summary)
    print("PASS" if m["passed"] else "FAIL " + next(k for k, v in verdicts.items() if not v["passed"]))
    return EXIT_OK if m["passed"] else EXIT_FAIL


def main(argv=None) -> int:
    parser = build_parser()
    started = time.time()
    try:
        ns = parser.parse_args(argv)
        if ns.command is None:
            raise UsageError("a subcommand is required")
        opts = resolve(parser, ns)
        if ns.command == "special":
            return cmd_special(opts)
        if ns.command == "simulate":
            return cmd_simulate(opts, started)
        if ns.command == "verify":
            return cmd_verify(opts)
        if ns.command == "rates":
            return cmd_rates(opts, started)
        return cmd_reproduce(opts, started)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ArithmeticError as exc:
        print(f"certification failure: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
