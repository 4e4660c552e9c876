"""Scenario-driven command line front end.

Exit codes: 0 success (all checks pass), 1 a check failed, 2 invalid
configuration or expression, 3 numerical failure (integration, quadrature,
rho zero crossing).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from . import analytic, noether
from .errors import ConditionFailedError, ErmakovError, ExprSyntaxError, NotConservativeError
from .integrate import Control, Trajectory, integrate
from .invariants import STANDARD_NAMES, drift_of, drift_report, evaluator
from .model import CartesianState, SystemSpec
from .reduce import reduce_and_compare

log = logging.getLogger("ermakov")

EXIT_OK, EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

DEFAULT_CHECKS = {"drift": 1e-7, "analytic": 1e-6, "noether": 1e-8, "fi_drift": 1e-6, "reduce": 1e-7, "frame": 1e-9}
_FORM_KEYS = {"general": ("f", "g"), "normalized": ("F", "G"), "conservative": ("N",)}
_TOP_KEYS = {
    "system", "omega", "initial", "t_end", "method", "tolerance", "step",
    "sample_interval", "invariants", "gradient_kv", "reduction", "checks",
}
_KNOWN_INVARIANTS = set(STANDARD_NAMES) | {"L", "Lewis", "I21", "I31"}


class ConfigError(ErmakovError, ValueError):
    pass


def _reject_unknown(d: dict, allowed, where: str) -> None:
    extra = sorted(set(d) - set(allowed))
    if extra:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(extra)}")


def _number(d: dict, key: str, where: str, default=None) -> float:
    if key not in d:
        if default is None:
            raise ConfigError(f"missing {where}.{key}")
        return default
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(f"{where}.{key} must be a finite number, got {v!r}")
    return float(v)


@dataclass
class ScenarioConfig:
    spec: SystemSpec
    initial: CartesianState
    t_end: float
    control: Control
    invariants: list[str] = field(default_factory=list)
    gradient_kv: Optional[tuple[float, float]] = None
    reduction: Optional[tuple[float, float]] = None
    checks: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_CHECKS))

    @classmethod
    def from_dict(cls, raw: Any) -> "ScenarioConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        _reject_unknown(raw, _TOP_KEYS, "config")

        system = raw.get("system")
        if not isinstance(system, dict) or "form" not in system:
            raise ConfigError("config.system must be an object with a 'form' tag")
        form = system["form"]
        if form not in _FORM_KEYS:
            raise ConfigError(f"system.form must be one of {sorted(_FORM_KEYS)}, got {form!r}")
        keys = _FORM_KEYS[form]
        _reject_unknown(system, ("form",) + keys, f"system ({form} form)")
        for k in keys:
            if not isinstance(system.get(k), str):
                raise ConfigError(f"system.{k} must be an expression string")
        omega = raw.get("omega")
        if omega is not None and not isinstance(omega, str):
            raise ConfigError("omega must be an expression string")
        ctor = {"general": SystemSpec.general, "normalized": SystemSpec.normalized, "conservative": SystemSpec.conservative}
        spec = ctor[form](*(system[k] for k in keys), omega=omega)

        init = raw.get("initial")
        if not isinstance(init, dict):
            raise ConfigError("config.initial must be an object {t0, x, y, vx, vy}")
        _reject_unknown(init, ("t0", "x", "y", "vx", "vy"), "initial")
        s0 = CartesianState(
            _number(init, "t0", "initial", 0.0),
            *(_number(init, k, "initial") for k in ("x", "y", "vx", "vy")),
        )
        t_end = _number(raw, "t_end", "config")
        if not t_end > s0.time:
            raise ConfigError(f"t_end ({t_end}) must exceed initial.t0 ({s0.time})")

        method = raw.get("method", "dp54")
        tol = _number(raw, "tolerance", "config", 1e-10)
        step = raw.get("step")
        sample = raw.get("sample_interval")
        try:
            control = Control(method, tol, tol, step, sample)
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc)) from exc

        invariants = raw.get("invariants", [])
        if not isinstance(invariants, list) or not all(isinstance(n, str) for n in invariants):
            raise ConfigError("invariants must be a list of names")
        unknown = [n for n in invariants if n not in _KNOWN_INVARIANTS]
        if unknown:
            raise ConfigError(f"unknown invariant(s) {unknown}; known: {sorted(_KNOWN_INVARIANTS)}")

        gkv = raw.get("gradient_kv")
        if gkv is not None:
            if not isinstance(gkv, dict):
                raise ConfigError("gradient_kv must be an object {b1, b2}")
            _reject_unknown(gkv, ("b1", "b2"), "gradient_kv")
            gkv = (_number(gkv, "b1", "gradient_kv"), _number(gkv, "b2", "gradient_kv"))

        red = raw.get("reduction")
        if red is not None:
            if not isinstance(red, dict):
                raise ConfigError("reduction must be an object {rho0, rhodot0}")
            _reject_unknown(red, ("rho0", "rhodot0"), "reduction")
            red = (_number(red, "rho0", "reduction"), _number(red, "rhodot0", "reduction", 0.0))
            if red[0] == 0.0:
                raise ConfigError("reduction.rho0 must be non-zero")

        checks = dict(DEFAULT_CHECKS)
        raw_checks = raw.get("checks", {})
        if not isinstance(raw_checks, dict):
            raise ConfigError("checks must be an object of tolerances")
        _reject_unknown(raw_checks, DEFAULT_CHECKS, "checks")
        for k in raw_checks:
            checks[k] = _number(raw_checks, k, "checks")
        return cls(spec, s0, t_end, control, invariants, gkv, red, checks)


def load_config(path: str) -> ScenarioConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    return ScenarioConfig.from_dict(raw)


# ----------------------------------------------------------------------- file output


def fmt(v: float) -> str:
    return format(float(v), ".17g")


def column_names(invariants) -> list[str]:
    std = [n for n in STANDARD_NAMES if n in invariants]
    return std + [n for n in invariants if n not in STANDARD_NAMES]


def write_trajectory_csv(path: str, traj: Trajectory, invariants=(), gradient_kv=None) -> None:
    """``time,x,y,vx,vy`` plus one column per requested invariant."""
    names = column_names(invariants)
    fns = [evaluator(n, traj.spec, gradient_kv) for n in names]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time", "x", "y", "vx", "vy", *names])
        for s in traj.samples:
            w.writerow([fmt(v) for v in (s.time, s.x, s.y, s.vx, s.vy)] + [fmt(f(s)) for f in fns])


def read_trajectory_csv(path: str, spec: SystemSpec) -> Trajectory:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ConfigError(f"{path}: no samples")
    try:
        samples = [CartesianState(*(float(r[k]) for k in ("time", "x", "y", "vx", "vy"))) for r in rows]
    except KeyError as exc:
        raise ConfigError(f"{path}: missing column {exc}") from exc
    return Trajectory(spec, samples, method="file")


def _clean(v):
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    return v


def write_report(path: Optional[str], report: dict) -> None:
    text = json.dumps(_clean(report), indent=2, sort_keys=False) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _check(name: str, value: float, tol: float, **extra) -> dict:
    return {"name": name, "value": value, "tolerance": tol, "pass": bool(value <= tol), **extra}


# ------------------------------------------------------------------------ commands


def _require_conservative(cfg: ScenarioConfig, command: str) -> None:
    if not (cfg.spec.is_conservative and cfg.spec.autonomous):
        raise ConfigError(f"{command} needs a conservative system without omega")


def _simulate(cfg: ScenarioConfig) -> Trajectory:
    traj = integrate(cfg.spec, cfg.initial, cfg.t_end, cfg.control)
    if traj.truncated:
        log.warning("trajectory truncated: %s", traj.stop_reason)
    return traj


def run_simulate(config_path: str, out_path: str, tolerance: Optional[float] = None) -> int:
    cfg = load_config(config_path)
    traj = _simulate(cfg)
    write_trajectory_csv(out_path, traj, cfg.invariants, cfg.gradient_kv)
    if traj.truncated:
        print(f"error: {traj.stop_reason}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def run_invariants(
    config_path: str, report_path: Optional[str], traj_path: Optional[str] = None, tolerance: Optional[float] = None
) -> int:
    cfg = load_config(config_path)
    if not cfg.invariants:
        raise ConfigError("no invariants requested (config.invariants is empty)")
    tol = tolerance if tolerance is not None else cfg.checks["drift"]
    for name in cfg.invariants:
        try:
            evaluator(name, cfg.spec, cfg.gradient_kv)
        except (NotConservativeError, ConditionFailedError, ValueError) as exc:
            raise ConfigError(f"invariant {name}: {exc}") from exc
    traj = read_trajectory_csv(traj_path, cfg.spec) if traj_path else _simulate(cfg)
    rep = drift_report(traj, cfg.invariants, tol, cfg.gradient_kv)
    checks = [
        _check(n, s.max_rel_drift, tol, reference=s.reference, max_abs_drift=s.max_abs_drift)
        for n, s in rep.series.items()
    ]
    ok = rep.passes and not traj.truncated
    write_report(report_path, {"command": "invariants", "samples": len(traj), "truncated": traj.truncated, "checks": checks, "pass": ok})
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def run_reduce(
    config_path: str, out_path: Optional[str], report_path: Optional[str] = None, tolerance: Optional[float] = None
) -> int:
    cfg = load_config(config_path)
    if cfg.reduction is None:
        raise ConfigError("reduce needs config.reduction = {rho0, rhodot0}")
    tol = tolerance if tolerance is not None else cfg.checks["reduce"]
    rho0, rhodot0 = cfg.reduction
    res = reduce_and_compare(cfg.spec, cfg.initial, cfg.t_end, rho0, rhodot0, cfg.control)
    if out_path:
        with open(out_path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "x", "y", "vx", "vy", "rho", "rhodot", "T", "X", "Y", "VX", "VY"])
            for i, (a, b) in enumerate(zip(res.original.samples, res.reduced.samples)):
                row = (a.time, a.x, a.y, a.vx, a.vy, res.rho.rho[i], res.rho.rhodot[i], b.time, b.x, b.y, b.vx, b.vy)
                w.writerow([fmt(v) for v in row])
    checks = [
        _check("two_path", res.two_path_max, tol),
        _check("i0_frame_match", res.i0_frame_max, cfg.checks["frame"]),
    ]
    ok = all(c["pass"] for c in checks)
    write_report(report_path, {"command": "reduce", "T_end": float(res.rho.T[-1]), "checks": checks, "pass": ok})
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def run_analytic_compare(config_path: str, report_path: Optional[str], tolerance: Optional[float] = None) -> int:
    cfg = load_config(config_path)
    _require_conservative(cfg, "analytic-compare")
    tol = tolerance if tolerance is not None else cfg.checks["analytic"]
    traj = _simulate(cfg)
    rep = analytic.verify_solution(traj, tol)
    checks = [
        _check("radial_r2", rep.radial_max_residual, tol),
        _check("theta_identity", rep.theta_max_residual, tol),
    ]
    ok = all(c["pass"] for c in checks) and not traj.truncated
    write_report(
        report_path,
        {
            "command": "analytic-compare",
            "constants": {"H": rep.constants.H, "I0": rep.constants.I0, "I2": rep.constants.I2},
            "stretches": [
                {"T_start": s.t_start, "T_stop": s.t_stop, "sign": s.sign, "max_residual": s.max_residual}
                for s in rep.stretches
            ],
            "turning_points": [list(b) for b in rep.turning_points],
            "checks": checks,
            "pass": ok,
        },
    )
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def run_noether_scan(config_path: str, report_path: Optional[str], tolerance: Optional[float] = None) -> int:
    """Pass/fail matrix over the algebra (plus ``gradient_kv``), then the drift of every built integral."""
    cfg = load_config(config_path)
    _require_conservative(cfg, "noether-scan")
    tol = tolerance if tolerance is not None else cfg.checks["noether"]
    extra = [noether.gradient_kv(*cfg.gradient_kv)] if cfg.gradient_kv else []
    rows = noether.noether_scan(cfg.spec, extra, tol=tol)
    traj = _simulate(cfg)
    fi_tol = cfg.checks["fi_drift"]
    matrix, checks = [], []
    for row in rows:
        entry = {"vector": row.vector.name, "psi": row.vector.psi, "gradient": row.vector.gradient}
        for case, res in ((2, row.case2), (3, row.case3)):
            if res is None:
                entry[f"case{case}"] = None
                continue
            entry[f"case{case}"] = {"pass": res.passes, "constants": res.constants, "max_residual": res.max_residual}
            if res.passes:
                if case == 2:
                    fi = noether.build_case2_fi(row.vector, res.constants["c1"])
                else:
                    fi = noether.build_case3_fi(row.vector, res.constants["c2"], res.constants["c3"])
                series = drift_of(fi.name, [fi(cfg.spec, s) for s in traj.samples], fi_tol)
                checks.append(_check(f"{fi.name} drift", series.max_rel_drift, fi_tol))
        matrix.append(entry)
    ok = all(c["pass"] for c in checks) and not traj.truncated
    write_report(report_path, {"command": "noether-scan", "tolerance": tol, "matrix": matrix, "checks": checks, "pass": ok})
    return EXIT_OK if ok else EXIT_CHECK_FAILED


# --------------------------------------------------------------------------- driver


def _dispatch(command: str, config: str, out: Optional[str], report: Optional[str], trajectory: Optional[str], tolerance: Optional[float]) -> int:
    try:
        if command == "simulate":
            if not out:
                raise ConfigError("simulate needs --out")
            return run_simulate(config, out, tolerance)
        if command == "invariants":
            return run_invariants(config, report, trajectory, tolerance)
        if command == "reduce":
            return run_reduce(config, out, report, tolerance)
        if command == "analytic-compare":
            return run_analytic_compare(config, report, tolerance)
        if command == "noether-scan":
            return run_noether_scan(config, report, tolerance)
        raise ConfigError(f"unknown command {command!r}")
    except (ConfigError, ExprSyntaxError, OSError) as exc:
        print(f"error: {config}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ErmakovError, ArithmeticError, ValueError) as exc:
        print(f"error: {config}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def _per_file(path: Optional[str], config: str, suffix: str) -> Optional[str]:
    if path is None:
        return None
    Path(path).mkdir(parents=True, exist_ok=True)
    return str(Path(path) / (Path(config).stem + suffix))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ermakov", description="Generalized Ermakov system simulations and checks.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("simulate", "invariants", "reduce", "analytic-compare", "noether-scan"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, nargs="+", help="scenario JSON file(s)")
        sp.add_argument("--out", help="CSV output (a directory when several configs are given)")
        sp.add_argument("--report", help="JSON report (a directory when several configs are given)")
        sp.add_argument("--tolerance", type=float, help="override the check tolerance")
        sp.add_argument("--jobs", type=int, default=1, help="parallel workers for several configs")
        if name == "invariants":
            sp.add_argument("--trajectory", help="read the trajectory from this CSV instead of simulating")
    return p


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    trajectory = getattr(args, "trajectory", None)
    configs = args.config
    if len(configs) == 1:
        return _dispatch(args.command, configs[0], args.out, args.report, trajectory, args.tolerance)
    jobs = [
        (args.command, c, _per_file(args.out, c, ".csv"), _per_file(args.report, c, ".json"), trajectory, args.tolerance)
        for c in configs
    ]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            codes = list(pool.map(_dispatch, *zip(*jobs)))
    else:
        codes = [_dispatch(*j) for j in jobs]
    return max(codes)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
