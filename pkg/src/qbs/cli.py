"""Batch command-line front end.

One command per invocation; a JSON (or CSV) report on stdout, errors on
stderr. Exit codes: 0 success, 2 configuration error, 3 a checked
invariant failed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.random import default_rng

from . import __version__
from .config import SCHEMA_VERSION, ConfigError, RunConfig, matrix_to_json, parse_config
from .flows import flow_coefficients, semigroup_evolve
from .operators import hermitian_defect
from .pricing import (
    classical_bs,
    hedge_portfolio,
    log_moneyness,
    price,
    replication_simulation,
    residual_eq8,
    terminal_limit_check,
    terminal_payoff,
)
from .sampling import random_model

COMMANDS = (
    "coeffs",
    "ito-check",
    "price",
    "residual",
    "terminal-check",
    "hedge",
    "classical",
    "lindblad",
    "replicate",
)


@dataclass
class RunReport:
    command: str
    seed: int | None
    tolerances: dict
    results: list
    invariant_violations: list
    wall_time_s: float | None


def _need(cfg: RunConfig, attr: str, what: str):
    value = getattr(cfg, attr)
    if value is None or (isinstance(value, (list, dict)) and not value):
        raise ConfigError(attr, f"{what} required for this command")
    return value


def _need_seed(cfg: RunConfig) -> int:
    if cfg.seed is None:
        raise ConfigError("seed", "a seed is required for stochastic commands")
    return cfg.seed


def _cmd_coeffs(cfg: RunConfig):
    model = _need(cfg, "model", "a model section")
    fc = flow_coefficients(model.ops.X, model.ops)
    result = {
        "alpha": matrix_to_json(fc.alpha),
        "alpha_dagger": matrix_to_json(fc.alpha_dagger),
        "lambda": matrix_to_json(fc.lam),
        "theta": matrix_to_json(fc.theta),
        "max_abs_alpha": float(np.max(np.abs(fc.alpha))),
        "max_abs_lambda": float(np.max(np.abs(fc.lam))),
        "max_abs_theta": float(np.max(np.abs(fc.theta))),
    }
    return [result], []


def _cmd_ito_check(cfg: RunConfig):
    from .flows import qsd_power_closed_form, qsd_power_iterated

    seed = _need_seed(cfg)
    tol = cfg.tolerances["power_rule"]
    rng = default_rng(seed)
    results = []
    violations = []
    for dim in cfg.ito_check["dims"]:
        worst = 0.0
        for _ in range(cfg.ito_check["trials"]):
            model = random_model(rng, dim)
            for k in range(2, cfg.ito_check["k_max"] + 1):
                closed = qsd_power_closed_form(model.X, model, k)
                iterated = qsd_power_iterated(model.X, model, k)
                for a, b in zip(closed.slots(), iterated.slots()):
                    scale = max(1.0, float(np.linalg.norm(a)))
                    worst = max(worst, float(np.linalg.norm(a - b)) / scale)
        passed = worst <= tol
        results.append(
            {
                "dim": dim,
                "trials": cfg.ito_check["trials"],
                "k_max": cfg.ito_check["k_max"],
                "max_relative_deviation": worst,
                "passed": passed,
            }
        )
        if not passed:
            violations.append(f"power rule deviation {worst:.6e} exceeds {tol:.6e} at dim {dim}")
    return results, violations


def _cmd_price(cfg: RunConfig):
    model = _need(cfg, "model", "a model section")
    t_grid = _need(cfg, "t_grid", "a t_grid")
    z_grid = _need(cfg, "z_grid", "a z_grid")
    results = []
    for t in t_grid:
        for i, z in enumerate(z_grid):
            quote = price(t, z, model, state=cfg.state)
            omega_eigs = np.linalg.eigvalsh(quote.omega)
            results.append(
                {
                    "t": t,
                    "z_index": i,
                    "omega": matrix_to_json(quote.omega),
                    "omega_min_eigenvalue": float(omega_eigs[0]),
                    "omega_max_eigenvalue": float(omega_eigs[-1]),
                    "omega_expectation": quote.omega_expectation,
                }
            )
    return results, []


def _cmd_residual(cfg: RunConfig):
    model = _need(cfg, "model", "a model section")
    t_grid = _need(cfg, "t_grid", "a t_grid")
    z_grid = _need(cfg, "z_grid", "a z_grid")
    tol = cfg.tolerances["residual_eq8"]
    results = []
    violations = []
    for t in t_grid:
        for i, z in enumerate(z_grid):
            rep = residual_eq8(t, z, model, tolerance=tol)
            results.append(
                {
                    "t": t,
                    "z_index": i,
                    "residual_norm": rep.residual_norm,
                    "tolerance": rep.tolerance,
                    "passed": rep.passed,
                }
            )
            if not rep.passed:
                violations.append(
                    f"residual {rep.residual_norm:.6e} exceeds {tol:.6e} at t={t}, z_index={i}"
                )
    return results, violations


def _cmd_terminal_check(cfg: RunConfig):
    model = _need(cfg, "model", "a model section")
    z_grid = _need(cfg, "z_grid", "a z_grid")
    base = cfg.tolerances["terminal"]
    t_small = cfg.terminal["t_small"]
    min_gap = cfg.terminal["min_gap"]
    results = []
    violations = []
    for i, z in enumerate(z_grid):
        payoff = terminal_payoff(z, model.K, "spectral")
        tol = base * max(1.0, float(np.linalg.norm(payoff, 2)))
        rep = terminal_limit_check(z, model, t_small=t_small, min_gap=min_gap, tolerance=tol)
        expectation_payoff = None
        if cfg.state is not None:
            expectation_payoff = terminal_payoff(z, model.K, "expectation", state=cfg.state)
        results.append(
            {
                "z_index": i,
                "t_small": t_small,
                "deviation": rep.residual_norm,
                "tolerance": rep.tolerance,
                "passed": rep.passed,
                "payoff_spectral": matrix_to_json(payoff),
                "payoff_expectation": expectation_payoff,
            }
        )
        if not rep.passed:
            violations.append(
                f"terminal deviation {rep.residual_norm:.6e} exceeds {rep.tolerance:.6e} at z_index={i}"
            )
    return results, violations


def _cmd_hedge(cfg: RunConfig):
    model = _need(cfg, "model", "a model section")
    times = cfg.hedge["times"]
    if not times:
        raise ConfigError("hedge.times", "at least one time required")
    stock = cfg.hedge["stock"] if cfg.hedge["stock"] is not None else model.ops.X
    convention = cfg.hedge["convention"]
    tol = cfg.tolerances["hedge_value"]
    results = []
    violations = []
    for t in times:
        pos = hedge_portfolio(t, stock, model, convention=convention)
        z_t = log_moneyness(stock, model.K)
        omega = price(model.T - t, z_t, model).omega
        defect = float(np.linalg.norm(pos.value - omega))
        passed = defect <= tol * max(1.0, float(np.linalg.norm(omega)))
        results.append(
            {
                "t": t,
                "convention": convention,
                "a": matrix_to_json(pos.a),
                "b": matrix_to_json(pos.b),
                "value": matrix_to_json(pos.value),
                "reconstruction_error": defect,
                "passed": passed,
            }
        )
        if not passed:
            violations.append(f"hedge value mismatch {defect:.6e} at t={t}")
    return results, violations


def _cmd_classical(cfg: RunConfig):
    sec = _need(cfg, "classical", "a classical section")
    results = []
    for x in sec["x"]:
        for t in sec["t"]:
            value, delta = classical_bs(x, sec["strike"], sec["r"], sec["sigma"], t)
            results.append(
                {
                    "x": x,
                    "t": t,
                    "strike": sec["strike"],
                    "r": sec["r"],
                    "sigma": sec["sigma"],
                    "price": value,
                    "delta": delta,
                }
            )
    return results, []


def _cmd_lindblad(cfg: RunConfig):
    model = _need(cfg, "model", "a model section")
    t_list = cfg.lindblad["t"]
    if not t_list:
        raise ConfigError("lindblad.t", "at least one time required")
    x0 = cfg.lindblad["x0"] if cfg.lindblad["x0"] is not None else model.ops.X
    results = []
    violations = []
    for t in t_list:
        steps = cfg.lindblad["steps"]
        out = semigroup_evolve(x0, model.ops, t, steps=steps)
        defect = hermitian_defect(out)
        passed = defect <= 1e-9 * max(1.0, float(np.linalg.norm(out)))
        results.append(
            {
                "t": t,
                "steps": steps if steps is not None else max(int(round(1000.0 * t)), 100),
                "x_t": matrix_to_json(out),
                "hermiticity_defect": defect,
                "passed": passed,
            }
        )
        if not passed:
            violations.append(f"semigroup output lost Hermiticity ({defect:.6e}) at t={t}")
    return results, violations


def _cmd_replicate(cfg: RunConfig):
    sec = _need(cfg, "replicate", "a replicate section")
    seed = _need_seed(cfg)
    stats = replication_simulation(
        sec["x0"],
        sec["strike"],
        sec["r"],
        sec["T"],
        sec["steps"],
        sec["paths"],
        seed,
        sigma=sec["sigma"],
    )
    result = {
        "x0": sec["x0"],
        "strike": sec["strike"],
        "r": sec["r"],
        "T": sec["T"],
        "steps": stats.steps,
        "paths": stats.paths,
        "seed": stats.seed,
        "initial_price": stats.initial_price,
        "mean_error": stats.mean_error,
        "std_error": stats.std_error,
        "mean_abs_error": stats.mean_abs_error,
    }
    return [result], []


_DISPATCH = {
    "coeffs": _cmd_coeffs,
    "ito-check": _cmd_ito_check,
    "price": _cmd_price,
    "residual": _cmd_residual,
    "terminal-check": _cmd_terminal_check,
    "hedge": _cmd_hedge,
    "classical": _cmd_classical,
    "lindblad": _cmd_lindblad,
    "replicate": _cmd_replicate,
}


def run(cfg: RunConfig, command: str, timing: bool = True) -> RunReport:
    """Execute one command against a validated configuration."""
    if command not in _DISPATCH:
        raise ConfigError("command", f"unknown command {command!r}")
    started = time.perf_counter()
    results, violations = _DISPATCH[command](cfg)
    elapsed = time.perf_counter() - started
    return RunReport(
        command=command,
        seed=cfg.seed,
        tolerances=dict(sorted(cfg.tolerances.items())),
        results=results,
        invariant_violations=violations,
        wall_time_s=elapsed if timing else None,
    )


def render_json(report: RunReport) -> str:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "version": __version__,
        "command": report.command,
        "seed": report.seed,
        "tolerances": report.tolerances,
        "results": report.results,
        "invariant_violations": report.invariant_violations,
        "wall_time_s": report.wall_time_s,
    }
    return json.dumps(doc, indent=2) + "\n"


def render_csv(report: RunReport) -> str:
    """Scalar columns of each result row; matrices stay in the JSON form."""
    scalar_keys = []
    for row in report.results:
        for key, val in row.items():
            if isinstance(val, (int, float, str, bool)) or val is None:
                if key not in scalar_keys:
                    scalar_keys.append(key)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(scalar_keys)
    for row in report.results:
        writer.writerow([row.get(k, "") for k in scalar_keys])
    return buf.getvalue()


def _parse_tol_overrides(pairs) -> dict:
    out = {}
    for pair in pairs or ():
        name, sep, value = pair.partition("=")
        if not sep:
            raise ConfigError("--tol", f"expected NAME=VALUE, got {pair!r}")
        try:
            out[name] = float(value)
        except ValueError:
            raise ConfigError("--tol", f"bad value in {pair!r}") from None
    return out


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qbs",
        description="Operator-valued Black-Scholes toolkit: coefficient checks, pricing, residuals, hedging, Monte Carlo.",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="path to a JSON configuration")
    parser.add_argument("--csv", action="store_true", help="emit CSV instead of JSON")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument(
        "--tol",
        action="append",
        metavar="NAME=VALUE",
        help="override a named tolerance (repeatable)",
    )
    parser.add_argument(
        "--omit-timing",
        action="store_true",
        help="drop wall time from the report for byte-stable output",
    )
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        cfg = parse_config(text)
        overrides = _parse_tol_overrides(args.tol)
        for name, value in overrides.items():
            if name not in cfg.tolerances:
                raise ConfigError("--tol", f"unknown tolerance name {name!r}")
            if not value > 0.0:
                raise ConfigError("--tol", f"tolerance {name!r} must be positive")
            cfg.tolerances[name] = value
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("--seed", "seed must be nonnegative")
            cfg.seed = args.seed
        report = run(cfg, args.command, timing=not args.omit_timing)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    use_csv = args.csv or cfg.output == "csv"
    sys.stdout.write(render_csv(report) if use_csv else render_json(report))
    return 3 if report.invariant_violations else 0


if __name__ == "__main__":
    sys.exit(main())
