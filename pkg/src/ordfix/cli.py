"""Command-line runner for the bundled scenarios.

    ordfix solve --scenario signal --trace --format csv --out trace.csv

Settings come from flags, then an optional ``--config`` file of
``key = value`` lines, then built-in defaults.  Exit codes: 0 success,
2 bad configuration or unwritable output, 3 solver failure, 4 violated
contraction condition.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import sys
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import __version__
from .contraction import Modulus, check_condition_H, comparable_pairs
from .lattice import DEFAULT_CONE, GridFunction
from .operators import (
    PeriodicBVPOperator,
    SignalFeedbackOperator,
    check_thm32_hypothesis,
    ode_residual,
    scalar_triples,
)
from .solver import FixedPointResult, SolveConfig, SolverError, solve, uniqueness_probe

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_CONDITION = 4

SCENARIOS = ("signal", "periodic", "check-h", "probe-uniqueness")
CHECK_OPERATORS = ("signal", "steep", "periodic")
TRACE_FIELDS = ("iter", "step_norm", "a_priori", "a_posteriori")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    scenario: str
    grid_n: int = 1000
    tol: float = 1e-10
    max_iters: int = 10_000
    m_param: int = 1
    lambda_bvp: float = 1.0
    alpha: Optional[float] = None
    c: float = 2.0
    seed: int = 0
    output_format: str = "json"
    output_path: Optional[str] = None
    trace: bool = False
    operator: str = "signal"
    modulus_c: float = 0.15
    pairs: int = 200

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}; choose from {', '.join(SCENARIOS)}")
        if self.grid_n < 2:
            raise ConfigError("grid_n must be >= 2")
        if not (self.tol > 0.0 and math.isfinite(self.tol)):
            raise ConfigError("tol must be positive")
        if self.max_iters < 1:
            raise ConfigError("max_iters must be >= 1")
        if self.m_param < 1:
            raise ConfigError("m_param must be a positive integer")
        if not self.lambda_bvp > 0.0:
            raise ConfigError("lambda must be positive")
        if self.alpha is not None and not (0.0 < self.alpha <= self.lambda_bvp * DEFAULT_CONE.normal_constant):
            raise ConfigError("alpha must lie in (0, lambda*N]")
        if self.output_format not in ("json", "csv"):
            raise ConfigError("format must be json or csv")
        if self.operator not in CHECK_OPERATORS:
            raise ConfigError(f"operator must be one of {', '.join(CHECK_OPERATORS)}")
        if not (0.0 < self.modulus_c < 1.0):
            raise ConfigError("modulus_c must lie in (0, 1)")
        if self.pairs < 1:
            raise ConfigError("pairs must be >= 1")

    @property
    def effective_alpha(self) -> float:
        return self.alpha if self.alpha is not None else self.lambda_bvp * DEFAULT_CONE.normal_constant

    def echo(self) -> dict:
        d = dataclasses.asdict(self)
        d["alpha"] = self.effective_alpha
        return d


_FIELD_TYPES = {
    "scenario": str,
    "grid_n": int,
    "tol": float,
    "max_iters": int,
    "m_param": int,
    "lambda_bvp": float,
    "alpha": float,
    "c": float,
    "seed": int,
    "output_format": str,
    "output_path": str,
    "trace": bool,
    "operator": str,
    "modulus_c": float,
    "pairs": int,
}

_ALIASES = {"lambda": "lambda_bvp", "format": "output_format", "out": "output_path"}


def _normalize_key(key: str) -> str:
    key = key.strip().replace("-", "_")
    return _ALIASES.get(key, key)


def _coerce(key: str, raw):
    kind = _FIELD_TYPES[key]
    if kind is bool:
        if isinstance(raw, bool):
            return raw
        text = str(raw).strip().lower()
        if text in ("1", "true", "yes", "on"):
            return True
        if text in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
    try:
        return kind(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: cannot parse {raw!r} as {kind.__name__}") from None


def parse_config_file(path: str) -> dict:
    """Read ``key = value`` lines; ``#`` starts a comment."""
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from None
    out = {}
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        key = _normalize_key(key)
        if key not in _FIELD_TYPES:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = _coerce(key, value)
    return out


def build_config(flags: dict, file_values: Optional[dict] = None) -> RunConfig:
    merged = dict(file_values or {})
    for key, value in flags.items():
        if value is None:
            continue
        key = _normalize_key(key)
        if key not in _FIELD_TYPES:
            raise ConfigError(f"unknown key {key!r}")
        merged[key] = _coerce(key, value)
    if "scenario" not in merged:
        raise ConfigError("scenario is required")
    return RunConfig(**merged)


def _solve_cfg(cfg: RunConfig) -> SolveConfig:
    return SolveConfig(tol=cfg.tol, max_iters=cfg.max_iters, record_trace=True, seed=cfg.seed)


def trace_rows(result: FixedPointResult) -> list[dict]:
    if result.trace is None:
        raise ValueError("result carries no trace; solve with record_trace=True")
    return [
        {"iter": s.index, "step_norm": s.step_norm, "a_priori": s.a_priori, "a_posteriori": s.a_posteriori}
        for s in result.trace.steps
    ]


def _fmt(x) -> str:
    return format(x, ".17g") if isinstance(x, float) else str(x)


def trace_csv(result: FixedPointResult) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRACE_FIELDS)
    for row in trace_rows(result):
        writer.writerow([_fmt(row[k]) for k in TRACE_FIELDS])
    return buf.getvalue()


def emit_trace(result: FixedPointResult, fmt: str, path: Optional[str]) -> None:
    """Write the iterate trace as CSV or JSON to ``path`` (stdout when ``None``)."""
    if fmt == "csv":
        text = trace_csv(result)
    elif fmt == "json":
        text = json.dumps({"steps": trace_rows(result)}, indent=2) + "\n"
    else:
        raise ValueError(f"unknown format {fmt!r}")
    _write(text, path)


def _write(text: str, path: Optional[str]) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    with open(path, "w") as fh:
        fh.write(text)


def result_dict(result: FixedPointResult) -> dict:
    return {
        "fixed_point_values": result.fixed_point.values.tolist(),
        "residual": result.residual,
        "residual_threshold": result.residual_threshold,
        "lambda": result.lam,
        "d0": result.d0,
        "iterations": result.iterations,
        "case": result.case_taken,
        "direction": result.direction,
    }


def _signal_starts(n: int) -> tuple[list[str], list[GridFunction]]:
    labels = ["0", "1", "t", "1-t", "sin^2(pi t)"]
    funcs = [
        lambda t: 0.0 * t,
        lambda t: 1.0 + 0.0 * t,
        lambda t: t,
        lambda t: 1.0 - t,
        lambda t: np.sin(np.pi * t) ** 2,
    ]
    return labels, [GridFunction.from_callable(fn, n) for fn in funcs]


def steep_operator(u: GridFunction) -> GridFunction:
    """``A(u) = -2u``: decreasing but expanding, so the contraction condition fails."""
    return -2.0 * u


def _periodic_F(cfg: RunConfig):
    c, lam = cfg.c, cfg.lambda_bvp
    return lambda t, u: c - lam * u


def _run_scenario(cfg: RunConfig) -> tuple[dict, int, Optional[FixedPointResult]]:
    n = cfg.grid_n
    if cfg.scenario == "signal":
        A = SignalFeedbackOperator(m_param=cfg.m_param, n=n)
        res = solve(A, GridFunction.constant(0.0, n), Modulus.constant(cfg.modulus_c), DEFAULT_CONE, _solve_cfg(cfg))
        body = {"result": result_dict(res)}
        return body, EXIT_OK if res.ok else EXIT_SOLVER, res

    if cfg.scenario == "periodic":
        F = _periodic_F(cfg)
        T = PeriodicBVPOperator(cfg.lambda_bvp, F, cfg.effective_alpha, n=n)
        hyp = check_thm32_hypothesis(F, cfg.lambda_bvp, cfg.effective_alpha, scalar_triples(10_000, cfg.seed))
        res = solve(T, GridFunction.constant(0.0, n), Modulus.logarithmic(), DEFAULT_CONE, _solve_cfg(cfg))
        body = {
            "result": result_dict(res),
            "ode_residual": ode_residual(res.fixed_point, F),
            "hypothesis": hyp.to_dict(),
        }
        if not res.ok:
            return body, EXIT_SOLVER, res
        return body, EXIT_OK if hyp.passed else EXIT_CONDITION, res

    if cfg.scenario == "check-h":
        if cfg.operator == "signal":
            A = SignalFeedbackOperator(m_param=cfg.m_param, n=n)
        elif cfg.operator == "steep":
            A = steep_operator
        else:
            A = PeriodicBVPOperator(cfg.lambda_bvp, _periodic_F(cfg), cfg.effective_alpha, n=n)
        report = check_condition_H(
            A, Modulus.constant(cfg.modulus_c), comparable_pairs(n, cfg.pairs, cfg.seed), DEFAULT_CONE
        )
        return {"result": report.to_dict()}, EXIT_OK if report.passed else EXIT_CONDITION, None

    A = SignalFeedbackOperator(m_param=cfg.m_param, n=n)
    labels, starts = _signal_starts(n)
    probe = uniqueness_probe(A, starts, Modulus.constant(cfg.modulus_c), DEFAULT_CONE, _solve_cfg(cfg), labels)
    runs = []
    failed = False
    for label, res, err in probe.runs:
        entry = {"start": label, "error": err}
        if res is not None:
            entry.update(residual=res.residual, iterations=res.iterations, case=res.case_taken)
            entry["lambda"] = res.lam
            failed |= not res.ok
        failed |= err is not None
        runs.append(entry)
    body = {"result": {"runs": runs, "max_pairwise_distance": probe.max_pairwise_distance}}
    if failed or probe.max_pairwise_distance > 10.0 * cfg.tol:
        return body, EXIT_SOLVER, None
    return body, EXIT_OK, None


def _summary_csv(cfg: RunConfig, body: dict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    result = body["result"]
    if cfg.scenario == "check-h":
        cols = ["pairs_tested", "pairs_passed", "worst_ratio", "passed"]
        writer.writerow(cols)
        writer.writerow([_fmt(result[k]) for k in cols])
    else:
        cols = ["start", "residual", "iterations", "case", "error"]
        writer.writerow(cols)
        for run in result["runs"]:
            writer.writerow([_fmt(run.get(k, "")) if run.get(k) is not None else "" for k in cols])
    return buf.getvalue()


def run(cfg: RunConfig) -> tuple[dict, int]:
    """Run one scenario, write its report, and return ``(report, exit_code)``."""
    start = time.perf_counter()
    result = None
    try:
        body, code, result = _run_scenario(cfg)
    except SolverError as exc:
        body, code = {"error": f"{type(exc).__name__}: {exc}"}, EXIT_SOLVER
    report = {"config": cfg.echo(), "version": __version__, **body}
    if cfg.trace and result is not None:
        report["trace"] = trace_rows(result)
    report["wall_ms"] = (time.perf_counter() - start) * 1e3
    report["exit_code"] = code

    if cfg.output_format == "json":
        text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    elif result is not None:
        text = trace_csv(result)
    elif "result" in body:
        text = _summary_csv(cfg, body)
    else:
        text = "error\n" + body["error"] + "\n"
    _write(text, cfg.output_path)
    return report, code


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ordfix", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("solve", help="run a scenario and write its report")
    s.add_argument("--scenario", choices=SCENARIOS)
    s.add_argument("--config", help="key = value file; flags take precedence")
    s.add_argument("--grid-n", type=int)
    s.add_argument("--tol", type=float)
    s.add_argument("--max-iters", type=int)
    s.add_argument("--m-param", type=int)
    s.add_argument("--lambda", dest="lambda_bvp", type=float)
    s.add_argument("--alpha", type=float)
    s.add_argument("--c", type=float)
    s.add_argument("--seed", type=int)
    s.add_argument("--format", dest="output_format", choices=("json", "csv"))
    s.add_argument("--out", dest="output_path")
    s.add_argument("--trace", action="store_const", const=True, default=None)
    s.add_argument("--operator", choices=CHECK_OPERATORS, help="operator for check-h")
    s.add_argument("--modulus-c", type=float, help="constant modulus value (default 0.15)")
    s.add_argument("--pairs", type=int, help="sampled pairs for check-h")
    return p


def main(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    flags = vars(args)
    flags.pop("command")
    config_path = flags.pop("config")
    try:
        file_values = parse_config_file(config_path) if config_path else {}
        cfg = build_config(flags, file_values)
    except (ConfigError, TypeError) as exc:
        print(f"ordfix: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        _, code = run(cfg)
    except OSError as exc:
        print(f"ordfix: cannot write output: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return code


if __name__ == "__main__":
    sys.exit(main())
