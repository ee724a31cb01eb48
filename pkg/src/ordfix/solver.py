"""Monotone fixed-point iteration for decreasing ordered contractions.

A decreasing operator ``A`` is squared into the increasing ``B = A o A``.
Starting from a point comparable with its image, the Picard chain
``x_{n+1} = B x_n`` is monotone and contracts at the explicit rate
returned by :func:`~ordfix.contraction.contraction_rate`.  Its limit is
then checked as a fixed point of ``A`` itself.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from typing import Optional, Sequence

from .contraction import (
    Modulus,
    Operator,
    a_posteriori_bound,
    a_priori_bound,
    contraction_rate,
)
from .lattice import DEFAULT_CONE, ConeSpec, GridFunction, distance, inf_sup, leq, monotone_norm, sup_norm

logger = logging.getLogger(__name__)

INCREASING = "increasing"
DECREASING = "decreasing"


class SolverError(RuntimeError):
    pass


class StartSelectionError(SolverError):
    """The chosen start is not ordered against its image under ``A o A``."""


class MonotonicityError(SolverError):
    """The Picard chain stopped being monotone."""


class ConvergenceError(SolverError):
    """``max_iters`` ran out before the error certificate reached ``tol``."""

    def __init__(self, message, trace=None, iterate=None):
        super().__init__(message)
        self.trace = trace
        self.iterate = iterate


@dataclass(frozen=True)
class SolveConfig:
    tol: float = 1e-10
    max_iters: int = 10_000
    record_trace: bool = True
    seed: int = 0
    retighten: bool = False

    def __post_init__(self):
        if not self.tol > 0.0:
            raise ValueError("tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


@dataclass(frozen=True)
class TraceStep:
    index: int
    step_norm: float
    a_priori: float
    a_posteriori: float


@dataclass
class IterateTrace:
    direction: str
    applications: int = 0
    steps: list[TraceStep] = field(default_factory=list)
    # x_0, x_1, ... kept only when the trace is recorded
    iterates: list[GridFunction] = field(default_factory=list)


@dataclass
class FixedPointResult:
    fixed_point: GridFunction
    residual: float
    residual_threshold: float
    lam: Optional[float]
    d0: float
    iterations: int
    case_taken: str
    direction: str
    trace: Optional[IterateTrace] = None

    @property
    def ok(self) -> bool:
        return self.residual <= self.residual_threshold


@dataclass
class UniquenessReport:
    runs: list[tuple[str, Optional[FixedPointResult], Optional[str]]]
    max_pairwise_distance: float


class Squared:
    """``B(u) = A(A(u))``."""

    def __init__(self, A: Operator):
        self.A = A

    def __call__(self, u: GridFunction) -> GridFunction:
        return self.A(self.A(u))


def square(A: Operator) -> Operator:
    return Squared(A)


def choose_start(
    A: Operator, u0: GridFunction, spec: ConeSpec = DEFAULT_CONE
) -> tuple[GridFunction, str, str]:
    """Pick a start ``x0`` ordered against ``A(A(x0))``.

    Returns ``(x0, case, direction)``.  Case ``"I"`` keeps ``u0`` when it is
    comparable with ``A(u0)``; case ``"II"`` restarts from the pointwise
    minimum of ``u0`` and ``A(u0)``.
    """
    Au0 = A(u0)
    if leq(u0, Au0, spec):
        x0, case, direction = u0, "I", INCREASING
    elif leq(Au0, u0, spec):
        x0, case, direction = u0, "I", DECREASING
    else:
        x0, case, direction = inf_sup(u0, Au0)[0], "II", INCREASING

    Bx0 = A(A(x0))
    ordered = leq(x0, Bx0, spec) if direction == INCREASING else leq(Bx0, x0, spec)
    if not ordered:
        raise StartSelectionError(
            f"case {case}: start is not {direction} under A o A; "
            "A is not decreasing or violates the contraction condition"
        )
    return x0, case, direction


def iterate(
    B: Operator,
    x0: GridFunction,
    f: Modulus,
    spec: ConeSpec = DEFAULT_CONE,
    cfg: SolveConfig = SolveConfig(),
    direction: str = INCREASING,
) -> tuple[GridFunction, IterateTrace, Optional[float], float]:
    """Run ``x_{n+1} = B x_n`` until the a-posteriori bound drops below ``cfg.tol``.

    Returns ``(x, trace, lam, d0)``.  ``lam`` is ``None`` when ``x0`` is
    already fixed (``d0 == 0``).
    """
    trace = IterateTrace(direction=direction)
    x = B(x0)
    d0 = monotone_norm(x - x0, spec)
    _check_chain(x0, x, direction, spec, 0)
    if cfg.record_trace:
        trace.iterates.extend([x0, x])
    trace.applications = 1
    if d0 == 0.0:
        return x0, trace, None, 0.0

    lam = contraction_rate(f, spec, d0)
    step = d0
    k = 0
    rate = lam
    bound = a_posteriori_bound(rate, step)
    if cfg.record_trace:
        trace.steps.append(TraceStep(0, step, a_priori_bound(lam, d0, 0), bound))
    while bound > cfg.tol:
        if k + 1 >= cfg.max_iters:
            raise ConvergenceError(
                f"no certificate below tol={cfg.tol:g} after {cfg.max_iters} applications "
                f"(last bound {bound:.3e})",
                trace=trace,
                iterate=x,
            )
        x_next = B(x)
        k += 1
        trace.applications += 1
        _check_chain(x, x_next, direction, spec, k)
        step = monotone_norm(x_next - x, spec)
        x = x_next
        if cfg.retighten and step > 0.0:
            rate = min(rate, contraction_rate(f, spec, step))
        bound = a_posteriori_bound(rate, step)
        if cfg.record_trace:
            trace.steps.append(TraceStep(k, step, a_priori_bound(lam, d0, k), bound))
            trace.iterates.append(x)
    logger.debug("converged after %d applications of B, lam=%.6g", k + 1, lam)
    return x, trace, lam, d0


def _check_chain(prev, nxt, direction, spec, k):
    ok = leq(prev, nxt, spec) if direction == INCREASING else leq(nxt, prev, spec)
    if not ok:
        raise MonotonicityError(f"chain is not {direction} at step {k}")


def solve(
    A: Operator,
    u0: GridFunction,
    f: Modulus,
    spec: ConeSpec = DEFAULT_CONE,
    cfg: SolveConfig = SolveConfig(),
) -> FixedPointResult:
    """Fixed point of the decreasing operator ``A`` via the squared iteration.

    The returned residual is ``||A(x) - x||`` in the sup norm.  It is
    compared against ``M (N + 1) tol`` plus the operator's
    ``residual_allowance`` attribute (0 if absent); ``result.ok`` reports
    the outcome.
    """
    x0, case, direction = choose_start(A, u0, spec)
    B = square(A)
    x, trace, lam, d0 = iterate(B, x0, f, spec, cfg, direction)
    residual = sup_norm(A(x) - x)
    threshold = (
        spec.upper_equiv * (spec.normal_constant + 1.0) * cfg.tol
        + float(getattr(A, "residual_allowance", 0.0))
    )
    return FixedPointResult(
        fixed_point=x,
        residual=residual,
        residual_threshold=threshold,
        lam=lam,
        d0=d0,
        iterations=trace.applications,
        case_taken=case,
        direction=direction,
        trace=trace if cfg.record_trace else None,
    )


def uniqueness_probe(
    A: Operator,
    starts: Sequence[GridFunction],
    f: Modulus,
    spec: ConeSpec = DEFAULT_CONE,
    cfg: SolveConfig = SolveConfig(),
    labels: Optional[Sequence[str]] = None,
    workers: int = 1,
) -> UniquenessReport:
    """Solve from every start and report the largest distance between the limits.

    A failing solve is recorded with its error message and excluded from the
    distance computation.  Limits whose residual exceeds the threshold are
    kept, since spurious limits are exactly what the probe looks for.
    """
    labels = list(labels) if labels is not None else [f"start[{i}]" for i in range(len(starts))]

    def one(u0):
        try:
            return solve(A, u0, f, spec, cfg), None
        except (SolverError, ValueError) as exc:
            return None, f"{type(exc).__name__}: {exc}"

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(one, starts))
    else:
        outcomes = [one(u0) for u0 in starts]

    runs = [(lab, res, err) for lab, (res, err) in zip(labels, outcomes)]
    points = [res.fixed_point for _, res, _ in runs if res is not None]
    dist = max((distance(p, q) for p, q in combinations(points, 2)), default=0.0)
    return UniquenessReport(runs=runs, max_pairwise_distance=dist)
