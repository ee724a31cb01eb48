"""Contraction moduli, sampled checks of the ordered contraction condition,
and the geometric rate / error-bound formulas derived from it."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable, Iterable, Iterator, Optional

import numpy as np

from .lattice import DEFAULT_CONE, ConeSpec, GridFunction, leq, sup_norm

Operator = Callable[[GridFunction], GridFunction]


class ModulusError(ValueError):
    pass


class IncomparablePairError(ValueError):
    """A sampler produced a pair that is not ordered as ``u <= v``."""


_PROBE_T = np.logspace(-9, 9, 401)


@dataclass(frozen=True)
class Modulus:
    """Nondecreasing map ``f: (0, inf) -> (0, 1)``.

    Use the constructors :meth:`constant`, :meth:`logarithmic` and
    :meth:`user` rather than building instances directly.
    """

    kind: str
    c: Optional[float] = None
    func: Optional[Callable[[float], float]] = None

    def __post_init__(self):
        if self.kind == "constant":
            if self.c is None or not (0.0 < self.c < 1.0):
                raise ModulusError(f"constant modulus needs c in (0, 1), got {self.c}")
        elif self.kind == "user":
            if self.func is None:
                raise ModulusError("user modulus needs a callable")
            vals = np.array([float(self.func(float(t))) for t in _PROBE_T])
            if not np.all((vals > 0.0) & (vals < 1.0)):
                bad = _PROBE_T[~((vals > 0.0) & (vals < 1.0))][0]
                raise ModulusError(f"user modulus leaves (0, 1) at t={bad:g}")
            if np.any(np.diff(vals) < 0.0):
                bad = _PROBE_T[1:][np.diff(vals) < 0.0][0]
                raise ModulusError(f"user modulus decreases near t={bad:g}")
        elif self.kind != "logarithmic":
            raise ModulusError(f"unknown modulus kind {self.kind!r}")

    @classmethod
    def constant(cls, c: float) -> "Modulus":
        return cls("constant", c=float(c))

    @classmethod
    def logarithmic(cls) -> "Modulus":
        """``f(t) = t * ln(1 + 1/t)``."""
        return cls("logarithmic")

    @classmethod
    def user(cls, func: Callable[[float], float]) -> "Modulus":
        return cls("user", func=func)

    def __call__(self, t):
        return eval_modulus(self, t)

    def describe(self) -> dict:
        if self.kind == "constant":
            return {"kind": "constant", "c": self.c}
        return {"kind": self.kind}


def eval_modulus(f: Modulus, t):
    """Evaluate ``f`` at ``t > 0`` (scalar or array).

    ``f`` is undefined at 0; callers short-circuit the converged case.
    """
    arr = np.asarray(t, dtype=float)
    if np.any(~(arr > 0.0)):
        raise ModulusError(f"modulus is defined on t > 0 only, got {t!r}")
    if f.kind == "constant":
        out = np.full_like(arr, f.c)
    elif f.kind == "logarithmic":
        out = arr * np.log1p(1.0 / arr)
    else:
        out = np.vectorize(lambda s: float(f.func(float(s))))(arr)
    return float(out) if out.ndim == 0 else out


@dataclass
class ConditionReport:
    pairs_tested: int = 0
    pairs_passed: int = 0
    worst_ratio: float = 0.0
    witness: Optional[Any] = None

    @property
    def passed(self) -> bool:
        return self.pairs_passed == self.pairs_tested

    def to_dict(self) -> dict:
        return {
            "pairs_tested": self.pairs_tested,
            "pairs_passed": self.pairs_passed,
            "worst_ratio": self.worst_ratio,
            "passed": self.passed,
            "witness": _witness_dict(self.witness),
        }


def _witness_dict(w):
    if w is None:
        return None
    out = {}
    for k, v in w.items():
        if isinstance(v, GridFunction):
            out[k] = v.values.tolist()
        elif isinstance(v, np.generic):
            out[k] = v.item()
        else:
            out[k] = v
    return out


def violation_ratio(lhs: np.ndarray, rhs: np.ndarray, tol: float) -> np.ndarray:
    """Per-entry ratio ``lhs / (rhs + tol)``; ``lhs <= rhs + tol`` iff ratio <= 1."""
    lhs = np.asarray(lhs, dtype=float)
    den = np.asarray(rhs, dtype=float) + tol
    out = np.zeros(np.broadcast(lhs, den).shape)
    pos = den > 0.0
    out[pos] = (lhs / np.where(pos, den, 1.0))[pos]
    out[~pos & (np.broadcast_to(lhs, out.shape) > 0.0)] = np.inf
    return out


def comparable_pairs(
    n: int,
    count: int,
    seed: int = 0,
    low: float = 0.0,
    high: float = 1.0,
    min_gap_scale: float = 1e-6,
) -> Iterator[tuple[GridFunction, GridFunction]]:
    """Seeded pairs ``(u, u + p)`` with ``p >= 0`` and both inside ``[low, high]``.

    Each pair's gap is scaled by a log-uniform factor in
    ``[min_gap_scale, 1]`` so that small and large gaps are both exercised.
    """
    rng = np.random.default_rng(seed)
    for _ in range(count):
        u = low + (high - low) * rng.random(n + 1)
        scale = 10.0 ** rng.uniform(math.log10(min_gap_scale), 0.0)
        p = (high - u) * rng.random(n + 1) * scale
        yield GridFunction(u), GridFunction(u + p)


def _run_pair_check(
    pairs: Iterable[tuple[GridFunction, GridFunction]],
    lhs_of: Callable[[GridFunction, GridFunction], np.ndarray],
    coef_of: Callable[[float], float],
    spec: ConeSpec,
) -> ConditionReport:
    report = ConditionReport(worst_ratio=-math.inf)
    for u, v in pairs:
        if not leq(u, v, spec):
            raise IncomparablePairError("sampler produced a pair with u not <= v")
        gap = v - u
        lhs = lhs_of(u, v)
        dist = sup_norm(gap)
        rhs = coef_of(dist) * gap.values if dist > 0.0 else np.zeros_like(lhs)
        ratio = violation_ratio(lhs, rhs, spec.order_tol)
        worst = int(np.argmax(ratio))
        report.pairs_tested += 1
        if ratio[worst] <= 1.0:
            report.pairs_passed += 1
        if ratio[worst] > report.worst_ratio:
            report.worst_ratio = float(ratio[worst])
            if ratio[worst] > 1.0:
                report.witness = {
                    "u": u,
                    "v": v,
                    "node": worst,
                    "lhs": float(lhs[worst]),
                    "rhs": float(rhs[worst]),
                }
    if report.pairs_tested == 0:
        report.worst_ratio = 0.0
    return report


def check_condition_H(
    A: Operator,
    f: Modulus,
    sampler: Iterable[tuple[GridFunction, GridFunction]],
    spec: ConeSpec = DEFAULT_CONE,
) -> ConditionReport:
    """Check ``A(u) - A(v) <= f(||v - u||) (v - u)`` nodewise on sampled ``u <= v``.

    Raises
    ------
    IncomparablePairError
        If the sampler yields a pair that is not ordered.
    """

    def lhs_of(u, v):
        return A(u).values - A(v).values

    return _run_pair_check(sampler, lhs_of, lambda d: eval_modulus(f, d), spec)


def squared_factor(f: Modulus, spec: ConeSpec, gap: float) -> float:
    """``f(N f(g) g) f(g)``: the contraction factor of ``A o A`` at native gap ``g``."""
    inner = eval_modulus(f, gap)
    return eval_modulus(f, spec.normal_constant * inner * gap) * inner


def check_squared_contraction(
    B: Operator,
    f: Modulus,
    sampler: Iterable[tuple[GridFunction, GridFunction]],
    spec: ConeSpec = DEFAULT_CONE,
) -> ConditionReport:
    """Check ``B(v) - B(u) <= f(N f(||u-v||) ||u-v||) f(||u-v||) (v - u)`` on sampled ``u <= v``."""

    def lhs_of(u, v):
        return B(v).values - B(u).values

    return _run_pair_check(sampler, lhs_of, lambda d: squared_factor(f, spec, d), spec)


def contraction_rate(f: Modulus, spec: ConeSpec, d0: float) -> float:
    """Geometric rate ``f(N f(M d0) M d0) f(M d0)`` of the squared-operator iteration."""
    if not d0 > 0.0:
        raise ValueError(f"d0 must be positive (d0 = 0 means converged), got {d0}")
    md = spec.upper_equiv * d0
    inner = eval_modulus(f, md)
    return eval_modulus(f, spec.normal_constant * inner * md) * inner


def _check_rate(lam: float) -> None:
    if not (0.0 < lam < 1.0):
        raise ValueError(f"rate must lie in (0, 1), got {lam}")


def a_priori_bound(lam: float, d0: float, k: int) -> float:
    """``lam**k / (1 - lam) * d0``, bounding ``||x* - x_k||_1``."""
    _check_rate(lam)
    if d0 < 0.0:
        raise ValueError("d0 must be nonnegative")
    return lam**k / (1.0 - lam) * d0


def a_posteriori_bound(lam: float, last_step: float) -> float:
    """``lam / (1 - lam) * last_step``, bounding the distance of the newest iterate to the limit."""
    _check_rate(lam)
    if last_step < 0.0:
        raise ValueError("last_step must be nonnegative")
    return lam / (1.0 - lam) * last_step
