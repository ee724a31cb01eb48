"""Concrete decreasing operators on grid functions.

``SignalFeedbackOperator`` is the signal self-feedback map

    A u(t) = 1/(2 pi + u(t)) - pi^2/16 * int_0^1 (s^2 + t^2)(1 + u(t) s^2)/(2 pi M) ds

and ``PeriodicBVPOperator`` is the Green's-function form of the periodic
problem ``u' = F(t, u)``, ``u(0) = u(1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator

import numpy as np

from .contraction import ConditionReport, Modulus, eval_modulus, violation_ratio
from .lattice import GridFunction, nodes
from .quadrature import quadrature_weights, simpson_weights

TWO_PI = 2.0 * math.pi


class OperatorDomainError(ValueError):
    pass


@dataclass(frozen=True)
class SignalFeedbackOperator:
    """Signal self-feedback map with channel parameter ``m_param``.

    ``integral_mode="analytic"`` uses the closed form of the inner integral,
    ``1/3 + t^2 + u (1/5 + t^2/3)``; ``"quadrature"`` integrates it on the
    grid.  The formula has a pole at ``u = -2 pi``, so inputs must stay
    above it.  With ``cone_domain=True`` inputs are further restricted to
    the nonnegative cone.
    """

    m_param: int = 1
    n: int = 1000
    integral_mode: str = "analytic"
    cone_domain: bool = False
    order_tol: float = 1e-12
    residual_allowance: float = 0.0

    def __post_init__(self):
        if int(self.m_param) != self.m_param or self.m_param < 1:
            raise ValueError(f"m_param must be a positive integer, got {self.m_param}")
        if self.integral_mode not in ("analytic", "quadrature"):
            raise ValueError(f"unknown integral_mode {self.integral_mode!r}")
        if self.n < 1:
            raise ValueError("grid resolution must be positive")

    @property
    def coupling(self) -> float:
        """``pi^2/16 / (2 pi M) = pi / (32 M)``."""
        return math.pi / (32.0 * self.m_param)

    def inner_integral(self, u: GridFunction) -> np.ndarray:
        t = u.nodes
        if self.integral_mode == "analytic":
            return 1.0 / 3.0 + t**2 + u.values * (0.2 + t**2 / 3.0)
        s = nodes(u.n)
        integrand = (s[None, :] ** 2 + t[:, None] ** 2) * (1.0 + u.values[:, None] * s[None, :] ** 2)
        return integrand @ quadrature_weights(u.n)

    def __call__(self, u: GridFunction) -> GridFunction:
        return signal_apply(self, u)


def signal_apply(op: SignalFeedbackOperator, u: GridFunction) -> GridFunction:
    if u.n != op.n:
        raise ValueError(f"operator grid n={op.n} does not match input n={u.n}")
    vals = u.values
    if op.cone_domain and np.any(vals < -op.order_tol):
        i = int(np.argmin(vals))
        raise OperatorDomainError(f"negative input {vals[i]:.3g} at node {i}; domain is u >= 0")
    if np.any(vals <= -TWO_PI):
        i = int(np.argmin(vals))
        raise OperatorDomainError(f"input {vals[i]:.3g} at node {i} is at or below the pole -2*pi")
    return GridFunction(1.0 / (TWO_PI + vals) - op.coupling * op.inner_integral(u))


def signal_contraction_margin(op: SignalFeedbackOperator) -> float:
    """``1/(4 pi^2) + pi/(60 M)``, the nodewise contraction factor on the cone."""
    return 1.0 / (4.0 * math.pi**2) + math.pi / (60.0 * op.m_param)


def greens_function(lambda_bvp: float, t, s):
    """Periodic Green's function for ``u' + lambda u``; the diagonal takes the ``s < t`` branch."""
    if not lambda_bvp > 0.0:
        raise ValueError(f"lambda_bvp must be positive, got {lambda_bvp}")
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    denom = math.expm1(lambda_bvp)
    out = np.where(s <= t, np.exp(lambda_bvp * (1.0 + s - t)), np.exp(lambda_bvp * (s - t))) / denom
    return float(out) if out.ndim == 0 else out


def greens_weights(lambda_bvp: float, n: int, rule: str = "split") -> np.ndarray:
    """Matrix ``W`` with ``(W @ g)[i]`` approximating ``int_0^1 G(t_i, s) g(s) ds``.

    ``rule="split"`` integrates the two smooth branches of ``G(t_i, .)``
    separately on ``[0, t_i]`` and ``[t_i, 1]``.  A one-interval piece uses
    Simpson's rule with ``g`` linearly interpolated at the midpoint.
    ``rule="naive"`` applies one whole-interval rule across the kink.
    """
    t = nodes(n)
    h = 1.0 / n
    denom = math.expm1(lambda_bvp)
    W = np.zeros((n + 1, n + 1))
    if rule == "naive":
        return greens_function(lambda_bvp, t[:, None], t[None, :]) * quadrature_weights(n)[None, :]
    if rule != "split":
        raise ValueError(f"unknown rule {rule!r}")

    def left(ti, s):
        return np.exp(lambda_bvp * (1.0 + s - ti)) / denom

    def right(ti, s):
        return np.exp(lambda_bvp * (s - ti)) / denom

    for i, ti in enumerate(t):
        for lo, hi, branch in ((0, i, left), (i, n, right)):
            k = hi - lo
            if k == 0:
                continue
            s = t[lo:hi + 1]
            g = branch(ti, s)
            if k == 1:
                gm = branch(ti, 0.5 * (s[0] + s[1]))
                W[i, lo] += h / 6.0 * (g[0] + 2.0 * gm)
                W[i, hi] += h / 6.0 * (g[1] + 2.0 * gm)
            else:
                W[i, lo:hi + 1] += simpson_weights(k, h) * g
    return W


@dataclass(frozen=True)
class PeriodicBVPOperator:
    """``(T u)(t) = int_0^1 G(t, s) [F(s, u(s)) + lambda u(s)] ds``.

    ``F`` is called with numpy arrays ``(s, u)`` and must broadcast.
    ``alpha`` must satisfy ``0 < alpha <= lambda_bvp * normal_constant``.
    """

    lambda_bvp: float
    F: Callable[[np.ndarray, np.ndarray], np.ndarray]
    alpha: float
    n: int = 1000
    rule: str = "split"
    normal_constant: float = 1.0
    residual_allowance: float = 0.0
    weights: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.lambda_bvp > 0.0:
            raise ValueError("lambda_bvp must be positive")
        if not (0.0 < self.alpha <= self.lambda_bvp * self.normal_constant):
            raise ValueError(
                f"alpha={self.alpha} outside (0, lambda*N] = (0, {self.lambda_bvp * self.normal_constant}]"
            )
        W = greens_weights(self.lambda_bvp, self.n, self.rule)
        W.setflags(write=False)
        object.__setattr__(self, "weights", W)

    def integrand(self, u: GridFunction) -> np.ndarray:
        s = u.nodes
        with np.errstate(all="ignore"):
            vals = np.broadcast_to(np.asarray(self.F(s, u.values), dtype=float), s.shape)
        bad = ~np.isfinite(vals)
        if np.any(bad):
            i = int(np.flatnonzero(bad)[0])
            raise OperatorDomainError(f"F is not finite at node {i} (t={s[i]:g}, u={u.values[i]:g})")
        return vals + self.lambda_bvp * u.values

    def __call__(self, u: GridFunction) -> GridFunction:
        return periodic_apply(self, u)


def periodic_apply(op: PeriodicBVPOperator, u: GridFunction) -> GridFunction:
    if u.n != op.n:
        raise ValueError(f"operator grid n={op.n} does not match input n={u.n}")
    return GridFunction(op.weights @ op.integrand(u))


def scalar_triples(
    count: int,
    seed: int = 0,
    gap_low: float = 1e-6,
    gap_high: float = 10.0,
    y_low: float = -5.0,
    y_high: float = 5.0,
) -> Iterator[tuple[float, float, float]]:
    """Seeded ``(t, x, y)`` with ``x > y`` and ``x - y`` log-uniform in ``[gap_low, gap_high]``."""
    rng = np.random.default_rng(seed)
    for _ in range(count):
        t = rng.random()
        y = rng.uniform(y_low, y_high)
        gap = 10.0 ** rng.uniform(math.log10(gap_low), math.log10(gap_high))
        yield t, y + gap, y


def check_thm32_hypothesis(
    F: Callable,
    lambda_bvp: float,
    alpha: float,
    sampler: Iterable[tuple[float, float, float]],
    tol: float = 1e-12,
) -> ConditionReport:
    """Check ``0 <= h(y) - h(x) <= alpha (x - y) f(x - y)`` for ``x > y``,
    where ``h(u) = F(t, u) + lambda u`` and ``f(d) = d ln(1 + 1/d)``.

    Raises ``ValueError`` when a sampled triple has ``x <= y``.
    """
    log_mod = Modulus.logarithmic()
    report = ConditionReport(worst_ratio=-math.inf)
    for t, x, y in sampler:
        if not x > y:
            raise ValueError(f"sampler produced x={x} <= y={y}")
        d = x - y
        drop = (F(t, y) + lambda_bvp * y) - (F(t, x) + lambda_bvp * x)
        bound = alpha * d * eval_modulus(log_mod, d)
        ratios = violation_ratio(np.array([-drop, drop]), np.array([0.0, bound]), tol)
        which = int(np.argmax(ratios))
        report.pairs_tested += 1
        if ratios[which] <= 1.0:
            report.pairs_passed += 1
        if ratios[which] > report.worst_ratio:
            report.worst_ratio = float(ratios[which])
            if ratios[which] > 1.0:
                report.witness = {
                    "t": t,
                    "x": x,
                    "y": y,
                    "gap": d,
                    "inequality": "lower" if which == 0 else "upper",
                    "drop": drop,
                    "bound": bound,
                }
    if report.pairs_tested == 0:
        report.worst_ratio = 0.0
    return report


def ode_residual(u: GridFunction, F: Callable) -> float:
    """Max of the central-difference defect of ``u' = F(t, u)`` at interior
    nodes and the periodicity defect ``|u(0) - u(1)|``."""
    if u.n < 2:
        raise ValueError("need n >= 2 for central differences")
    t = u.nodes
    h = 1.0 / u.n
    du = (u.values[2:] - u.values[:-2]) / (2.0 * h)
    rhs = np.broadcast_to(np.asarray(F(t[1:-1], u.values[1:-1]), dtype=float), du.shape)
    return float(max(np.max(np.abs(du - rhs)), abs(u.values[0] - u.values[-1])))
