"""Grid functions on [0, 1] with the pointwise cone order.

Elements of C[0, 1] are represented by their values on the uniform grid
``t_i = i / n``.  Order, norms and lattice operations act on node values
only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np


class GridMismatchError(ValueError):
    """Two grid functions with different resolutions were combined."""


@dataclass(frozen=True)
class GridFunction:
    """Node values of a function on the uniform grid ``i / n``, ``i = 0..n``."""

    values: np.ndarray
    n: int = field(init=False)

    def __post_init__(self):
        vals = np.array(self.values, dtype=float, copy=True)
        if vals.ndim != 1 or vals.size < 2:
            raise ValueError("values must be a 1-d array with at least 2 nodes")
        if not np.all(np.isfinite(vals)):
            raise ValueError("grid function values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "n", vals.size - 1)

    @classmethod
    def from_callable(cls, func: Callable[[np.ndarray], np.ndarray], n: int) -> "GridFunction":
        t = nodes(n)
        return cls(np.broadcast_to(np.asarray(func(t), dtype=float), t.shape))

    @classmethod
    def constant(cls, c: float, n: int) -> "GridFunction":
        return cls(np.full(n + 1, float(c)))

    @property
    def nodes(self) -> np.ndarray:
        return nodes(self.n)

    def _other(self, other):
        if isinstance(other, GridFunction):
            check_same_grid(self, other)
            return other.values
        return other

    def __add__(self, other):
        return GridFunction(self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return GridFunction(self.values - self._other(other))

    def __rsub__(self, other):
        return GridFunction(self._other(other) - self.values)

    def __mul__(self, other):
        return GridFunction(self.values * self._other(other))

    __rmul__ = __mul__

    def __neg__(self):
        return GridFunction(-self.values)

    def __len__(self):
        return self.values.size

    def __eq__(self, other):
        if not isinstance(other, GridFunction):
            return NotImplemented
        return self.n == other.n and bool(np.array_equal(self.values, other.values))

    def __hash__(self):
        return hash((self.n, self.values.tobytes()))

    def __repr__(self):
        return f"GridFunction(n={self.n}, min={self.values.min():.6g}, max={self.values.max():.6g})"


def nodes(n: int) -> np.ndarray:
    if n < 1:
        raise ValueError(f"grid resolution must be a positive integer, got {n}")
    return np.linspace(0.0, 1.0, n + 1)


def check_same_grid(u: GridFunction, v: GridFunction) -> None:
    if u.n != v.n:
        raise GridMismatchError(f"grid resolutions differ: {u.n} vs {v.n}")


@dataclass(frozen=True)
class ConeSpec:
    """Ordered-space constants for the pointwise cone.

    Parameters
    ----------
    normal_constant : float
        Normal constant ``N >= 1`` of the cone.
    upper_equiv, lower_equiv : float
        Constants ``M >= m > 0`` with ``m*||u||_1 <= ||u|| <= M*||u||_1``.
    order_tol : float
        Slack allowed in every nodewise comparison.
    norm1_scale : float
        The monotone norm is ``norm1_scale * sup_norm``.  The default 1.0
        makes it coincide with the sup norm.
    """

    normal_constant: float = 1.0
    upper_equiv: float = 1.0
    lower_equiv: float = 1.0
    order_tol: float = 1e-12
    norm1_scale: float = 1.0

    def __post_init__(self):
        if not self.normal_constant >= 1.0:
            raise ValueError("normal constant N must be >= 1")
        if not (self.upper_equiv >= self.lower_equiv > 0.0):
            raise ValueError("equivalence constants must satisfy M >= m > 0")
        if not self.order_tol >= 0.0:
            raise ValueError("order_tol must be nonnegative")
        if not self.norm1_scale > 0.0:
            raise ValueError("norm1_scale must be positive")
        # m*s*||u|| <= ||u|| <= M*s*||u|| must hold for every u
        s = self.norm1_scale
        eps = 1e-15
        if self.lower_equiv * s > 1.0 + eps or self.upper_equiv * s < 1.0 - eps:
            raise ValueError(
                f"norm1_scale={s} violates m*||u||_1 <= ||u|| <= M*||u||_1 "
                f"for m={self.lower_equiv}, M={self.upper_equiv}"
            )


DEFAULT_CONE = ConeSpec()


def leq(u: GridFunction, v: GridFunction, spec: ConeSpec = DEFAULT_CONE) -> bool:
    """True iff ``u(t_i) <= v(t_i) + order_tol`` at every node."""
    check_same_grid(u, v)
    return bool(np.all(u.values <= v.values + spec.order_tol))


def comparable(u: GridFunction, v: GridFunction, spec: ConeSpec = DEFAULT_CONE) -> bool:
    return leq(u, v, spec) or leq(v, u, spec)


def inf_sup(u: GridFunction, v: GridFunction) -> tuple[GridFunction, GridFunction]:
    """Pointwise greatest lower bound and least upper bound of ``u`` and ``v``."""
    check_same_grid(u, v)
    return (
        GridFunction(np.minimum(u.values, v.values)),
        GridFunction(np.maximum(u.values, v.values)),
    )


def sup_norm(u: GridFunction) -> float:
    return float(np.max(np.abs(u.values)))


def monotone_norm(u: GridFunction, spec: ConeSpec = DEFAULT_CONE) -> float:
    """The monotone norm used by every rate and error-bound formula."""
    return spec.norm1_scale * sup_norm(u)


def distance(u: GridFunction, v: GridFunction) -> float:
    check_same_grid(u, v)
    return float(np.max(np.abs(u.values - v.values)))
