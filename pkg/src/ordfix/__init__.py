"""Fixed points of decreasing ordered-contraction operators on grid functions."""

from .contraction import (
    ConditionReport,
    Modulus,
    a_posteriori_bound,
    a_priori_bound,
    check_condition_H,
    check_squared_contraction,
    comparable_pairs,
    contraction_rate,
    eval_modulus,
)
from .lattice import ConeSpec, GridFunction, inf_sup, leq, monotone_norm, sup_norm
from .operators import (
    PeriodicBVPOperator,
    SignalFeedbackOperator,
    check_thm32_hypothesis,
    greens_function,
    ode_residual,
    periodic_apply,
    signal_apply,
    signal_contraction_margin,
)
from .quadrature import quadrature
from .solver import (
    FixedPointResult,
    SolveConfig,
    UniquenessReport,
    choose_start,
    iterate,
    solve,
    square,
    uniqueness_probe,
)

__version__ = "0.1.0"
