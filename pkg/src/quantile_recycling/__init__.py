"""Quantile functions from the recycling ODE, with branch-free normal kernels.

Submodules:
    special        Bessel K, Gauss 2F1, gamma ratios, erfc
    distributions  densities, H-functions and two-sided exponential splits
    rode           fixed-step RK solver for Q'' + Hb(v) Q' = H(Q) Q'^2
    student        Gaussian to Student t map (central series and tail model)
    normal         rational normal quantile kernels and their extensions
    oracle         independent reference quantiles used by the tests
    cli            precision sweeps, QQ-map export and timing
"""

from .errors import (
    AccuracyError,
    CoefficientOverflowError,
    DomainError,
    MonotonicityError,
    OracleFailure,
    SolverOverflowError,
    UnsupportedError,
)
from .normal import (
    icnd_double,
    icnd_single,
    normal_quantile_bulk,
    normal_series_origin,
    q77,
    sample_normal_antithetic,
    tail_supplement,
)
from .oracle import (
    oracle_cdf_inverse,
    oracle_exp_normal,
    oracle_normal_quantile,
    oracle_student_from_gaussian,
    oracle_student_quantile,
)
from .rode import QuantileMap, RecyclingProblem, TwoSidedMap, solve_rode, solve_two_sided
from .student import central_coefficients, student_quantile_from_gaussian

__version__ = "0.1.0"

__all__ = [
    "AccuracyError",
    "CoefficientOverflowError",
    "DomainError",
    "MonotonicityError",
    "OracleFailure",
    "SolverOverflowError",
    "UnsupportedError",
    "icnd_double",
    "icnd_single",
    "normal_quantile_bulk",
    "normal_series_origin",
    "q77",
    "sample_normal_antithetic",
    "tail_supplement",
    "oracle_cdf_inverse",
    "oracle_exp_normal",
    "oracle_normal_quantile",
    "oracle_student_from_gaussian",
    "oracle_student_quantile",
    "QuantileMap",
    "RecyclingProblem",
    "TwoSidedMap",
    "solve_rode",
    "solve_two_sided",
    "central_coefficients",
    "student_quantile_from_gaussian",
]
