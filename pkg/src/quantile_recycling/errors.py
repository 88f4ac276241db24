"""Exception types shared across the package."""


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


class AccuracyError(ArithmeticError):
    """A series, quadrature or iteration failed to reach the requested tolerance."""


class MonotonicityError(ArithmeticError):
    """A quantile map lost monotonicity (Q' <= 0 or non-increasing grid)."""


class SolverOverflowError(OverflowError):
    """ODE state became non-finite or exceeded the blow-up guard."""


class UnsupportedError(NotImplementedError):
    """Parameter region deliberately not handled (e.g. variance gamma with lambda < 1)."""


class OracleFailure(RuntimeError):
    """Reference computation did not converge. Should never happen in CI."""


class CoefficientOverflowError(OverflowError):
    """Series coefficients overflowed the floating-point range."""
