"""Exception hierarchy shared across the package."""


class BuridanError(Exception):
    """Base class for all library errors."""


class InvalidParametersError(BuridanError, ValueError):
    """Switching parameters violate their invariants."""


class DomainError(BuridanError, ValueError):
    """An input lies outside the domain an operation is defined on."""


class DegenerateError(BuridanError, ArithmeticError):
    """A closed form or normalization collapses to 0/0."""


class DegenerateChainError(DegenerateError):
    """Transition matrix has no unique stationary vector."""


class NonConvergenceError(BuridanError, ArithmeticError):
    """An iterative method hit its iteration cap."""


class InfeasibleMomentsError(BuridanError, ArithmeticError):
    """Measured statistics cannot come from any valid parameter pair."""


class UnsupportedSizeError(BuridanError, ValueError):
    pass


class ConfigError(BuridanError, ValueError):
    pass
