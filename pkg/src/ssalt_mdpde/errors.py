"""Exception hierarchy shared by every module of the package."""


class SSALTError(Exception):
    """Base class for all package errors."""


class DomainError(SSALTError, ValueError):
    """An argument lies outside the domain of the requested operation."""


class NonexistenceError(SSALTError):
    """The estimator does not exist for the given data (a stage without failures)."""


class NumericalError(SSALTError, ArithmeticError):
    """A computation produced a non-finite value."""


class SingularMatrixError(NumericalError):
    """A matrix that must be inverted is numerically singular."""

    def __init__(self, message, condition=float("inf")):
        super().__init__(message)
        self.condition = condition


class OracleError(SSALTError):
    """A numerical quadrature oracle failed to converge."""


class ConfigError(DomainError):
    """A study or CLI configuration violates one or more constraints.

    ``problems`` lists every violated constraint, not only the first.
    """

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))
