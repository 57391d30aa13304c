"""Exception types shared across the package."""


class QrdError(Exception):
    """Base class for all package errors."""


class ModelError(QrdError):
    """A model function returned an invalid value.

    Carries the evaluation point so the failure can be reproduced.
    """

    def __init__(self, message, x=None, t=None, u=None):
        super().__init__(message)
        self.x = x
        self.t = t
        self.u = u


class ContractError(QrdError):
    """Inputs violate a documented precondition."""


class ConfigError(QrdError):
    """Invalid configuration.  ``errors`` lists every problem found."""

    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class AssemblyError(QrdError):
    """The discrete operator could not be assembled."""


class StiffnessError(QrdError):
    """The required time step fell below ``dt_min``."""


class StepRejected(QrdError):
    """An explicit step produced negative values beyond the clamp tolerance."""

    def __init__(self, message, t=None, min_value=None):
        super().__init__(message)
        self.t = t
        self.min_value = min_value


class IntegrationError(QrdError):
    """A run failed; ``t`` is the time of the failing step."""

    def __init__(self, message, t):
        super().__init__(f"{message} (t={t!r})")
        self.t = t


class SelectionError(QrdError):
    """Weight selection for the energy functional failed."""
