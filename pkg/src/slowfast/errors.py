"""Exception types shared across the package."""


class ConfigurationError(Exception):
    """A precondition or configuration constraint was violated before any
    numerics ran. Carries the offending config key path when known."""

    def __init__(self, message, key_path=None):
        self.key_path = key_path
        super().__init__(f"{key_path}: {message}" if key_path else message)


class NumericalFailure(Exception):
    """NaN/overflow in a trajectory or a quadrature that failed to converge.
    Carries the simulation time at which the failure surfaced, when known."""

    def __init__(self, message, t=None):
        self.t = t
        super().__init__(message if t is None else f"{message} (at t={t:.6g})")
