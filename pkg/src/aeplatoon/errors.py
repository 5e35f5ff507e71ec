"""Exception hierarchy. The CLI maps each family to an exit code."""


class DomainError(ValueError):
    """Input outside the mathematical domain of a model function."""


class ConfigError(ValueError):
    """Invalid configuration document. ``errors`` holds one message per field."""

    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class InfeasibleEnvelopeError(RuntimeError):
    """The control law has no root inside (v_stall, v_max)."""

    def __init__(self, message, bound=None, t=None):
        self.bound = bound
        self.t = t
        super().__init__(message)


class SingularInitializationError(InfeasibleEnvelopeError):
    """Costate initialisation divides by a vanishing ground speed."""


class SeparationViolationError(RuntimeError):
    """Separation below the minimum."""

    def __init__(self, message, pair=None, t=None):
        self.pair = pair
        self.t = t
        super().__init__(message)


class SafetyViolationError(SeparationViolationError):
    """Raised by the simulator when a pair breaks d_min during a run."""


class NonTerminationError(RuntimeError):
    """Simulation exceeded its time guard."""


class TraceMismatchError(ValueError):
    """Two traces do not share a time grid."""
