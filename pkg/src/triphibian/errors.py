"""Exception types raised across the package."""


class TriphibianError(Exception):
    """Base class for all package errors."""


class DomainError(TriphibianError, ValueError):
    """An argument lies outside the domain of an operation."""


class AllocationError(TriphibianError, ValueError):
    """A (mode, operation) pair has no actuation pattern."""

    def __init__(self, mode, op):
        self.mode = mode
        self.op = op
        super().__init__(f"no actuation pattern for {mode.value}/{op.value}")


class SaturationError(TriphibianError):
    """The requested thrust exceeds what the fans can deliver."""


class TrimInfeasibleError(TriphibianError):
    """No tail tilt within the servo limits balances the yaw moment."""


class ModeConfigurationError(TriphibianError):
    """Dynamics were asked to run with a mechanism state the mode forbids."""


class IntegrationDiverged(TriphibianError):
    """The integrated state became non-finite."""

    def __init__(self, message, last_good_time=None):
        super().__init__(message)
        self.last_good_time = last_good_time


class RejectedTransition(TriphibianError):
    """An event or command is not enabled in the current machine state."""

    def __init__(self, guard, detail=""):
        self.guard = guard
        msg = f"rejected: guard '{guard}'"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class ScenarioError(TriphibianError, ValueError):
    """A scenario failed validation; ``errors`` lists every problem found."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))
