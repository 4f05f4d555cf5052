"""Exception hierarchy shared by all modules."""


class CalderonError(Exception):
    """Base class for every error raised by this package."""


class GridError(CalderonError, ValueError):
    pass


class TooSmall(GridError):
    pass


class NonSquareCells(GridError):
    pass


class SolverFailure(CalderonError, RuntimeError):
    pass


class JacobianSingular(SolverFailure):
    pass


class NonConvergence(SolverFailure):
    def __init__(self, iterations, last_residual, message=None):
        self.iterations = iterations
        self.last_residual = last_residual
        super().__init__(
            message
            or f"Newton iteration did not converge after {iterations} iterations "
            f"(last residual {last_residual:.3e})"
        )


class FrequencyTooLarge(CalderonError, ValueError):
    pass


class StepTooSmall(CalderonError, ValueError):
    pass


class GaugeViolation(CalderonError, ValueError):
    pass


class ConfigError(CalderonError, ValueError):
    pass
