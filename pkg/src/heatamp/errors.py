"""Exception types raised by the solver and figure-of-merit routines."""


class HeatampError(Exception):
    """Base class for all package errors."""


class ZeroGapError(HeatampError, ValueError):
    """A Bohr frequency is (numerically) zero, violating the non-degenerate gap assumption."""


class SteadyStateError(HeatampError):
    """The steady-state solve produced an unusable population vector."""


class NonUniqueSteadyState(SteadyStateError):
    """The active part of the rate matrix is reducible, so the stationary state is not unique."""


class StepTooLarge(HeatampError, ValueError):
    """The integrator step violates the RK4 stability guard."""


class StepTooSmall(HeatampError):
    """A finite-difference stencil is below the floating-point noise floor."""


class DegenerateRectification(HeatampError):
    """Both forward and reverse currents vanish, so the rectification ratio is 0/0."""


class ScenarioError(HeatampError, ValueError):
    """A scenario document does not match the published schema."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)
