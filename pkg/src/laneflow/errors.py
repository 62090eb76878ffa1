"""Exception hierarchy for laneflow.

Config problems map to CLI exit code 2, numerical failures to exit code 3.
"""


class LaneflowError(Exception):
    """Base class for all laneflow errors."""


class ConfigError(LaneflowError):
    """Invalid scenario configuration (bad value, unknown key, bad schema)."""


class NumericsError(LaneflowError):
    """Base class for failures raised while a solver is running."""


class InvalidGridError(LaneflowError):
    """Velocity grid cannot be built (fewer than two classes)."""


class DegenerateRowError(NumericsError):
    """A transition row summed to zero but renormalization was requested."""

    def __init__(self, message, context=None):
        super().__init__(message)
        self.context = context


class ModelViolationError(NumericsError):
    """A transition probability came out negative; carries the branch label."""

    def __init__(self, message, case=None):
        super().__init__(message)
        self.case = case


class DivergenceError(NumericsError):
    """NaN or Inf detected along a trajectory; carries the step index."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class PositivityError(NumericsError):
    """A distribution entry dropped below the tolerated negative floor."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class CFLError(NumericsError):
    """Requested transport step exceeds the CFL-stable step."""
