"""Exception types shared across the package."""


class MotionRestoreError(Exception):
    """Base class for all package errors."""


class ValidationError(MotionRestoreError):
    """Input failed a precondition (non-finite values, bad config, ...)."""


class ShapeError(ValidationError):
    """Array has the wrong shape or length."""


class DegenerateRotationError(ValidationError):
    """6D rotation input is degenerate (zero or parallel column vectors)."""


class InsufficientFramesError(ValidationError):
    """Operation needs more frames than the sequence provides."""


class UndefinedScoreError(MotionRestoreError):
    """Similarity score is undefined (no visible keypoints / no valid samples)."""


class SimulationDivergedError(MotionRestoreError):
    """Simulation produced a non-finite state."""

    def __init__(self, message: str, dof_index: int | None = None):
        super().__init__(message)
        self.dof_index = dof_index


class StageError(MotionRestoreError):
    """A pipeline stage failed (missing inputs, inconsistent artifacts)."""
