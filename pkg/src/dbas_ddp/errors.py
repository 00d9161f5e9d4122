"""Exception types shared across the package."""


class DBaSError(Exception):
    """Base class for all package errors."""


class UnsafeStateError(DBaSError):
    """A safety function was evaluated at h <= 0 where a barrier is required."""

    def __init__(self, h, message=None):
        self.h = h
        super().__init__(message or f"unsafe evaluation: h = {h!r} <= 0")


class ModelBlowUpError(DBaSError):
    """A dynamics step produced a non-finite state or left the model's domain."""


class BackwardPassError(DBaSError):
    """H_uu was not positive definite and no regularization was allowed."""

    def __init__(self, step, min_eig):
        self.step = step
        self.min_eig = min_eig
        super().__init__(f"H_uu not positive definite at step {step} (min eig {min_eig:.3e})")


class UnsafeInitialError(DBaSError):
    """The initial state or initial nominal rollout is not strictly safe."""


class FilterInfeasibleError(DBaSError):
    """The CBF-QP constraint set admits no control."""


class ConfigError(DBaSError):
    """Malformed or inconsistent experiment configuration."""


class NormalizationError(DBaSError):
    """Cost normalization is undefined because the reference solver never succeeded."""
