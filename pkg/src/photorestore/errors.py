"""Exception hierarchy shared across the toolkit.

Parameter and shape problems subclass ValueError so plain callers can keep
catching ValueError; the service layer maps each class to an HTTP status.
"""


class PhotoRestoreError(Exception):
    """Base class for all toolkit errors."""


class ParameterError(PhotoRestoreError, ValueError):
    """An argument is outside its documented domain."""


class ShapeError(PhotoRestoreError, ValueError):
    """Image/mask dimensions or channel counts do not line up."""


class RegionError(PhotoRestoreError, ValueError):
    """A pixel region required by a metric is empty."""


class StateError(PhotoRestoreError, RuntimeError):
    """Operation not legal in the session's current state."""


class RollbackRangeError(StateError):
    """Rollback target is past the session cursor."""


class UnknownSessionError(PhotoRestoreError, KeyError):
    """No session with the requested id."""


class UnknownBackendError(PhotoRestoreError, KeyError):
    """Backend id not present in the registry."""


class DuplicateBackendError(PhotoRestoreError, ValueError):
    """Backend id already registered."""


class BackendError(PhotoRestoreError):
    """Base for failures while running a stage backend."""

    def __init__(self, message: str, stage: str | None = None):
        super().__init__(message)
        self.stage = stage


class BackendFailure(BackendError):
    """External program exited nonzero; carries its diagnostics."""

    def __init__(self, message: str, stage: str | None = None,
                 exit_code: int | None = None, diagnostics: str = ""):
        super().__init__(message, stage)
        self.exit_code = exit_code
        self.diagnostics = diagnostics


class ProtocolError(BackendError):
    """External program violated the file protocol (missing/corrupt output)."""


class BackendTimeout(BackendError):
    """External program exceeded its wall-clock budget."""


class BallotValidationError(PhotoRestoreError, ValueError):
    """Ballot file violates the one-vote-per-question rule or schema."""
