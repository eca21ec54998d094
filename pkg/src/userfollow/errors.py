"""Exception hierarchy shared across the package."""


class UserFollowError(Exception):
    """Base class for all errors raised by userfollow."""


class InconsistentReading(UserFollowError):
    """Arm encoder reading does not match the HRI bar width."""


class OutOfWorkspace(UserFollowError):
    """Relative pose lies outside the arm workspace."""


class NotPositiveDefinite(UserFollowError):
    """A weight matrix failed the symmetric positive-definite check."""


class SingularityGuard(UserFollowError):
    """Relative x fell to the guard distance; the decoupling matrix is near singular."""


class DegenerateLog(UserFollowError):
    """Identification log carries no excitation."""


class DidNotConverge(UserFollowError):
    """Nonlinear least squares hit its iteration limit.

    The best-so-far result is attached as ``result``.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class SchemaError(UserFollowError):
    """CSV header or row does not follow the documented schema."""


class NonMonotoneTime(UserFollowError):
    """Time column is not strictly increasing."""


class BadParams(UserFollowError):
    """Scenario generator parameters out of range."""


class EmptyWindow(UserFollowError):
    """Statistics window contains no samples."""


class ConfigError(UserFollowError):
    """Configuration failed validation.

    ``problems`` lists ``(field, message)`` pairs.
    """

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(f"{k}: {m}" for k, m in self.problems))
