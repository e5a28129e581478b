"""Exception hierarchy. Each class maps onto one CLI exit code."""


class TokencycleError(Exception):
    exit_code = 1


class UsageError(TokencycleError):
    exit_code = 3


class ConfigError(TokencycleError):
    """Invalid configuration. ``path`` is the dotted field path, e.g. ``params.p_max``."""

    exit_code = 3

    def __init__(self, path: str, message: str):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}" if path else message)

    def __reduce__(self):
        return type(self), (self.path, self.message)


class DomainError(TokencycleError):
    """A model equation was evaluated outside its domain (e.g. zero token supply)."""

    exit_code = 5

    def __init__(self, message: str, t: float | None = None):
        self.t = t
        self._raw = message
        if t is not None:
            message = f"{message} (at t={t!r})"
        super().__init__(message)

    def __reduce__(self):
        return type(self), (self._raw, self.t)


class TrialError(TokencycleError):
    exit_code = 5

    def __init__(self, trial_index: int, cause: Exception):
        self.trial_index = trial_index
        self.cause = cause
        super().__init__(f"trial {trial_index} failed: {cause}")

    def __reduce__(self):
        return type(self), (self.trial_index, self.cause)


class CalibrationError(TokencycleError):
    exit_code = 6

    def __init__(self, message: str, best_residual: float, best: dict | None = None):
        self.best_residual = best_residual
        self.best = best or {}
        self._raw = message
        super().__init__(f"{message} (best residual {best_residual:.6g})")

    def __reduce__(self):
        return type(self), (self._raw, self.best_residual, self.best)
