"""Exception types shared across the relent package."""

from typing import Any, Dict, Optional, Sequence


class DomainError(ValueError):
    """An input violated a documented precondition."""


class SingularityError(DomainError):
    """A matrix function met an eigenvalue outside its domain."""

    def __init__(self, message: str, min_eigenvalue: float = float("nan")):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue


class SamplingError(RuntimeError):
    """Rejection sampling gave up before accepting a draw."""

    def __init__(self, message: str, joint: Sequence[float] = ()):
        super().__init__(message)
        self.joint = list(joint)


class InvariantViolation(AssertionError):
    """A proven relation failed numerically; carries the offending inputs."""

    def __init__(self, message: str, digest: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.digest = digest or {}


class CampaignIOError(OSError):
    """Reading or writing a campaign artifact failed."""

    def __init__(self, message: str, path: Optional[str] = None):
        super().__init__(f"{message}: {path}" if path else message)
        self.path = path


class ConfigError(ValueError):
    """Campaign configuration is invalid."""
