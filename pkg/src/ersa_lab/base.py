import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any

from .config import ErsaConfig

if TYPE_CHECKING:
    from .trials import TrialRunner


class DomainError(ValueError):
    """Invalid geometry, parameters or bracket."""


class SizeError(ValueError):
    """An enumeration or transform cap was exceeded."""


class ResampleError(RuntimeError):
    """Two adjacent sites share a positive arrival time; the trial must be redrawn."""


class DiagnosticsError(RuntimeError):
    """A finite-difference estimate is too noisy to compare against a pivotal sum."""


def describe_params(obj: Any, *, max_len: int = 200) -> str:
    """
    Return a short, single-line summary of *obj* for use in exception messages.

    Dataclasses and mappings are rendered key=value; anything else uses repr().
    The result is capped at *max_len* characters so large arrays never end up in a message.
    """
    if hasattr(obj, "__dataclass_fields__"):
        parts = []
        for name in obj.__dataclass_fields__:
            value = getattr(obj, name)
            if hasattr(value, "shape"):
                value = f"<array {getattr(value, 'shape')}>"
            parts.append(f"{name}={value}")
        text = f"{type(obj).__name__}(" + ", ".join(parts) + ")"
    elif isinstance(obj, dict):
        text = ", ".join(f"{k}={v}" for k, v in obj.items())
    else:
        text = repr(obj)
    return text[:max_len] + ("..." if len(text) > max_len else "")


@dataclass
class ErsaObjectBase:
    """
    Base class that all estimator helpers inherit from.

    Holds shared context so every helper doesn't need to reinvent plumbing (cfg, runner, logger).
    Logging is optional; a default package logger will be used if none is provided.
    """
    cfg: ErsaConfig
    runner: "TrialRunner" = field(default=None)
    logger: logging.Logger = field(default_factory=lambda: logging.getLogger("ersa-lab"))

    def __post_init__(self) -> None:
        if self.cfg is None:
            raise ValueError("cfg is required")
        if self.runner is None:
            from .trials import TrialRunner

            self.runner = TrialRunner(self.cfg, logger=self.logger)

    def _seed(self, seed) -> int:
        return self.cfg.resolve_seed(seed)
