try:
    from ._version import __version__
except ImportError:  # source tree without a build
    __version__ = "0.0.0"

from .base import DiagnosticsError, DomainError, ResampleError, SizeError
from .client import ErsaLab
from .config import ErsaConfig
from .lattice import Rect, Site, Window
from .rsa_process import Params

__all__ = [
    "__version__",
    "ErsaLab",
    "ErsaConfig",
    "Params",
    "Site",
    "Rect",
    "Window",
    "DomainError",
    "SizeError",
    "ResampleError",
    "DiagnosticsError",
]
