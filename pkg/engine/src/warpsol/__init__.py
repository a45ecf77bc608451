"""warpsol: mean curvature flow solitons in warped products I x_h P."""

from .errors import (
    ConfigError,
    DomainError,
    InfeasibleError,
    NonConvergenceError,
    UnsupportedProfileError,
    WarpsolError,
)
from .geometry import SolitonContext, WarpedSpace
from .profiles import WarpingProfile

__all__ = [
    "ConfigError",
    "DomainError",
    "InfeasibleError",
    "NonConvergenceError",
    "SolitonContext",
    "UnsupportedProfileError",
    "WarpedSpace",
    "WarpingProfile",
    "WarpsolError",
]
