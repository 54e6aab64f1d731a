"""Kalman filter noise tuning with Gaussian-process Bayesian optimization."""

from ._kftune import *  # noqa: F401,F403
from ._kftune import (
    ConfigError,
    Error,
    InvalidArgument,
    NotPositiveDefinite,
    bundled_config,
    run_gpbo,
)

__all__ = [name for name in dir() if not name.startswith("_")]
