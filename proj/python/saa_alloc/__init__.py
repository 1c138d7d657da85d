"""Large-deviations sampling allocation for sample average approximation."""

import json

from ._core import (
    ConfigError,
    RateResult,
    log_normal_tail,
    multinomial_schedule,
    pair_rate_binomial,
    pair_rate_gaussian,
    pair_rate_numeric_binomial,
    pair_rate_numeric_gaussian,
)
from . import _core


def _text(config):
    return config if isinstance(config, str) else json.dumps(config)


def optimize(config):
    """Optimal allocation for a configuration given as a dict or JSON text."""
    return _core.optimize(_text(config))


def run_experiment(config):
    """Runs the configured scenario; accepts a dict or JSON text."""
    return _core.run_experiment(_text(config))


__all__ = [
    "ConfigError",
    "RateResult",
    "log_normal_tail",
    "multinomial_schedule",
    "optimize",
    "pair_rate_binomial",
    "pair_rate_gaussian",
    "pair_rate_numeric_binomial",
    "pair_rate_numeric_gaussian",
    "run_experiment",
]
