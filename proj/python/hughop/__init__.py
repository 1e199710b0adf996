"""Hug and Hop MCMC: Python bindings to the C++ core."""

import json

from ._hughop import (
    ConfigError,
    Error,
    Target,
    __version__,
    ess,
    hop_log_density,
    hug_trajectory,
    local_covariance,
    reflect,
    reflect_in_metric,
    theorem2_experiment,
)
from . import _hughop

__all__ = [
    "ConfigError",
    "Error",
    "Target",
    "__version__",
    "default_config",
    "ess",
    "hop_log_density",
    "hug_trajectory",
    "local_covariance",
    "make_target",
    "reflect",
    "reflect_in_metric",
    "resolve_config",
    "run_chain",
    "theorem2_experiment",
]


def make_target(spec=None, **params):
    """Target from a spec dict or name, e.g. make_target("LG", a=5, scales="L", dim=25)."""
    if isinstance(spec, str):
        spec = {"target": spec}
    spec = dict(spec or {}, **params)
    return _hughop._make_target(json.dumps(spec))


def default_config():
    return json.loads(_hughop._default_config())


def resolve_config(config=None, sets=()):
    """defaults <- config <- "key=value" overrides."""
    return json.loads(_hughop._resolve_config(json.dumps(config or {}), list(sets)))


def run_chain(config=None, sets=()):
    """Runs one chain; returns (summary dict, positions array, log-target array)."""
    resolved = resolve_config(config, sets)
    summary, positions, log_target = _hughop._run_chain(json.dumps(resolved))
    return json.loads(summary), positions, log_target
