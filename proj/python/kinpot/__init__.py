"""Kinetic solver with an external potential.

Configurations may be passed as JSON text or as plain dicts.
"""

import json as _json

from . import _kinpot
from ._kinpot import (
    CollisionOperator,
    ConfigError,
    KinpotError,
    Potential,
    backtrace,
    flow_jacobian_det,
)

__version__ = _kinpot.__version__

__all__ = [
    "CollisionOperator",
    "ConfigError",
    "KinpotError",
    "Potential",
    "backtrace",
    "canonical_config",
    "config_hash",
    "flow_jacobian_det",
    "run",
    "run_to_directory",
    "verify_bounds",
]


def _text(config):
    return config if isinstance(config, str) else _json.dumps(config)


def canonical_config(config):
    """Validated configuration with all defaults, as a dict."""
    return _json.loads(_kinpot.canonical_config(_text(config)))


def config_hash(config):
    return _kinpot.config_hash(_text(config))


def run(config):
    """Run a scenario. Records come back as {"columns": [...], "data": 2-D array}."""
    return _kinpot.run(_text(config))


def run_to_directory(config, out_dir):
    """Write config.json, diagnostics.csv, summary.json and manifest.json; return the manifest."""
    return _json.loads(_kinpot.run_to_directory(_text(config), str(out_dir)))


def verify_bounds(config, pairs=10000, slices=100):
    return _kinpot.verify_bounds(_text(config), pairs, slices)
