"""Clustering of event sequences with a mixture of imitated point-process policies.

Sequences are dicts with keys ``id``, ``horizon``, ``times`` and ``label``
(-1 when unknown).
"""

import json as _json

from ._core import (  # noqa: F401
    InvalidArgument,
    eid,
    empirical_intensity,
    generate_dataset,
    purity,
    rand_index,
    simulate,
)
from . import _core

__all__ = [
    "InvalidArgument",
    "default_training_config",
    "eid",
    "empirical_intensity",
    "fit",
    "generate_dataset",
    "purity",
    "rand_index",
    "simulate",
]


def default_training_config():
    """Training defaults as a nested dict."""
    return _json.loads(_core.default_training_config())


def fit(data, config=None, seed=0):
    """Fit the mixture. ``config`` holds training keys to override.

    Returns a dict with ``assignment`` (one cluster per sequence, in input
    order), ``history`` (one dict per EM iteration) and ``converged``.
    """
    out = _core.fit(list(data), _json.dumps(config or {}), int(seed))
    out["history"] = [_json.loads(row) for row in out["history"]]
    return out
