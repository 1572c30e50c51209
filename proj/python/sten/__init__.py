# SPDX-License-Identifier: Apache-2.0
"""Spatial-temporal normality learning for multivariate time-series anomaly detection."""

import json

from ._sten import (
    Config,
    ConfigError,
    DataError,
    Model,
    NumericError,
    affiliation,
    best_f1,
    js_divergence,
    point_adjust,
    pr_auc,
    range_auc,
    roc_auc,
    score,
    synth,
    threshold_percentile,
    train,
    vus,
)
from ._sten import evaluate_json as _evaluate_json

__all__ = [
    "Config",
    "ConfigError",
    "DataError",
    "Model",
    "NumericError",
    "affiliation",
    "best_f1",
    "config",
    "evaluate",
    "js_divergence",
    "point_adjust",
    "pr_auc",
    "range_auc",
    "roc_auc",
    "score",
    "synth",
    "threshold_percentile",
    "train",
    "vus",
]


def config(path=None, **overrides):
    """Build a finalized Config from an optional key=value file plus keyword overrides.

    Values are converted with str(), so config(alpha=0.5, mode="otn_only") works.
    Booleans become "true"/"false".
    """
    c = Config()
    if path is not None:
        c.apply_file(str(path))
    for key, value in overrides.items():
        if isinstance(value, bool):
            value = "true" if value else "false"
        c.set(key, str(value))
    c.finalize()
    return c


def evaluate(scores, labels, cfg=None, point_adjust="on"):
    """Metric report as a dict, with the same keys as `sten eval`."""
    return json.loads(_evaluate_json(scores, labels, cfg if cfg is not None else config(), point_adjust))
