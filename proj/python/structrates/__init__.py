"""Plug-in structured prediction over finite output spaces.

Thin Python layer over the C++ core: loss decoding and frontier geometry,
k-NN and kernel-ridge surrogate weights, margin diagnostics and Monte-Carlo
rate experiments.
"""

import json

import numpy as np

from . import _core
from ._core import (
    ContractViolation,
    ExponentialRegime,
    FiniteLoss,
    ProfileDegenerate,
    SyntheticProblem,
    decode,
    default_thresholds,
    excess_risk,
    frontier_distance,
    knn_schedule,
    knn_weights,
    krr_schedule,
    krr_weights,
    log_thresholds,
    margin_gap,
    probe_frontier,
    risk_vector,
)

__all__ = [
    "ContractViolation",
    "ExponentialRegime",
    "FiniteLoss",
    "ProfileDegenerate",
    "SyntheticProblem",
    "decode",
    "default_thresholds",
    "excess_risk",
    "frontier_distance",
    "knn_schedule",
    "knn_weights",
    "krr_schedule",
    "krr_weights",
    "log_thresholds",
    "margin_gap",
    "margin_profile",
    "predict",
    "probe_frontier",
    "rate_experiment",
    "risk_vector",
]


def _rows(a):
    a = np.asarray(a, dtype=float)
    return a.reshape(-1, 1) if a.ndim == 1 else a


def predict(loss, inputs, labels, queries, estimator):
    """Fits `estimator` (a dict such as {"type": "knn", "k0": 1, "beta": 1})
    on (inputs, labels) and returns one prediction index per query row."""
    return _core._predict(loss, _rows(inputs), list(labels), _rows(queries), json.dumps(estimator))


def margin_profile(margins, thresholds=None, drop_fraction=0.1, fit_range=None):
    """Empirical margin CDF plus the log-log exponent fit. `alpha_hat` is None
    when the profile is degenerate (e.g. a no-density problem)."""
    margins = [float(m) for m in margins]
    if thresholds is None:
        thresholds = default_thresholds(max(margins))
    return json.loads(_core._margin_profile(margins, list(thresholds), drop_fraction, fit_range))


def rate_experiment(config, workers=1):
    """Runs a rate experiment from a config dict; the report dict carries an
    extra "trials" entry with the per-trial excess risks."""
    report, trials = _core._rate_experiment(json.dumps(config), workers)
    report = json.loads(report)
    report["trials"] = trials
    return report

