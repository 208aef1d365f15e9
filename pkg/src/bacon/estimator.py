"""Bayesian confidence estimation from angle likelihoods.

For a sample with node angles phi_1..phi_K, the posterior for class j is

    P(j | phi_j) = w_j P(phi_j | j) / sum_i w_i P(phi_i | i)

with P(phi|j) the interval probability of the node-j diagonal model over
phi +/- delta, and w the class weights.  The denominator evaluates each
class at its *own* node's angle under its own diagonal model; the
alternative per-node mixture reading (sum_i w_i P(phi_j | i), consuming
off-diagonal models) sits behind ``denominator="per-node-mixture"`` and is
off by default.

Numerators are computed in log space and normalized with max-subtraction,
so interval probabilities of ~1e-300 and smaller survive.  delta is a
single global scalar, tuned by ``calibrate_delta`` to minimize hold-out ECE.
"""

from __future__ import annotations

import numpy as np

from .confidence import BACON, BACON_WEIGHTED, ClassWeights, ConfidenceMatrix
from .distributions import LikelihoodTable, log_interval_probability
from .errors import CalibrationError, ShapeError
from .geometry import AngleRecord, records_to_matrix

DELTA_GRID_START = 1e-4
DELTA_GRID_STOP = 0.5
DELTA_GRID_SIZE = 64


def delta_grid() -> np.ndarray:
    """The 64-point log-spaced delta search grid on [1e-4, 0.5] radians."""
    return np.geomspace(DELTA_GRID_START, DELTA_GRID_STOP, DELTA_GRID_SIZE)


def _log_numerators(
    angles: np.ndarray, table: LikelihoodTable, weights: ClassWeights, delta: float
) -> np.ndarray:
    n, k = angles.shape
    with np.errstate(divide="ignore"):
        log_w = np.log(weights.weights)
    log_num = np.empty((n, k))
    for j in range(k):
        log_num[:, j] = (
            log_interval_probability(table.diagonal(j), angles[:, j], delta) + log_w[j]
        )
    return log_num


def _normalize_rows(log_num: np.ndarray, weights: ClassWeights) -> tuple[np.ndarray, list[int]]:
    """exp-normalize via max-subtraction; dead rows fall back to the weights."""
    row_max = np.max(log_num, axis=1)
    dead = ~np.isfinite(row_max)
    safe_max = np.where(dead, 0.0, row_max)
    with np.errstate(invalid="ignore"):
        num = np.exp(log_num - safe_max[:, None])
    num[dead] = weights.weights  # all numerators underflowed to zero
    probs = num / num.sum(axis=1, keepdims=True)
    return probs, np.flatnonzero(dead).tolist()


def bacon_confidences(
    angles: list[AngleRecord],
    table: LikelihoodTable,
    weights: ClassWeights | None = None,
    delta: float | None = None,
    denominator: str = "own-node",
    estimator_tag: str | None = None,
) -> ConfidenceMatrix:
    """Posterior confidence rows for every angle record.

    ``delta`` defaults to ``table.delta``.  Samples whose numerators all
    underflow to zero receive the normalized class weights as their row and
    are listed in ``diagnostics['fallback_samples']``.
    """
    matrix, labels, sample_ids = records_to_matrix(angles)
    k = table.n_classes
    if matrix.shape[1] != k:
        raise ShapeError(f"angle records have K={matrix.shape[1]}, table has K={k}")
    if weights is None:
        weights = ClassWeights.uniform(k)
    if weights.n_classes != k:
        raise ShapeError(f"weights have K={weights.n_classes}, table has K={k}")
    d = table.delta if delta is None else float(delta)

    log_num = _log_numerators(matrix, table, weights, d)

    if denominator == "per-node-mixture":
        # full Bayes at each node over label classes, then row renormalization
        with np.errstate(divide="ignore"):
            log_w = np.log(weights.weights)
        log_den = np.empty_like(log_num)
        for j in range(k):
            terms = np.empty_like(log_num)
            for i in range(k):
                terms[:, i] = (
                    log_interval_probability(table.cell(j, i), matrix[:, j], d) + log_w[i]
                )
            m = np.max(terms, axis=1)
            safe = np.where(np.isfinite(m), m, 0.0)
            log_den[:, j] = safe + np.log(np.exp(terms - safe[:, None]).sum(axis=1))
        log_num = log_num - log_den
    elif denominator != "own-node":
        raise ValueError(f"unknown denominator mode {denominator!r}")

    probs, dead = _normalize_rows(log_num, weights)

    if estimator_tag is None:
        estimator_tag = BACON if weights.is_uniform() else BACON_WEIGHTED
    diagnostics = {"delta": d, "denominator": denominator}
    if dead:
        diagnostics["fallback_samples"] = [int(sample_ids[i]) for i in dead]
    return ConfidenceMatrix(
        probs=probs, labels=labels, estimator_tag=estimator_tag, diagnostics=diagnostics
    )


def calibrate_delta(
    val_angles: list[AngleRecord],
    table: LikelihoodTable,
    weights: ClassWeights | None = None,
    holdout_angles: list[AngleRecord] | None = None,
    n_bins: int | None = None,
) -> float:
    """Pick delta minimizing hold-out ECE over the 64-point log grid.

    Ties break toward smaller delta; ``table.delta`` is updated in place.
    The table must have been fitted on the validation data only.
    """
    from .metrics import ece  # local import: metrics consumes ConfidenceMatrix

    if not holdout_angles:
        raise CalibrationError("hold-out set is empty")
    val_matrix, _, _ = records_to_matrix(val_angles)
    if val_matrix.size and val_matrix.shape[1] != table.n_classes:
        raise ShapeError("validation angle width does not match table")
    if weights is None:
        weights = ClassWeights.uniform(table.n_classes)
    m = n_bins if n_bins is not None else max(table.n_classes - 1, 1)

    best_delta = None
    best_ece = np.inf
    for d in delta_grid():
        conf = bacon_confidences(holdout_angles, table, weights, delta=float(d))
        value, _ = ece(conf, m)
        if value < best_ece:  # strict: ties keep the smaller delta
            best_ece = value
            best_delta = float(d)
    table.delta = best_delta
    return best_delta
