"""Softmax and temperature-scaled Softmax baselines.

softmax_j = exp(beta x_j) / sum_i exp(beta x_i), beta = 1/T.  beta = 1 is
plain Softmax; the temperature-scaled variant picks beta minimizing mean
negative log-likelihood on a hold-out set (50-point log grid on [0.01, 100],
golden-section refinement of the bracketing interval to |dbeta| < 1e-4).
beta = 1 is always in the candidate set, so scaling never loses to unscaled.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .confidence import SOFTMAX, TSCALED_SOFTMAX, ConfidenceMatrix
from .errors import CalibrationError, ValidationError
from .geometry import LogitRecord, records_to_matrix

BETA_GRID_START = 0.01
BETA_GRID_STOP = 100.0
BETA_GRID_SIZE = 50
BETA_TOL = 1e-4


@dataclass
class TemperatureParam:
    """Fitted inverse temperature and the hold-out NLL it achieved."""

    beta: float
    nll_holdout: float

    def __post_init__(self):
        if self.beta <= 0:
            raise ValidationError("beta must be positive")

    @property
    def temperature(self) -> float:
        return 1.0 / self.beta


def softmax_rows(logits: np.ndarray, beta: float = 1.0) -> np.ndarray:
    """Row-wise softmax of beta * logits with max-subtraction."""
    if beta <= 0:
        raise ValidationError("beta must be positive")
    z = beta * np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def softmax(
    logits: list[LogitRecord], beta: float = 1.0, estimator_tag: str | None = None
) -> ConfidenceMatrix:
    """Softmax confidences for every logit record."""
    matrix, labels, _ = records_to_matrix(logits)
    probs = softmax_rows(matrix, beta)
    if estimator_tag is None:
        estimator_tag = SOFTMAX if beta == 1.0 else TSCALED_SOFTMAX
    return ConfidenceMatrix(
        probs=probs, labels=labels, estimator_tag=estimator_tag,
        diagnostics={"beta": beta},
    )


def mean_nll(logits: np.ndarray, labels: np.ndarray, beta: float) -> float:
    """Mean negative log-likelihood of the true labels under softmax(beta x)."""
    z = beta * np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(z).sum(axis=1))
    log_p = z[np.arange(z.shape[0]), labels] - log_norm
    return float(-np.mean(log_p))


def beta_grid() -> np.ndarray:
    return np.geomspace(BETA_GRID_START, BETA_GRID_STOP, BETA_GRID_SIZE)


def fit_temperature(holdout_logits: list[LogitRecord]) -> TemperatureParam:
    """Fit beta on a hold-out set by NLL minimization.

    Grid search, then golden-section refinement on the bracket around the
    grid minimum (NLL is convex in beta for fixed logits, but if the grid
    showed several local minima we would still refine the global one).
    Ties break toward smaller beta; a flat objective returns the smallest
    grid point.
    """
    matrix, labels, _ = records_to_matrix(holdout_logits)
    if matrix.size == 0:
        raise CalibrationError("hold-out set is empty")
    if labels.min() < 0 or labels.max() >= matrix.shape[1]:
        raise ValidationError("hold-out labels out of range")

    grid = beta_grid()
    nll = np.array([mean_nll(matrix, labels, b) for b in grid])

    if np.ptp(nll) < 1e-14:  # degenerate flat objective
        b = float(grid[0])
        return TemperatureParam(beta=b, nll_holdout=mean_nll(matrix, labels, b))

    i = int(np.argmin(nll))  # first index on ties: the smaller beta
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, grid.size - 1)]

    # golden-section on [lo, hi]
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = float(lo), float(hi)
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc = mean_nll(matrix, labels, c)
    fd = mean_nll(matrix, labels, d)
    while (b - a) > BETA_TOL:
        if fc <= fd:  # keep the left interval on ties: smaller beta
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = mean_nll(matrix, labels, c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = mean_nll(matrix, labels, d)
    refined = c if fc <= fd else d

    # pick the best among refined, grid minimum and beta = 1 (always searched)
    candidates = sorted({float(refined), float(grid[i]), 1.0})
    values = [mean_nll(matrix, labels, cand) for cand in candidates]
    j = int(np.argmin(values))  # ties settle on the smaller beta
    return TemperatureParam(beta=candidates[j], nll_holdout=values[j])
