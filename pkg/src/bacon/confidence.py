"""Shared confidence containers: per-sample per-class probability estimates."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

# estimator tags
BACON = "BACON"
BACON_WEIGHTED = "BACONWeighted"
SOFTMAX = "Softmax"
TSCALED_SOFTMAX = "TScaledSoftmax"

ESTIMATOR_TAGS = (BACON, BACON_WEIGHTED, SOFTMAX, TSCALED_SOFTMAX)

ROW_SUM_TOL = 1e-9


@dataclass
class ClassWeights:
    """Nonnegative per-class weights; Bayes' Rule is scale-free in them."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 1:
            raise ValidationError("class weights must be a vector")
        if np.any(w < 0) or not np.any(w > 0):
            raise ValidationError("class weights must be nonnegative with at least one > 0")
        self.weights = w

    @classmethod
    def uniform(cls, n_classes: int) -> "ClassWeights":
        return cls(np.ones(n_classes))

    @property
    def n_classes(self) -> int:
        return self.weights.shape[0]

    def is_uniform(self) -> bool:
        return bool(np.all(self.weights == self.weights[0]))


@dataclass
class ConfidenceMatrix:
    """N x K probability rows (each summing to 1) with labels and a tag."""

    probs: np.ndarray
    labels: np.ndarray
    estimator_tag: str
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=np.float64)
        y = np.asarray(self.labels, dtype=np.int64)
        if p.ndim != 2 or p.shape[1] < 2:
            raise ValidationError(f"probs must be N x K with K >= 2, got {p.shape}")
        if y.shape != (p.shape[0],):
            raise ValidationError("labels length must match probs rows")
        if p.size:
            if p.min() < -1e-12 or p.max() > 1.0 + 1e-12:
                raise ValidationError("probabilities must lie in [0, 1]")
            row_sums = p.sum(axis=1)
            worst = float(np.abs(row_sums - 1.0).max())
            if worst > ROW_SUM_TOL:
                raise ValidationError(f"rows must sum to 1 (worst deviation {worst:.3g})")
            if y.min() < 0 or y.max() >= p.shape[1]:
                raise ValidationError("labels out of range")
        self.probs = np.clip(p, 0.0, 1.0)
        self.labels = y

    @property
    def n_samples(self) -> int:
        return self.probs.shape[0]

    @property
    def n_classes(self) -> int:
        return self.probs.shape[1]

    def predicted(self) -> np.ndarray:
        """Row argmax; ties resolve to the lowest class index."""
        return np.argmax(self.probs, axis=1)

    def confidence(self) -> np.ndarray:
        """Probability of the predicted class per sample."""
        return self.probs[np.arange(self.probs.shape[0]), self.predicted()]

    def correctness(self) -> np.ndarray:
        return (self.predicted() == self.labels).astype(np.float64)
