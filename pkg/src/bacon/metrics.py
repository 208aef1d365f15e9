"""Calibration error metrics and reliability-diagram data.

ECE scores only the predicted class per sample: p-hat is the max row
probability, correctness is argmax == label.  Bins are uniform on [0, 1]
with the interval convention [lo, hi) and a closed final bin; the default
bin count is K - 1.  MCE is the largest |acc - conf| over nonempty bins,
reported together with the frequency of the maximizing bin.

ACE uses constant-frequency ranges per class over *all* class confidences
at or above a small threshold (not just the predicted class), with the L1
norm: ACE = (1/KR) sum_k sum_r |acc(r,k) - conf(r,k)|.  When the pool size
is not divisible by R, the lowest-confidence ranges take the extras.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .confidence import ConfidenceMatrix
from .errors import MetricError

DEFAULT_ACE_THRESHOLD = 0.001


@dataclass
class FixedBinning:
    """Uniform-width confidence bins: frequency, mean confidence, accuracy."""

    edges: np.ndarray  # (M+1,)
    counts: np.ndarray  # (M,)
    conf: np.ndarray  # (M,), NaN for empty bins
    acc: np.ndarray  # (M,), NaN for empty bins

    @property
    def n_bins(self) -> int:
        return self.counts.shape[0]

    @property
    def n(self) -> int:
        return int(self.counts.sum())

    def to_dict(self) -> dict:
        return {
            "edges": self.edges.tolist(),
            "counts": self.counts.tolist(),
            "conf": [None if math.isnan(v) else v for v in self.conf],
            "acc": [None if math.isnan(v) else v for v in self.acc],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FixedBinning":
        fix = lambda xs: np.array([math.nan if v is None else v for v in xs])
        return cls(
            edges=np.asarray(d["edges"], dtype=np.float64),
            counts=np.asarray(d["counts"], dtype=np.int64),
            conf=fix(d["conf"]),
            acc=fix(d["acc"]),
        )


@dataclass
class AdaptiveBinning:
    """Constant-frequency ranges per class: (K, R) grids of count/conf/acc."""

    threshold: float
    counts: np.ndarray  # (K, R)
    conf: np.ndarray  # (K, R), NaN for empty ranges
    acc: np.ndarray  # (K, R), NaN for empty ranges
    empty_classes: list[int] = field(default_factory=list)

    @property
    def n_classes(self) -> int:
        return self.counts.shape[0]

    @property
    def n_ranges(self) -> int:
        return self.counts.shape[1]

    def to_dict(self) -> dict:
        none_nan = lambda grid: [
            [None if math.isnan(v) else v for v in row] for row in grid
        ]
        return {
            "threshold": self.threshold,
            "counts": self.counts.tolist(),
            "conf": none_nan(self.conf),
            "acc": none_nan(self.acc),
            "empty_classes": self.empty_classes,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AdaptiveBinning":
        fix = lambda grid: np.array(
            [[math.nan if v is None else v for v in row] for row in grid]
        )
        return cls(
            threshold=float(d["threshold"]),
            counts=np.asarray(d["counts"], dtype=np.int64),
            conf=fix(d["conf"]),
            acc=fix(d["acc"]),
            empty_classes=list(d.get("empty_classes", [])),
        )


def _bin_index(confidences: np.ndarray, n_bins: int) -> np.ndarray:
    edges = np.linspace(0.0, 1.0, n_bins + 1)
    idx = np.digitize(confidences, edges) - 1  # [lo, hi) assignment
    return np.clip(idx, 0, n_bins - 1)  # confidence 1.0 joins the last bin


def _ece_core(
    confidences: np.ndarray, correct: np.ndarray, n_bins: int
) -> tuple[float, FixedBinning]:
    n = confidences.shape[0]
    idx = _bin_index(confidences, n_bins)
    counts = np.bincount(idx, minlength=n_bins).astype(np.int64)
    sum_conf = np.bincount(idx, weights=confidences, minlength=n_bins)
    sum_acc = np.bincount(idx, weights=correct, minlength=n_bins)
    nonempty = counts > 0
    conf = np.full(n_bins, np.nan)
    acc = np.full(n_bins, np.nan)
    conf[nonempty] = sum_conf[nonempty] / counts[nonempty]
    acc[nonempty] = sum_acc[nonempty] / counts[nonempty]
    gaps = np.abs(acc[nonempty] - conf[nonempty])
    value = float(np.sum(counts[nonempty] / n * gaps)) if n else 0.0
    binning = FixedBinning(
        edges=np.linspace(0.0, 1.0, n_bins + 1), counts=counts, conf=conf, acc=acc
    )
    return value, binning


def ece(conf_matrix: ConfidenceMatrix, n_bins: int | None = None) -> tuple[float, FixedBinning]:
    """Expected calibration error and its reliability binning.

    Default bin count is K - 1.
    """
    m = n_bins if n_bins is not None else max(conf_matrix.n_classes - 1, 1)
    if m < 1:
        raise MetricError("need at least one bin")
    if conf_matrix.n_samples < 1:
        raise MetricError("need at least one sample")
    return _ece_core(conf_matrix.confidence(), conf_matrix.correctness(), m)


def mce(binning: FixedBinning) -> tuple[float, int]:
    """Maximum per-bin |acc - conf| plus the frequency of the maximizing bin."""
    nonempty = binning.counts > 0
    if not nonempty.any():
        raise MetricError("all bins empty")
    gaps = np.where(nonempty, np.abs(binning.acc - binning.conf), -np.inf)
    i = int(np.argmax(gaps))  # first bin on ties
    return float(gaps[i]), int(binning.counts[i])


def _range_sizes(n: int, n_ranges: int) -> np.ndarray:
    base, rem = divmod(n, n_ranges)
    # lowest-confidence ranges take the remainder
    return np.array([base + 1] * rem + [base] * (n_ranges - rem), dtype=np.int64)


def ace(
    conf_matrix: ConfidenceMatrix,
    n_ranges: int | None = None,
    threshold: float = DEFAULT_ACE_THRESHOLD,
) -> tuple[float, AdaptiveBinning]:
    """Adaptive calibration error over constant-frequency per-class ranges.

    Default range count is K - 1.  Classes with no confidence surviving the
    threshold contribute zero and are listed in ``empty_classes``.
    """
    k = conf_matrix.n_classes
    r = n_ranges if n_ranges is not None else max(k - 1, 1)
    if r < 1:
        raise MetricError("need at least one range")
    if not 0.0 <= threshold < 1.0:
        raise MetricError("threshold must lie in [0, 1)")

    counts = np.zeros((k, r), dtype=np.int64)
    conf = np.full((k, r), np.nan)
    acc = np.full((k, r), np.nan)
    empty_classes: list[int] = []

    labels = conf_matrix.labels
    for cls in range(k):
        col = conf_matrix.probs[:, cls]
        mask = col >= threshold
        pool = col[mask]
        hits = (labels[mask] == cls).astype(np.float64)
        if pool.size == 0:
            empty_classes.append(cls)
            continue
        order = np.argsort(pool, kind="stable")
        pool = pool[order]
        hits = hits[order]
        sizes = _range_sizes(pool.size, r)
        stops = np.cumsum(sizes)
        starts = stops - sizes
        for j in range(r):
            if sizes[j] == 0:
                continue
            seg = slice(starts[j], stops[j])
            counts[cls, j] = sizes[j]
            conf[cls, j] = pool[seg].mean()
            acc[cls, j] = hits[seg].mean()

    nonempty = counts > 0
    total = float(np.sum(np.abs(acc[nonempty] - conf[nonempty])))
    value = total / (k * r)
    binning = AdaptiveBinning(
        threshold=threshold, counts=counts, conf=conf, acc=acc,
        empty_classes=empty_classes,
    )
    return value, binning


def confusion_matrix(conf_matrix: ConfidenceMatrix) -> np.ndarray:
    """K x K counts of (true label, predicted class)."""
    if conf_matrix.n_samples < 1:
        raise MetricError("need at least one sample")
    k = conf_matrix.n_classes
    cm = np.zeros((k, k), dtype=np.int64)
    np.add.at(cm, (conf_matrix.labels, conf_matrix.predicted()), 1)
    return cm


def per_class_report(
    conf_matrix: ConfidenceMatrix,
    n_bins: int | None = None,
    n_ranges: int | None = None,
    threshold: float = DEFAULT_ACE_THRESHOLD,
    adaptive: AdaptiveBinning | None = None,
) -> dict[int, dict[str, float]]:
    """Per-class accuracy (recall), ECE over the true-label subset, and ACE.

    Class-k ECE scores the predicted class within the subset of samples whose
    true label is k; class-k ACE averages that class's row of the full
    adaptive binning.  Classes with zero samples are omitted.
    """
    k = conf_matrix.n_classes
    m = n_bins if n_bins is not None else max(k - 1, 1)
    if adaptive is None:
        _, adaptive = ace(conf_matrix, n_ranges=n_ranges, threshold=threshold)
    r = adaptive.n_ranges

    confidences = conf_matrix.confidence()
    correct = conf_matrix.correctness()
    labels = conf_matrix.labels

    out: dict[int, dict[str, float]] = {}
    for cls in range(k):
        subset = labels == cls
        n_cls = int(subset.sum())
        if n_cls == 0:
            continue
        cls_ece, _ = _ece_core(confidences[subset], correct[subset], m)
        row_nonempty = adaptive.counts[cls] > 0
        gaps = np.abs(adaptive.acc[cls, row_nonempty] - adaptive.conf[cls, row_nonempty])
        cls_ace = float(np.sum(gaps)) / r
        out[cls] = {
            "accuracy": float(correct[subset].mean()),
            "ece": cls_ece,
            "ace": cls_ace,
            "n": n_cls,
        }
    return out


@dataclass
class CalibrationReport:
    """Everything needed to re-render reliability diagrams and compare runs."""

    estimator_tag: str
    n: int
    n_classes: int
    ece: float
    mce: float
    mce_bin_frequency: int
    ace: float
    fixed_binning: FixedBinning
    adaptive_binning: AdaptiveBinning
    per_class: dict[int, dict[str, float]]
    confusion: np.ndarray
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "estimator": self.estimator_tag,
            "n": self.n,
            "K": self.n_classes,
            "ece": self.ece,
            "mce": self.mce,
            "mce_bin_frequency": self.mce_bin_frequency,
            "ace": self.ace,
            "fixed_binning": self.fixed_binning.to_dict(),
            "adaptive_binning": self.adaptive_binning.to_dict(),
            "per_class": {str(k): v for k, v in self.per_class.items()},
            "confusion": self.confusion.tolist(),
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CalibrationReport":
        return cls(
            estimator_tag=d["estimator"],
            n=int(d["n"]),
            n_classes=int(d["K"]),
            ece=float(d["ece"]),
            mce=float(d["mce"]),
            mce_bin_frequency=int(d["mce_bin_frequency"]),
            ace=float(d["ace"]),
            fixed_binning=FixedBinning.from_dict(d["fixed_binning"]),
            adaptive_binning=AdaptiveBinning.from_dict(d["adaptive_binning"]),
            per_class={int(k): v for k, v in d["per_class"].items()},
            confusion=np.asarray(d["confusion"], dtype=np.int64),
            metadata=d.get("metadata", {}),
        )


def calibration_report(
    conf_matrix: ConfidenceMatrix,
    n_bins: int | None = None,
    n_ranges: int | None = None,
    threshold: float = DEFAULT_ACE_THRESHOLD,
    metadata: dict | None = None,
) -> CalibrationReport:
    """Full metric sweep for one estimator on one test set."""
    ece_value, fixed = ece(conf_matrix, n_bins)
    mce_value, mce_freq = mce(fixed)
    ace_value, adaptive = ace(conf_matrix, n_ranges, threshold)
    per_class = per_class_report(
        conf_matrix, n_bins=n_bins, threshold=threshold, adaptive=adaptive
    )
    return CalibrationReport(
        estimator_tag=conf_matrix.estimator_tag,
        n=conf_matrix.n_samples,
        n_classes=conf_matrix.n_classes,
        ece=ece_value,
        mce=mce_value,
        mce_bin_frequency=mce_freq,
        ace=ace_value,
        fixed_binning=fixed,
        adaptive_binning=adaptive,
        per_class=per_class,
        confusion=confusion_matrix(conf_matrix),
        metadata=dict(metadata or {}),
    )
