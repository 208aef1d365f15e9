"""Decision-vector geometry.

The classifier's final affine layer maps decision-layer activations A (N x D)
onto K output nodes through weight rows W_j.  Each sample's orientation is
summarized by one angle per output node,

    phi_j = arccos(|A . W_j| / (|A| |W_j|)),

so all angles lie in [0, pi/2]; the cosine argument is clamped to [0, 1]
to absorb floating-point excursions.  A signed variant (no absolute value,
angles in [0, pi]) is available behind ``signed=True`` and is off by default.

Logits are reconstructed as A . W_j + b_j for the Softmax baselines.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConsistencyError, DegenerateVectorError, ShapeError

LOGIT_MATCH_ATOL = 1e-4  # exported-logit reconstruction tolerance, per element


@dataclass
class AngleRecord:
    """Per-sample vector of K output-node angles plus the true label."""

    angles: np.ndarray  # (K,) radians
    label: int
    sample_id: int


@dataclass
class LogitRecord:
    """Per-sample vector of K reconstructed logits plus the true label."""

    logits: np.ndarray  # (K,)
    label: int
    sample_id: int


def angle_matrix(
    activations: np.ndarray, weights: np.ndarray, signed: bool = False
) -> np.ndarray:
    """Angles between every activation row and every weight row, as N x K.

    Raises DegenerateVectorError if any activation or weight row has zero
    magnitude (an unusable export), ShapeError on dimension mismatch.
    """
    a = np.asarray(activations, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    if a.ndim != 2 or w.ndim != 2 or a.shape[1] != w.shape[1]:
        raise ShapeError(f"activations {a.shape} vs weights {w.shape}")

    a_norm = np.linalg.norm(a, axis=1)
    w_norm = np.linalg.norm(w, axis=1)
    if a.shape[0] and not a_norm.all():
        bad = int(np.argmin(a_norm))
        raise DegenerateVectorError(f"activation row {bad} has zero magnitude")
    if not w_norm.all():
        bad = int(np.argmin(w_norm))
        raise DegenerateVectorError(f"weight row {bad} has zero magnitude")

    cos = (a @ w.T) / np.outer(a_norm, w_norm)
    if signed:
        cos = np.clip(cos, -1.0, 1.0)
    else:
        cos = np.clip(np.abs(cos), 0.0, 1.0)
    return np.arccos(cos)


def compute_angles(
    activations: np.ndarray,
    weights: np.ndarray,
    labels: np.ndarray | None = None,
    sample_ids: np.ndarray | None = None,
    signed: bool = False,
) -> list[AngleRecord]:
    """Per-sample AngleRecords; labels default to -1 for the caller to attach."""
    phi = angle_matrix(activations, weights, signed=signed)
    n = phi.shape[0]
    labels = np.full(n, -1, dtype=np.int64) if labels is None else np.asarray(labels)
    sample_ids = np.arange(n) if sample_ids is None else np.asarray(sample_ids)
    return [
        AngleRecord(angles=phi[i], label=int(labels[i]), sample_id=int(sample_ids[i]))
        for i in range(n)
    ]


def logit_matrix(
    activations: np.ndarray,
    weights: np.ndarray,
    biases: np.ndarray | None = None,
    reference: np.ndarray | None = None,
) -> np.ndarray:
    """Reconstructed logits A @ W.T + b, as N x K.

    When ``reference`` (the bundle's exported logits) is given, every element
    must match within 1e-4 or ConsistencyError is raised; a mismatch signals
    that the wrong layer was exported.
    """
    a = np.asarray(activations, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    if a.ndim != 2 or w.ndim != 2 or a.shape[1] != w.shape[1]:
        raise ShapeError(f"activations {a.shape} vs weights {w.shape}")
    logits = a @ w.T
    if biases is not None:
        b = np.asarray(biases, dtype=np.float64)
        if b.shape != (w.shape[0],):
            raise ShapeError(f"biases {b.shape} vs K={w.shape[0]}")
        logits = logits + b
    if reference is not None:
        ref = np.asarray(reference, dtype=np.float64)
        if ref.shape != logits.shape:
            raise ShapeError(f"reference logits {ref.shape} vs computed {logits.shape}")
        err = np.abs(logits - ref)
        if err.size and err.max() > LOGIT_MATCH_ATOL:
            i, j = np.unravel_index(int(np.argmax(err)), err.shape)
            raise ConsistencyError(
                f"reconstructed logit [{i},{j}]={logits[i, j]:.6g} differs from "
                f"exported {ref[i, j]:.6g} by {err[i, j]:.3g} (> {LOGIT_MATCH_ATOL})"
            )
    return logits


def compute_logits(
    activations: np.ndarray,
    weights: np.ndarray,
    biases: np.ndarray | None = None,
    labels: np.ndarray | None = None,
    sample_ids: np.ndarray | None = None,
    reference: np.ndarray | None = None,
) -> list[LogitRecord]:
    """Per-sample LogitRecords; see logit_matrix for the consistency check."""
    logits = logit_matrix(activations, weights, biases, reference=reference)
    n = logits.shape[0]
    labels = np.full(n, -1, dtype=np.int64) if labels is None else np.asarray(labels)
    sample_ids = np.arange(n) if sample_ids is None else np.asarray(sample_ids)
    return [
        LogitRecord(logits=logits[i], label=int(labels[i]), sample_id=int(sample_ids[i]))
        for i in range(n)
    ]


def records_to_matrix(records: list[AngleRecord] | list[LogitRecord]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Stack records into (values N x K, labels N, sample_ids N)."""
    if not records:
        return np.zeros((0, 0)), np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    first = records[0]
    key = "angles" if isinstance(first, AngleRecord) else "logits"
    values = np.stack([getattr(r, key) for r in records])
    labels = np.array([r.label for r in records], dtype=np.int64)
    ids = np.array([r.sample_id for r in records], dtype=np.int64)
    return values, labels, ids
