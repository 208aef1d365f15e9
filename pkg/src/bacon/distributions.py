"""Parametric angle-likelihood models.

Per (output node, label class) cell, the observed angles are fit with one of
three families (Normal, LogNormal, Cauchy) by maximum likelihood.  Normal
and LogNormal use the closed-form moment-of-(log-)data MLE; Cauchy uses
alternating 1-D Newton iterations started at (median, IQR/2) with a 101x101
grid search as the divergence fallback.  Interval probabilities are obtained
by differencing the CDF over [phi - delta, phi + delta]; a log-space variant
keeps numerators usable down to ~1e-300 and below.

Truncation of the angle domain to (0, pi/2] is deliberately ignored during
fitting: the untruncated family is fit to the observed samples, and the
approximation is recorded in report metadata by callers.

A Uniform family is available for evaluation and sampling only (synthetic
oracles); it cannot be fit.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np
from scipy import special as sc

from .errors import (
    DegenerateSpreadError,
    DomainError,
    InsufficientDataError,
    NoModelError,
)
from .geometry import AngleRecord, records_to_matrix

NORMAL = "Normal"
LOGNORMAL = "LogNormal"
CAUCHY = "Cauchy"
UNIFORM = "Uniform"  # evaluation/sampling only, never fit

FIT_FAMILIES = (NORMAL, LOGNORMAL, CAUCHY)

MIN_FIT_SIZE = 30
DELTA_PLACEHOLDER = 0.05  # radians, until calibrate_delta overwrites it

_PARAM_NAMES = {
    NORMAL: ("mean", "std"),
    LOGNORMAL: ("log_mean", "log_std"),
    CAUCHY: ("location", "scale"),
    UNIFORM: ("low", "high"),
}


@dataclass
class LikelihoodModel:
    """Fitted PDF family and parameters for one (node, label class) cell."""

    family: str
    params: tuple[float, float]
    node: int = -1
    label_class: int = -1
    n_samples: int = 0
    log_likelihood: float = float("nan")
    metadata: dict = field(default_factory=dict)

    def param_dict(self) -> dict[str, float]:
        names = _PARAM_NAMES[self.family]
        return {names[0]: self.params[0], names[1]: self.params[1]}


# ---------------------------------------------------------------------------
# densities, CDFs and quantiles


def log_pdf(family: str, params: tuple[float, float], x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    a, b = params
    if family == NORMAL:
        z = (x - a) / b
        return -0.5 * z * z - math.log(b) - 0.5 * math.log(2.0 * math.pi)
    if family == LOGNORMAL:
        out = np.full(np.shape(x), -np.inf)
        pos = x > 0
        lx = np.log(x, where=pos, out=np.zeros(np.shape(x)))
        z = (lx - a) / b
        val = -0.5 * z * z - lx - math.log(b) - 0.5 * math.log(2.0 * math.pi)
        return np.where(pos, val, out)
    if family == CAUCHY:
        z = (x - a) / b
        return -math.log(math.pi * b) - np.log1p(z * z)
    if family == UNIFORM:
        inside = (x >= a) & (x <= b)
        return np.where(inside, -math.log(b - a), -np.inf)
    raise ValueError(f"unknown family {family!r}")


def pdf(family: str, params: tuple[float, float], x: np.ndarray) -> np.ndarray:
    return np.exp(log_pdf(family, params, x))


def cdf(family: str, params: tuple[float, float], x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    a, b = params
    if family == NORMAL:
        return sc.ndtr((x - a) / b)
    if family == LOGNORMAL:
        out = np.zeros(np.shape(x))
        pos = x > 0
        lx = np.log(x, where=pos, out=np.ones(np.shape(x)))
        return np.where(pos, sc.ndtr((lx - a) / b), out)
    if family == CAUCHY:
        return 0.5 + np.arctan((x - a) / b) / math.pi
    if family == UNIFORM:
        return np.clip((x - a) / (b - a), 0.0, 1.0)
    raise ValueError(f"unknown family {family!r}")


def _cauchy_log_cdf(z: np.ndarray) -> np.ndarray:
    # stable in both tails: CDF = arctan(-1/z)/pi for z<0, 1 - arctan(1/z)/pi for z>0
    z = np.asarray(z, dtype=np.float64)
    neg = z < 0
    with np.errstate(divide="ignore"):
        left = np.log(np.arctan(np.where(neg, -1.0 / np.where(neg, z, -1.0), 1.0))) - math.log(math.pi)
        right = np.log1p(-np.arctan(1.0 / np.where(z > 0, z, 1.0)) / math.pi)
    out = np.where(neg, left, np.where(z > 0, right, math.log(0.5)))
    return out


def log_cdf(family: str, params: tuple[float, float], x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    a, b = params
    if family == NORMAL:
        return sc.log_ndtr((x - a) / b)
    if family == LOGNORMAL:
        pos = x > 0
        lx = np.log(x, where=pos, out=np.ones(np.shape(x)))
        return np.where(pos, sc.log_ndtr((lx - a) / b), -np.inf)
    if family == CAUCHY:
        return _cauchy_log_cdf((x - a) / b)
    if family == UNIFORM:
        with np.errstate(divide="ignore"):
            return np.log(np.clip((x - a) / (b - a), 0.0, 1.0))
    raise ValueError(f"unknown family {family!r}")


def log_sf(family: str, params: tuple[float, float], x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    a, b = params
    if family == NORMAL:
        return sc.log_ndtr(-(x - a) / b)
    if family == LOGNORMAL:
        pos = x > 0
        lx = np.log(x, where=pos, out=np.ones(np.shape(x)))
        return np.where(pos, sc.log_ndtr(-(lx - a) / b), 0.0)
    if family == CAUCHY:
        return _cauchy_log_cdf(-(x - a) / b)
    if family == UNIFORM:
        with np.errstate(divide="ignore"):
            return np.log(np.clip((b - x) / (b - a), 0.0, 1.0))
    raise ValueError(f"unknown family {family!r}")


def quantile(family: str, params: tuple[float, float], q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64)
    a, b = params
    if family == NORMAL:
        return a + b * sc.ndtri(q)
    if family == LOGNORMAL:
        return np.exp(a + b * sc.ndtri(q))
    if family == CAUCHY:
        return a + b * np.tan(math.pi * (q - 0.5))
    if family == UNIFORM:
        return a + q * (b - a)
    raise ValueError(f"unknown family {family!r}")


def sample_family(
    family: str,
    params: tuple[float, float],
    n: int,
    rng: np.random.Generator,
    truncate: tuple[float, float] | None = None,
) -> np.ndarray:
    """Inverse-CDF sampling, optionally truncated to an interval."""
    if truncate is None:
        u = rng.uniform(0.0, 1.0, n)
    else:
        lo, hi = cdf(family, params, np.asarray(truncate, dtype=np.float64))
        u = rng.uniform(lo, hi, n)
    return quantile(family, params, u)


def total_log_likelihood(
    family: str, params: tuple[float, float], samples: np.ndarray
) -> float:
    return float(np.sum(log_pdf(family, params, samples)))


# ---------------------------------------------------------------------------
# fitting


def _check_samples(samples: np.ndarray, min_fit_size: int) -> np.ndarray:
    x = np.asarray(samples, dtype=np.float64).ravel()
    if not np.all(np.isfinite(x)):
        raise DomainError("samples must be finite")
    if x.size < min_fit_size:
        raise InsufficientDataError(
            f"{x.size} samples < minimum fit size {min_fit_size}"
        )
    if np.ptp(x) == 0.0:
        raise DegenerateSpreadError(
            "all samples identical; no valid scale parameter exists"
        )
    return x


def _fit_normal(x: np.ndarray) -> tuple[tuple[float, float], float]:
    mu = float(np.mean(x))
    sigma = float(np.sqrt(np.mean((x - mu) ** 2)))
    ll = total_log_likelihood(NORMAL, (mu, sigma), x)
    return (mu, sigma), ll


def _fit_lognormal(x: np.ndarray) -> tuple[tuple[float, float], float]:
    if np.any(x <= 0):
        raise DomainError("LogNormal requires strictly positive samples")
    lx = np.log(x)
    m = float(np.mean(lx))
    s = float(np.sqrt(np.mean((lx - m) ** 2)))
    if s == 0.0:
        raise DegenerateSpreadError("log-samples identical; zero log-std")
    ll = total_log_likelihood(LOGNORMAL, (m, s), x)
    return (m, s), ll


def _cauchy_grid_search(x: np.ndarray) -> tuple[float, float]:
    lo, hi = float(np.min(x)), float(np.max(x))
    span = hi - lo
    locs = np.linspace(lo, hi, 101)
    scales = np.linspace(span / 101.0, span, 101)
    best = (-np.inf, locs[0], scales[0])
    for g in scales:
        # vectorized over locations for one scale
        z = (x[None, :] - locs[:, None]) / g
        ll = x.size * (-math.log(math.pi * g)) - np.sum(np.log1p(z * z), axis=1)
        i = int(np.argmax(ll))
        if ll[i] > best[0]:
            best = (float(ll[i]), float(locs[i]), float(g))
    return best[1], best[2]


def _fit_cauchy(x: np.ndarray) -> tuple[tuple[float, float], float]:
    n = x.size
    x0 = float(np.median(x))
    q1, q3 = np.percentile(x, [25.0, 75.0])
    gamma = float(q3 - q1) / 2.0
    if gamma <= 0.0:
        gamma = max(np.ptp(x) / 4.0, 1e-12)

    diverged = False
    for _ in range(200):
        u = x - x0
        denom = gamma * gamma + u * u
        g_loc = np.sum(2.0 * u / denom)
        h_loc = np.sum((2.0 * u * u - 2.0 * gamma * gamma) / (denom * denom))
        if h_loc >= 0.0 or not np.isfinite(h_loc):
            diverged = True
            break
        step_loc = g_loc / h_loc
        x0_new = x0 - step_loc

        u = x - x0_new
        denom = gamma * gamma + u * u
        g_scale = n / gamma - np.sum(2.0 * gamma / denom)
        h_scale = -n / (gamma * gamma) - np.sum(
            (2.0 * u * u - 2.0 * gamma * gamma) / (denom * denom)
        )
        if h_scale >= 0.0 or not np.isfinite(h_scale):
            diverged = True
            break
        step_scale = g_scale / h_scale
        gamma_new = gamma - step_scale

        if gamma_new <= 0.0 or not np.isfinite(gamma_new) or not np.isfinite(x0_new):
            diverged = True
            break
        moved = max(abs(x0_new - x0), abs(gamma_new - gamma))
        x0, gamma = float(x0_new), float(gamma_new)
        if moved < 1e-10:
            break
    else:
        diverged = True

    if diverged:
        x0, gamma = _cauchy_grid_search(x)
    ll = total_log_likelihood(CAUCHY, (x0, gamma), x)
    return (x0, gamma), ll


_FITTERS = {NORMAL: _fit_normal, LOGNORMAL: _fit_lognormal, CAUCHY: _fit_cauchy}


def fit(
    samples: np.ndarray, family: str, min_fit_size: int = MIN_FIT_SIZE
) -> LikelihoodModel:
    """Maximum-likelihood fit of one family to angle samples.

    Raises InsufficientDataError below the minimum fit size (DegenerateSpreadError
    when all samples coincide) and DomainError for non-positive samples under
    LogNormal.
    """
    if family not in _FITTERS:
        raise ValueError(f"cannot fit family {family!r}")
    x = _check_samples(samples, min_fit_size)
    params, ll = _FITTERS[family](x)
    return LikelihoodModel(
        family=family, params=params, n_samples=int(x.size), log_likelihood=ll
    )


def select_family(
    samples: np.ndarray, min_fit_size: int = MIN_FIT_SIZE
) -> LikelihoodModel:
    """Fit all three families and keep the highest total log-likelihood.

    Runner-up log-likelihood deficits are recorded under
    ``metadata['runner_up_deltas']``.  Raises NoModelError if every family fails.
    """
    x = _check_samples(samples, min_fit_size)
    fitted: dict[str, LikelihoodModel] = {}
    failures: dict[str, str] = {}
    for family in FIT_FAMILIES:
        try:
            params, ll = _FITTERS[family](x)
        except (DomainError, DegenerateSpreadError) as exc:
            failures[family] = str(exc)
            continue
        fitted[family] = LikelihoodModel(
            family=family, params=params, n_samples=int(x.size), log_likelihood=ll
        )
    if not fitted:
        raise NoModelError(f"all families failed: {failures}")
    best = max(fitted.values(), key=lambda m: m.log_likelihood)
    best.metadata["runner_up_deltas"] = {
        name: best.log_likelihood - m.log_likelihood
        for name, m in fitted.items()
        if name != best.family
    }
    if failures:
        best.metadata["failed_families"] = failures
    return best


# ---------------------------------------------------------------------------
# interval probabilities


def _log_diff(log_hi: np.ndarray, log_lo: np.ndarray) -> np.ndarray:
    """log(exp(log_hi) - exp(log_lo)) for log_hi >= log_lo, elementwise."""
    log_hi = np.asarray(log_hi, dtype=np.float64)
    log_lo = np.asarray(log_lo, dtype=np.float64)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.exp(np.minimum(log_lo - log_hi, 0.0))
        out = log_hi + np.log1p(-np.where(np.isfinite(log_hi), ratio, 0.0))
        out = np.where(np.isneginf(log_lo), log_hi, out)
        out = np.where(np.isneginf(log_hi), -np.inf, out)
    return out


def log_interval_probability(
    model: LikelihoodModel, phi: np.ndarray, delta: float
) -> np.ndarray:
    """log of CDF(phi + delta) - CDF(phi - delta), underflow-safe in both tails."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    phi = np.asarray(phi, dtype=np.float64)
    lo = phi - delta
    hi = phi + delta
    if model.family == LOGNORMAL:
        lo = np.maximum(lo, 0.0)  # support boundary
    f_hi = cdf(model.family, model.params, hi)
    f_lo = cdf(model.family, model.params, lo)

    # choose the better-conditioned side per element
    left = f_hi <= 0.5  # both points in the lower tail: use CDFs
    right = f_lo >= 0.5  # both in the upper tail: use survival functions
    out = np.empty(np.shape(phi), dtype=np.float64)

    mid = ~(left | right)
    with np.errstate(divide="ignore"):
        np.copyto(out, np.log(np.maximum(f_hi - f_lo, 0.0)), where=mid)
    if np.any(left):
        l_hi = log_cdf(model.family, model.params, hi)
        l_lo = log_cdf(model.family, model.params, lo)
        np.copyto(out, _log_diff(l_hi, l_lo), where=left)
    if np.any(right):
        s_lo = log_sf(model.family, model.params, lo)
        s_hi = log_sf(model.family, model.params, hi)
        np.copyto(out, _log_diff(s_lo, s_hi), where=right)
    return out


def interval_probability(
    model: LikelihoodModel, phi: np.ndarray, delta: float
) -> np.ndarray:
    """CDF(phi + delta) - CDF(phi - delta), in [0, 1]."""
    return np.exp(log_interval_probability(model, phi, delta))


# ---------------------------------------------------------------------------
# the K x K likelihood table


@dataclass
class LikelihoodTable:
    """Grid of fitted models indexed by (output node, label class), plus delta."""

    n_classes: int
    cells: dict[tuple[int, int], LikelihoodModel]
    delta: float = DELTA_PLACEHOLDER

    def __post_init__(self):
        for j in range(self.n_classes):
            if (j, j) not in self.cells:
                raise NoModelError(f"diagonal model for node {j} is missing")
        if self.delta <= 0:
            raise ValueError("delta must be positive")

    def diagonal(self, node: int) -> LikelihoodModel:
        return self.cells[(node, node)]

    def cell(self, node: int, label_class: int) -> LikelihoodModel:
        return self.cells[(node, label_class)]

    def to_dict(self) -> dict:
        return {
            "K": self.n_classes,
            "delta": self.delta,
            "cells": [
                {
                    "node": node,
                    "label_class": label,
                    "family": m.family,
                    "params": m.param_dict(),
                    "n_samples": m.n_samples,
                    "log_likelihood": m.log_likelihood,
                    "metadata": m.metadata,
                }
                for (node, label), m in sorted(self.cells.items())
            ],
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "LikelihoodTable":
        cells = {}
        for row in payload["cells"]:
            family = row["family"]
            names = _PARAM_NAMES[family]
            params = (float(row["params"][names[0]]), float(row["params"][names[1]]))
            cells[(int(row["node"]), int(row["label_class"]))] = LikelihoodModel(
                family=family,
                params=params,
                node=int(row["node"]),
                label_class=int(row["label_class"]),
                n_samples=int(row.get("n_samples", 0)),
                log_likelihood=float(row.get("log_likelihood", float("nan"))),
                metadata=row.get("metadata", {}),
            )
        return cls(
            n_classes=int(payload["K"]),
            cells=cells,
            delta=float(payload["delta"]),
        )

    def save(self, path: str | os.PathLike) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path: str | os.PathLike) -> "LikelihoodTable":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def fit_likelihood_table(
    records: list[AngleRecord],
    n_classes: int | None = None,
    family: str = "auto",
    delta: float = DELTA_PLACEHOLDER,
    min_fit_size: int = MIN_FIT_SIZE,
    fit_off_diagonal: bool = True,
) -> LikelihoodTable:
    """Fit the (node x label class) grid from labeled angle records.

    Diagonal cells must have at least ``min_fit_size`` samples.  A sparse
    off-diagonal cell falls back to the pooled distribution of all
    off-diagonal angles for that node (marked ``pooled_fallback`` in the
    model metadata) so a thin class never crashes the pipeline.
    """
    angles, labels, _ = records_to_matrix(records)
    k = int(n_classes if n_classes is not None else angles.shape[1])

    def fit_one(samples):
        if family == "auto":
            return select_family(samples, min_fit_size=min_fit_size)
        return fit(samples, family, min_fit_size=min_fit_size)

    cells: dict[tuple[int, int], LikelihoodModel] = {}
    for node in range(k):
        pooled_model = None
        for label in range(k):
            if label != node and not fit_off_diagonal:
                continue
            samples = angles[labels == label, node]
            try:
                model = fit_one(samples)
            except InsufficientDataError as exc:
                if label == node:
                    raise InsufficientDataError(
                        f"diagonal cell (node {node}) unusable: {exc}"
                    ) from exc
                if pooled_model is None:
                    pool = angles[labels != node, node]
                    pooled_model = fit_one(pool)
                    pooled_model.metadata["pooled_fallback"] = True
                model = LikelihoodModel(
                    family=pooled_model.family,
                    params=pooled_model.params,
                    n_samples=pooled_model.n_samples,
                    log_likelihood=pooled_model.log_likelihood,
                    metadata=dict(pooled_model.metadata),
                )
            model.node = node
            model.label_class = label
            cells[(node, label)] = model
    return LikelihoodTable(n_classes=k, cells=cells, delta=delta)
