"""Multi-seed experiment orchestration.

One seed = one (validation, holdout, test) bundle triple.  Per seed the
harness fits the angle-likelihood table on validation data, tunes delta and
beta on the hold-out split, scores the test split with all four estimators
(BACON, weighted BACON, Softmax, temperature-scaled Softmax) and produces a
CalibrationReport each.  Aggregation reports mean, sample standard deviation
(n-1 denominator), the 2-sigma band, and mean +/- 2 SE as an alternate
dispersion column.

Bundles either come from disk or from the built-in synthetic generators:

* ``generate_bundles`` draws a Gaussian-mixture feature space and exports a
  full classifier bundle (activations, weights, logits, labels), so the whole
  pipeline runs with no trained network anywhere.
* ``generate_synthetic`` draws angle records directly from per-class diagonal
  distributions together with the analytic posterior, closing the loop on the
  Bayes estimator: with class-uninformative off-node angles (the default),
  the analytic posterior is exactly the true conditional.

All randomness flows through numpy's PCG64 generator seeded from the run
seed; reports are reproducible bit-for-bit and carry no timestamps.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from . import distributions as dist
from .baselines import fit_temperature, softmax
from .bundle_io import TensorBundle, bundle_from_arrays, make_entry, read_bundle
from .confidence import BACON, BACON_WEIGHTED, SOFTMAX, TSCALED_SOFTMAX, ClassWeights
from .errors import AggregationError, BaconError, ExperimentError, SamplingError, ValidationError
from .estimator import bacon_confidences, calibrate_delta
from .geometry import AngleRecord, compute_angles, compute_logits
from .metrics import CalibrationReport, calibration_report

RNG_ALGORITHM = "numpy-PCG64"

METRIC_KEYS = ("ece", "ace", "mce")


# ---------------------------------------------------------------------------
# imbalanced test-set sampling


@dataclass
class ImbalanceSpec:
    """Requested per-class counts plus the sampling seed."""

    counts: dict[int, int]
    seed: int

    def __post_init__(self):
        if any(c < 0 for c in self.counts.values()):
            raise ValidationError("requested counts must be nonnegative")


def imbalanced_test_counts(
    depleted_class: int = 3, enhanced_class: int = 5, n_classes: int = 10
) -> dict[int, int]:
    """The 667/333/1000 pattern: one depleted class, one enhanced, rest even."""
    counts = {c: 667 for c in range(n_classes)}
    counts[depleted_class] = 333
    counts[enhanced_class] = 1000
    return counts


def weights_from_counts(counts: dict[int, int], n_classes: int) -> ClassWeights:
    """Class weights proportional to test-set frequencies (max scaled to 1)."""
    w = np.zeros(n_classes)
    for c, n in counts.items():
        w[int(c)] = n
    return ClassWeights(w / w.max())


_PER_SAMPLE_EXEMPT = {"weights", "biases"}


def sample_imbalanced(pool: TensorBundle, spec: ImbalanceSpec) -> TensorBundle:
    """Seeded per-class sampling without replacement; output order shuffled.

    Every per-sample tensor is subset identically; a ``sample_ids`` tensor
    tracks pool row indices so identical spec+seed yields an identical
    sample-id sequence.  Raises SamplingError naming the first class whose
    pool is too small.
    """
    labels = pool.labels
    n = labels.shape[0]
    rng = np.random.default_rng(spec.seed)

    chosen: list[np.ndarray] = []
    for cls in sorted(spec.counts):
        want = spec.counts[cls]
        available = np.flatnonzero(labels == cls)
        if want > available.size:
            raise SamplingError(
                f"class {cls}: requested {want} but pool has {available.size}"
            )
        if want > 0:
            chosen.append(rng.choice(available, size=want, replace=False))
    idx = np.concatenate(chosen) if chosen else np.zeros(0, dtype=np.int64)
    idx = idx[rng.permutation(idx.size)]

    tensors = []
    for t in pool.tensors:
        if t.name in _PER_SAMPLE_EXEMPT or not t.shape or t.shape[0] != n:
            tensors.append(make_entry(t.name, t.array, dtype=t.dtype))
        else:
            tensors.append(make_entry(t.name, t.array[idx], dtype=t.dtype))
    if not pool.has("sample_ids"):
        tensors.append(make_entry("sample_ids", idx.astype(np.int64)))

    metadata = dict(pool.metadata)
    metadata["sampling_seed"] = str(spec.seed)
    metadata["sampling_counts"] = json.dumps(
        {str(k): v for k, v in sorted(spec.counts.items())}
    )
    metadata["rng"] = RNG_ALGORITHM
    return TensorBundle(tensors=tensors, metadata=metadata)


# ---------------------------------------------------------------------------
# synthetic angle oracle


@dataclass
class SyntheticOracleSpec:
    """Angle-space generative model realizing the Bayes posterior structure.

    ``diagonal`` holds one (family, params) pair per class; a sample of class
    c draws its node-c angle from that class's diagonal distribution.  With
    ``false_mode="uniform"`` every other node draws from Uniform(0, pi/2),
    class-uninformative, which makes the diagonal-likelihood posterior the
    exact true conditional.  ``false_mode="matched"`` draws other nodes from
    their own diagonal distributions instead.
    """

    n_classes: int
    diagonal: list[tuple[str, tuple[float, float]]]
    priors: list[float]
    n_samples: int
    seed: int
    false_mode: str = "uniform"
    domain: tuple[float, float] = (0.0, float(np.pi / 2))

    def __post_init__(self):
        if len(self.diagonal) != self.n_classes:
            raise ValidationError("need one diagonal distribution per class")
        p = np.asarray(self.priors, dtype=np.float64)
        if p.shape != (self.n_classes,) or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
            raise ValidationError("priors must be a probability vector over classes")
        if self.false_mode not in ("uniform", "matched"):
            raise ValidationError(f"unknown false_mode {self.false_mode!r}")


def generate_synthetic(
    spec: SyntheticOracleSpec,
) -> tuple[list[AngleRecord], np.ndarray]:
    """Draw angle records plus the analytic posterior (true densities and priors)."""
    rng = np.random.default_rng(spec.seed)
    k, n = spec.n_classes, spec.n_samples
    priors = np.asarray(spec.priors, dtype=np.float64)
    classes = rng.choice(k, size=n, p=priors)

    angles = np.empty((n, k))
    for j in range(k):
        if spec.false_mode == "uniform":
            angles[:, j] = rng.uniform(spec.domain[0], spec.domain[1], size=n)
        else:
            family, params = spec.diagonal[j]
            angles[:, j] = dist.sample_family(family, params, n, rng, truncate=spec.domain)
    for c in range(k):
        rows = classes == c
        family, params = spec.diagonal[c]
        angles[rows, c] = dist.sample_family(
            family, params, int(rows.sum()), rng, truncate=spec.domain
        )

    log_density = np.empty((n, k))
    with np.errstate(divide="ignore"):
        log_priors = np.log(priors)
    for j in range(k):
        family, params = spec.diagonal[j]
        log_density[:, j] = dist.log_pdf(family, params, angles[:, j]) + log_priors[j]
    row_max = log_density.max(axis=1, keepdims=True)
    num = np.exp(log_density - row_max)
    posterior = num / num.sum(axis=1, keepdims=True)

    records = [
        AngleRecord(angles=angles[i], label=int(classes[i]), sample_id=i)
        for i in range(n)
    ]
    return records, posterior


# ---------------------------------------------------------------------------
# synthetic classifier bundles (Gaussian-mixture feature space)


@dataclass
class SyntheticBundleSpec:
    """Feature-space generator standing in for a trained classifier export.

    Class prototypes are random unit directions scaled by a per-class
    separation; activations are prototype + isotropic noise; the output layer
    weight matrix is the prototype stack scaled by ``logit_scale`` (inflating
    Softmax confidence without touching angles).
    """

    n_classes: int = 10
    n_features: int = 24
    class_sep: float = 2.2
    sep_spread: float = 0.0  # per-class separation jitter, fraction of class_sep
    noise: float = 1.0
    noise_spread: float = 0.0  # per-class noise jitter (keeps weight norms equal)
    logit_scale: float = 1.0
    n_validation_per_class: int = 400
    n_holdout_per_class: int = 200
    n_test_per_class: int = 1000

    @classmethod
    def from_dict(cls, d: dict) -> "SyntheticBundleSpec":
        return cls(**d)


def _draw_split(rng, means, noise, weights, biases, per_class, split, seed):
    k, d = means.shape
    labels = np.repeat(np.arange(k), per_class)
    activations = means[labels] + rng.normal(size=(labels.size, d)) * noise[labels, None]
    logits = activations @ weights.T + biases
    order = rng.permutation(labels.size)
    return bundle_from_arrays(
        activations=activations[order],
        weights=weights,
        labels=labels[order],
        biases=biases,
        logits=logits[order],
        metadata={
            "dataset": "synthetic-blobs",
            "split": split,
            "seed": str(seed),
            "rng": RNG_ALGORITHM,
            "activation_stage": "post-activation",
        },
    )


def generate_bundles(
    spec: SyntheticBundleSpec, seed: int
) -> dict[str, TensorBundle]:
    """Validation/holdout/test bundles from one seeded mixture draw."""
    rng = np.random.default_rng([seed, 9021])
    k, d = spec.n_classes, spec.n_features
    directions = rng.normal(size=(k, d))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    jitter = rng.uniform(-1.0, 1.0, size=k) * spec.sep_spread
    seps = spec.class_sep * (1.0 + jitter)
    means = directions * seps[:, None]
    weights = means * spec.logit_scale
    biases = np.zeros(k)
    noise_jitter = rng.uniform(-1.0, 1.0, size=k) * spec.noise_spread
    noise = spec.noise * (1.0 + noise_jitter)

    return {
        "validation": _draw_split(
            rng, means, noise, weights, biases,
            spec.n_validation_per_class, "validation", seed,
        ),
        "holdout": _draw_split(
            rng, means, noise, weights, biases,
            spec.n_holdout_per_class, "holdout", seed,
        ),
        "test": _draw_split(
            rng, means, noise, weights, biases,
            spec.n_test_per_class, "test", seed,
        ),
    }


# ---------------------------------------------------------------------------
# experiment driver


@dataclass
class ExperimentConfig:
    seeds: list[int]
    bundles: dict[int, dict[str, str]] | None = None  # seed -> split -> path
    synthetic: SyntheticBundleSpec | None = None
    imbalance: dict[int, int] | None = None
    class_weights: list[float] | str = "from-imbalance"
    n_bins: int | None = None
    n_ranges: int | None = None
    threshold: float = 0.001
    delta: float | str = "auto"
    beta: float | str = "auto"
    holdout_seed: int | None = None
    output_dir: str | None = None

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        if "synthetic" in d and d["synthetic"] is not None:
            d["synthetic"] = SyntheticBundleSpec.from_dict(d["synthetic"])
        if "bundles" in d and d["bundles"] is not None:
            d["bundles"] = {
                int(seed): paths for seed, paths in d["bundles"].items()
            }
        return cls(**d)

    @classmethod
    def load(cls, path: str | os.PathLike) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def expand_imbalance(raw: dict, n_classes: int) -> dict[int, int]:
    """{"default": 667, "3": 333, "5": 1000} -> full class->count map.

    Expansion happens once the bundle's class count is known; classes not
    listed take the "default" count (or are omitted when there is none).
    """
    default = raw.get("default")
    explicit = {int(k): int(v) for k, v in raw.items() if k != "default"}
    if any(c < 0 or c >= n_classes for c in explicit):
        raise ValidationError(
            f"imbalance names classes outside [0, {n_classes}): {sorted(explicit)}"
        )
    if default is None:
        return explicit
    counts = {c: int(default) for c in range(n_classes)}
    counts.update(explicit)
    return counts


@dataclass
class SeedRun:
    """All four estimator reports for one seed's test subset."""

    seed: int
    reports: dict[str, CalibrationReport]
    delta_used: float
    beta_used: float

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "delta": self.delta_used,
            "beta": self.beta_used,
            "reports": {tag: r.to_dict() for tag, r in self.reports.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SeedRun":
        return cls(
            seed=int(d["seed"]),
            reports={tag: CalibrationReport.from_dict(r) for tag, r in d["reports"].items()},
            delta_used=float(d["delta"]),
            beta_used=float(d["beta"]),
        )


@dataclass
class AggregateResult:
    """Cross-seed statistics per estimator per metric."""

    n_runs: int
    seeds: list[int]
    stats: dict[str, dict[str, dict]]  # estimator -> metric -> columns
    failed_seeds: dict[int, str] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "n_runs": self.n_runs,
            "seeds": self.seeds,
            "rng": RNG_ALGORITHM,
            "estimators": self.stats,
            "failed_seeds": {str(k): v for k, v in self.failed_seeds.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AggregateResult":
        return cls(
            n_runs=int(d["n_runs"]),
            seeds=list(d["seeds"]),
            stats=d["estimators"],
            failed_seeds={int(k): v for k, v in d.get("failed_seeds", {}).items()},
        )


def _resolve_bundles(config: ExperimentConfig, seed: int) -> dict[str, TensorBundle]:
    if config.bundles is not None:
        paths = config.bundles.get(seed)
        if paths is None:
            raise ExperimentError(f"no bundle paths configured for seed {seed}")
        return {split: read_bundle(paths[split]) for split in ("validation", "holdout", "test")}
    if config.synthetic is not None:
        return generate_bundles(config.synthetic, seed)
    raise ExperimentError("config needs either 'bundles' or 'synthetic'")


def _class_weights(
    config: ExperimentConfig, counts: dict[int, int] | None, n_classes: int
) -> ClassWeights:
    if isinstance(config.class_weights, (list, tuple)):
        return ClassWeights(np.asarray(config.class_weights, dtype=np.float64))
    if config.class_weights == "uniform" or not counts:
        return ClassWeights.uniform(n_classes)
    if config.class_weights == "from-imbalance":
        return weights_from_counts(counts, n_classes)
    raise ValidationError(f"unknown class_weights mode {config.class_weights!r}")


def run_seed(config: ExperimentConfig, seed: int) -> SeedRun:
    """Fit, calibrate and score one seed; deterministic given (config, seed)."""
    bundles = _resolve_bundles(config, seed)
    val, holdout, test = bundles["validation"], bundles["holdout"], bundles["test"]
    k = val.n_classes

    counts = expand_imbalance(config.imbalance, k) if config.imbalance else None
    if counts:
        test = sample_imbalanced(test, ImbalanceSpec(counts=counts, seed=seed))

    val_angles = compute_angles(val.activations, val.weights, labels=val.labels)
    table = dist.fit_likelihood_table(val_angles, n_classes=k)

    holdout_angles = compute_angles(holdout.activations, holdout.weights, labels=holdout.labels)
    holdout_logits = compute_logits(
        holdout.activations, holdout.weights, holdout.biases,
        labels=holdout.labels, reference=holdout.logits,
    )

    weights = _class_weights(config, counts, k)
    if config.delta == "auto":
        delta_used = calibrate_delta(val_angles, table, weights, holdout_angles,
                                     n_bins=config.n_bins)
    else:
        table.delta = float(config.delta)
        delta_used = table.delta
    if config.beta == "auto":
        beta_used = fit_temperature(holdout_logits).beta
    else:
        beta_used = float(config.beta)

    test_angles = compute_angles(test.activations, test.weights, labels=test.labels)
    test_logits = compute_logits(
        test.activations, test.weights, test.biases,
        labels=test.labels, reference=test.logits,
    )

    estimates = {
        BACON: bacon_confidences(test_angles, table, ClassWeights.uniform(k),
                                 estimator_tag=BACON),
        BACON_WEIGHTED: bacon_confidences(test_angles, table, weights,
                                          estimator_tag=BACON_WEIGHTED),
        SOFTMAX: softmax(test_logits, beta=1.0),
        TSCALED_SOFTMAX: softmax(test_logits, beta=beta_used,
                                 estimator_tag=TSCALED_SOFTMAX),
    }
    meta = {
        "seed": seed,
        "delta": delta_used,
        "beta": beta_used,
        "rng": RNG_ALGORITHM,
        "truncation": "fits use untruncated families on (0, pi/2] angle data",
    }
    reports = {
        tag: calibration_report(
            conf, n_bins=config.n_bins, n_ranges=config.n_ranges,
            threshold=config.threshold, metadata=meta,
        )
        for tag, conf in estimates.items()
    }
    return SeedRun(seed=seed, reports=reports, delta_used=delta_used, beta_used=beta_used)


def run_experiment(
    config: ExperimentConfig,
) -> tuple[list[SeedRun], dict[int, str]]:
    """Run every configured seed; per-seed failures are recorded, not fatal.

    Raises ExperimentError only when no seed succeeds.
    """
    runs: list[SeedRun] = []
    failures: dict[int, str] = {}
    for seed in config.seeds:
        try:
            runs.append(run_seed(config, seed))
        except (BaconError, OSError, KeyError) as exc:
            failures[seed] = f"{type(exc).__name__}: {exc}"
    if not runs:
        raise ExperimentError(f"every seed failed: {failures}")

    if config.output_dir:
        agg = aggregate(
            [r for r in runs if r.seed != config.holdout_seed],
            failed_seeds=failures,
        )
        write_experiment_outputs(config.output_dir, runs, agg)
    return runs, failures


def aggregate(
    runs: list[SeedRun], failed_seeds: dict[int, str] | None = None
) -> AggregateResult:
    """Mean / sample std / 2-sigma / 2-SE columns per estimator per metric."""
    if not runs:
        raise AggregationError("no runs to aggregate")
    runs = sorted(runs, key=lambda r: r.seed)
    stats: dict[str, dict[str, dict]] = {}
    tags = sorted({tag for r in runs for tag in r.reports})
    for tag in tags:
        stats[tag] = {}
        for metric in METRIC_KEYS:
            values = [getattr(r.reports[tag], metric) for r in runs if tag in r.reports]
            column: dict = {
                "values": values,
                "mean": float(np.mean(values)),
            }
            if len(values) >= 2:
                # exact zero for identical values, despite float summation
                std = 0.0 if np.ptp(values) == 0 else float(np.std(values, ddof=1))
                se = std / float(np.sqrt(len(values)))
                column.update(
                    sample_std=std,
                    two_sigma=2.0 * std,
                    standard_error=se,
                    two_se=2.0 * se,
                )
            stats[tag][metric] = column
        stats[tag]["mce_bin_frequency"] = {
            "values": [r.reports[tag].mce_bin_frequency for r in runs if tag in r.reports]
        }
    return AggregateResult(
        n_runs=len(runs),
        seeds=[r.seed for r in runs],
        stats=stats,
        failed_seeds=dict(failed_seeds or {}),
    )


def write_experiment_outputs(
    output_dir: str | os.PathLike, runs: list[SeedRun], agg: AggregateResult
) -> None:
    """runs/<seed>/report.json plus aggregate.json, deterministically encoded."""
    output_dir = os.fspath(output_dir)
    for run in runs:
        run_dir = os.path.join(output_dir, "runs", str(run.seed))
        os.makedirs(run_dir, exist_ok=True)
        with open(os.path.join(run_dir, "report.json"), "w", encoding="utf-8") as fh:
            json.dump(run.to_dict(), fh, indent=2, sort_keys=True, allow_nan=False)
            fh.write("\n")
    os.makedirs(output_dir, exist_ok=True)
    with open(os.path.join(output_dir, "aggregate.json"), "w", encoding="utf-8") as fh:
        json.dump(agg.to_dict(), fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


__all__ = [
    "AggregateResult",
    "ExperimentConfig",
    "ImbalanceSpec",
    "SeedRun",
    "SyntheticBundleSpec",
    "SyntheticOracleSpec",
    "aggregate",
    "expand_imbalance",
    "imbalanced_test_counts",
    "generate_bundles",
    "generate_synthetic",
    "run_experiment",
    "run_seed",
    "sample_imbalanced",
    "weights_from_counts",
    "write_experiment_outputs",
]
