"""BACON: geometric Bayesian confidence estimation with calibration metrics.

The toolkit turns a classifier's exported terminal layers (activations,
output weights, labels) into decision-vector angles, fits per-class angle
likelihoods, applies Bayes' Rule to produce confidence estimates, and
evaluates them against Softmax and temperature-scaled Softmax baselines
with ECE, MCE and ACE, on balanced or imbalanced test sets.
"""

from .baselines import TemperatureParam, fit_temperature, softmax, softmax_rows
from .bundle_io import TensorBundle, TensorEntry, bundle_from_arrays, read_bundle, write_bundle
from .confidence import (
    BACON,
    BACON_WEIGHTED,
    SOFTMAX,
    TSCALED_SOFTMAX,
    ClassWeights,
    ConfidenceMatrix,
)
from .distributions import (
    CAUCHY,
    LOGNORMAL,
    NORMAL,
    UNIFORM,
    LikelihoodModel,
    LikelihoodTable,
    fit,
    fit_likelihood_table,
    interval_probability,
    log_interval_probability,
    select_family,
)
from .errors import *  # noqa: F401,F403  (the exception vocabulary)
from .estimator import bacon_confidences, calibrate_delta, delta_grid
from .geometry import AngleRecord, LogitRecord, angle_matrix, compute_angles, compute_logits, logit_matrix
from .harness import (
    AggregateResult,
    ExperimentConfig,
    ImbalanceSpec,
    SeedRun,
    SyntheticBundleSpec,
    SyntheticOracleSpec,
    aggregate,
    imbalanced_test_counts,
    generate_bundles,
    generate_synthetic,
    run_experiment,
    sample_imbalanced,
    weights_from_counts,
)
from .metrics import (
    AdaptiveBinning,
    CalibrationReport,
    FixedBinning,
    ace,
    calibration_report,
    confusion_matrix,
    ece,
    mce,
    per_class_report,
)
from .report import (
    render_adaptive_reliability,
    render_ci_whisker,
    render_class_scatter,
    render_fixed_reliability,
    render_mce_scatter,
)

__version__ = "0.1.0"
