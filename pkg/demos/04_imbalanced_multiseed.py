#!/usr/bin/env python3
# The imbalanced test-set experiment: deplete one class to 333, enhance
# another to 1000 (667 elsewhere), give BACON the matching class weights,
# and aggregate ECE/ACE across seeds with 2-sigma bands.

import numpy as np

from bacon import ExperimentConfig, SyntheticBundleSpec, aggregate
from bacon.confidence import BACON, BACON_WEIGHTED, SOFTMAX, TSCALED_SOFTMAX
from bacon.harness import imbalanced_test_counts, run_experiment

counts = imbalanced_test_counts(depleted_class=3, enhanced_class=5)
print("imbalance:", {c: n for c, n in sorted(counts.items())})

config = ExperimentConfig(
    seeds=list(range(8)),
    synthetic=SyntheticBundleSpec(
        n_classes=10, n_features=12, class_sep=2.9, noise=1.0, noise_spread=0.2,
        logit_scale=3.0,
        n_validation_per_class=400, n_holdout_per_class=200, n_test_per_class=1000,
    ),
    imbalance=counts,
    class_weights="from-imbalance",  # weighted BACON uses the test fractions
)
runs, failures = run_experiment(config)
print(f"{len(runs)} seeds completed ({len(failures)} failed)\n")

agg = aggregate(runs)
for metric in ("ece", "ace"):
    print(f"{metric.upper()} (mean +/- 2 sigma over {agg.n_runs} seeds)")
    for tag in (SOFTMAX, TSCALED_SOFTMAX, BACON, BACON_WEIGHTED):
        col = agg.stats[tag][metric]
        print(f"  {tag:<16} {col['mean']:.4f} +/- {col['two_sigma']:.4f}")
    print()

bacon_ace = agg.stats[BACON]["ace"]["mean"]
weighted_ace = agg.stats[BACON_WEIGHTED]["ace"]["mean"]
print(f"weighting helps under imbalance (ACE): {bacon_ace:.4f} -> {weighted_ace:.4f}")
