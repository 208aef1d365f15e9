import hashlib
import json

import numpy as np
import pytest

import bacon.harness as harness
from bacon.confidence import BACON, BACON_WEIGHTED, SOFTMAX, TSCALED_SOFTMAX
from bacon.distributions import LOGNORMAL, UNIFORM, fit_likelihood_table
from bacon.errors import AggregationError, ExperimentError, SamplingError
from bacon.estimator import bacon_confidences
from bacon.geometry import records_to_matrix
from bacon.metrics import ece


def _pool_bundle(per_class=1000, k=10, seed=0):
    spec = harness.SyntheticBundleSpec(
        n_classes=k, n_features=8, n_validation_per_class=40,
        n_holdout_per_class=40, n_test_per_class=per_class,
    )
    return harness.generate_bundles(spec, seed)["test"]


# -- imbalanced sampling ---------------------------------------------------------

def test_imbalanced_sampler_counts():
    pool = _pool_bundle()
    counts = harness.imbalanced_test_counts()
    sampled = harness.sample_imbalanced(pool, harness.ImbalanceSpec(counts, seed=4))
    labels = sampled.labels
    assert labels.shape[0] == 6669
    got = {c: int((labels == c).sum()) for c in range(10)}
    expected = {c: 667 for c in range(10)}
    expected[3] = 333
    expected[5] = 1000
    assert got == expected


def test_sampler_deterministic():
    pool = _pool_bundle(per_class=50, k=3)
    spec = harness.ImbalanceSpec({0: 20, 1: 10, 2: 30}, seed=99)
    a = harness.sample_imbalanced(pool, spec)
    b = harness.sample_imbalanced(pool, spec)
    assert np.array_equal(
        a.tensor("sample_ids").array, b.tensor("sample_ids").array
    )
    assert np.array_equal(a.activations, b.activations)
    # a different seed reorders
    c = harness.sample_imbalanced(pool, harness.ImbalanceSpec({0: 20, 1: 10, 2: 30}, seed=100))
    assert not np.array_equal(a.tensor("sample_ids").array, c.tensor("sample_ids").array)


def test_sampler_no_duplicates():
    pool = _pool_bundle(per_class=100, k=4)
    spec = harness.ImbalanceSpec({0: 100, 1: 50, 2: 25, 3: 10}, seed=2)
    sampled = harness.sample_imbalanced(pool, spec)
    ids = sampled.tensor("sample_ids").array
    assert len(np.unique(ids)) == ids.size


def test_sampler_empty_request():
    pool = _pool_bundle(per_class=10, k=3)
    sampled = harness.sample_imbalanced(
        pool, harness.ImbalanceSpec({0: 0, 1: 0, 2: 0}, seed=1)
    )
    assert sampled.n_samples == 0
    sampled.validate(allow_empty=True)  # manifest-level invariants still hold


def test_sampler_insufficient_pool_names_class():
    pool = _pool_bundle(per_class=10, k=3)
    with pytest.raises(SamplingError, match="class 1"):
        harness.sample_imbalanced(pool, harness.ImbalanceSpec({1: 11}, seed=1))


def test_weights_from_counts_matches_frequencies():
    w = harness.weights_from_counts(harness.imbalanced_test_counts(), 10)
    assert w.weights[5] == 1.0
    assert abs(w.weights[3] - 0.333) <= 1e-12
    assert abs(w.weights[0] - 0.667) <= 1e-12


# -- synthetic angle oracle --------------------------------------------------------

def test_identical_uniform_diagonals_recover_priors_exactly():
    # constant densities cancel in the posterior: every row equals the priors
    domain = (0.0, np.pi / 2)
    spec = harness.SyntheticOracleSpec(
        n_classes=2,
        diagonal=[(UNIFORM, domain), (UNIFORM, domain)],
        priors=[0.5, 0.5],
        n_samples=500,
        seed=11,
    )
    _, posterior = harness.generate_synthetic(spec)
    assert np.abs(posterior - 0.5).max() <= 1e-12

    spec_imbalanced = harness.SyntheticOracleSpec(
        n_classes=2,
        diagonal=[(UNIFORM, domain), (UNIFORM, domain)],
        priors=[0.75, 0.25],
        n_samples=500,
        seed=12,
    )
    _, posterior = harness.generate_synthetic(spec_imbalanced)
    assert np.abs(posterior[:, 0] - 0.75).max() <= 1e-12


def test_oracle_closure_bacon_matches_analytic_posterior():
    # fit -> bacon_confidences recovers the analytic posterior within 1e-2
    spec = harness.SyntheticOracleSpec(
        n_classes=3,
        diagonal=[
            (LOGNORMAL, (-1.4, 0.25)),
            (LOGNORMAL, (-1.0, 0.30)),
            (LOGNORMAL, (-0.7, 0.20)),
        ],
        priors=[0.3, 0.4, 0.3],
        n_samples=100_000,
        seed=13,
    )
    records, analytic = harness.generate_synthetic(spec)
    table = fit_likelihood_table(records, n_classes=3)
    table.delta = 1e-3
    weights = harness.weights_from_counts({0: 30, 1: 40, 2: 30}, 3)
    conf = bacon_confidences(records, table, weights)
    mean_abs = float(np.abs(conf.probs - analytic).mean())
    assert mean_abs < 1e-2
    value, _ = ece(conf, 10)
    assert value < 0.02


def test_oracle_true_class_angles_are_smaller_on_average():
    spec = harness.SyntheticOracleSpec(
        n_classes=2,
        diagonal=[(LOGNORMAL, (-1.5, 0.2)), (LOGNORMAL, (-1.5, 0.2))],
        priors=[0.5, 0.5],
        n_samples=2000,
        seed=14,
    )
    records, _ = harness.generate_synthetic(spec)
    angles, labels, _ = records_to_matrix(records)
    own = angles[np.arange(angles.shape[0]), labels]
    other = angles[np.arange(angles.shape[0]), 1 - labels]
    assert own.mean() < other.mean()


def test_matched_mode_draws_false_nodes_from_diagonals():
    spec = harness.SyntheticOracleSpec(
        n_classes=2,
        diagonal=[(LOGNORMAL, (-1.5, 0.2)), (LOGNORMAL, (-1.5, 0.2))],
        priors=[0.5, 0.5],
        n_samples=2000,
        seed=15,
        false_mode="matched",
    )
    records, _ = harness.generate_synthetic(spec)
    angles, labels, _ = records_to_matrix(records)
    own = angles[np.arange(angles.shape[0]), labels]
    other = angles[np.arange(angles.shape[0]), 1 - labels]
    # identical distributions for both roles: means coincide
    assert abs(own.mean() - other.mean()) < 0.02


# -- experiment driver ---------------------------------------------------------------

def _tiny_config(tmp_path=None, seeds=(0,), **overrides):
    spec = harness.SyntheticBundleSpec(
        n_classes=3, n_features=8, class_sep=2.0, noise=1.0,
        n_validation_per_class=150, n_holdout_per_class=100, n_test_per_class=150,
    )
    kwargs = dict(
        seeds=list(seeds),
        synthetic=spec,
        output_dir=str(tmp_path) if tmp_path else None,
    )
    kwargs.update(overrides)
    return harness.ExperimentConfig(**kwargs)


def test_single_seed_smoke(tmp_path):
    config = _tiny_config(tmp_path)
    runs, failures = harness.run_experiment(config)
    assert not failures
    assert len(runs) == 1
    run = runs[0]
    assert set(run.reports) == {BACON, BACON_WEIGHTED, SOFTMAX, TSCALED_SOFTMAX}
    for report in run.reports.values():
        assert report.n == 450
        assert 0.0 <= report.ece <= 1.0
        assert report.ece <= report.mce
    assert (tmp_path / "runs" / "0" / "report.json").exists()
    assert (tmp_path / "aggregate.json").exists()


def test_experiment_rerun_is_bit_identical(tmp_path):
    config_a = _tiny_config(tmp_path / "a", seeds=(0, 1, 2))
    config_b = _tiny_config(tmp_path / "b", seeds=(0, 1, 2))
    harness.run_experiment(config_a)
    harness.run_experiment(config_b)
    h = lambda p: hashlib.sha256(p.read_bytes()).hexdigest()
    assert h(tmp_path / "a" / "aggregate.json") == h(tmp_path / "b" / "aggregate.json")
    for seed in (0, 1, 2):
        assert h(tmp_path / "a" / "runs" / str(seed) / "report.json") == h(
            tmp_path / "b" / "runs" / str(seed) / "report.json"
        )


def test_failed_seed_is_isolated(tmp_path):
    # configure disk bundles for seed 1 that do not exist; seed 0 synthetic
    good = harness.generate_bundles(
        harness.SyntheticBundleSpec(
            n_classes=3, n_features=8,
            n_validation_per_class=120, n_holdout_per_class=80, n_test_per_class=100,
        ),
        seed=0,
    )
    from bacon.bundle_io import write_bundle

    paths = {}
    for split, bundle in good.items():
        p = tmp_path / "seed0" / split
        write_bundle(bundle, p)
        paths[split] = str(p)
    config = harness.ExperimentConfig(
        seeds=[0, 1],
        bundles={
            0: paths,
            1: {k: str(tmp_path / "missing" / k) for k in paths},
        },
    )
    runs, failures = harness.run_experiment(config)
    assert [r.seed for r in runs] == [0]
    assert 1 in failures


def test_all_seeds_failing_raises(tmp_path):
    config = harness.ExperimentConfig(
        seeds=[0],
        bundles={0: {s: str(tmp_path / "nope" / s) for s in ("validation", "holdout", "test")}},
    )
    with pytest.raises(ExperimentError):
        harness.run_experiment(config)


def test_imbalance_and_weights_flow_through(tmp_path):
    config = _tiny_config(
        tmp_path,
        imbalance={0: 30, 1: 100, 2: 60},
        class_weights="from-imbalance",
    )
    runs, _ = harness.run_experiment(config)
    report = runs[0].reports[BACON_WEIGHTED]
    assert report.n == 190
    per_class_n = {k: v["n"] for k, v in report.per_class.items()}
    assert per_class_n == {0: 30, 1: 100, 2: 60}


def test_fixed_delta_and_beta_modes(tmp_path):
    config = _tiny_config(tmp_path, delta=0.02, beta=1.5)
    runs, _ = harness.run_experiment(config)
    assert runs[0].delta_used == 0.02
    assert runs[0].beta_used == 1.5


# -- aggregation -----------------------------------------------------------------------

def _fake_runs(values_by_seed):
    from bacon.metrics import AdaptiveBinning, CalibrationReport, FixedBinning

    runs = []
    for seed, v in values_by_seed.items():
        fixed = FixedBinning(
            edges=np.linspace(0, 1, 3), counts=np.array([1, 1]),
            conf=np.array([0.4, 0.9]), acc=np.array([0.4, 0.9]),
        )
        adaptive = AdaptiveBinning(
            threshold=0.001, counts=np.ones((2, 2), dtype=int),
            conf=np.full((2, 2), 0.5), acc=np.full((2, 2), 0.5),
        )
        report = CalibrationReport(
            estimator_tag=BACON, n=2, n_classes=2, ece=v, mce=v, mce_bin_frequency=1,
            ace=v, fixed_binning=fixed, adaptive_binning=adaptive,
            per_class={}, confusion=np.eye(2, dtype=int),
        )
        runs.append(harness.SeedRun(seed=seed, reports={BACON: report},
                                    delta_used=0.01, beta_used=1.0))
    return runs


def test_aggregate_hand_arithmetic():
    agg = harness.aggregate(_fake_runs({0: 0.02, 1: 0.04}))
    col = agg.stats[BACON]["ece"]
    assert abs(col["mean"] - 0.03) <= 1e-15
    assert abs(col["sample_std"] - 0.014142135623730951) <= 1e-12
    assert abs(col["two_sigma"] - 0.028284271247461903) <= 1e-12
    assert abs(col["standard_error"] - 0.01) <= 1e-12


def test_aggregate_identical_values_zero_sigma():
    agg = harness.aggregate(_fake_runs({0: 0.05, 1: 0.05, 2: 0.05}))
    assert agg.stats[BACON]["ece"]["sample_std"] == 0.0


def test_aggregate_single_run_mean_only():
    agg = harness.aggregate(_fake_runs({7: 0.03}))
    col = agg.stats[BACON]["ece"]
    assert col["mean"] == 0.03
    assert "sample_std" not in col
    assert "two_sigma" not in col


def test_aggregate_zero_runs_rejected():
    with pytest.raises(AggregationError):
        harness.aggregate([])


def test_holdout_seed_excluded_from_aggregate(tmp_path):
    config = _tiny_config(tmp_path, seeds=(0, 1, 2), holdout_seed=2)
    harness.run_experiment(config)
    agg = json.loads((tmp_path / "aggregate.json").read_text())
    assert agg["seeds"] == [0, 1]
    assert (tmp_path / "runs" / "2" / "report.json").exists()


def test_config_json_roundtrip(tmp_path):
    payload = {
        "seeds": [0, 1],
        "synthetic": {"n_classes": 4, "n_features": 6},
        "imbalance": {"default": 50, "1": 20},
        "class_weights": "from-imbalance",
        "delta": "auto",
        "beta": 1.0,
        "threshold": 0.001,
    }
    path = tmp_path / "config.json"
    path.write_text(json.dumps(payload))
    config = harness.ExperimentConfig.load(path)
    assert config.synthetic.n_classes == 4
    counts = harness.expand_imbalance(config.imbalance, 4)
    assert counts == {0: 50, 1: 20, 2: 50, 3: 50}
    assert config.beta == 1.0


def test_thirty_seed_experiment_and_scatter(tmp_path):
    # 30 seeds end to end: one SeedRun each, aggregate emitted, re-run hash
    # equality, and the MCE scatter carries seeds x estimators points
    import bacon.report as report_mod

    def run(out):
        config = harness.ExperimentConfig(
            seeds=list(range(30)),
            synthetic=harness.SyntheticBundleSpec(
                n_classes=3, n_features=6, class_sep=2.2,
                n_validation_per_class=100, n_holdout_per_class=50,
                n_test_per_class=60,
            ),
            delta=0.02,
            output_dir=str(out),
        )
        runs, failures = harness.run_experiment(config)
        assert not failures
        return runs

    runs = run(tmp_path / "a")
    assert len(runs) == 30
    agg = json.loads((tmp_path / "a" / "aggregate.json").read_text())
    assert agg["n_runs"] == 30
    for tag in (BACON, BACON_WEIGHTED, SOFTMAX, TSCALED_SOFTMAX):
        assert len(agg["estimators"][tag]["ece"]["values"]) == 30
        assert "two_sigma" in agg["estimators"][tag]["ece"]

    run(tmp_path / "b")
    assert (tmp_path / "a" / "aggregate.json").read_bytes() == (
        tmp_path / "b" / "aggregate.json"
    ).read_bytes()

    _, csv_path = report_mod.render_mce_scatter(runs, tmp_path / "mce.svg")
    with open(csv_path) as fh:
        rows = fh.read().strip().splitlines()
    assert len(rows) - 1 == 30 * 4
