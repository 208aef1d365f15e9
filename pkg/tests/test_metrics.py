import numpy as np
import pytest

from bacon.confidence import ConfidenceMatrix
from bacon.errors import MetricError, ValidationError
from bacon.metrics import (
    AdaptiveBinning,
    FixedBinning,
    CalibrationReport,
    ace,
    calibration_report,
    confusion_matrix,
    ece,
    mce,
    per_class_report,
)


def _cm(probs, labels, tag="Softmax"):
    return ConfidenceMatrix(
        probs=np.asarray(probs, dtype=float),
        labels=np.asarray(labels, dtype=np.int64),
        estimator_tag=tag,
    )


# -- hand oracles ---------------------------------------------------------------

def test_three_sample_hand_oracle():
    # confidences (0.9, 0.9, 0.6), correctness (1, 1, 0), M=2:
    # every sample lands in [0.5, 1]; acc = 2/3, conf = 0.8, ECE = |2/3 - 0.8|
    cm = _cm([[0.9, 0.1], [0.9, 0.1], [0.6, 0.4]], [0, 0, 1])
    value, binning = ece(cm, 2)
    assert abs(value - 0.13333333333333333) <= 1e-4
    assert binning.counts.tolist() == [0, 3]
    assert abs(binning.conf[1] - 0.8) <= 1e-12
    assert abs(binning.acc[1] - 2.0 / 3.0) <= 1e-12

    mce_value, freq = mce(binning)
    assert abs(mce_value - 0.13333333333333333) <= 1e-4
    assert freq == 3


def test_single_wrong_sample():
    value, _ = ece(_cm([[0.7, 0.3]], [1]), 2)
    assert abs(value - 0.7) <= 1e-12


def test_perfect_boundary_confidence():
    cm = _cm([[1.0, 0.0], [1.0, 0.0]], [0, 0])
    value, _ = ece(cm, 3)
    assert value == 0.0


def test_mce_max_selection():
    binning = FixedBinning(
        edges=np.linspace(0, 1, 3),
        counts=np.array([10, 5]),
        conf=np.array([0.3, 0.9]),
        acc=np.array([0.25, 0.6]),
    )
    value, freq = mce(binning)
    assert abs(value - 0.30) <= 1e-12
    assert freq == 5


def test_mce_all_empty_bins():
    binning = FixedBinning(
        edges=np.linspace(0, 1, 3),
        counts=np.zeros(2, dtype=int),
        conf=np.full(2, np.nan),
        acc=np.full(2, np.nan),
    )
    with pytest.raises(MetricError):
        mce(binning)


def test_ace_two_class_hand_oracle():
    # class-0 confidences (0.9, 0.8, 0.2, 0.1), labels (0, 0, 1, 1), R=2:
    # ranges {0.1, 0.2} acc 0 conf 0.15 and {0.8, 0.9} acc 1 conf 0.85;
    # class 1 mirrors by complement; ACE = 0.15
    cm = _cm([[0.9, 0.1], [0.8, 0.2], [0.2, 0.8], [0.1, 0.9]], [0, 0, 1, 1])
    value, binning = ace(cm, n_ranges=2, threshold=0.001)
    assert abs(value - 0.15) <= 1e-9
    assert binning.counts.tolist() == [[2, 2], [2, 2]]
    assert np.allclose(binning.conf[0], [0.15, 0.85])
    assert np.allclose(binning.acc[0], [0.0, 1.0])


def test_ace_constant_frequency_741():
    # 6669 surviving confidences split into 9 ranges: all exactly 741
    rng = np.random.default_rng(77)
    n, k = 6669, 10
    probs = rng.dirichlet(np.ones(k) * 5.0, size=n)  # comfortably above 0.001
    assert probs.min() >= 0.001
    cm = _cm(probs, rng.integers(0, k, n))
    _, binning = ace(cm, n_ranges=9, threshold=0.001)
    assert np.all(binning.counts == 741)


def test_ace_remainder_goes_to_lowest_ranges():
    probs = np.column_stack([np.linspace(0.1, 0.9, 7), 1 - np.linspace(0.1, 0.9, 7)])
    cm = _cm(probs, np.zeros(7, dtype=int))
    _, binning = ace(cm, n_ranges=3, threshold=0.0)
    assert binning.counts[0].tolist() == [3, 2, 2]


def test_ace_threshold_excludes_low_confidences():
    cm = _cm([[0.9995, 0.0005], [0.5, 0.5]], [0, 1])
    _, binning = ace(cm, n_ranges=1, threshold=0.001)
    # class-1 pool keeps only the 0.5 (the 0.0005 falls below threshold)
    assert binning.counts[1].tolist() == [1]
    assert binning.counts[0].tolist() == [2]


def test_ace_flags_empty_classes():
    cm = _cm([[0.9999, 0.0001], [0.9998, 0.0002]], [0, 0])
    value, binning = ace(cm, n_ranges=2, threshold=0.001)
    assert binning.empty_classes == [1]
    # the empty class contributes zero, not NaN
    assert np.isfinite(value)


def test_ace_r1_threshold0_reduction():
    rng = np.random.default_rng(5)
    probs = rng.dirichlet(np.ones(3), size=200)
    labels = rng.integers(0, 3, 200)
    cm = _cm(probs, labels)
    _, binning = ace(cm, n_ranges=1, threshold=0.0)
    for k in range(3):
        prevalence = float(np.mean(labels == k))
        mean_conf = float(probs[:, k].mean())
        assert abs(abs(binning.acc[k, 0] - binning.conf[k, 0]) - abs(prevalence - mean_conf)) <= 1e-12


# -- structural properties --------------------------------------------------------

def test_ece_partition_and_bounds():
    rng = np.random.default_rng(88)
    for _ in range(50):
        n = int(rng.integers(1, 300))
        k = int(rng.integers(2, 8))
        m = int(rng.integers(1, 15))
        cm = _cm(rng.dirichlet(np.ones(k), size=n), rng.integers(0, k, n))
        value, binning = ece(cm, m)
        assert 0.0 <= value <= 1.0
        assert binning.counts.sum() == n


def test_ece_never_exceeds_mce():
    rng = np.random.default_rng(99)
    for _ in range(1000):
        n = int(rng.integers(1, 60))
        k = int(rng.integers(2, 6))
        m = int(rng.integers(1, 12))
        cm = _cm(rng.dirichlet(np.ones(k), size=n), rng.integers(0, k, n))
        value, binning = ece(cm, m)
        mce_value, _ = mce(binning)
        assert value <= mce_value + 1e-12


def test_permutation_invariance():
    rng = np.random.default_rng(11)
    probs = rng.dirichlet(np.ones(4), size=100)
    labels = rng.integers(0, 4, 100)
    perm = rng.permutation(100)
    a1, _ = ece(_cm(probs, labels), 5)
    a2, _ = ece(_cm(probs[perm], labels[perm]), 5)
    assert abs(a1 - a2) <= 1e-12
    b1, _ = ace(_cm(probs, labels), 5)
    b2, _ = ace(_cm(probs[perm], labels[perm]), 5)
    assert abs(b1 - b2) <= 1e-12


def test_adaptive_ranges_contiguous_and_balanced():
    rng = np.random.default_rng(12)
    probs = rng.dirichlet(np.ones(3), size=157)
    cm = _cm(probs, rng.integers(0, 3, 157))
    _, binning = ace(cm, n_ranges=7, threshold=0.001)
    for k in range(3):
        counts = binning.counts[k]
        nonzero = counts[counts > 0]
        assert nonzero.max() - nonzero.min() <= 1
        # contiguity: conf means must be nondecreasing across ranges
        conf = binning.conf[k][np.isfinite(binning.conf[k])]
        assert np.all(np.diff(conf) >= -1e-12)


def test_calibrated_synthetic_drives_metrics_to_zero():
    rng = np.random.default_rng(13)
    n = 100_000
    p = rng.uniform(0.5, 1.0, size=n)
    probs = np.column_stack([p, 1.0 - p])
    labels = (rng.uniform(size=n) > p).astype(np.int64)  # P(label=0) = p
    cm = _cm(probs, labels)
    ece_value, binning = ece(cm, 10)
    assert ece_value <= 0.02
    mce_value, _ = mce(binning)
    assert mce_value <= 0.02
    ace_value, _ = ace(cm, 10)
    assert ace_value <= 0.02


# -- confusion matrix ---------------------------------------------------------------

def test_confusion_all_correct_is_diagonal():
    cm = _cm([[0.9, 0.1], [0.1, 0.9]], [0, 1])
    assert confusion_matrix(cm).tolist() == [[1, 0], [0, 1]]


def test_confusion_antidiagonal():
    cm = _cm([[0.1, 0.9], [0.9, 0.1]], [0, 1])
    assert confusion_matrix(cm).tolist() == [[0, 1], [1, 0]]


def test_confusion_matches_loop_oracle():
    rng = np.random.default_rng(14)
    probs = rng.dirichlet(np.ones(4), size=100)
    labels = rng.integers(0, 4, 100)
    cm = _cm(probs, labels)
    got = confusion_matrix(cm)
    expected = np.zeros((4, 4), dtype=int)
    for i in range(100):
        expected[labels[i], int(np.argmax(probs[i]))] += 1
    assert np.array_equal(got, expected)
    assert got.sum(axis=1).tolist() == [int((labels == k).sum()) for k in range(4)]


# -- per-class report ---------------------------------------------------------------

def test_per_class_symmetry():
    rng = np.random.default_rng(15)
    p = rng.uniform(0.5, 0.99, size=40)
    hit = rng.uniform(size=40) < 0.8
    # class-0 samples and their mirrored class-1 twins
    probs, labels = [], []
    for pi, hi in zip(p, hit):
        row = [pi, 1 - pi] if hi else [1 - pi, pi]
        probs.append(row)
        labels.append(0)
        probs.append(row[::-1])
        labels.append(1)
    report = per_class_report(_cm(probs, labels), n_bins=5, n_ranges=4)
    for key in ("accuracy", "ece", "ace"):
        assert abs(report[0][key] - report[1][key]) <= 1e-12


def test_per_class_perfect_class():
    cm = _cm([[1.0, 0.0], [1.0, 0.0], [0.2, 0.8]], [0, 0, 1])
    report = per_class_report(cm, n_bins=4, n_ranges=2)
    assert report[0]["ece"] == 0.0
    assert report[0]["accuracy"] == 1.0


def test_per_class_matches_bruteforce_subset_oracle():
    rng = np.random.default_rng(16)
    probs = rng.dirichlet(np.ones(3), size=120)
    labels = rng.integers(0, 3, 120)
    cm = _cm(probs, labels)
    report = per_class_report(cm, n_bins=4, n_ranges=3)
    for k in range(3):
        subset = labels == k
        sub_cm = _cm(probs[subset], labels[subset])
        expected_ece, _ = ece(sub_cm, 4)
        assert abs(report[k]["ece"] - expected_ece) <= 1e-12
        assert abs(report[k]["accuracy"] - np.mean(np.argmax(probs[subset], 1) == k)) <= 1e-12


def test_per_class_omits_absent_class():
    cm = _cm([[0.9, 0.05, 0.05], [0.8, 0.1, 0.1]], [0, 0])
    report = per_class_report(cm, n_bins=2, n_ranges=2)
    assert 0 in report
    assert 1 not in report and 2 not in report


# -- report container ----------------------------------------------------------------

def test_calibration_report_roundtrip():
    rng = np.random.default_rng(17)
    probs = rng.dirichlet(np.ones(4), size=300)
    labels = rng.integers(0, 4, 300)
    report = calibration_report(_cm(probs, labels, tag="BACON"), metadata={"delta": 0.01})
    assert report.ece <= report.mce
    payload = report.to_dict()
    again = CalibrationReport.from_dict(payload)
    assert again.to_dict() == payload


def test_confidence_matrix_validation():
    with pytest.raises(ValidationError):
        _cm([[0.6, 0.6]], [0])  # rows must sum to 1
    with pytest.raises(ValidationError):
        _cm([[1.2, -0.2]], [0])  # entries in [0, 1]
    with pytest.raises(ValidationError):
        _cm([[0.5, 0.5]], [2])  # label out of range
    with pytest.raises(ValidationError):
        _cm([[1.0]], [0])  # K >= 2


def test_argmax_tie_resolves_to_lowest_class():
    cm = _cm([[0.5, 0.5], [0.25, 0.75]], [1, 1])
    assert cm.predicted().tolist() == [0, 1]
    assert confusion_matrix(cm).tolist() == [[0, 0], [1, 1]]
