import numpy as np
import pytest

from bacon.baselines import (
    TemperatureParam,
    beta_grid,
    fit_temperature,
    mean_nll,
    softmax,
    softmax_rows,
)
from bacon.confidence import SOFTMAX, TSCALED_SOFTMAX
from bacon.errors import CalibrationError, ValidationError
from bacon.geometry import LogitRecord


def _records(rows, labels):
    return [
        LogitRecord(logits=np.asarray(r, dtype=float), label=int(l), sample_id=i)
        for i, (r, l) in enumerate(zip(rows, labels))
    ]


def test_symmetric_logits():
    assert np.allclose(softmax_rows(np.array([[0.0, 0.0]])), [[0.5, 0.5]], atol=1e-15)


def test_three_way_oracle():
    # exp(1), exp(2), exp(3) normalized, evaluated with 50-digit arithmetic:
    expected = [0.09003057317038046, 0.24472847105479764, 0.6652409557748219]
    probs = softmax_rows(np.array([[1.0, 2.0, 3.0]]))
    assert np.abs(probs[0] - expected).max() < 1e-5


def test_extreme_logits_do_not_overflow():
    probs = softmax_rows(np.array([[1000.0, 0.0]]))
    assert np.isfinite(probs).all()
    assert np.allclose(probs, [[1.0, 0.0]], atol=1e-300)


def test_rows_sum_to_one_and_shift_invariance():
    rng = np.random.default_rng(21)
    logits = rng.normal(scale=5.0, size=(200, 6))
    probs = softmax_rows(logits, beta=1.7)
    assert np.abs(probs.sum(axis=1) - 1.0).max() <= 1e-12
    shifted = softmax_rows(logits + rng.normal(size=(200, 1)), beta=1.7)
    assert np.abs(probs - shifted).max() <= 1e-12


def test_argmax_invariance():
    rng = np.random.default_rng(22)
    logits = rng.normal(size=(10_000, 5))
    # break ties the same way argmax does by construction (continuous draws)
    for beta in (0.05, 1.0, 12.5):
        probs = softmax_rows(logits, beta=beta)
        assert np.array_equal(np.argmax(probs, axis=1), np.argmax(logits, axis=1))


def test_softmax_tagging():
    recs = _records([[0.0, 1.0]], [1])
    assert softmax(recs).estimator_tag == SOFTMAX
    assert softmax(recs, beta=0.5).estimator_tag == TSCALED_SOFTMAX


def test_beta_must_be_positive():
    with pytest.raises(ValidationError):
        softmax_rows(np.zeros((1, 2)), beta=0.0)
    with pytest.raises(ValidationError):
        TemperatureParam(beta=-1.0, nll_holdout=0.0)


def test_temperature_param_inverse():
    assert TemperatureParam(beta=4.0, nll_holdout=0.1).temperature == 0.25


def _calibrated_logits(rng, n, k, scale=1.0):
    """Rows whose softmax at beta=1/scale equals the generating posterior."""
    posterior = rng.dirichlet(np.ones(k), size=n)
    labels = np.array([rng.choice(k, p=row) for row in posterior])
    logits = np.log(posterior) * scale + rng.normal(size=(n, 1))  # row shifts
    return logits, labels


def test_fitted_beta_near_one_on_calibrated_logits():
    rng = np.random.default_rng(23)
    logits, labels = _calibrated_logits(rng, 20_000, 4)
    param = fit_temperature(_records(logits, labels))
    assert abs(param.beta - 1.0) <= 0.05


def test_fitted_beta_recovers_scale():
    rng = np.random.default_rng(24)
    # logits stretched 4x: NLL is minimized near beta = 1/4
    logits, labels = _calibrated_logits(rng, 20_000, 4, scale=4.0)
    param = fit_temperature(_records(logits, labels))
    assert abs(param.beta - 0.25) <= 0.05 * 0.25 + 0.02


def test_flat_objective_returns_smallest_grid_point():
    recs = _records([[0.5, 0.5, 0.5]] * 10, [0] * 10)
    param = fit_temperature(recs)
    assert param.beta == beta_grid()[0] == 0.01


def test_fitting_never_loses_to_unit_beta():
    rng = np.random.default_rng(25)
    for _ in range(100):
        n = int(rng.integers(5, 50))
        k = int(rng.integers(2, 6))
        logits = rng.normal(scale=rng.uniform(0.2, 6.0), size=(n, k))
        labels = rng.integers(0, k, size=n)
        param = fit_temperature(_records(logits, labels))
        assert param.nll_holdout <= mean_nll(logits, labels, 1.0) + 1e-12


def test_empty_holdout_rejected():
    with pytest.raises(CalibrationError):
        fit_temperature([])


def test_beta_grid_contract():
    grid = beta_grid()
    assert grid.shape == (50,)
    assert grid[0] == 0.01
    assert grid[-1] == 100.0
