import numpy as np
import pytest

from bacon.bundle_io import bundle_from_arrays


@pytest.fixture
def minimal_bundle():
    """Smallest well-formed classifier export: N=2, D=3, K=2."""
    return bundle_from_arrays(
        activations=np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]),
        weights=np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]),
        labels=np.array([0, 1]),
        metadata={"dataset": "unit-test"},
    )


def random_bundle(rng, n=20, d=5, k=3, with_biases=True, with_logits=True):
    activations = rng.normal(size=(n, d))
    weights = rng.normal(size=(k, d))
    biases = rng.normal(size=k) if with_biases else None
    logits = activations @ weights.T + (biases if with_biases else 0.0)
    return bundle_from_arrays(
        activations=activations,
        weights=weights,
        labels=rng.integers(0, k, size=n),
        biases=biases,
        logits=logits if with_logits else None,
    )
