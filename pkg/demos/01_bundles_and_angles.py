#!/usr/bin/env python3
# Walk through the interchange format: build a classifier export in memory,
# write it to disk, read it back, and turn it into output-node angles.

import tempfile

import numpy as np

from bacon import bundle_from_arrays, compute_angles, read_bundle, write_bundle

rng = np.random.default_rng(0)

# a fake "decision layer": 200 samples, 16 features, 4 classes
K, D, N = 4, 16, 200
prototypes = rng.normal(size=(K, D))
labels = rng.integers(0, K, size=N)
activations = prototypes[labels] + 0.6 * rng.normal(size=(N, D))
logits = activations @ prototypes.T

bundle = bundle_from_arrays(
    activations=activations,
    weights=prototypes,
    labels=labels,
    logits=logits,
    metadata={"dataset": "demo-blobs", "split": "validation"},
)

with tempfile.TemporaryDirectory() as tmp:
    write_bundle(bundle, tmp)
    again = read_bundle(tmp)
    print(f"bundle: N={again.n_samples} D={again.n_features} K={again.n_classes}")
    print(f"tensors: {again.names()}")
    print(f"metadata: {again.metadata}")

records = compute_angles(bundle.activations, bundle.weights, labels=bundle.labels)
phi = np.stack([r.angles for r in records])
print(f"\nangles shape: {phi.shape}, range [{phi.min():.3f}, {phi.max():.3f}] rad")

own = phi[np.arange(N), labels]
other = np.array([np.delete(phi[i], labels[i]).mean() for i in range(N)])
print(f"mean angle at the true-label node: {own.mean():.3f} rad")
print(f"mean angle at the other nodes:     {other.mean():.3f} rad")
print("the decision vector leans toward its own class's weight vector")
