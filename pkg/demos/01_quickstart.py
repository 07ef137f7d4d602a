"""Quickstart: find the corner cases a small classifier gets wrong.

Trains a tiny MLP on two overlapping Gaussian blobs, scores every test
input by how surprising its activation trace is relative to the training
traces, and checks that high scores line up with misclassifications.
Run it directly: python demos/01_quickstart.py
"""

import numpy as np

from dsadetect.demo import (
    TrainConfig,
    extract_traces,
    generate_blobs,
    standard_overlapping_blobs,
    train_tinynet,
)
from dsadetect.dsa import DsaConfig, DsaVariant, batch_dsa
from dsadetect.metrics import as_samples, roc_auc
from dsadetect.traces import LabeledTraceSet

# Two 2-D Gaussian blobs whose tails overlap: some test points are
# genuinely ambiguous, which is exactly what a corner-case detector
# should surface.
seed = 3
data = generate_blobs(standard_overlapping_blobs(), seed=seed)
print(f"train {data.train_inputs.shape}, test {data.test_inputs.shape}")

net = train_tinynet(data, TrainConfig(seed=seed + 1))
train_pred = net.predict(data.train_inputs)
test_pred = net.predict(data.test_inputs)
print(f"train accuracy {np.mean(train_pred == data.train_labels):.3f}")
print(f"test accuracy  {np.mean(test_pred == data.test_labels):.3f}")

# Activation traces at the softmax output tap. Any tap works; deeper taps
# carry more geometry but the output tap is the strongest single layer on
# this dataset.
train_traces = extract_traces(net, data.train_inputs, "output")
test_traces = extract_traces(net, data.test_inputs, "output")

train_set = LabeledTraceSet(train_traces, data.train_labels, train_pred, 2)
test_set = LabeledTraceSet(test_traces, data.test_labels, test_pred, 2)

# The local-neighborhood variant: distances to the mean of the 20 nearest
# same-class and other-class training traces around the input's anchors.
config = DsaConfig(variant=DsaVariant.DSA3)
scores = batch_dsa(train_set, test_set, config)
values = np.array([s.value for s in scores])

# A corner case here is simply a misclassified test input.
corner = test_pred != data.test_labels
print(f"corner cases: {corner.sum()} of {len(corner)}")

# How well does the score separate corner cases from the rest?
curve = roc_auc(as_samples(values, corner))
print(f"AUC = {curve.auc:.4f}")

# The ten most surprising inputs, most of which should be corner cases.
top = np.argsort(-values)[:10]
print("\n row   score  corner")
for r in top:
    print(f"{r:4d}  {values[r]:6.3f}  {'yes' if corner[r] else 'no'}")
