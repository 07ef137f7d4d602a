"""Desk-scale end-to-end pipeline: data, model, traces, corner oracle.

Everything here exists so the toolkit can be exercised without an external
ML stack: Gaussian-blob classification data, a tiny fully-connected network
trained with plain full-batch gradient descent (Adam step rule), activation
taps that produce :class:`~dsadetect.traces.TraceSet` rows, and a
perturbation oracle that flags inputs whose prediction can be flipped inside
an epsilon-ball.

All randomness flows through explicit seeds; every function here is
deterministic given its arguments.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CountMismatchError,
    DimensionMismatchError,
    TrainingDivergedError,
    UnknownTapError,
    ValidationError,
)
from .traces import TraceSet

TAP_NAMES = ("hidden1", "hidden2", "output")


@dataclass(frozen=True)
class BlobSpec:
    """Generator recipe for Gaussian-blob classification data.

    ``centers`` is a C x d matrix of class means; every class draws
    isotropic Gaussian points with standard deviation ``sigma`` around its
    center. Counts are split evenly across classes (earlier classes absorb
    the remainder).
    """

    centers: np.ndarray
    sigma: float
    n_train: int
    n_test: int

    def __post_init__(self):
        centers = np.asarray(self.centers, dtype=np.float64)
        if centers.ndim != 2 or centers.shape[0] < 2 or centers.shape[1] < 2:
            raise ValidationError("centers must be a C x d matrix with C >= 2, d >= 2")
        if not np.all(np.isfinite(centers)):
            raise ValidationError("centers must be finite")
        centers.setflags(write=False)
        object.__setattr__(self, "centers", centers)
        if not self.sigma >= 0:
            raise ValidationError("sigma must be nonnegative")
        if self.n_train < self.n_classes or self.n_test < self.n_classes:
            raise ValidationError("need at least one sample per class in each split")

    @property
    def n_classes(self) -> int:
        return self.centers.shape[0]

    @property
    def n_features(self) -> int:
        return self.centers.shape[1]


@dataclass(frozen=True)
class SyntheticDataset:
    """Blob data with a train/test split, reproducible from (spec, seed)."""

    train_inputs: np.ndarray
    train_labels: np.ndarray
    test_inputs: np.ndarray
    test_labels: np.ndarray
    spec: BlobSpec
    seed: int


def _class_counts(n: int, n_classes: int) -> list[int]:
    base, extra = divmod(n, n_classes)
    return [base + (1 if c < extra else 0) for c in range(n_classes)]


def _draw_split(spec: BlobSpec, n: int, rng: np.random.Generator):
    blocks = []
    labels = []
    for c, count in enumerate(_class_counts(n, spec.n_classes)):
        pts = spec.centers[c] + spec.sigma * rng.standard_normal((count, spec.n_features))
        blocks.append(pts)
        labels.append(np.full(count, c, dtype=np.int64))
    inputs = np.concatenate(blocks, axis=0)
    label_vec = np.concatenate(labels)
    order = rng.permutation(n)
    out_x = inputs[order]
    out_y = label_vec[order]
    out_x.setflags(write=False)
    out_y.setflags(write=False)
    return out_x, out_y


def generate_blobs(spec: BlobSpec, seed: int) -> SyntheticDataset:
    """Draw the train and test splits described by ``spec``.

    The same (spec, seed) pair always yields bit-identical matrices. With
    ``sigma == 0`` every point sits exactly on its class center.
    """
    rng = np.random.default_rng(seed)
    train_x, train_y = _draw_split(spec, spec.n_train, rng)
    test_x, test_y = _draw_split(spec, spec.n_test, rng)
    return SyntheticDataset(
        train_inputs=train_x,
        train_labels=train_y,
        test_inputs=test_x,
        test_labels=test_y,
        spec=spec,
        seed=seed,
    )


def standard_overlapping_blobs() -> BlobSpec:
    """The stock two-class demo spec: blobs close enough to overlap."""
    return BlobSpec(
        centers=np.array([[-1.0, 0.0], [1.0, 0.0]]),
        sigma=0.7,
        n_train=2000,
        n_test=500,
    )


def separable_blobs() -> BlobSpec:
    """Two classes with centers six standard deviations apart."""
    return BlobSpec(
        centers=np.array([[-3.0, 0.0], [3.0, 0.0]]),
        sigma=1.0,
        n_train=400,
        n_test=200,
    )


@dataclass(frozen=True)
class TinyNet:
    """A d -> h1 -> h2 -> C fully-connected net with rectifier hiddens.

    The output layer applies softmax; predictions are its argmax. Three taps
    expose post-activation values: ``hidden1``, ``hidden2`` and ``output``
    (the softmax probabilities).
    """

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    w3: np.ndarray
    b3: np.ndarray

    def __post_init__(self):
        for name in ("w1", "b1", "w2", "b2", "w3", "b3"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.w1.shape[1] != self.w2.shape[0] or self.w2.shape[1] != self.w3.shape[0]:
            raise DimensionMismatchError("layer widths do not chain")

    @property
    def n_inputs(self) -> int:
        return self.w1.shape[0]

    @property
    def n_classes(self) -> int:
        return self.w3.shape[1]

    @property
    def taps(self) -> tuple[str, ...]:
        return TAP_NAMES

    def tap_width(self, tap: str) -> int:
        widths = {
            "hidden1": self.w1.shape[1],
            "hidden2": self.w2.shape[1],
            "output": self.w3.shape[1],
        }
        if tap not in widths:
            raise UnknownTapError(f"unknown tap {tap!r}; taps are {TAP_NAMES}")
        return widths[tap]

    def forward_taps(self, inputs) -> dict[str, np.ndarray]:
        """Post-activation values at every tap for a batch of inputs."""
        x = np.asarray(inputs, dtype=np.float64)
        if x.ndim == 1:
            x = x[None, :]
        if x.ndim != 2 or x.shape[1] != self.n_inputs:
            raise DimensionMismatchError(
                f"inputs must have {self.n_inputs} columns, got shape {x.shape}"
            )
        a1 = np.maximum(x @ self.w1 + self.b1, 0.0)
        a2 = np.maximum(a1 @ self.w2 + self.b2, 0.0)
        logits = a2 @ self.w3 + self.b3
        probs = _softmax(logits)
        return {"hidden1": a1, "hidden2": a2, "output": probs}

    def predict(self, inputs) -> np.ndarray:
        """Argmax class per input row."""
        x = np.asarray(inputs, dtype=np.float64)
        if x.ndim == 1:
            x = x[None, :]
        a1 = np.maximum(x @ self.w1 + self.b1, 0.0)
        a2 = np.maximum(a1 @ self.w2 + self.b2, 0.0)
        logits = a2 @ self.w3 + self.b3
        return np.argmax(logits, axis=1)


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for full-batch training of the demo net."""

    hidden1: int = 32
    hidden2: int = 16
    epochs: int = 600
    learning_rate: float = 0.03
    seed: int = 0

    def __post_init__(self):
        if self.hidden1 < 1 or self.hidden2 < 1:
            raise ValidationError("hidden widths must be positive")
        if self.epochs < 0:
            raise ValidationError("epochs must be nonnegative")
        if not self.learning_rate > 0:
            raise ValidationError("learning rate must be positive")


def _init_params(d: int, c: int, cfg: TrainConfig) -> list[np.ndarray]:
    rng = np.random.default_rng(cfg.seed)
    shapes = [(d, cfg.hidden1), (cfg.hidden1, cfg.hidden2), (cfg.hidden2, c)]
    params = []
    for fan_in, fan_out in shapes:
        params.append(rng.standard_normal((fan_in, fan_out)) * np.sqrt(2.0 / fan_in))
        params.append(np.zeros(fan_out))
    return params


def train_tinynet(data: SyntheticDataset, cfg: TrainConfig | None = None) -> TinyNet:
    """Train the demo net on the dataset's training split.

    Full-batch cross-entropy descent with the Adam step rule; deterministic
    under ``cfg.seed``. Zero epochs returns the untrained (seeded random)
    network. A non-finite loss raises :class:`TrainingDivergedError`.
    """
    if cfg is None:
        cfg = TrainConfig()
    x = data.train_inputs
    y = data.train_labels
    n, d = x.shape
    c = data.spec.n_classes
    params = _init_params(d, c, cfg)
    onehot = np.zeros((n, c))
    onehot[np.arange(n), y] = 1.0
    m_state = [np.zeros_like(p) for p in params]
    v_state = [np.zeros_like(p) for p in params]
    beta1, beta2, eps = 0.9, 0.999, 1e-8

    for epoch in range(cfg.epochs):
        w1, b1, w2, b2, w3, b3 = params
        z1 = x @ w1 + b1
        a1 = np.maximum(z1, 0.0)
        z2 = a1 @ w2 + b2
        a2 = np.maximum(z2, 0.0)
        logits = a2 @ w3 + b3
        shifted = logits - logits.max(axis=1, keepdims=True)
        log_z = np.log(np.exp(shifted).sum(axis=1))
        loss = float(np.mean(log_z - shifted[np.arange(n), y]))
        if not np.isfinite(loss):
            raise TrainingDivergedError(f"loss became non-finite at epoch {epoch}")
        probs = _softmax(logits)
        g3 = (probs - onehot) / n
        grads = [None] * 6
        grads[4] = a2.T @ g3
        grads[5] = g3.sum(axis=0)
        g2 = (g3 @ w3.T) * (z2 > 0)
        grads[2] = a1.T @ g2
        grads[3] = g2.sum(axis=0)
        g1 = (g2 @ w2.T) * (z1 > 0)
        grads[0] = x.T @ g1
        grads[1] = g1.sum(axis=0)
        t = epoch + 1
        for i in range(6):
            m_state[i] = beta1 * m_state[i] + (1 - beta1) * grads[i]
            v_state[i] = beta2 * v_state[i] + (1 - beta2) * grads[i] ** 2
            m_hat = m_state[i] / (1 - beta1**t)
            v_hat = v_state[i] / (1 - beta2**t)
            params[i] = params[i] - cfg.learning_rate * m_hat / (np.sqrt(v_hat) + eps)

    if any(not np.all(np.isfinite(p)) for p in params):
        raise TrainingDivergedError("weights became non-finite during training")
    return TinyNet(*params)


def extract_traces(net: TinyNet, inputs, tap: str) -> TraceSet:
    """Activation trace of every input row at one named tap."""
    if tap not in TAP_NAMES:
        raise UnknownTapError(f"unknown tap {tap!r}; taps are {TAP_NAMES}")
    values = net.forward_taps(inputs)[tap]
    return TraceSet(values, layer_name=tap)


@dataclass(frozen=True)
class PerturbationOracleConfig:
    """Sampling plan for the perturbation corner-case oracle.

    ``epsilon`` bounds the perturbation norm; ``n_samples`` random draws are
    probed along with the 2d axis-aligned extreme points. The max norm is
    the default; ``norm="l2"`` switches to the Euclidean ball. Unit draws
    depend only on (seed, n_samples, d), so raising epsilon rescales the
    same probe pattern.
    """

    epsilon: float
    n_samples: int = 256
    seed: int = 0
    norm: str = "linf"

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValidationError("epsilon must be positive")
        if self.n_samples < 1:
            raise ValidationError("n_samples must be at least 1")
        if self.norm not in ("linf", "l2"):
            raise ValidationError("norm must be 'linf' or 'l2'")


def _unit_perturbations(config: PerturbationOracleConfig, d: int) -> np.ndarray:
    """Probe offsets for epsilon == 1; scaled by the caller."""
    rng = np.random.default_rng(config.seed)
    if config.norm == "linf":
        draws = rng.uniform(-1.0, 1.0, size=(config.n_samples, d))
    else:
        direction = rng.standard_normal((config.n_samples, d))
        norms = np.linalg.norm(direction, axis=1, keepdims=True)
        norms[norms == 0] = 1.0
        radii = rng.uniform(0.0, 1.0, size=(config.n_samples, 1)) ** (1.0 / d)
        draws = direction / norms * radii
    axes = np.concatenate([np.eye(d), -np.eye(d)], axis=0)
    return np.concatenate([draws, axes], axis=0)


def corner_oracle_mask(
    net: TinyNet, inputs, labels, config: PerturbationOracleConfig
) -> np.ndarray:
    """Boolean corner flag per input row.

    A row is flagged when the net already misclassifies it, or when any
    probe inside the epsilon-ball flips the prediction away from its label.
    Sound but incomplete: a flip found is real, but sampling can miss one.
    """
    x = np.asarray(inputs, dtype=np.float64)
    if x.ndim != 2:
        raise DimensionMismatchError("inputs must be a 2-D matrix")
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape != (x.shape[0],):
        raise CountMismatchError("labels must align with input rows")
    flagged = net.predict(x) != labels
    offsets = config.epsilon * _unit_perturbations(config, x.shape[1])
    for k in range(offsets.shape[0]):
        remaining = np.flatnonzero(~flagged)
        if remaining.size == 0:
            break
        preds = net.predict(x[remaining] + offsets[k])
        flagged[remaining[preds != labels[remaining]]] = True
    return flagged


def corner_oracle(
    net: TinyNet, x, label: int, config: PerturbationOracleConfig
) -> bool:
    """Whether one input is a corner case under the perturbation oracle."""
    row = np.asarray(x, dtype=np.float64)[None, :]
    return bool(corner_oracle_mask(net, row, np.array([label]), config)[0])
