"""Linear classifier over frozen features: logits, mixup loss, centroids,
and the per-pair update directions used by the gain computation.

All softmax / log-softmax evaluations subtract the max logit first; no
probability below ~1e-300 is ever formed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import FeatureDataset
from .errors import DataError, SelMixError


def softmax(logits: np.ndarray, axis: int = -1) -> np.ndarray:
    shifted = logits - logits.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=axis, keepdims=True)


def log_softmax(logits: np.ndarray, axis: int = -1) -> np.ndarray:
    shifted = logits - logits.max(axis=axis, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=axis, keepdims=True))


@dataclass(frozen=True)
class LinearModel:
    """Weights W of shape (d, K); logits are W^T x."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.ascontiguousarray(np.asarray(self.weights, dtype=np.float64))
        object.__setattr__(self, "weights", w)
        if w.ndim != 2 or w.shape[0] < 1 or w.shape[1] < 2:
            raise SelMixError("weights must be a d x K matrix with d >= 1, K >= 2")
        if not np.all(np.isfinite(w)):
            raise SelMixError("weights must be finite")

    @property
    def dim(self) -> int:
        return self.weights.shape[0]

    @property
    def classes(self) -> int:
        return self.weights.shape[1]


@dataclass(frozen=True)
class MixupSample:
    """One feature-space mixup: beta * feat_a + (1 - beta) * feat_b, labeled
    with the first sample's class."""

    feat_a: np.ndarray
    feat_b: np.ndarray
    label: int
    beta: float

    def __post_init__(self):
        object.__setattr__(self, "feat_a", np.asarray(self.feat_a, dtype=np.float64))
        object.__setattr__(self, "feat_b", np.asarray(self.feat_b, dtype=np.float64))
        if not 0.0 <= self.beta <= 1.0:
            raise SelMixError(f"beta must lie in [0, 1], got {self.beta}")

    def mixed(self) -> np.ndarray:
        return self.beta * self.feat_a + (1.0 - self.beta) * self.feat_b


@dataclass(frozen=True)
class CentroidSet:
    """Per-class mean feature vectors, shape (K, d)."""

    centroids: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "centroids", np.asarray(self.centroids, dtype=np.float64))


def logits(model: LinearModel, feature: np.ndarray) -> np.ndarray:
    feature = np.asarray(feature, dtype=np.float64)
    if feature.shape != (model.dim,):
        raise SelMixError(f"feature has length {feature.shape}, expected ({model.dim},)")
    return model.weights.T @ feature


def batch_logits(model: LinearModel, features: np.ndarray) -> np.ndarray:
    features = np.asarray(features, dtype=np.float64)
    if features.shape[1] != model.dim:
        raise SelMixError("feature dimension mismatch")
    return features @ model.weights


def predict(model: LinearModel, features: np.ndarray) -> np.ndarray:
    """Argmax class per row; ties go to the smallest class index."""
    return np.argmax(batch_logits(model, features), axis=1)


def cross_entropy(model: LinearModel, feature: np.ndarray, label: int) -> float:
    return float(-log_softmax(logits(model, feature))[label])


def mixup_loss(model: LinearModel, sample: MixupSample) -> float:
    """Softmax cross-entropy of the mixed feature against sample.label."""
    return cross_entropy(model, sample.mixed(), sample.label)


def class_centroids(features: FeatureDataset) -> CentroidSet:
    """Mean feature vector per class (validation split in the training loop)."""
    cents = np.zeros((features.num_classes, features.dim))
    for k, idx in enumerate(features.class_indices()):
        if idx.size == 0:
            raise DataError(f"no validation samples for class {k}")
        cents[k] = features.features[idx].mean(axis=0)
    return CentroidSet(cents)


def direction_matrix(
    model: LinearModel,
    centroids: CentroidSet,
    i: int,
    j: int,
    beta_bar: float,
) -> np.ndarray:
    """Update direction V_ij = -dL/dW for the (i, j) centroid mixup.

    With zeta = beta_bar * z_i + (1 - beta_bar) * z_j and p = softmax(W^T
    zeta) this is the outer product zeta (e_i - p)^T, shape (d, K).  The
    learning rate is deliberately factored out; only relative scale matters
    downstream.
    """
    if not 0.0 < beta_bar <= 1.0:
        raise SelMixError("beta_bar must lie in (0, 1]")
    z = centroids.centroids
    zeta = beta_bar * z[i] + (1.0 - beta_bar) * z[j]
    p = softmax(model.weights.T @ zeta)
    e_i = np.zeros(model.classes)
    e_i[i] = 1.0
    return np.outer(zeta, e_i - p)


def sgd_mixup_step(model: LinearModel, batch: list[MixupSample], lr: float) -> LinearModel:
    """One SGD step on the batch-mean mixup loss; returns a new model.

    Gradients are averaged (not summed) so lr does not scale with batch size.
    """
    if not batch:
        raise SelMixError("sgd_mixup_step needs a nonempty batch")
    mixed = np.stack([s.mixed() for s in batch])
    labels = np.array([s.label for s in batch])
    p = softmax(mixed @ model.weights, axis=1)
    p[np.arange(len(batch)), labels] -= 1.0
    grad = mixed.T @ p / len(batch)
    return LinearModel(model.weights - lr * grad)
