"""One-vs-rest L2-regularized linear SVM trained by stochastic subgradient descent.

Each class gets a binary hinge-loss problem solved Pegasos-style: at step t
the learning rate is 1/(lam*t) and one training point is sampled by a seeded
generator. The weight iterate is kept in the accumulated form
w_t = u_{t-1} / (lam*(t-1)) so each step costs one dot product instead of a
full rescale of w. The bias is unregularized.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DatasetError
from .rng import make_rng


@dataclass
class LinearSvmModel:
    weights: np.ndarray  # (n_classes, n_features)
    biases: np.ndarray   # (n_classes,)
    n_classes: int
    lam: float
    epochs: int
    seed: int


def _check_training_inputs(features, labels, n_classes, lam):
    if lam <= 0:
        raise ValueError(f"regularization lambda must be > 0, got {lam}")
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    n = features.shape[0]
    if n < n_classes:
        raise DatasetError(f"need at least {n_classes} samples, got {n}")
    if labels.min() < 0 or labels.max() >= n_classes:
        raise DatasetError("labels out of range")
    present = np.bincount(labels, minlength=n_classes)
    if (present == 0).any():
        missing = int(np.flatnonzero(present == 0)[0])
        raise DatasetError(f"class {missing} has no training samples")
    return features, labels


def train_linear_svm(features, labels, n_classes: int, lam: float = 1e-4,
                     epochs: int = 50, seed: int = 0) -> LinearSvmModel:
    """Train one binary Pegasos problem per class; deterministic given seed."""
    features, labels = _check_training_inputs(features, labels, n_classes, lam)
    n, d = features.shape
    weights = np.zeros((n_classes, d))
    biases = np.zeros(n_classes)
    total_steps = epochs * n
    for c in range(n_classes):
        rng = make_rng(seed, c)
        y = np.where(labels == c, 1.0, -1.0)
        u = np.zeros(d)  # lam * (t-1) * w_t
        b = 0.0
        for t in range(1, total_steps + 1):
            i = int(rng.integers(n))
            x = features[i]
            score = (u @ x) / (lam * (t - 1)) + b if t > 1 else b
            if y[i] * score < 1.0:
                u += y[i] * x
                b += y[i] / (lam * t)
        weights[c] = u / (lam * total_steps)
        biases[c] = b
    return LinearSvmModel(weights, biases, n_classes, lam, epochs, seed)


def train_linear_svm_batch(features, labels, n_classes: int, lam: float,
                           epochs: int, step_size: float, seed: int = 0):
    """Full-batch subgradient variant with a fixed step size.

    Returns (model, objectives) where objectives[e] is the regularized
    objective after epoch e; with a small enough step it is non-increasing.
    """
    features, labels = _check_training_inputs(features, labels, n_classes, lam)
    n, d = features.shape
    weights = np.zeros((n_classes, d))
    biases = np.zeros(n_classes)
    ys = np.stack([np.where(labels == c, 1.0, -1.0) for c in range(n_classes)])
    objectives = []
    for _ in range(epochs):
        margins = ys * (weights @ features.T + biases[:, None])
        viol = (margins < 1.0).astype(np.float64)
        grad_w = lam * weights - ((viol * ys) @ features) / n
        grad_b = -(viol * ys).sum(axis=1) / n
        weights -= step_size * grad_w
        biases -= step_size * grad_b
        model = LinearSvmModel(weights, biases, n_classes, lam, epochs, seed)
        objectives.append(ovr_objective(model, features, labels))
    return LinearSvmModel(weights, biases, n_classes, lam, epochs, seed), objectives


def ovr_objective(model: LinearSvmModel, features, labels) -> float:
    """Sum over classes of lam/2 ||w_c||^2 + mean hinge loss."""
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    total = 0.0
    for c in range(model.n_classes):
        y = np.where(labels == c, 1.0, -1.0)
        margins = y * (features @ model.weights[c] + model.biases[c])
        total += 0.5 * model.lam * float(model.weights[c] @ model.weights[c])
        total += float(np.maximum(0.0, 1.0 - margins).mean())
    return total


def decision_function(model: LinearSvmModel, x) -> np.ndarray:
    """Per-class scores w_c . x + b_c; accepts one vector or an (n, d) batch."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != model.weights.shape[1]:
        raise ValueError(f"expected {model.weights.shape[1]} features, got {x.shape[-1]}")
    return x @ model.weights.T + model.biases


def svm_predict(model: LinearSvmModel, x):
    """Argmax class; ties resolve to the lowest class index."""
    scores = decision_function(model, x)
    return np.argmax(scores, axis=-1)
