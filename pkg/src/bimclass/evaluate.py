"""Evaluation protocol: 80/20 split, k-fold cross-validation, accuracy
mean +/- std, confusion matrix and per-image misclassification report."""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .augment import AugmentParams, augment
from .data import Dataset
from .errors import DatasetError
from .hog import HogParams, hog_descriptor
from .nn import N_CLASSES, TrainConfig, build_network, predict_batch, train_network
from .rng import make_rng, mix_seed
from .search import HyperParams, kfold_split
from .svm import svm_predict, train_linear_svm
from .synth import DatasetManifest


@dataclass
class SvmConfig:
    lam: float = 1e-4
    epochs: int = 50
    image_size: int = 224
    augment: AugmentParams | None = None  # opt-in; adds augment_copies per image
    augment_copies: int = 3

    def to_dict(self) -> dict:
        return {
            "model_kind": "svm",
            "lambda": self.lam,
            "epochs": self.epochs,
            "image_size": self.image_size,
            "augment": None if self.augment is None else vars(self.augment),
            "augment_copies": self.augment_copies,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SvmConfig":
        aug = d.get("augment")
        return cls(
            lam=float(d.get("lambda", 1e-4)),
            epochs=int(d.get("epochs", 50)),
            image_size=int(d.get("image_size", 224)),
            augment=None if aug is None else AugmentParams(**aug),
            augment_copies=int(d.get("augment_copies", 3)),
        )


@dataclass
class CnnConfig:
    hyperparams: HyperParams
    epochs: int = 50
    batch_size: int = 32
    image_size: int = 224
    augment: AugmentParams | None = field(default_factory=AugmentParams)

    def to_dict(self) -> dict:
        return {
            "model_kind": "cnn",
            "hyperparams": self.hyperparams.to_dict(),
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "image_size": self.image_size,
            "augment": None if self.augment is None else vars(self.augment),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CnnConfig":
        aug = d.get("augment")
        return cls(
            hyperparams=HyperParams.from_dict(d["hyperparams"]),
            epochs=int(d.get("epochs", 50)),
            batch_size=int(d.get("batch_size", 32)),
            image_size=int(d.get("image_size", 224)),
            augment=None if aug is None else AugmentParams(**aug),
        )


@dataclass
class EvalReport:
    model_kind: str
    seed: int
    k: int
    fold_accuracies: list[float]
    mean: float
    std: float
    confusion: np.ndarray  # (3, 3) counts, rows = true, cols = predicted
    errors: list[tuple[str, int, int]]  # (path, true_label, predicted_label)

    def to_json(self) -> str:
        payload = {
            "model_kind": self.model_kind,
            "seed": self.seed,
            "k": self.k,
            "fold_accuracies": self.fold_accuracies,
            "mean": self.mean,
            "std": self.std,
            "confusion": self.confusion.tolist(),
            "errors": [
                {"path": p, "true_label": t, "predicted_label": q} for p, t, q in self.errors
            ],
        }
        return json.dumps(payload, indent=2) + "\n"

    def summary(self) -> str:
        return f"{self.model_kind}: {format_accuracy(self.mean, self.std)} over {self.k} folds"

    def write(self, path) -> None:
        Path(path).write_bytes(self.to_json().encode("utf-8"))


def format_accuracy(mean: float, std: float) -> str:
    """Render as 'MM.MM% +/- SS.SS%' with two decimals."""
    return f"{mean * 100:.2f}% ± {std * 100:.2f}%"


def accuracy(predictions, labels) -> float:
    predictions = np.asarray(predictions)
    labels = np.asarray(labels)
    if predictions.shape != labels.shape:
        raise ValueError(f"length mismatch: {predictions.shape} vs {labels.shape}")
    if predictions.size == 0:
        raise ValueError("cannot compute accuracy of zero predictions")
    return float((predictions == labels).mean())


def train_test_split(manifest: DatasetManifest, train_frac: float = 0.8,
                     seed: int = 0, grouped: bool = False):
    """Shuffle-split manifest entries; sizes round to nearest, both >= 1.

    Grouped mode splits whole group_ids so no structure's views straddle the
    boundary (the rounding then applies to group counts).
    """
    entries = manifest.entries
    if not entries:
        raise DatasetError("manifest is empty")
    rng = make_rng(seed)

    def split_count(total):
        want = int(np.floor(train_frac * total + 0.5))
        return min(max(want, 1), total - 1) if total > 1 else 1

    if grouped:
        groups = sorted({e.group_id for e in entries})
        if len(groups) < 2:
            raise DatasetError("grouped split needs at least 2 groups")
        order = np.array(groups)
        rng.shuffle(order)
        train_groups = set(order[: split_count(len(groups))].tolist())
        train = [e for e in entries if e.group_id in train_groups]
        test = [e for e in entries if e.group_id not in train_groups]
    else:
        order = rng.permutation(len(entries))
        n_train = split_count(len(entries))
        train = [entries[i] for i in order[:n_train]]
        test = [entries[i] for i in order[n_train:]]
    return DatasetManifest(train), DatasetManifest(test)


def confusion_and_errors(fold_predictions, dataset: Dataset):
    """Aggregate per-fold (indices, predictions) into a confusion matrix and
    a path-sorted misclassification list; every sample must appear exactly once."""
    n = len(dataset)
    seen = np.zeros(n, dtype=np.int64)
    confusion = np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64)
    errors = []
    for idx, preds in fold_predictions:
        idx = np.asarray(idx, dtype=np.int64)
        preds = np.asarray(preds, dtype=np.int64)
        if idx.shape != preds.shape:
            raise ValueError("indices and predictions disagree in length")
        seen[idx] += 1
        for i, p in zip(idx, preds):
            t = int(dataset.labels[i])
            confusion[t, int(p)] += 1
            if t != int(p):
                errors.append((dataset.paths[i], t, int(p)))
    if not np.all(seen == 1):
        bad = int(np.flatnonzero(seen != 1)[0])
        raise ValueError(f"sample {bad} covered {seen[bad]} times across folds")
    errors.sort(key=lambda e: e[0])
    return confusion, errors


def svm_feature_matrix(images) -> np.ndarray:
    """HOG descriptors of every image, stacked row-wise."""
    return np.stack([hog_descriptor(img, HogParams()).values for img in images])


def svm_train_set(dataset, features, train_idx, config: SvmConfig, seed: int):
    """Training matrix for the given indices, plus augmented copies if opted in."""
    x_train = features[train_idx]
    y_train = dataset.labels[train_idx]
    if config.augment is not None and config.augment_copies > 0:
        hp = HogParams()
        extra_x, extra_y = [], []
        for i in train_idx:
            for c in range(config.augment_copies):
                rng = make_rng(seed, 23, int(i), c)
                img = augment(dataset.images[int(i)], config.augment, rng)
                extra_x.append(hog_descriptor(img, hp).values)
                extra_y.append(dataset.labels[int(i)])
        x_train = np.vstack([x_train, np.stack(extra_x)])
        y_train = np.concatenate([y_train, np.asarray(extra_y, dtype=np.int64)])
    return x_train, y_train


def _svm_fold_predictions(dataset, features, train_idx, val_idx, config, fold_seed):
    x_train, y_train = svm_train_set(dataset, features, train_idx, config, fold_seed)
    model = train_linear_svm(x_train, y_train, N_CLASSES, lam=config.lam,
                             epochs=config.epochs, seed=fold_seed)
    return svm_predict(model, features[val_idx])


def _cnn_fold_predictions(dataset, train_idx, val_idx, config, fold_seed):
    h, w = dataset.image_shape
    net = build_network(config.hyperparams, (3, h, w), seed=mix_seed(fold_seed, 31))
    cfg = TrainConfig(
        learning_rate=config.hyperparams.learning_rate,
        batch_size=config.batch_size,
        epochs=config.epochs,
        seed=mix_seed(fold_seed, 29),
        augment=config.augment,
    )
    sub = dataset.subset(train_idx)
    train_network(net, sub.images, sub.labels, cfg)
    return predict_batch(net, dataset.subset(val_idx).images)


def cross_validate(model_kind: str, dataset: Dataset, k: int = 5, seed: int = 0,
                   model_config=None, grouped: bool = False) -> EvalReport:
    """Train from scratch on k-1 folds and score the held-out fold, k times.

    Folds are stratified by class (and optionally grouped by structure).
    SVM folds train on HOG features of unaugmented images unless the config
    opts in; CNN folds apply training-time augmentation per config.
    Deterministic for a given seed.
    """
    n = len(dataset)
    counts = np.bincount(dataset.labels, minlength=N_CLASSES)
    if (counts < k).any():
        raise DatasetError(f"need >= {k} samples per class, got {counts.tolist()}")
    if model_kind == "svm":
        config = model_config if model_config is not None else SvmConfig()
        features = svm_feature_matrix(dataset.images)
    elif model_kind == "cnn":
        if model_config is None:
            raise ValueError("cnn cross-validation requires a CnnConfig")
        config = model_config
    else:
        raise ValueError(f"model_kind must be 'svm' or 'cnn', got {model_kind!r}")

    folds = kfold_split(n, k, mix_seed(seed, 37),
                        stratify_labels=dataset.labels,
                        group_ids=dataset.group_ids if grouped else None)
    fold_accs = []
    fold_predictions = []
    for f, val_idx in enumerate(folds):
        train_idx = np.setdiff1d(np.arange(n), val_idx)
        fold_seed = mix_seed(seed, 41, f)
        if model_kind == "svm":
            preds = _svm_fold_predictions(dataset, features, train_idx, val_idx, config, fold_seed)
        else:
            preds = _cnn_fold_predictions(dataset, train_idx, val_idx, config, fold_seed)
        fold_accs.append(accuracy(preds, dataset.labels[val_idx]))
        fold_predictions.append((val_idx, preds))
    confusion, errors = confusion_and_errors(fold_predictions, dataset)
    mean = float(np.mean(fold_accs))
    std = float(np.std(fold_accs, ddof=1)) if len(fold_accs) > 1 else 0.0
    return EvalReport(model_kind, seed, k, [float(a) for a in fold_accs],
                      mean, std, confusion, errors)
