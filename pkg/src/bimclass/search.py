"""Random hyperparameter search with 3-fold cross-validation model selection.

The search space: 1-5 conv layers, maps in {16, 32, 48}, kernel 1-5, batch
norm on/off, dropout in {0.2, 0.3, 0.4, 0.5}, learning rate log-uniform over
[1e-5, 1e-1]. Each sampled configuration is scored by the mean validation
accuracy over 3 folds; the best is the highest mean, ties broken by fewer
parameters, then lower trial index.
"""

import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .data import Dataset
from .errors import DatasetError, InvalidArchitectureError
from .nn import TrainConfig, build_network, predict_batch, train_network
from .rng import make_rng, mix_seed

_MAPS_CHOICES = (16, 32, 48)
_DROPOUT_CHOICES = (0.2, 0.3, 0.4, 0.5)
_LR_LO, _LR_HI = 1e-5, 1e-1


@dataclass(frozen=True)
class HyperParams:
    n_conv_layers: int
    n_maps: int
    kernel: int
    batchnorm: bool
    dropout: float
    learning_rate: float

    def __post_init__(self):
        if not 1 <= self.n_conv_layers <= 5:
            raise ValueError(f"n_conv_layers must be 1..5, got {self.n_conv_layers}")
        if self.n_maps not in _MAPS_CHOICES:
            raise ValueError(f"n_maps must be one of {_MAPS_CHOICES}, got {self.n_maps}")
        if not 1 <= self.kernel <= 5:
            raise ValueError(f"kernel must be 1..5, got {self.kernel}")
        if self.dropout not in _DROPOUT_CHOICES:
            raise ValueError(f"dropout must be one of {_DROPOUT_CHOICES}, got {self.dropout}")
        if not _LR_LO <= self.learning_rate <= _LR_HI:
            raise ValueError(f"learning_rate must be in [{_LR_LO}, {_LR_HI}]")

    def to_dict(self) -> dict:
        return {
            "n_conv_layers": self.n_conv_layers,
            "n_maps": self.n_maps,
            "kernel": self.kernel,
            "batchnorm": self.batchnorm,
            "dropout": self.dropout,
            "learning_rate": self.learning_rate,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "HyperParams":
        return cls(
            n_conv_layers=int(d["n_conv_layers"]),
            n_maps=int(d["n_maps"]),
            kernel=int(d["kernel"]),
            batchnorm=bool(d["batchnorm"]),
            dropout=float(d["dropout"]),
            learning_rate=float(d["learning_rate"]),
        )


# the configuration this toolkit ships as its known-good CNN preset
REFERENCE_HP = HyperParams(
    n_conv_layers=3, n_maps=16, kernel=2, batchnorm=False,
    dropout=0.3, learning_rate=0.008130275,
)


def sample_hyperparams(rng: np.random.Generator) -> HyperParams:
    """One uniform draw from the search space (learning rate log-uniform)."""
    return HyperParams(
        n_conv_layers=int(rng.integers(1, 6)),
        n_maps=_MAPS_CHOICES[rng.integers(0, len(_MAPS_CHOICES))],
        kernel=int(rng.integers(1, 6)),
        batchnorm=bool(rng.integers(0, 2)),
        dropout=_DROPOUT_CHOICES[rng.integers(0, len(_DROPOUT_CHOICES))],
        learning_rate=float(np.exp(rng.uniform(math.log(_LR_LO), math.log(_LR_HI)))),
    )


def _check_contiguous_classes(labels) -> np.ndarray:
    classes = np.unique(labels)
    expected = np.arange(classes.max() + 1)
    if not np.array_equal(classes, expected):
        missing = sorted(set(expected.tolist()) - set(classes.tolist()))
        raise DatasetError(f"stratified split: class(es) {missing} have no samples")
    return classes


def kfold_split(n: int, k: int, seed: int, stratify_labels=None, group_ids=None):
    """Split indices [0, n) into k disjoint folds, deterministic per seed.

    Plain mode shuffles and chunks (fold sizes differ by at most 1).
    Stratified mode round-robins each class separately, so per-class counts
    per fold differ by at most 1. Grouped mode assigns whole groups to folds,
    keeping every sample of a group in one fold; a group's class is taken
    from its first sample when stratifying.
    """
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    if n < k:
        raise DatasetError(f"cannot split {n} samples into {k} folds")
    rng = make_rng(seed)
    folds: list[list[int]] = [[] for _ in range(k)]

    def round_robin(items_by_class):
        offset = 0
        for items in items_by_class:
            items = items.copy()
            rng.shuffle(items)
            for j, it in enumerate(items):
                folds[(j + offset) % k].append(int(it))
            offset = (offset + len(items)) % k

    if group_ids is not None:
        group_ids = np.asarray(group_ids)
        uniq = np.unique(group_ids)
        if len(uniq) < k:
            raise DatasetError(f"grouped split needs >= {k} groups, got {len(uniq)}")
        if stratify_labels is not None:
            labels = np.asarray(stratify_labels)
            first = {int(g): int(labels[np.argmax(group_ids == g)]) for g in uniq}
            glabels = np.array([first[int(g)] for g in uniq])
            classes = _check_contiguous_classes(glabels)
            round_robin([uniq[glabels == c] for c in classes])
        else:
            shuffled = uniq.copy()
            rng.shuffle(shuffled)
            for f, chunk in enumerate(np.array_split(shuffled, k)):
                folds[f].extend(int(g) for g in chunk)
        group_folds = folds
        folds = []
        for gf in group_folds:
            folds.append(sorted(np.flatnonzero(np.isin(group_ids, gf)).tolist()))
        return [np.asarray(f, dtype=np.int64) for f in folds]

    if stratify_labels is not None:
        labels = np.asarray(stratify_labels)
        if labels.shape != (n,):
            raise ValueError("stratify_labels must have length n")
        classes = _check_contiguous_classes(labels)
        round_robin([np.flatnonzero(labels == c) for c in classes])
    else:
        perm = rng.permutation(n)
        return [np.sort(chunk).astype(np.int64) for chunk in np.array_split(perm, k)]
    return [np.asarray(sorted(f), dtype=np.int64) for f in folds]


@dataclass
class TrialResult:
    trial_index: int
    hp: HyperParams
    fold_accuracies: tuple[float, ...]
    mean_accuracy: float
    param_count: int
    status: str  # "ok" | "invalid_architecture"


def random_search(dataset: Dataset, n_trials: int, seed: int,
                  train_cfg_template: TrainConfig, grouped: bool = False):
    """Evaluate n_trials sampled configurations by 3-fold CV on `dataset`.

    Returns (best, trials). Per-trial seeds derive from (seed, trial index)
    so the ledger is identical no matter how trials are scheduled. Invalid
    architectures (spatial collapse at this input size) are recorded and
    skipped from ranking.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    n = len(dataset)
    if n == 0:
        raise DatasetError("dataset is empty")
    counts = np.bincount(dataset.labels, minlength=3)
    if (counts < 3).any():
        raise DatasetError(f"need >= 3 samples per class for 3-fold CV, got {counts.tolist()}")
    h, w = dataset.image_shape
    input_shape = (3, h, w)
    folds = kfold_split(n, 3, mix_seed(seed, 11),
                        stratify_labels=dataset.labels,
                        group_ids=dataset.group_ids if grouped else None)
    trials = []
    for t in range(n_trials):
        hp = sample_hyperparams(make_rng(seed, 13, t))
        try:
            accs = []
            params = 0
            for f, val_idx in enumerate(folds):
                train_idx = np.setdiff1d(np.arange(n), val_idx)
                net = build_network(hp, input_shape, seed=mix_seed(seed, 17, t, f))
                params = net.param_count
                cfg = replace(train_cfg_template,
                              learning_rate=hp.learning_rate,
                              seed=mix_seed(seed, 19, t, f))
                sub = dataset.subset(train_idx)
                train_network(net, sub.images, sub.labels, cfg)
                val = dataset.subset(val_idx)
                preds = predict_batch(net, val.images)
                accs.append(float((preds == val.labels).mean()))
            mean = float(np.mean(accs))
            trials.append(TrialResult(t, hp, tuple(accs), mean, params, "ok"))
        except InvalidArchitectureError:
            trials.append(TrialResult(t, hp, (), float("nan"), 0, "invalid_architecture"))
    ok = [tr for tr in trials if tr.status == "ok"]
    if not ok:
        raise DatasetError(f"all {n_trials} trials had invalid architectures at {h}x{w}")
    best = min(ok, key=lambda tr: (-tr.mean_accuracy, tr.param_count, tr.trial_index))
    return best, trials


def write_search_ledger(trials: list[TrialResult], path) -> None:
    """CSV ledger, one row per trial in trial order."""
    lines = ["trial,layers,maps,kernel,batchnorm,dropout,learning_rate,"
             "fold0,fold1,fold2,mean,params,status"]
    for tr in trials:
        folds = list(tr.fold_accuracies) + [None] * (3 - len(tr.fold_accuracies))
        cells = [
            str(tr.trial_index),
            str(tr.hp.n_conv_layers),
            str(tr.hp.n_maps),
            str(tr.hp.kernel),
            str(int(tr.hp.batchnorm)),
            f"{tr.hp.dropout:g}",
            f"{tr.hp.learning_rate:.12g}",
            *(f"{a:.6f}" if a is not None else "" for a in folds),
            f"{tr.mean_accuracy:.6f}" if tr.status == "ok" else "",
            str(tr.param_count),
            tr.status,
        ]
        lines.append(",".join(cells))
    Path(path).write_bytes(("\n".join(lines) + "\n").encode("utf-8"))
