"""Command-line entry point wiring the modules into complete workflows.

Exit codes: 0 success, 1 usage error, 2 data/model error. Every random
decision flows from the --seed flag (default 42), so repeating a command
with identical flags reproduces its artifacts byte for byte.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .augment import AugmentParams, augment, hflip, rotate, shift
from .data import load_dataset
from .errors import BimclassError
from .evaluate import (
    CnnConfig,
    SvmConfig,
    cross_validate,
    svm_feature_matrix,
    svm_train_set,
)
from .hog import HogParams, hog_descriptor
from .image import load_image, resize_bilinear, save_image
from .modelio import (
    SvmBundle,
    load_model,
    save_cnn_model,
    save_svm_model,
    write_hog_dump,
)
from .nn import N_CLASSES, TrainConfig, build_network, nn_predict, train_network
from .rng import make_rng, mix_seed
from .search import random_search, write_search_ledger
from .svm import decision_function, train_linear_svm
from .synth import StructureClass, generate_dataset

DEFAULT_SEED = 42
# search trials train fewer epochs than the final model; plenty to rank
# configurations on this data while keeping 3-fold CV per trial affordable
SEARCH_TRIAL_EPOCHS = 30
FINAL_EPOCHS = 50


def _load_square(path, size):
    img = load_image(path)
    if (img.height, img.width) != (size, size):
        img = resize_bilinear(img, size, size)
    return img


def cmd_generate_dataset(args):
    manifest = generate_dataset(args.out, args.per_class, args.seed, args.size)
    print(f"wrote {len(manifest.entries)} images under {args.out}")
    return 0


def cmd_hog(args):
    if args.image_size % HogParams().cell_size:
        raise BimclassError(f"--image-size must be divisible by {HogParams().cell_size}")
    desc = hog_descriptor(_load_square(args.in_path, args.image_size))
    write_hog_dump(args.out, desc)
    print(f"wrote {len(desc)} descriptor values to {args.out}")
    return 0


def cmd_train_svm(args):
    config = SvmConfig(lam=args.lam, epochs=args.epochs, image_size=args.image_size,
                       augment=AugmentParams() if args.augment else None)
    ds = load_dataset(args.data, image_size=args.image_size)
    features = svm_feature_matrix(ds.images)
    x, y = svm_train_set(ds, features, np.arange(len(ds)), config, mix_seed(args.seed, 43))
    model = train_linear_svm(x, y, N_CLASSES, lam=config.lam,
                             epochs=config.epochs, seed=mix_seed(args.seed, 47))
    save_svm_model(args.out, model, args.image_size)
    train_acc = float((np.argmax(features @ model.weights.T + model.biases, axis=1)
                       == ds.labels).mean())
    print(f"trained svm on {len(ds)} images (train accuracy {train_acc:.3f}); saved {args.out}")
    return 0


def cmd_search(args):
    ds = load_dataset(args.data, image_size=args.image_size)
    template = TrainConfig(learning_rate=1e-2, batch_size=32,
                           epochs=SEARCH_TRIAL_EPOCHS, augment=AugmentParams())
    best, trials = random_search(ds, args.trials, args.seed, template, grouped=args.grouped)
    write_search_ledger(trials, args.ledger)
    config = CnnConfig(best.hp, epochs=FINAL_EPOCHS, batch_size=32,
                       image_size=args.image_size, augment=AugmentParams())
    Path(args.out).write_bytes(
        (json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n").encode("utf-8")
    )
    print(f"best trial {best.trial_index}: mean accuracy {best.mean_accuracy:.4f}, "
          f"{best.param_count} params -> {args.out}")
    return 0


def _read_config(path, kind):
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    return CnnConfig.from_dict(raw) if kind == "cnn" else SvmConfig.from_dict(raw)


def cmd_train_cnn(args):
    config = _read_config(args.config, "cnn")
    ds = load_dataset(args.data, image_size=config.image_size)
    h, w = ds.image_shape
    net = build_network(config.hyperparams, (3, h, w), seed=mix_seed(args.seed, 51))
    cfg = TrainConfig(learning_rate=config.hyperparams.learning_rate,
                      batch_size=config.batch_size, epochs=config.epochs,
                      seed=mix_seed(args.seed, 53), augment=config.augment)
    trace = train_network(net, ds.images, ds.labels, cfg)
    save_cnn_model(args.out, net)
    print(f"trained cnn for {cfg.epochs} epochs "
          f"(final train loss {trace.loss[-1]:.4f}, accuracy {trace.accuracy[-1]:.3f}); "
          f"saved {args.out}")
    return 0


def cmd_evaluate(args):
    if args.config is not None:
        config = _read_config(args.config, args.model_kind)
    elif args.model_kind == "svm":
        config = SvmConfig()
    else:
        raise BimclassError("evaluate --model-kind cnn requires --config")
    ds = load_dataset(args.data, image_size=config.image_size)
    report = cross_validate(args.model_kind, ds, k=args.folds, seed=args.seed,
                            model_config=config, grouped=args.grouped)
    report.write(args.report)
    print(report.summary())
    return 0


def cmd_predict(args):
    bundle = load_model(args.model, expect_kind=args.model_kind)
    if isinstance(bundle, SvmBundle):
        img = _load_square(args.in_path, bundle.image_size)
        scores = decision_function(bundle.model, hog_descriptor(img, bundle.hog_params).values)
        cls = int(np.argmax(scores))
        detail = "scores " + " ".join(f"{s:.4f}" for s in scores)
    else:
        _, h, w = bundle.input_shape
        img = load_image(args.in_path)
        if (img.height, img.width) != (h, w):
            img = resize_bilinear(img, h, w)
        cls, probs = nn_predict(bundle, img)
        detail = "probabilities " + " ".join(f"{p:.4f}" for p in probs)
    print(f"{StructureClass(cls).label} ({detail})")
    return 0


def cmd_augment_preview(args):
    if args.n < 1:
        raise BimclassError("--n must be >= 1")
    img = load_image(args.in_path)
    params = AugmentParams()
    rng = make_rng(args.seed)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    def panels():
        yield "original", img
        yield "rotation", rotate(img, rng.uniform(-params.max_rotation_deg,
                                                  params.max_rotation_deg))
        mx = int(img.width * params.max_shift_frac)
        my = int(img.height * params.max_shift_frac)
        yield "hshift", shift(img, int(rng.integers(-mx, mx + 1)), 0)
        yield "vshift", shift(img, 0, int(rng.integers(-my, my + 1)))
        yield "hflip", hflip(img)
        i = 5
        while True:
            yield f"random{i}", augment(img, params, rng)
            i += 1

    ext = ".pgm" if img.channels == 1 else ".png"
    gen = panels()
    for i in range(args.n):
        name, panel = next(gen)
        save_image(panel, out_dir / f"preview_{i}_{name}{ext}")
    print(f"wrote {args.n} preview images to {out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bimclass",
        description="Classify wireframe structure images: synthetic data generation, "
                    "HOG+SVM baseline, randomly-structured CNN, search and evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate-dataset", help="render the synthetic dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--per-class", type=int, default=20, dest="per_class",
                   help="structure groups per class (4 views each)")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--size", type=int, default=224)
    p.set_defaults(func=cmd_generate_dataset)

    p = sub.add_parser("hog", help="dump the HOG descriptor of one image")
    p.add_argument("--in", required=True, dest="in_path")
    p.add_argument("--out", required=True)
    p.add_argument("--image-size", type=int, default=224, dest="image_size")
    p.set_defaults(func=cmd_hog)

    p = sub.add_parser("train-svm", help="train the HOG+SVM baseline")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--lambda", type=float, default=1e-4, dest="lam")
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--augment", action="store_true")
    p.add_argument("--image-size", type=int, default=224, dest="image_size")
    p.set_defaults(func=cmd_train_svm)

    p = sub.add_parser("search", help="random hyperparameter search with 3-fold CV")
    p.add_argument("--data", required=True)
    p.add_argument("--trials", type=int, default=32)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--out", required=True, help="best configuration (JSON)")
    p.add_argument("--ledger", required=True, help="per-trial results (CSV)")
    p.add_argument("--image-size", type=int, default=224, dest="image_size")
    p.add_argument("--grouped", action="store_true")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("train-cnn", help="train a CNN from a configuration file")
    p.add_argument("--data", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.set_defaults(func=cmd_train_cnn)

    p = sub.add_parser("evaluate", help="k-fold cross-validation report")
    p.add_argument("--data", required=True)
    p.add_argument("--model-kind", required=True, choices=("svm", "cnn"), dest="model_kind")
    p.add_argument("--config", default=None)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--report", required=True, help="report output (JSON)")
    p.add_argument("--grouped", action="store_true")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("predict", help="classify one image with a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--in", required=True, dest="in_path")
    p.add_argument("--model-kind", choices=("svm", "cnn"), default=None, dest="model_kind")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("augment-preview",
                       help="write the augmentation panel: original, rotation, "
                            "h-shift, v-shift, h-flip")
    p.add_argument("--in", required=True, dest="in_path")
    p.add_argument("--out", required=True)
    p.add_argument("--n", type=int, default=5)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.set_defaults(func=cmd_augment_preview)
    return parser


def cli_dispatch(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    try:
        return args.func(args)
    except (BimclassError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(cli_dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
