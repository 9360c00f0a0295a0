"""Command-line entry point.

Subcommands: gen-synth, extract, train-ann, train-cnn, kfold, eval,
predict. Options resolve as flags > --config JSON file > documented
defaults, and each run writes run.json (resolved config, seeds, artifact
digests) into its output directory.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 numeric failure during training.

The DEFECTKIT_THREADS environment variable sets the BLAS thread count
before numpy loads; heavy imports are deferred for that reason.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

from .config import derive_subseed, load_config_file, resolve_options, write_run_record
from .errors import (
    ConfigError,
    DefectKitError,
    EmptyDatasetError,
    EmptyMatrixError,
    InsufficientPoolError,
    InvalidKError,
    InvalidThresholdError,
    InvalidTopologyError,
    LengthMismatchError,
    ModelFormatError,
    NonFiniteLossError,
    SingleClassError,
    TooFewSamplesError,
    UnreadableImageError,
    UnsupportedImageError,
    UnsupportedResolutionError,
)

_CONFIG_ERRORS = (
    ConfigError,
    InvalidThresholdError,
    InvalidTopologyError,
    UnsupportedResolutionError,
    InvalidKError,
    ValueError,
)
_DATA_ERRORS = (
    EmptyDatasetError,
    UnreadableImageError,
    UnsupportedImageError,
    TooFewSamplesError,
    InsufficientPoolError,
    ModelFormatError,
    LengthMismatchError,
    SingleClassError,
    EmptyMatrixError,
    FileNotFoundError,
)


class _Parser(argparse.ArgumentParser):
    """argparse variant that exits 1 on usage errors (2 is reserved for data)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def _apply_thread_env() -> None:
    threads = os.environ.get("DEFECTKIT_THREADS")
    if not threads:
        return
    for var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(var, threads)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, default=None, help="JSON config file")
    p.add_argument("--seed", type=int, help="master seed (default %(default)s)")
    p.add_argument("--out", type=Path, required=True, help="output directory")


def _add_preprocess(p: argparse.ArgumentParser) -> None:
    p.add_argument("--canny-low", type=float, help="low threshold fraction")
    p.add_argument("--canny-high", type=float, help="high threshold fraction")
    p.add_argument("--canny-sigma", type=float, help="Gaussian std-dev in pixels")
    p.add_argument("--resolution", type=int, help="square resize before edges")
    p.add_argument("--grid-rows", type=int, help="block grid rows")
    p.add_argument("--grid-cols", type=int, help="block grid cols")


def _add_training(p: argparse.ArgumentParser) -> None:
    p.add_argument("--epochs", type=int, help="training epochs")
    p.add_argument("--learning-rate", type=float, help="SGD learning rate")
    p.add_argument("--momentum", type=float, help="SGD momentum")
    p.add_argument("--batch-size", type=int, help="mini-batch size")


def build_parser() -> _Parser:
    parser = _Parser(prog="defectkit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-synth", parents=[], help="generate a synthetic dataset")
    _add_common(p)
    p.add_argument("--n-defective", type=int)
    p.add_argument("--n-nondefective", type=int)
    p.add_argument("--size", type=int)
    p.add_argument("--brightness", choices=["bright", "dark"])
    p.add_argument("--grain-scale", type=int)
    p.add_argument("--defect-count", type=int)
    p.add_argument("--defect-radius", type=int, nargs=2, metavar=("MIN", "MAX"))
    p.add_argument("--defect-contrast", type=int)

    p = sub.add_parser("extract", help="edge features to CSV")
    _add_common(p)
    p.add_argument("--data", type=Path, required=True, help="dataset root")
    _add_preprocess(p)

    p = sub.add_parser("train-ann", help="train the shallow edge-feature classifier")
    _add_common(p)
    p.add_argument("--data", type=Path, help="dataset root")
    p.add_argument("--features", type=Path, help="precomputed feature CSV")
    p.add_argument("--hidden", type=int, help="hidden neurons")
    p.add_argument("--patience", type=int, help="early stop patience (epochs)")
    _add_preprocess(p)
    _add_training(p)

    p = sub.add_parser("train-cnn", help="train the convolutional classifier")
    _add_common(p)
    p.add_argument("--data", type=Path, required=True, help="dataset root")
    p.add_argument("--cnn-resolution", type=int, choices=[50, 100, 150, 200],
                   help="input resolution")
    p.add_argument("--ratio", type=int,
                   help="non-defective per defective (0 keeps all data)")
    p.add_argument("--brightness-filter", choices=["all", "bright", "dark"])
    _add_training(p)

    p = sub.add_parser("kfold", help="k-fold cross-validation loop")
    _add_common(p)
    p.add_argument("--data", type=Path, required=True, help="dataset root")
    p.add_argument("--pipeline", choices=["ann", "cnn"])
    p.add_argument("--k", type=int, help="fold count")
    p.add_argument("--ratio", type=int,
                   help="non-defective per defective (0 keeps all data)")
    p.add_argument("--brightness-filter", choices=["all", "bright", "dark"])
    p.add_argument("--hidden", type=int, help="ANN hidden neurons")
    p.add_argument("--cnn-resolution", type=int, choices=[50, 100, 150, 200])
    _add_preprocess(p)
    _add_training(p)

    p = sub.add_parser("eval", help="confusion matrix, accuracy, ROC")
    _add_common(p)
    p.add_argument("--model", type=Path, help="trained model file")
    p.add_argument("--data", type=Path, help="dataset root")
    p.add_argument("--split", type=Path, help="split plan JSON")
    p.add_argument("--part", choices=["train", "validation", "test"])
    p.add_argument("--pred", type=Path, help="prediction CSV (label[,pred][,score])")

    p = sub.add_parser("predict", help="classify one image")
    p.add_argument("--config", type=Path, default=None)
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--image", type=Path, required=True)

    return parser


def _resolve(args: argparse.Namespace) -> dict:
    """flags > config file > DEFAULTS, materialized into one dict."""
    file_cfg = load_config_file(args.config)
    pipeline = "ann" if args.command == "train-ann" else "cnn"
    if getattr(args, "pipeline", None) == "ann" or (
        getattr(args, "pipeline", None) is None and file_cfg.get("pipeline") == "ann"
    ):
        pipeline = "ann"
    return resolve_options(vars(args), file_cfg, pipeline)


def _load_manifest_auto(root: Path):
    from .datasets import load_manifest, read_manifest_csv

    if not root.exists():
        raise FileNotFoundError(f"dataset root not found: {root}")
    csv_path = root / "manifest.csv"
    if csv_path.is_file():
        return read_manifest_csv(csv_path)
    return load_manifest(root)


def _canny_params(cfg: dict):
    from .imagecore import CannyParams

    return CannyParams(low=cfg["canny_low"], high=cfg["canny_high"], sigma=cfg["canny_sigma"])


def _cmd_gen_synth(args) -> int:
    from .synthesis import SynthParams, generate_synthetic

    cfg = _resolve(args)
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    params = SynthParams(
        size=cfg["size"],
        base_brightness=cfg["brightness"],
        grain_scale=cfg["grain_scale"],
        defect_count=cfg["defect_count"],
        defect_radius=tuple(cfg["defect_radius"]),
        defect_contrast=cfg["defect_contrast"],
        seed=derive_subseed(cfg["seed"], "synth"),
    )
    manifest = generate_synthetic(params, cfg["n_defective"], cfg["n_nondefective"], out)
    artifacts = [out / "manifest.csv"] + [out / s.path for s in manifest.samples]
    write_run_record(out, "gen-synth", cfg, artifacts)
    print(f"wrote {len(manifest)} images under {out}")
    return 0


def _cmd_extract(args) -> int:
    from .features import BlockGrid, write_feature_csv
    from .pipelines import extract_features

    cfg = _resolve(args)
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    manifest = _load_manifest_auto(Path(cfg["data"]))
    ids, x, _ = extract_features(
        manifest,
        cfg["data"],
        _canny_params(cfg),
        resolution=cfg["resolution"],
        grid=BlockGrid(cfg["grid_rows"], cfg["grid_cols"]),
    )
    labels = [s.label for s in manifest.samples]
    path = out / "features.csv"
    write_feature_csv(path, ids, labels, x)
    write_run_record(out, "extract", cfg, [path])
    print(f"wrote {path} ({x.shape[0]} rows, {x.shape[1]} features)")
    return 0


def _history_csv(path: Path, history: list[dict]) -> None:
    fields = ["epoch", "train_loss", "train_acc", "val_loss", "val_acc"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(fields)
        for row in history:
            writer.writerow([row.get(f, "") for f in fields])


def _write_eval_outputs(out: Path, cm, curve) -> list[Path]:
    from .evaluation import confusion_text, write_metrics_json, write_roc_csv

    artifacts = [out / "metrics.json", out / "confusion.txt"]
    write_metrics_json(artifacts[0], cm, curve)
    artifacts[1].write_text(confusion_text(cm) + "\n")
    if curve is not None:
        write_roc_csv(out / "roc.csv", curve)
        artifacts.append(out / "roc.csv")
    return artifacts


def _cmd_train_ann(args) -> int:
    import numpy as np

    from .datasets import DatasetManifest, Sample, split_60_5_35, write_split_json
    from .evaluation import accuracy_fraction, format_accuracy
    from .features import BlockGrid, read_feature_csv
    from .nn import TrainConfig, build_ann, save_model
    from .pipelines import extract_features, label_int, train_on_split

    cfg = _resolve(args)
    if not cfg.get("data") and not cfg.get("features"):
        raise ConfigError("train-ann needs --data or --features")
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)

    if cfg.get("features"):
        ids, labels, x = read_feature_csv(cfg["features"])
        y = np.array([label_int(l) for l in labels], dtype=np.int64)
        manifest = DatasetManifest(
            tuple(Sample(id=i, path=i, label=l) for i, l in zip(ids, labels))
        )
    else:
        manifest = _load_manifest_auto(Path(cfg["data"]))
        ids, x, y = extract_features(
            manifest,
            cfg["data"],
            _canny_params(cfg),
            resolution=cfg["resolution"],
            grid=BlockGrid(cfg["grid_rows"], cfg["grid_cols"]),
        )

    plan = split_60_5_35(manifest, seed=derive_subseed(cfg["seed"], "split"))
    train_cfg = TrainConfig(
        epochs=cfg["epochs"],
        learning_rate=cfg["learning_rate"],
        momentum=cfg["momentum"],
        batch_size=cfg["batch_size"],
        seed=derive_subseed(cfg["seed"], "train"),
        early_stop_patience=cfg["patience"],
    )
    spec = build_ann(cfg["hidden"], in_features=x.shape[1])
    net, history, cm, curve = train_on_split(spec, ids, x, y, plan, train_cfg)

    model_path = out / "model.dfkt"
    meta = {
        "pipeline": "ann",
        "seed": cfg["seed"],
        "train_config": {
            "epochs": train_cfg.epochs,
            "learning_rate": train_cfg.learning_rate,
            "momentum": train_cfg.momentum,
            "batch_size": train_cfg.batch_size,
            "seed": train_cfg.seed,
            "early_stop_patience": train_cfg.early_stop_patience,
        },
        "preprocess": {
            "canny_low": cfg["canny_low"],
            "canny_high": cfg["canny_high"],
            "canny_sigma": cfg["canny_sigma"],
            "resolution": cfg["resolution"],
            "grid_rows": cfg["grid_rows"],
            "grid_cols": cfg["grid_cols"],
        },
    }
    save_model(model_path, net, meta)
    _history_csv(out / "history.csv", history)
    write_split_json(out / "split.json", plan)
    artifacts = [model_path, out / "history.csv", out / "split.json"]
    artifacts += _write_eval_outputs(out, cm, curve)
    write_run_record(out, "train-ann", cfg, artifacts)
    print(f"test accuracy {format_accuracy(accuracy_fraction(cm))} "
          f"({len(history)} epochs trained)")
    return 0


def _cmd_train_cnn(args) -> int:
    from .datasets import build_ratio_subset, split_60_5_35, write_split_json
    from .evaluation import accuracy_fraction, format_accuracy
    from .nn import TrainConfig, build_modified_alexnet, save_model
    from .pipelines import load_image_tensor, train_on_split

    cfg = _resolve(args)
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    manifest = _load_manifest_auto(Path(cfg["data"]))
    if cfg["ratio"]:
        manifest = build_ratio_subset(
            manifest, cfg["ratio"], cfg["brightness_filter"],
            seed=derive_subseed(cfg["seed"], "subset"),
        )
    ids, x, y = load_image_tensor(manifest, cfg["data"], cfg["cnn_resolution"])
    plan = split_60_5_35(manifest, seed=derive_subseed(cfg["seed"], "split"))
    train_cfg = TrainConfig(
        epochs=cfg["epochs"],
        learning_rate=cfg["learning_rate"],
        momentum=cfg["momentum"],
        batch_size=cfg["batch_size"],
        seed=derive_subseed(cfg["seed"], "train"),
        early_stop_patience=0,
    )
    spec = build_modified_alexnet(cfg["cnn_resolution"])
    net, history, cm, curve = train_on_split(spec, ids, x, y, plan, train_cfg)

    model_path = out / "model.dfkt"
    meta = {
        "pipeline": "cnn",
        "seed": cfg["seed"],
        "train_config": {
            "epochs": train_cfg.epochs,
            "learning_rate": train_cfg.learning_rate,
            "momentum": train_cfg.momentum,
            "batch_size": train_cfg.batch_size,
            "seed": train_cfg.seed,
            "early_stop_patience": 0,
        },
        "preprocess": {"resolution": cfg["cnn_resolution"]},
    }
    save_model(model_path, net, meta)
    _history_csv(out / "history.csv", history)
    write_split_json(out / "split.json", plan)
    artifacts = [model_path, out / "history.csv", out / "split.json"]
    artifacts += _write_eval_outputs(out, cm, curve)
    write_run_record(out, "train-cnn", cfg, artifacts)
    print(f"test accuracy {format_accuracy(accuracy_fraction(cm))} "
          f"({len(history)} epochs trained)")
    return 0


def _cmd_kfold(args) -> int:
    from .datasets import build_ratio_subset, kfold_split
    from .features import BlockGrid
    from .nn import TrainConfig, build_ann, build_modified_alexnet
    from .pipelines import extract_features, load_image_tensor, run_kfold

    cfg = _resolve(args)
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    manifest = _load_manifest_auto(Path(cfg["data"]))
    if cfg["ratio"]:
        manifest = build_ratio_subset(
            manifest, cfg["ratio"], cfg["brightness_filter"],
            seed=derive_subseed(cfg["seed"], "subset"),
        )
    if cfg["pipeline"] == "ann":
        ids, x, y = extract_features(
            manifest, cfg["data"], _canny_params(cfg),
            resolution=cfg["resolution"],
            grid=BlockGrid(cfg["grid_rows"], cfg["grid_cols"]),
        )
        spec_factory = lambda: build_ann(cfg["hidden"], in_features=x.shape[1])
    else:
        ids, x, y = load_image_tensor(manifest, cfg["data"], cfg["cnn_resolution"])
        spec_factory = lambda: build_modified_alexnet(cfg["cnn_resolution"])

    plan = kfold_split(manifest, cfg["k"], seed=derive_subseed(cfg["seed"], "split"))
    train_cfg = TrainConfig(
        epochs=cfg["epochs"],
        learning_rate=cfg["learning_rate"],
        momentum=cfg["momentum"],
        batch_size=cfg["batch_size"],
        seed=derive_subseed(cfg["seed"], "train"),
        early_stop_patience=0,
    )
    result = run_kfold(spec_factory, ids, x, y, plan, train_cfg)
    path = out / "kfold.json"
    path.write_text(json.dumps(result, indent=2, sort_keys=True) + "\n")
    write_run_record(out, "kfold", cfg, [path])
    print(f"mean accuracy over {result['k']} folds: {result['mean_accuracy']:.1f}")
    return 0


def _read_pred_csv(path: Path):
    import numpy as np

    labels, preds, scores = [], [], []
    name_to_int = {"non_defective": 0, "defective": 1, "0": 0, "1": 1}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "label" not in reader.fieldnames:
            raise ConfigError(f"{path}: prediction CSV needs a 'label' column")
        has_pred = "pred" in reader.fieldnames
        has_score = "score" in reader.fieldnames
        if not has_pred and not has_score:
            raise ConfigError(f"{path}: prediction CSV needs a 'pred' or 'score' column")
        for row in reader:
            labels.append(name_to_int[row["label"].strip()])
            if has_score:
                scores.append(float(row["score"]))
            if has_pred:
                preds.append(name_to_int[row["pred"].strip()])
    labels = np.array(labels)
    scores = np.array(scores) if scores else None
    if preds:
        preds = np.array(preds)
    else:
        preds = (scores >= 0.5).astype(int)
    return labels, preds, scores


def _model_scores(model_path: Path, data_root: Path, split_path, part: str):
    import numpy as np

    from .datasets import read_split_json
    from .features import BlockGrid
    from .nn import load_model
    from .nn.training import predictions_from_scores
    from .pipelines import extract_features, load_image_tensor

    net, meta = load_model(model_path)
    manifest = _load_manifest_auto(data_root)
    if split_path is not None:
        plan = read_split_json(split_path)
        wanted = {"train": plan.train, "validation": plan.validation, "test": plan.test}[part]
        manifest = manifest.subset(list(wanted))
    pre = meta.get("preprocess", {})
    if meta.get("pipeline") == "ann":
        from .imagecore import CannyParams

        params = CannyParams(pre["canny_low"], pre["canny_high"], pre["canny_sigma"])
        _, x, y = extract_features(
            manifest, data_root, params,
            resolution=pre["resolution"],
            grid=BlockGrid(pre["grid_rows"], pre["grid_cols"]),
        )
    else:
        _, x, y = load_image_tensor(manifest, data_root, pre["resolution"])
    raw = net.predict_scores(x)
    preds = predictions_from_scores(raw)
    scores = raw[:, 1] if raw.ndim == 2 and raw.shape[1] == 2 else raw.reshape(-1)
    return y, preds, np.asarray(scores, dtype=np.float64)


def _cmd_eval(args) -> int:
    from .evaluation import accuracy_fraction, confusion, format_accuracy, roc

    cfg = _resolve(args)
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    if cfg.get("pred"):
        labels, preds, scores = _read_pred_csv(Path(cfg["pred"]))
    elif cfg.get("model") and cfg.get("data"):
        labels, preds, scores = _model_scores(
            Path(cfg["model"]), Path(cfg["data"]),
            Path(cfg["split"]) if cfg.get("split") else None, cfg["part"],
        )
    else:
        raise ConfigError("eval needs --pred or both --model and --data")

    cm = confusion(preds, labels)
    curve = None
    if scores is not None and len(set(labels.tolist())) == 2:
        curve = roc(scores, labels)
    artifacts = _write_eval_outputs(out, cm, curve)
    write_run_record(out, "eval", cfg, artifacts)
    print(f"accuracy {format_accuracy(accuracy_fraction(cm))}")
    return 0


def _cmd_predict(args) -> int:
    from . import imageio
    from .features import BlockGrid, block_frequency_features
    from .imagecore import CannyParams, canny, channels, resize, to_grayscale
    from .nn import load_model

    net, meta = load_model(args.model)
    img = imageio.read_image(args.image)
    pre = meta.get("preprocess", {})
    if meta.get("pipeline") == "ann":
        if channels(img) == 3:
            img = to_grayscale(img)
        img = resize(img, pre["resolution"], pre["resolution"])
        params = CannyParams(pre["canny_low"], pre["canny_high"], pre["canny_sigma"])
        feats = block_frequency_features(
            canny(img, params), BlockGrid(pre["grid_rows"], pre["grid_cols"])
        )
        score = float(net.predict_scores(feats[None, :].astype("float32"))[0, 0])
    else:
        import numpy as np

        if channels(img) == 1:
            img = np.repeat(img[:, :, None], 3, axis=2)
        img = resize(img, pre["resolution"], pre["resolution"])
        x = img.astype("float32")[None, :, :, :] / 255.0
        score = float(net.predict_scores(x)[0, 1])
    label = "defective" if score >= 0.5 else "non_defective"
    print(f"{label} {score:.6f}")
    return 0


_COMMANDS = {
    "gen-synth": _cmd_gen_synth,
    "extract": _cmd_extract,
    "train-ann": _cmd_train_ann,
    "train-cnn": _cmd_train_cnn,
    "kfold": _cmd_kfold,
    "eval": _cmd_eval,
    "predict": _cmd_predict,
}


def main(argv=None) -> int:
    _apply_thread_env()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except NonFiniteLossError as exc:
        print(f"defectkit: numeric failure: {exc}", file=sys.stderr)
        return 3
    except _DATA_ERRORS as exc:
        print(f"defectkit: data error: {exc}", file=sys.stderr)
        return 2
    except _CONFIG_ERRORS as exc:
        print(f"defectkit: config error: {exc}", file=sys.stderr)
        return 1
    except DefectKitError as exc:
        print(f"defectkit: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
