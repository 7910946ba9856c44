"""Batch command-line interface: `cloudqnn <command> [flags]`.

Commands: synth, train, eval, shot-sweep, shap, compare.  Every command is
deterministic given its flags (seeds included); commands that write files
refuse to overwrite without --force and record a manifest JSON next to
their outputs with the fully resolved arguments, so a manifest suffices to
re-run the experiment bit-identically (see manifest_to_argv).

Exit codes: 0 success, 1 usage, 2 validation/configuration, 3 training
diverged, 4 I/O failure.  Logs go to stderr; data and reports to stdout.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import ACTIVATIONS
from .checkpoints import load_checkpoint, save_checkpoint
from .data import (
    FEATURE_NAMES,
    REDUCED_FEATURES,
    load_csv,
    select_features,
    split,
    synthesis_metadata,
    synthesize_dataset,
    write_csv,
)
from .baselines import XuRandallConstants
from .errors import (
    CloudQnnError,
    ConfigurationError,
    TrainingDivergedError,
    ValidationError,
)
from .explain import (
    StabilityReport,
    explain_dataset,
    importance_summary,
    select_background,
    write_attributions_csv,
    write_importance_csv,
    write_stability_csv,
)
from .qnn import CircuitConfig, param_count
from .training import (
    OPTIMIZERS,
    TrainConfig,
    XuRandallPredictor,
    evaluate,
    shot_sweep,
    train,
    write_history_csv,
    write_sweep_csv,
)

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_DIVERGED = 3
EXIT_IO = 4

DEFAULT_SPLIT = "0.7,0.1,0.2"
DEFAULT_LR = {"plain_gd": 0.01, "adam": 1e-3}


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would sys.exit(2); usage must be 1
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="cloudqnn", description=__doc__)
    parser.add_argument("--version", action="version", version=f"cloudqnn {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command")

    def common(p):
        p.add_argument("--config", help="JSON file of default flag values")

    p = sub.add_parser("synth", help="generate a synthetic cloud-cover CSV")
    common(p)
    p.add_argument("--n", type=int, required=True, help="number of rows")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--noise-sd", type=float, default=0.05)
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--force", action="store_true", help="overwrite existing outputs")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train a model and write a checkpoint")
    common(p)
    p.add_argument("--data", required=True, help="input CSV path")
    p.add_argument("--model", choices=("qnn", "mlp"), required=True)
    p.add_argument("--features", choices=("full", "reduced"), default="full")
    p.add_argument("--n-enc", type=int, default=5, help="re-uploading layers (qnn)")
    p.add_argument("--n-var", type=int, default=3, help="trailing blocks (qnn)")
    p.add_argument("--activation", choices=ACTIVATIONS, default="leaky_relu")
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--batches-per-epoch", type=int, default=1000)
    p.add_argument("--batch-size", type=int, default=100)
    p.add_argument("--learning-rate", type=float, default=None,
                   help="default 0.01 for plain_gd, 0.001 for adam")
    p.add_argument("--optimizer", choices=OPTIMIZERS, default="plain_gd")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--shots-in-training", type=int, default=None)
    p.add_argument("--patience", type=int, default=None)
    p.add_argument("--split", default=DEFAULT_SPLIT,
                   help="train,val,test fractions (must sum to 1)")
    p.add_argument("--split-seed", type=int, default=0)
    p.add_argument("--out", required=True, help="checkpoint JSON path")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a dataset")
    common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--split", default=None, help="apply a split before choosing --subset")
    p.add_argument("--split-seed", type=int, default=0)
    p.add_argument("--subset", choices=("all", "train", "val", "test"), default="all")
    p.add_argument("--shots", default=None, help="shot count, or 'inf' for exact")
    p.add_argument("--seed", type=int, default=0, help="seed for shot noise")
    p.add_argument("--clamp", action="store_true", help="clamp predictions to [0,1]")
    p.add_argument("--out", default=None, help="also write the report JSON here")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("shot-sweep", help="R2 vs shot count table")
    common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--split", default=None)
    p.add_argument("--split-seed", type=int, default=0)
    p.add_argument("--subset", choices=("all", "train", "val", "test"), default="all")
    p.add_argument("--shots", required=True,
                   help="comma list of shot counts; 'inf' means exact")
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_shot_sweep)

    p = sub.add_parser("shap", help="Shapley attributions (one or more checkpoints)")
    common(p)
    p.add_argument("--checkpoint", action="append", required=True,
                   help="repeat for an ensemble stability report")
    p.add_argument("--data", required=True)
    p.add_argument("--split", default=None,
                   help="draw background from the train split and instances from test")
    p.add_argument("--split-seed", type=int, default=0)
    p.add_argument("--background-size", type=int, default=100)
    p.add_argument("--n-test", type=int, default=100)
    p.add_argument("--mode", choices=("exact", "sampled"), default="exact")
    p.add_argument("--n-coalitions", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1,
                   help="worker threads for instance rows (exact mode only)")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_shap)

    p = sub.add_parser("compare", help="side-by-side metrics incl. Xu-Randall")
    common(p)
    p.add_argument("--qnn", required=True, help="qnn checkpoint path")
    p.add_argument("--mlp", required=True, help="mlp checkpoint path")
    p.add_argument("--data", required=True)
    p.add_argument("--split", default=None)
    p.add_argument("--split-seed", type=int, default=0)
    p.add_argument("--subset", choices=("all", "train", "val", "test"), default="all")
    p.add_argument("--clamp", action="store_true")
    p.add_argument("--out", default=None, help="also write the table as JSON here")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_compare)
    return parser


def _apply_config(parser: _Parser, argv: list[str]) -> None:
    """Fold --config file values in as defaults (explicit flags still win)."""
    if "--config" not in argv:
        return
    at = argv.index("--config")
    if at + 1 >= len(argv):
        raise _UsageError("--config needs a file path")
    path = argv[at + 1]
    try:
        with open(path, encoding="utf-8") as handle:
            values = json.load(handle)
    except json.JSONDecodeError as error:
        raise _UsageError(f"config {path} is not valid JSON: {error}") from None
    if not isinstance(values, dict):
        raise _UsageError(f"config {path} must hold a JSON object")
    if not argv or argv[0].startswith("-"):
        raise _UsageError("--config requires a command")
    sub_actions = [a for a in parser._actions if isinstance(a, argparse._SubParsersAction)]
    command_parser = sub_actions[0].choices.get(argv[0])
    if command_parser is None:
        raise _UsageError(f"unknown command {argv[0]!r}")
    actions = {a.dest: a for a in command_parser._actions}
    unknown = [k for k in values if k not in actions]
    if unknown:
        raise _UsageError(f"config {path} has unknown keys {unknown}")
    coerced = {}
    for key, value in values.items():
        action = actions[key]
        if action.type is not None and value is not None and not isinstance(value, bool):
            try:
                value = action.type(value)
            except (TypeError, ValueError):
                raise _UsageError(
                    f"config {path}: bad value {value!r} for {key}"
                ) from None
        if action.choices is not None and value not in action.choices:
            raise _UsageError(
                f"config {path}: {key} must be one of {sorted(action.choices)}"
            )
        coerced[key] = value
    command_parser.set_defaults(**coerced)


def _refuse_overwrite(paths, force: bool) -> None:
    for path in paths:
        if path is not None and Path(path).exists() and not force:
            raise _UsageError(f"output {path} exists; pass --force to overwrite")


def _manifest_path(anchor) -> Path:
    return Path(str(anchor) + ".manifest.json")


def _write_manifest(command: str, args, outputs: list, results: dict, started: float) -> None:
    arguments = {
        k: v for k, v in vars(args).items() if k not in ("func", "command", "config")
    }
    manifest = {
        "command": command,
        "arguments": arguments,
        "toolkit_version": __version__,
        "outputs": [str(p) for p in outputs],
        "results": results,
        "wall_clock_seconds": time.perf_counter() - started,
    }
    with open(_manifest_path(outputs[0]), "w", encoding="utf-8") as handle:
        json.dump(manifest, handle, indent=2, sort_keys=True)
        handle.write("\n")


def manifest_to_argv(manifest: dict) -> list[str]:
    """Reconstruct the exact command line a manifest records."""
    argv = [manifest["command"]]
    for key, value in sorted(manifest["arguments"].items()):
        if value is None or value is False:
            continue
        flag = "--" + key.replace("_", "-")
        if value is True:
            argv.append(flag)
        elif isinstance(value, list):
            for item in value:
                argv.extend([flag, str(item)])
        else:
            argv.extend([flag, str(value)])
    return argv


def _parse_fractions(text: str) -> tuple[float, float, float]:
    try:
        parts = tuple(float(p) for p in text.split(","))
    except ValueError:
        raise _UsageError(f"cannot parse split fractions {text!r}") from None
    if len(parts) != 3:
        raise _UsageError(f"--split needs 3 comma-separated fractions, got {text!r}")
    return parts


def _parse_shots_list(text: str) -> list:
    out = []
    for token in text.split(","):
        token = token.strip().lower()
        if token in ("inf", "exact"):
            out.append(float("inf"))
        else:
            try:
                out.append(int(token))
            except ValueError:
                raise _UsageError(f"bad shot count {token!r}") from None
    if not out:
        raise _UsageError("--shots list is empty")
    return out


def _parse_single_shots(text):
    if text is None:
        return None
    token = str(text).strip().lower()
    if token in ("inf", "exact"):
        return float("inf")
    try:
        return int(token)
    except ValueError:
        raise _UsageError(f"bad shot count {text!r}") from None


def _load_for_checkpoint(args, fitted):
    """Load --data and project it onto the checkpoint's feature set."""
    dataset = load_csv(args.data)
    dataset = select_features(dataset, fitted.scaling.feature_names)
    return _take_subset(dataset, args)


def _take_subset(dataset, args):
    if getattr(args, "split", None) is None:
        if getattr(args, "subset", "all") not in (None, "all"):
            raise _UsageError("--subset needs --split")
        return dataset
    parts = split(dataset, _parse_fractions(args.split), args.split_seed)
    subset = getattr(args, "subset", "all")
    index = {"train": 0, "val": 1, "test": 2}.get(subset)
    if index is None:
        return dataset
    chosen = parts[index]
    if chosen.n_rows == 0:
        raise ValidationError(f"the {subset} split is empty under --split {args.split}")
    return chosen


def cmd_synth(args) -> int:
    started = time.perf_counter()
    out = Path(args.out)
    meta_path = Path(str(out) + ".meta.json")
    _refuse_overwrite([out, meta_path, _manifest_path(out)], args.force)
    dataset = synthesize_dataset(args.n, args.seed, args.noise_sd)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_csv(dataset, out)
    constants = XuRandallConstants()
    with open(meta_path, "w", encoding="utf-8") as handle:
        json.dump(
            synthesis_metadata(args.n, args.seed, args.noise_sd, constants),
            handle,
            indent=2,
            sort_keys=True,
        )
        handle.write("\n")
    results = {
        "rows": dataset.n_rows,
        "target_mean": float(dataset.targets.mean()),
    }
    _write_manifest("synth", args, [out, meta_path], results, started)
    log.info("wrote %d rows to %s", dataset.n_rows, out)
    return EXIT_OK


def cmd_train(args) -> int:
    started = time.perf_counter()
    out = Path(args.out)
    history_path = Path(str(out.with_suffix("")) + "_history.csv")
    _refuse_overwrite([out, history_path, _manifest_path(out)], args.force)

    names = FEATURE_NAMES if args.features == "full" else REDUCED_FEATURES
    dataset = load_csv(args.data, names)
    train_set, val_set, test_set = split(
        dataset, _parse_fractions(args.split), args.split_seed
    )
    if train_set.n_rows == 0:
        raise ValidationError("training split is empty")

    if args.learning_rate is None:
        # resolve the per-optimizer default so the manifest records it
        args.learning_rate = DEFAULT_LR[args.optimizer]
    train_config = TrainConfig(
        epochs=args.epochs,
        batches_per_epoch=args.batches_per_epoch,
        batch_size=args.batch_size,
        learning_rate=args.learning_rate,
        optimizer=args.optimizer,
        seed=args.seed,
        shots_in_training=args.shots_in_training,
        patience=args.patience,
    )
    if args.model == "qnn":
        model_config = CircuitConfig(
            n_qubits=train_set.n_features, n_enc=args.n_enc, n_var=args.n_var
        )
        n_params = param_count(model_config)
    else:
        model_config = args.activation
        from .baselines import mlp_param_count

        n_params = mlp_param_count(train_set.n_features)
    log.info(
        "training %s (%d parameters) on %d rows (%s features)",
        args.model, n_params, train_set.n_rows, args.features,
    )

    fitted, history = train(
        args.model,
        model_config,
        train_config,
        train_set,
        validation_set=val_set if val_set.n_rows else None,
    )

    results = {
        "model_kind": args.model,
        "n_params": n_params,
        "epochs_run": len(history.records),
        "final_train_mse": history.final_train_mse(),
    }
    last = history.records[-1]
    if val_set.n_rows:
        results["final_val_mse"] = last.val_mse
        results["final_val_r2"] = last.val_r2
    if test_set.n_rows:
        test_metrics = evaluate(fitted, test_set)
        results["test_mse"] = test_metrics.mse
        results["test_r2"] = test_metrics.r2

    out.parent.mkdir(parents=True, exist_ok=True)
    metadata = {
        "train_config": {
            "epochs": train_config.epochs,
            "batches_per_epoch": train_config.batches_per_epoch,
            "batch_size": train_config.batch_size,
            "learning_rate": train_config.learning_rate,
            "optimizer": train_config.optimizer,
            "seed": train_config.seed,
            "shots_in_training": train_config.shots_in_training,
        },
        "data": str(args.data),
        "split": args.split,
        "split_seed": args.split_seed,
        "results": results,
    }
    save_checkpoint(out, fitted, metadata)
    write_history_csv(history, history_path)
    _write_manifest("train", args, [out, history_path], results, started)
    print(json.dumps(results, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_eval(args) -> int:
    started = time.perf_counter()
    if args.out is not None:
        _refuse_overwrite([Path(args.out), _manifest_path(args.out)], args.force)
    fitted, _ = load_checkpoint(args.checkpoint)
    subset = _load_for_checkpoint(args, fitted)
    shots = _parse_single_shots(args.shots)
    rng = np.random.default_rng(args.seed)
    metrics = evaluate(fitted, subset, shots=shots, rng=rng, clamp=args.clamp)
    report = {
        "checkpoint": str(args.checkpoint),
        "model_kind": "qnn" if hasattr(fitted, "config") else "mlp",
        "n_params": fitted.n_params,
        "data": str(args.data),
        "subset": args.subset,
        "rows": subset.n_rows,
        "shots": None if shots is None or math.isinf(shots) else int(shots),
        "seed": args.seed,
        "clamp": bool(args.clamp),
        "mse": metrics.mse,
        "r2": metrics.r2,
        "r2_defined": metrics.r2_defined,
    }
    text = json.dumps(report, indent=2, sort_keys=True)
    print(text)
    if args.out is not None:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        with open(out, "w", encoding="utf-8") as handle:
            handle.write(text + "\n")
        _write_manifest("eval", args, [out], report, started)
    return EXIT_OK


def cmd_shot_sweep(args) -> int:
    started = time.perf_counter()
    out = Path(args.out)
    _refuse_overwrite([out, _manifest_path(out)], args.force)
    fitted, _ = load_checkpoint(args.checkpoint)
    if not hasattr(fitted, "predict_sampled"):
        raise ConfigurationError("shot sweeps need a qnn checkpoint")
    subset = _load_for_checkpoint(args, fitted)
    shots_list = _parse_shots_list(args.shots)
    rng = np.random.default_rng(args.seed)
    rows = shot_sweep(fitted, subset, shots_list, args.repeats, rng)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_sweep_csv(rows, out)
    results = {"rows": len(rows), "data_rows": subset.n_rows}
    _write_manifest("shot-sweep", args, [out], results, started)
    log.info("wrote %d sweep rows to %s", len(rows), out)
    return EXIT_OK


def _explain_rows(model, background, test_ds, args, rng):
    if args.jobs > 1 and args.mode == "exact":
        from concurrent.futures import ThreadPoolExecutor

        from .explain import AttributionResult, kernel_shap

        rows = test_ds.features
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            attributions = list(
                pool.map(
                    lambda row: kernel_shap(model, background, row, "exact"),
                    (rows[i] for i in range(rows.shape[0])),
                )
            )
        return AttributionResult(
            shap_values=np.vstack([a.values for a in attributions]),
            base_value=attributions[-1].base_value,
            feature_names=test_ds.feature_names,
            degenerate_rows=[i for i, a in enumerate(attributions) if a.degenerate],
        )
    return explain_dataset(model, background, test_ds, args.mode, args.n_coalitions, rng)


def cmd_shap(args) -> int:
    started = time.perf_counter()
    if args.jobs < 1:
        raise _UsageError("--jobs must be >= 1")
    if args.jobs > 1 and args.mode == "sampled":
        raise _UsageError("--jobs > 1 supports exact mode only")
    out_dir = Path(args.out_dir)
    fitted_models = [load_checkpoint(c)[0] for c in args.checkpoint]
    names = fitted_models[0].scaling.feature_names
    for fitted in fitted_models[1:]:
        if fitted.scaling.feature_names != names:
            raise ValidationError("checkpoints disagree on the feature set")

    dataset = load_csv(args.data)
    dataset = select_features(dataset, names)
    if args.split is not None:
        parts = split(dataset, _parse_fractions(args.split), args.split_seed)
        bg_source, test_source = parts[0], parts[2]
        if bg_source.n_rows == 0 or test_source.n_rows == 0:
            raise ValidationError("train or test split is empty under --split")
    else:
        bg_source = test_source = dataset

    single = len(fitted_models) == 1
    outputs = []
    if single:
        outputs = [out_dir / "attributions.csv", out_dir / "importance.csv"]
    else:
        outputs = [out_dir / f"attributions_model{m}.csv" for m in range(len(fitted_models))]
        outputs += [out_dir / "stability_per_model.csv", out_dir / "stability_summary.csv"]
    _refuse_overwrite([*outputs, _manifest_path(out_dir / "shap")], args.force)

    rng = np.random.default_rng(args.seed)
    background = select_background(bg_source, args.background_size, rng)
    n_test = min(args.n_test, test_source.n_rows)
    chosen = rng.choice(test_source.n_rows, size=n_test, replace=False)
    test_ds = test_source.take(chosen)

    out_dir.mkdir(parents=True, exist_ok=True)
    importances = []
    results = {"models": len(fitted_models), "instances": n_test,
               "background_rows": background.n_rows}
    for m, fitted in enumerate(fitted_models):
        result = _explain_rows(fitted, background, test_ds, args, rng)
        summary = importance_summary(result)
        importances.append(summary.importances)
        if single:
            write_attributions_csv(result, outputs[0])
            write_importance_csv(summary, outputs[1])
            results["top_feature"] = summary.feature_names[
                int(np.argmin(summary.ranks))
            ]
        else:
            write_attributions_csv(result, out_dir / f"attributions_model{m}.csv")
        log.info("explained model %d/%d", m + 1, len(fitted_models))
    if not single:
        stacked = np.vstack(importances)
        report = StabilityReport(
            feature_names=names,
            importances=stacked,
            mean_importance=stacked.mean(axis=0),
            std_importance=stacked.std(axis=0),
        )
        write_stability_csv(
            report,
            out_dir / "stability_summary.csv",
            out_dir / "stability_per_model.csv",
        )
        results["max_std_importance"] = float(stacked.std(axis=0).max())
    _write_manifest("shap", args, [out_dir / "shap", *outputs], results, started)
    return EXIT_OK


def cmd_compare(args) -> int:
    started = time.perf_counter()
    if args.out is not None:
        _refuse_overwrite([Path(args.out), _manifest_path(args.out)], args.force)
    fitted_qnn, _ = load_checkpoint(args.qnn)
    fitted_mlp, _ = load_checkpoint(args.mlp)
    if not hasattr(fitted_qnn, "config"):
        raise ValidationError(f"--qnn checkpoint {args.qnn} is not a qnn model")
    if not hasattr(fitted_mlp, "model"):
        raise ValidationError(f"--mlp checkpoint {args.mlp} is not an mlp model")
    if fitted_qnn.scaling.feature_names != fitted_mlp.scaling.feature_names:
        raise ValidationError("checkpoints disagree on the feature set")
    subset = _load_for_checkpoint(args, fitted_qnn)
    scheme = XuRandallPredictor(subset.feature_names)

    rows = []
    for name, model in (("qnn", fitted_qnn), ("mlp", fitted_mlp), ("xu_randall", scheme)):
        metrics = evaluate(model, subset, clamp=args.clamp)
        rows.append({"model": name, "mse": metrics.mse, "r2": metrics.r2})
    width = max(len(r["model"]) for r in rows)
    print(f"{'model':<{width}}  {'mse':>12}  {'r2':>12}")
    for r in rows:
        print(f"{r['model']:<{width}}  {r['mse']:>12.6f}  {r['r2']:>12.6f}")
    if args.out is not None:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        with open(out, "w", encoding="utf-8") as handle:
            json.dump({"rows": rows, "data_rows": subset.n_rows}, handle,
                      indent=2, sort_keys=True)
            handle.write("\n")
        _write_manifest("compare", args, [out], {"rows": rows}, started)
    return EXIT_OK


def main(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    logging.basicConfig(
        stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(name)s: %(message)s"
    )
    parser = _build_parser()
    try:
        _apply_config(parser, list(argv))
        args = parser.parse_args(argv)
        if getattr(args, "func", None) is None:
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        return args.func(args)
    except _UsageError as error:
        print(f"usage error: {error}", file=sys.stderr)
        return EXIT_USAGE
    except (ValidationError, ConfigurationError) as error:
        print(f"error: {error}", file=sys.stderr)
        return EXIT_VALIDATION
    except TrainingDivergedError as error:
        print(f"training diverged: {error}", file=sys.stderr)
        return EXIT_DIVERGED
    except OSError as error:
        print(f"io error: {error}", file=sys.stderr)
        return EXIT_IO
    except SystemExit as error:  # argparse --help/--version
        code = error.code
        return 0 if code is None else int(code) if str(code).isdigit() else EXIT_USAGE
    except CloudQnnError as error:
        print(f"error: {error}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
