"""Minibatch training loop, metrics, shot sweeps, and ensemble runs.

Both model kinds train through the same loop: seeded init, an infinite
stream of reshuffled sample indices cut into fixed-size batches (batches may
span a reshuffle boundary when an epoch consumes more than one pass over the
data), and either plain gradient descent or Adam on the flat parameter
vector.  All randomness flows from numpy Generators seeded by TrainConfig.
"""

from __future__ import annotations

import hashlib
import itertools
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .baselines import (
    MlpModel,
    XuRandallConstants,
    init_mlp,
    mlp_forward_batch,
    mlp_gradient,
    mlp_unflatten,
    xu_randall_cloud_cover,
)
from .data import Dataset, FeatureScaling, apply_scaling, fit_scaling
from .errors import ConfigurationError, TrainingDivergedError, ValidationError
from .gradients import loss_gradient
from .qnn import (
    CircuitConfig,
    ParameterSet,
    forward_batch,
    init_params,
    param_count,
    probabilities_batch,
    unflatten,
)
from .statevector import BitstringCounts, estimate_expectations_z

OPTIMIZERS = ("plain_gd", "adam")


@dataclass
class TrainConfig:
    """Loop hyperparameters; defaults follow the reference protocol."""

    epochs: int = 200
    batches_per_epoch: int = 1000
    batch_size: int = 100
    learning_rate: float = 0.01
    optimizer: str = "plain_gd"
    seed: int = 0
    shots_in_training: int | None = None
    patience: int | None = None

    def __post_init__(self) -> None:
        if self.epochs < 1 or self.batches_per_epoch < 1 or self.batch_size < 1:
            raise ConfigurationError(
                "epochs, batches_per_epoch, and batch_size must all be >= 1"
            )
        if self.learning_rate < 0:
            raise ConfigurationError("learning_rate must be >= 0")
        if self.optimizer not in OPTIMIZERS:
            raise ConfigurationError(
                f"optimizer must be one of {OPTIMIZERS}, got {self.optimizer!r}"
            )
        if self.shots_in_training is not None and self.shots_in_training < 1:
            raise ConfigurationError("shots_in_training must be >= 1 when set")
        if self.patience is not None and self.patience < 1:
            raise ConfigurationError("patience must be >= 1 when set")


@dataclass
class EpochRecord:
    epoch: int
    train_mse: float
    val_mse: float
    val_r2: float
    param_hash: str
    seconds: float


@dataclass
class TrainHistory:
    records: list[EpochRecord] = field(default_factory=list)

    def final_train_mse(self) -> float:
        return self.records[-1].train_mse


HISTORY_HEADER = "epoch,train_mse,val_mse,val_r2"


def write_history_csv(history: TrainHistory, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(HISTORY_HEADER + "\n")
        for r in history.records:
            handle.write(
                f"{r.epoch},{r.train_mse!r},{r.val_mse!r},{r.val_r2!r}\n"
            )


@dataclass
class Metrics:
    mse: float
    r2: float
    r2_defined: bool = True


def mse_r2(predictions: np.ndarray, targets: np.ndarray) -> Metrics:
    """Mean squared error and coefficient of determination.

    Zero target variance makes R2 undefined; it is reported as NaN with the
    r2_defined flag cleared, while the MSE stays valid.
    """
    predictions = np.asarray(predictions, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if predictions.shape != targets.shape or targets.size == 0:
        raise ValidationError("predictions and targets must be equal-length and non-empty")
    residual = predictions - targets
    mse = float(np.mean(residual**2))
    total = float(np.sum((targets - targets.mean()) ** 2))
    if total == 0.0:
        return Metrics(mse=mse, r2=float("nan"), r2_defined=False)
    return Metrics(mse=mse, r2=1.0 - float(np.sum(residual**2)) / total, r2_defined=True)


def grouped_r2(predictions: np.ndarray, targets: np.ndarray, groups) -> dict:
    """Per-group R2 (e.g. by altitude bin); groups with zero variance get NaN."""
    groups = np.asarray(groups)
    out = {}
    for g in np.unique(groups):
        mask = groups == g
        out[g.item() if hasattr(g, "item") else g] = mse_r2(
            np.asarray(predictions)[mask], np.asarray(targets)[mask]
        ).r2
    return out


@dataclass
class FittedQnn:
    """Trained circuit model bundled with its feature scaling."""

    config: CircuitConfig
    params: ParameterSet
    scaling: FeatureScaling

    @property
    def n_params(self) -> int:
        return param_count(self.config)

    @property
    def n_inputs(self) -> int:
        return self.config.n_qubits

    def predict(self, features: np.ndarray) -> np.ndarray:
        angles = apply_scaling(self.scaling, np.atleast_2d(features))
        return forward_batch(self.config, self.params, angles)

    def born_probabilities(self, features: np.ndarray) -> np.ndarray:
        angles = apply_scaling(self.scaling, np.atleast_2d(features))
        return probabilities_batch(self.config, self.params, angles)

    def predict_from_probs(
        self, probs: np.ndarray, n_shots: int, rng: np.random.Generator
    ) -> np.ndarray:
        """Shot-noise predictions given precomputed Born distributions."""
        n = self.config.n_qubits
        out = np.empty(probs.shape[0])
        for i in range(probs.shape[0]):
            row = probs[i] / probs[i].sum()
            draws = rng.multinomial(n_shots, row)
            nonzero = np.nonzero(draws)[0]
            counts = BitstringCounts(
                {int(k): int(draws[k]) for k in nonzero}, n_shots
            )
            z = estimate_expectations_z(counts, n)
            out[i] = float(np.dot(self.params.readout_weights, z) + self.params.bias)
        return out

    def predict_sampled(
        self, features: np.ndarray, n_shots: int, rng: np.random.Generator
    ) -> np.ndarray:
        if n_shots < 1:
            raise ValidationError(f"n_shots must be >= 1, got {n_shots}")
        return self.predict_from_probs(self.born_probabilities(features), n_shots, rng)


@dataclass
class FittedMlp:
    """Trained MLP bundled with the same feature scaling the QNN uses."""

    model: MlpModel
    scaling: FeatureScaling

    @property
    def n_params(self) -> int:
        return self.model.n_params

    @property
    def n_inputs(self) -> int:
        return self.model.n_inputs

    def predict(self, features: np.ndarray) -> np.ndarray:
        angles = apply_scaling(self.scaling, np.atleast_2d(features))
        return mlp_forward_batch(self.model, angles)


@dataclass
class XuRandallPredictor:
    """Scheme baseline exposed through the shared prediction interface.

    Consumes raw physical features (no angle scaling); needs the five
    thermodynamic columns, so it works for both the 8- and 6-feature sets.
    """

    feature_names: tuple[str, ...]
    constants: XuRandallConstants | None = None

    def __post_init__(self) -> None:
        if self.constants is None:
            self.constants = XuRandallConstants()
        needed = ("qv", "qc", "qi", "ta", "pa")
        missing = [n for n in needed if n not in self.feature_names]
        if missing:
            raise ValidationError(
                f"Xu-Randall needs features {needed}; missing {missing}"
            )
        self._cols = tuple(self.feature_names.index(n) for n in needed)

    def predict(self, features: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(features, dtype=float))
        qv, qc, qi, ta, pa = (x[:, c] for c in self._cols)
        return np.atleast_1d(
            xu_randall_cloud_cover(qv, qc, qi, ta, pa, self.constants)
        )


class _Adam:
    def __init__(self, n_params: int, learning_rate: float):
        self.lr = learning_rate
        self.beta1, self.beta2, self.eps = 0.9, 0.999, 1e-8
        self.m = np.zeros(n_params)
        self.v = np.zeros(n_params)
        self.t = 0

    def step(self, flat: np.ndarray, grad: np.ndarray) -> np.ndarray:
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad**2
        m_hat = self.m / (1 - self.beta1**self.t)
        v_hat = self.v / (1 - self.beta2**self.t)
        return flat - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


class _PlainGd:
    def __init__(self, learning_rate: float):
        self.lr = learning_rate

    def step(self, flat: np.ndarray, grad: np.ndarray) -> np.ndarray:
        return flat - self.lr * grad


def _index_stream(n: int, rng: np.random.Generator):
    while True:
        yield from rng.permutation(n)


def _param_hash(flat: np.ndarray) -> str:
    return hashlib.sha256(flat.tobytes()).hexdigest()[:16]


def train(
    model_kind: str,
    model_config,
    train_config: TrainConfig,
    train_set: Dataset,
    validation_set: Dataset | None = None,
    scaling: FeatureScaling | None = None,
):
    """Train a QNN or MLP; returns (fitted model, TrainHistory).

    The scaling is fitted on train_set when not supplied.  History rows hold
    the full-train MSE recomputed at each epoch end with the current
    parameters (so a later evaluation on the training set reproduces the
    final row exactly), validation MSE/R2 when a validation set is given
    (NaN otherwise), a parameter digest, and wall-clock seconds.
    """
    if model_kind not in ("qnn", "mlp"):
        raise ConfigurationError(f"model_kind must be 'qnn' or 'mlp', got {model_kind!r}")
    if train_set.n_rows == 0:
        raise ValidationError("training set is empty")
    if scaling is None:
        scaling = fit_scaling(train_set)
    if tuple(scaling.feature_names) != tuple(train_set.feature_names):
        raise ValidationError("scaling features do not match the dataset")

    rng = np.random.default_rng(train_config.seed)
    angles = apply_scaling(scaling, train_set.features)
    targets = train_set.targets
    val_angles = None
    if validation_set is not None:
        val_angles = apply_scaling(scaling, validation_set.features)

    if model_kind == "qnn":
        if not isinstance(model_config, CircuitConfig):
            raise ConfigurationError("qnn training needs a CircuitConfig")
        if model_config.n_qubits != train_set.n_features:
            raise ValidationError(
                f"circuit has {model_config.n_qubits} qubits but the dataset has "
                f"{train_set.n_features} features"
            )
        params0 = init_params(model_config, rng, bias=float(targets.mean()))
        flat = params0.flatten()

        def batch_grad(flat_now, rows, ys):
            p = unflatten(model_config, flat_now)
            if train_config.shots_in_training is not None:
                return loss_gradient(
                    model_config, p, (rows, ys),
                    method="parameter_shift",
                    n_shots=train_config.shots_in_training,
                    rng=rng,
                )
            return loss_gradient(model_config, p, (rows, ys))

        def full_predictions(flat_now, rows):
            return forward_batch(model_config, unflatten(model_config, flat_now), rows)

    else:
        if train_config.shots_in_training is not None:
            raise ConfigurationError("shot-based training applies to the qnn only")
        activation = "leaky_relu"
        n_inputs = train_set.n_features
        if isinstance(model_config, MlpModel):
            activation = model_config.activation
            if model_config.n_inputs != n_inputs:
                raise ValidationError(
                    f"MLP takes {model_config.n_inputs} inputs but the dataset has "
                    f"{n_inputs} features"
                )
        elif isinstance(model_config, str):
            activation = model_config
        elif model_config is not None:
            raise ConfigurationError(
                "mlp training takes an activation name, an MlpModel template, or None"
            )
        model0 = init_mlp(n_inputs, rng, activation)
        flat = model0.flatten()

        def batch_grad(flat_now, rows, ys):
            return mlp_gradient(mlp_unflatten(n_inputs, flat_now, activation), (rows, ys))

        def full_predictions(flat_now, rows):
            return mlp_forward_batch(mlp_unflatten(n_inputs, flat_now, activation), rows)

    if train_config.optimizer == "adam":
        optimizer = _Adam(flat.shape[0], train_config.learning_rate)
    else:
        optimizer = _PlainGd(train_config.learning_rate)

    stream = _index_stream(train_set.n_rows, rng)
    history = TrainHistory()
    best_val = math.inf
    stale = 0
    for epoch in range(1, train_config.epochs + 1):
        t0 = time.perf_counter()
        for batch in range(train_config.batches_per_epoch):
            idx = np.fromiter(
                itertools.islice(stream, train_config.batch_size),
                dtype=int,
                count=train_config.batch_size,
            )
            grad, batch_mse = batch_grad(flat, angles[idx], targets[idx])
            if not (np.isfinite(batch_mse) and np.all(np.isfinite(grad))):
                raise TrainingDivergedError(
                    f"non-finite loss or gradient at epoch {epoch}, batch {batch + 1}",
                    epoch=epoch,
                    batch=batch + 1,
                )
            flat = optimizer.step(flat, grad)

        train_pred = full_predictions(flat, angles)
        train_mse = float(np.mean((train_pred - targets) ** 2))
        if not np.isfinite(train_mse):
            raise TrainingDivergedError(
                f"non-finite training loss after epoch {epoch}", epoch=epoch
            )
        val_mse, val_r2 = float("nan"), float("nan")
        if validation_set is not None:
            metrics = mse_r2(full_predictions(flat, val_angles), validation_set.targets)
            val_mse, val_r2 = metrics.mse, metrics.r2
        history.records.append(
            EpochRecord(
                epoch=epoch,
                train_mse=train_mse,
                val_mse=val_mse,
                val_r2=val_r2,
                param_hash=_param_hash(flat),
                seconds=time.perf_counter() - t0,
            )
        )
        if train_config.patience is not None:
            if validation_set is None:
                raise ConfigurationError("patience needs a validation set")
            if val_mse < best_val - 1e-12:
                best_val = val_mse
                stale = 0
            else:
                stale += 1
                if stale >= train_config.patience:
                    break

    if model_kind == "qnn":
        fitted = FittedQnn(model_config, unflatten(model_config, flat), scaling)
    else:
        fitted = FittedMlp(mlp_unflatten(n_inputs, flat, activation), scaling)
    return fitted, history


def evaluate(
    model,
    dataset: Dataset,
    shots: int | None = None,
    rng: np.random.Generator | None = None,
    clamp: bool = False,
) -> Metrics:
    """MSE and R2 of a fitted model (or any predictor) on a dataset."""
    if dataset.n_rows == 0:
        raise ValidationError("cannot evaluate on an empty dataset")
    if shots is not None and not math.isinf(shots):
        if not hasattr(model, "predict_sampled"):
            raise ConfigurationError(
                "shot-based evaluation needs a model with sampled predictions"
            )
        if rng is None:
            raise ConfigurationError("shot-based evaluation needs a random generator")
        predictions = model.predict_sampled(dataset.features, int(shots), rng)
    else:
        predictions = model.predict(dataset.features)
    if clamp:
        predictions = np.clip(predictions, 0.0, 1.0)
    return mse_r2(predictions, dataset.targets)


def shot_sweep(
    model,
    dataset: Dataset,
    shots_list,
    repeats: int,
    rng: np.random.Generator,
) -> list[dict]:
    """R2 mean/std over seeded repeats per shot count.

    Infinite (or None) entries mean exact evaluation.  The Born
    distributions are computed once and reused across repeats, so only the
    multinomial draws vary.  std_r2 is the ddof=1 sample deviation (0.0 when
    repeats == 1 or the evaluation is exact).
    """
    shots_list = list(shots_list)
    if not shots_list:
        raise ValidationError("shots_list must be non-empty")
    if repeats < 1:
        raise ValidationError(f"repeats must be >= 1, got {repeats}")
    probs = None
    rows = []
    for shots in shots_list:
        exact = shots is None or math.isinf(shots)
        if exact:
            metrics = evaluate(model, dataset)
            mean_r2, std_r2 = metrics.r2, 0.0
        else:
            if probs is None:
                probs = model.born_probabilities(dataset.features)
            values = np.empty(repeats)
            for r in range(repeats):
                predictions = model.predict_from_probs(probs, int(shots), rng)
                values[r] = mse_r2(predictions, dataset.targets).r2
            mean_r2 = float(values.mean())
            std_r2 = float(values.std(ddof=1)) if repeats > 1 else 0.0
        rows.append(
            {
                "n_shots": float("inf") if exact else int(shots),
                "mean_r2": mean_r2,
                "std_r2": std_r2,
                "repeats": repeats,
            }
        )
    return rows


SWEEP_HEADER = "n_shots,mean_r2,std_r2,repeats"


def write_sweep_csv(rows: list[dict], path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(SWEEP_HEADER + "\n")
        for row in rows:
            shots = row["n_shots"]
            shots_text = "inf" if math.isinf(shots) else str(int(shots))
            handle.write(
                f"{shots_text},{row['mean_r2']!r},{row['std_r2']!r},{row['repeats']}\n"
            )


def ensemble_train(
    n_instances: int,
    base_seed: int,
    model_kind: str,
    model_config,
    train_config: TrainConfig,
    train_set: Dataset,
    validation_set: Dataset | None = None,
    scaling: FeatureScaling | None = None,
):
    """Independent training runs seeded base_seed + i; returns models, metrics, envelope."""
    if n_instances < 2:
        raise ConfigurationError(f"an ensemble needs >= 2 instances, got {n_instances}")
    models, metrics = [], []
    eval_set = validation_set if validation_set is not None else train_set
    for i in range(n_instances):
        config_i = replace(train_config, seed=base_seed + i)
        fitted, _ = train(
            model_kind, model_config, config_i, train_set, validation_set, scaling
        )
        models.append(fitted)
        metrics.append(evaluate(fitted, eval_set))
    r2s = np.array([m.r2 for m in metrics])
    envelope = {
        "min_r2": float(r2s.min()),
        "mean_r2": float(r2s.mean()),
        "max_r2": float(r2s.max()),
    }
    return models, metrics, envelope
