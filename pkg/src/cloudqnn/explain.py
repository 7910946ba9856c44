"""Model-agnostic Shapley attributions via KernelSHAP.

Exact mode enumerates all 2^M feature coalitions and solves the Shapley
kernel weighted least squares with the efficiency constraint eliminated;
with full enumeration this reproduces exact Shapley values, so the usual
axioms (efficiency, dummy, symmetry) hold to solver precision.  Sampled
mode draws interior coalitions from the kernel-weight distribution instead
and reuses the same constrained solve with multiplicity weights.

Missing features are replaced by background rows (interventional
conditioning): the value of a coalition is the model output averaged over
the background with present features pinned to the explained instance.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .errors import ConfigurationError, ValidationError

log = logging.getLogger(__name__)

EXACT_MODE_MAX_FEATURES = 10
_PREDICT_CHUNK = 4096


@dataclass
class Attribution:
    """Shapley row for one instance."""

    values: np.ndarray
    base_value: float
    degenerate: bool = False


@dataclass
class AttributionResult:
    """Per-instance Shapley values plus the shared base value."""

    shap_values: np.ndarray
    base_value: float
    feature_names: tuple[str, ...]
    degenerate_rows: list[int] = field(default_factory=list)


@dataclass
class ImportanceSummary:
    """Mean |shap| per feature with a 1-based descending ranking."""

    feature_names: tuple[str, ...]
    importances: np.ndarray
    ranks: np.ndarray


@dataclass
class StabilityReport:
    """Per-model importances and their across-model spread."""

    feature_names: tuple[str, ...]
    importances: np.ndarray  # (n_models, n_features)
    mean_importance: np.ndarray
    std_importance: np.ndarray


def _as_predict_fn(model):
    if callable(model):
        return model
    if hasattr(model, "predict"):
        return model.predict
    raise ConfigurationError(f"{type(model).__name__} is not callable and has no predict")


def _chunked_predict(predict_fn, rows: np.ndarray) -> np.ndarray:
    out = np.empty(rows.shape[0])
    for start in range(0, rows.shape[0], _PREDICT_CHUNK):
        block = rows[start : start + _PREDICT_CHUNK]
        out[start : start + _PREDICT_CHUNK] = np.asarray(predict_fn(block), dtype=float)
    return out


def kernel_weight(n_features: int, size: int) -> float:
    """Shapley kernel pi(z) = (M-1) / (C(M,|z|) |z| (M-|z|)) for interior sizes."""
    if not 0 < size < n_features:
        raise ValidationError(f"kernel weight needs 0 < size < {n_features}, got {size}")
    return (n_features - 1) / (
        math.comb(n_features, size) * size * (n_features - size)
    )


def _all_coalitions(n_features: int) -> np.ndarray:
    """(2^M, M) 0/1 matrix; row index is the coalition bitmask."""
    indices = np.arange(1 << n_features)
    return ((indices[:, None] >> np.arange(n_features)) & 1).astype(float)


def _coalition_values(
    predict_fn, background: np.ndarray, instance: np.ndarray, coalitions: np.ndarray
) -> np.ndarray:
    """Mean model output over the background per coalition row."""
    n_coalitions = coalitions.shape[0]
    n_background = background.shape[0]
    # rows grouped by coalition: background copies with present features pinned
    masked = np.repeat(coalitions[:, None, :], n_background, axis=1)
    masked = masked * instance[None, None, :] + (1.0 - masked) * background[None, :, :]
    flat = masked.reshape(n_coalitions * n_background, -1)
    outputs = _chunked_predict(predict_fn, flat)
    return outputs.reshape(n_coalitions, n_background).mean(axis=1)


def _solve_constrained(
    coalitions: np.ndarray,
    values: np.ndarray,
    weights: np.ndarray,
    v_empty: float,
    v_full: float,
) -> tuple[np.ndarray, bool]:
    """Weighted least squares with the efficiency constraint eliminated.

    The last feature's coefficient is substituted by
    (v_full - v_empty) - sum(others), which keeps efficiency exact no matter
    how well the reduced system solves.
    """
    n_features = coalitions.shape[1]
    delta = v_full - v_empty
    if n_features == 1:
        return np.array([delta]), False
    y = values - v_empty - coalitions[:, -1] * delta
    design = coalitions[:, :-1] - coalitions[:, -1:]
    weighted = design * weights[:, None]
    normal = weighted.T @ design
    rhs = weighted.T @ y
    degenerate = False
    try:
        head = np.linalg.solve(normal, rhs)
    except np.linalg.LinAlgError:
        head, _, rank, _ = np.linalg.lstsq(normal, rhs, rcond=None)
        degenerate = rank < n_features - 1
    phi = np.empty(n_features)
    phi[:-1] = head
    phi[-1] = delta - head.sum()
    return phi, degenerate


def _sample_coalitions(
    n_features: int, n_coalitions: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Draw interior coalitions from the kernel distribution; dedupe to counts."""
    sizes = np.arange(1, n_features)
    size_weights = np.array(
        [kernel_weight(n_features, s) * math.comb(n_features, s) for s in sizes]
    )
    size_weights /= size_weights.sum()
    drawn_sizes = rng.choice(sizes, size=n_coalitions, p=size_weights)
    masks = np.zeros(n_coalitions, dtype=np.int64)
    for i, s in enumerate(drawn_sizes):
        chosen = rng.choice(n_features, size=s, replace=False)
        masks[i] = np.bitwise_or.reduce(1 << chosen)
    unique, counts = np.unique(masks, return_counts=True)
    coalitions = ((unique[:, None] >> np.arange(n_features)) & 1).astype(float)
    return coalitions, counts.astype(float)


def kernel_shap(
    model,
    background,
    instance: np.ndarray,
    mode: str = "exact",
    n_coalitions: int | None = None,
    rng: np.random.Generator | None = None,
) -> Attribution:
    """Shapley values of one instance against a background dataset."""
    predict_fn = _as_predict_fn(model)
    bg = background.features if isinstance(background, Dataset) else np.asarray(background, dtype=float)
    bg = np.atleast_2d(bg)
    if bg.shape[0] < 1:
        raise ValidationError("background must have at least one row")
    instance = np.asarray(instance, dtype=float)
    n_features = bg.shape[1]
    if instance.shape != (n_features,):
        raise ValidationError(
            f"instance must have shape ({n_features},), got {instance.shape}"
        )

    if mode == "exact":
        if n_features > EXACT_MODE_MAX_FEATURES:
            raise ConfigurationError(
                f"exact mode enumerates 2^M coalitions; M <= {EXACT_MODE_MAX_FEATURES}"
                f" required, got {n_features}"
            )
        coalitions = _all_coalitions(n_features)
        values = _coalition_values(predict_fn, bg, instance, coalitions)
        v_empty = values[0]
        v_full = values[-1]
        interior = slice(1, coalitions.shape[0] - 1)
        sizes = coalitions[interior].sum(axis=1).astype(int)
        weights = np.array([kernel_weight(n_features, s) for s in sizes])
        phi, degenerate = _solve_constrained(
            coalitions[interior], values[interior], weights, v_empty, v_full
        )
    elif mode == "sampled":
        if rng is None:
            raise ConfigurationError("sampled mode needs a random generator")
        if n_coalitions is None or n_coalitions < 1:
            raise ConfigurationError("sampled mode needs n_coalitions >= 1")
        interior_coalitions, counts = _sample_coalitions(n_features, n_coalitions, rng)
        empty = np.zeros((1, n_features))
        full = np.ones((1, n_features))
        stacked = np.vstack([empty, interior_coalitions, full])
        values = _coalition_values(predict_fn, bg, instance, stacked)
        v_empty = values[0]
        v_full = values[-1]
        phi, degenerate = _solve_constrained(
            interior_coalitions, values[1:-1], counts, v_empty, v_full
        )
    else:
        raise ConfigurationError(f"mode must be 'exact' or 'sampled', got {mode!r}")
    return Attribution(values=phi, base_value=float(v_empty), degenerate=degenerate)


def explain_dataset(
    model,
    background,
    test,
    mode: str = "exact",
    n_coalitions: int | None = None,
    rng: np.random.Generator | None = None,
) -> AttributionResult:
    """Shapley row per test instance; logs progress every 25 rows."""
    if isinstance(test, Dataset):
        rows = test.features
        names = test.feature_names
    else:
        rows = np.atleast_2d(np.asarray(test, dtype=float))
        names = tuple(f"f{i}" for i in range(rows.shape[1]))
    if isinstance(background, Dataset) and isinstance(test, Dataset):
        if background.feature_names != test.feature_names:
            raise ValidationError("background and test feature names differ")
    shap_values = np.empty_like(rows)
    base = 0.0
    degenerate_rows = []
    for i in range(rows.shape[0]):
        attribution = kernel_shap(model, background, rows[i], mode, n_coalitions, rng)
        shap_values[i] = attribution.values
        base = attribution.base_value
        if attribution.degenerate:
            degenerate_rows.append(i)
        if (i + 1) % 25 == 0 or i + 1 == rows.shape[0]:
            log.info("explained %d/%d instances", i + 1, rows.shape[0])
    return AttributionResult(
        shap_values=shap_values,
        base_value=base,
        feature_names=names,
        degenerate_rows=degenerate_rows,
    )


def importance_summary(result: AttributionResult) -> ImportanceSummary:
    """Mean absolute attribution per feature; rank 1 = most important."""
    if result.shap_values.shape[0] == 0:
        raise ValidationError("attribution result is empty")
    importances = np.mean(np.abs(result.shap_values), axis=0)
    order = sorted(
        range(importances.shape[0]), key=lambda j: (-importances[j], j)
    )
    ranks = np.empty(len(order), dtype=int)
    for position, j in enumerate(order, start=1):
        ranks[j] = position
    return ImportanceSummary(
        feature_names=result.feature_names, importances=importances, ranks=ranks
    )


def ensemble_importance_stability(
    models,
    background,
    test,
    mode: str = "exact",
    n_coalitions: int | None = None,
    rng: np.random.Generator | None = None,
) -> StabilityReport:
    """Importance vectors per model and their per-feature spread (ddof=0)."""
    if len(models) < 2:
        raise ValidationError(f"stability needs >= 2 models, got {len(models)}")
    rows = []
    names = None
    for model in models:
        result = explain_dataset(model, background, test, mode, n_coalitions, rng)
        summary = importance_summary(result)
        rows.append(summary.importances)
        names = summary.feature_names
    importances = np.vstack(rows)
    return StabilityReport(
        feature_names=names,
        importances=importances,
        mean_importance=importances.mean(axis=0),
        std_importance=importances.std(axis=0),
    )


def select_background(train: Dataset, size: int, rng: np.random.Generator) -> Dataset:
    """Stratified draw over 10 target-quantile bins (representative sample)."""
    if size < 1:
        raise ValidationError(f"background size must be >= 1, got {size}")
    if size > train.n_rows:
        raise ValidationError(
            f"background size {size} exceeds dataset size {train.n_rows}"
        )
    n_strata = min(10, train.n_rows, size)
    sorted_idx = np.argsort(train.targets, kind="stable")
    strata = np.array_split(sorted_idx, n_strata)
    base, leftover = divmod(size, n_strata)
    quotas = [base + (1 if i < leftover else 0) for i in range(n_strata)]
    chosen: list[int] = []
    shortfall = 0
    for stratum, quota in zip(strata, quotas):
        quota += shortfall
        take = min(quota, stratum.shape[0])
        shortfall = quota - take
        if take > 0:
            picked = rng.choice(stratum.shape[0], size=take, replace=False)
            chosen.extend(int(stratum[p]) for p in picked)
    remaining = [i for i in sorted_idx if i not in set(chosen)]
    while shortfall > 0 and remaining:
        pick = int(rng.integers(len(remaining)))
        chosen.append(remaining.pop(pick))
        shortfall -= 1
    return train.take(np.array(sorted(chosen), dtype=int))


ATTRIBUTION_HEADER = "instance_id,feature_name,shap_value"
IMPORTANCE_HEADER = "feature_name,mean_abs_shap,rank"
STABILITY_HEADER = "model_id,feature_name,mean_abs_shap,rank"
STABILITY_SUMMARY_HEADER = "feature_name,mean_importance,std_importance"


def write_attributions_csv(result: AttributionResult, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(ATTRIBUTION_HEADER + "\n")
        for i in range(result.shap_values.shape[0]):
            for j, name in enumerate(result.feature_names):
                handle.write(f"{i},{name},{float(result.shap_values[i, j])!r}\n")


def write_importance_csv(summary: ImportanceSummary, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(IMPORTANCE_HEADER + "\n")
        for j, name in enumerate(summary.feature_names):
            handle.write(f"{name},{float(summary.importances[j])!r},{summary.ranks[j]}\n")


def write_stability_csv(
    report: StabilityReport, summaries_path, per_model_path
) -> None:
    with open(per_model_path, "w", encoding="utf-8") as handle:
        handle.write(STABILITY_HEADER + "\n")
        for m in range(report.importances.shape[0]):
            row = report.importances[m]
            order = sorted(range(row.shape[0]), key=lambda j: (-row[j], j))
            ranks = np.empty(len(order), dtype=int)
            for position, j in enumerate(order, start=1):
                ranks[j] = position
            for j, name in enumerate(report.feature_names):
                handle.write(f"{m},{name},{float(row[j])!r},{ranks[j]}\n")
    with open(summaries_path, "w", encoding="utf-8") as handle:
        handle.write(STABILITY_SUMMARY_HEADER + "\n")
        for j, name in enumerate(report.feature_names):
            handle.write(
                f"{name},{float(report.mean_importance[j])!r},"
                f"{float(report.std_importance[j])!r}\n"
            )
