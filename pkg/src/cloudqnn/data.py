"""Tabular cloud-cover datasets: CSV ingestion, scaling, splits, synthesis.

Column schema (fixed order): qv, qc, qi, ta, pa, hw, zg, lat, clc.
The first eight are model features (specific humidity, cloud water, cloud
ice, air temperature, pressure, horizontal wind speed, geometric height,
latitude); clc is the cloud-fraction target in [0, 1].  Feature order is the
qubit order: feature n drives qubit n.
"""

from __future__ import annotations

import csv
import hashlib
import logging
from dataclasses import dataclass

import numpy as np

from .baselines import XuRandallConstants, xu_randall_cloud_cover
from .errors import ValidationError

log = logging.getLogger(__name__)

FEATURE_NAMES = ("qv", "qc", "qi", "ta", "pa", "hw", "zg", "lat")
TARGET_NAME = "clc"
# the six-feature variant drops geometric height and latitude
REDUCED_FEATURES = ("qv", "qc", "qi", "ta", "pa", "hw")

GENERATOR_VERSION = "2"
SCALE_HEIGHT_M = 7400.0
MAX_HEIGHT_M = SCALE_HEIGHT_M * np.log(10.0)  # pressure spans [1e4, 1e5] Pa


@dataclass
class Dataset:
    """Immutable-by-convention feature matrix plus target vector."""

    features: np.ndarray
    targets: np.ndarray
    feature_names: tuple[str, ...]

    def __post_init__(self) -> None:
        self.features = np.asarray(self.features, dtype=float)
        self.targets = np.asarray(self.targets, dtype=float)
        if self.features.ndim != 2:
            raise ValidationError("features must be a 2-d matrix")
        if self.features.shape[0] != self.targets.shape[0]:
            raise ValidationError(
                f"{self.features.shape[0]} feature rows vs {self.targets.shape[0]} targets"
            )
        if self.features.shape[1] != len(self.feature_names):
            raise ValidationError(
                f"{self.features.shape[1]} feature columns vs "
                f"{len(self.feature_names)} names"
            )
        self.feature_names = tuple(self.feature_names)

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def take(self, indices) -> "Dataset":
        indices = np.asarray(indices, dtype=int)
        return Dataset(self.features[indices], self.targets[indices], self.feature_names)


def select_features(dataset: Dataset, names) -> Dataset:
    """Project onto a feature subset, keeping the given name order."""
    names = tuple(names)
    missing = [n for n in names if n not in dataset.feature_names]
    if missing:
        raise ValidationError(f"unknown feature names {missing}; have {dataset.feature_names}")
    cols = [dataset.feature_names.index(n) for n in names]
    return Dataset(dataset.features[:, cols], dataset.targets, names)


def _validate_row(row_number: int, values: dict[str, float]) -> None:
    for name in ("qv", "qc", "qi"):
        if values[name] < 0:
            raise ValidationError(
                f"data row {row_number}: {name} = {values[name]} must be >= 0"
            )
    if values["pa"] <= 0:
        raise ValidationError(f"data row {row_number}: pa = {values['pa']} must be > 0")
    if not 0.0 <= values["clc"] <= 1.0:
        raise ValidationError(
            f"data row {row_number}: clc = {values['clc']} outside [0, 1]"
        )


def load_csv(path, feature_subset=FEATURE_NAMES) -> Dataset:
    """Read the fixed-schema CSV; data rows are numbered from 1 in errors."""
    required = (*FEATURE_NAMES, TARGET_NAME)
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        header = reader.fieldnames or []
        missing = [c for c in required if c not in header]
        if missing:
            raise ValidationError(f"CSV {path} is missing columns {missing}")
        rows = []
        for row_number, record in enumerate(reader, start=1):
            values = {}
            for column in required:
                raw = record[column]
                try:
                    values[column] = float(raw)
                except (TypeError, ValueError):
                    raise ValidationError(
                        f"data row {row_number}: cannot parse {column} value {raw!r}"
                    ) from None
            _validate_row(row_number, values)
            rows.append([values[c] for c in required])
    if not rows:
        raise ValidationError(f"CSV {path} has no data rows")
    table = np.asarray(rows, dtype=float)
    full = Dataset(table[:, : len(FEATURE_NAMES)], table[:, -1], FEATURE_NAMES)
    if tuple(feature_subset) == FEATURE_NAMES:
        return full
    return select_features(full, feature_subset)


def write_csv(dataset: Dataset, path) -> None:
    """Emit the fixed 9-column schema; requires the full feature set."""
    if dataset.feature_names != FEATURE_NAMES:
        raise ValidationError(
            "only full 8-feature datasets can be written in the CSV schema"
        )
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow([*FEATURE_NAMES, TARGET_NAME])
        for i in range(dataset.n_rows):
            writer.writerow(
                [repr(float(v)) for v in dataset.features[i]]
                + [repr(float(dataset.targets[i]))]
            )


@dataclass
class FeatureScaling:
    """Affine per-feature map from the training range onto [lo, hi] radians."""

    feature_names: tuple[str, ...]
    mins: np.ndarray
    maxs: np.ndarray
    lo: float
    hi: float

    def checksum(self) -> str:
        digest = hashlib.sha256()
        digest.update(",".join(self.feature_names).encode())
        digest.update(np.asarray(self.mins, dtype=float).tobytes())
        digest.update(np.asarray(self.maxs, dtype=float).tobytes())
        digest.update(np.float64(self.lo).tobytes())
        digest.update(np.float64(self.hi).tobytes())
        return digest.hexdigest()[:16]

    def to_dict(self) -> dict:
        return {
            "feature_names": list(self.feature_names),
            "mins": [float(v) for v in self.mins],
            "maxs": [float(v) for v in self.maxs],
            "lo": float(self.lo),
            "hi": float(self.hi),
        }

    @classmethod
    def from_dict(cls, record: dict) -> "FeatureScaling":
        return cls(
            tuple(record["feature_names"]),
            np.asarray(record["mins"], dtype=float),
            np.asarray(record["maxs"], dtype=float),
            float(record["lo"]),
            float(record["hi"]),
        )


def fit_scaling(train: Dataset, lo: float = 0.0, hi: float = float(np.pi)) -> FeatureScaling:
    """Per-feature min/max from the training split only."""
    if hi <= lo:
        raise ValidationError(f"need hi > lo, got [{lo}, {hi}]")
    mins = train.features.min(axis=0)
    maxs = train.features.max(axis=0)
    constant = np.nonzero(maxs <= mins)[0]
    if constant.size:
        names = [train.feature_names[i] for i in constant]
        raise ValidationError(f"constant features cannot be scaled: {names}")
    return FeatureScaling(train.feature_names, mins, maxs, lo, hi)


def apply_scaling(scaling: FeatureScaling, features: np.ndarray) -> np.ndarray:
    """Map features to angles; out-of-range values extrapolate with a warning."""
    x = np.asarray(features, dtype=float)
    below = np.any(x < scaling.mins)
    above = np.any(x > scaling.maxs)
    if below or above:
        log.warning(
            "scaling applied outside the fitted range (extrapolating linearly)"
        )
    span = scaling.maxs - scaling.mins
    return scaling.lo + (x - scaling.mins) * (scaling.hi - scaling.lo) / span


def invert_scaling(scaling: FeatureScaling, angles: np.ndarray) -> np.ndarray:
    """Inverse of apply_scaling (exact affine inverse)."""
    a = np.asarray(angles, dtype=float)
    span = scaling.maxs - scaling.mins
    return scaling.mins + (a - scaling.lo) * span / (scaling.hi - scaling.lo)


def synthesize_dataset(
    n: int,
    seed: int,
    noise_sd: float = 0.05,
    constants: XuRandallConstants = XuRandallConstants(),
) -> Dataset:
    """Generate plausible feature tuples with a diagnostic-scheme-driven target.

    Draw order (fixed for determinism): temperature U(200, 310) K; height
    U(0, H ln 10) with pressure 1e5 exp(-z/H), H = 7400 m; specific humidity
    log-uniform over [1e-4, 1e-2] kg/kg; a 25% clear-sky mask zeroing both
    condensates, otherwise log-uniform condensates in [1e-4, 1e-3]; wind
    U(0, 40) m/s; latitude U(-90, 90).  The target adds smooth waves in
    height/latitude and wind plus Gaussian noise to the scheme value, then
    clamps to [0, 1] (so exact 0 and 1 rows occur).

    The condensate floor sits well above zero so that, after min-max
    scaling, cloudy and clear rows stay separable; with a floor orders of
    magnitude lower the clear/cloudy distinction collapses to an invisible
    step and saturated-row targets become unlearnable.
    """
    if n < 1:
        raise ValidationError(f"need n >= 1, got {n}")
    if noise_sd < 0:
        raise ValidationError(f"noise_sd must be >= 0, got {noise_sd}")
    rng = np.random.default_rng(seed)
    ta = rng.uniform(200.0, 310.0, n)
    zg = rng.uniform(0.0, MAX_HEIGHT_M, n)
    pa = 1e5 * np.exp(-zg / SCALE_HEIGHT_M)
    qv = 10.0 ** rng.uniform(-4.0, -2.0, n)
    clear = rng.random(n) < 0.25
    qc = np.where(clear, 0.0, 10.0 ** rng.uniform(-4.0, -3.0, n))
    qi = np.where(clear, 0.0, 10.0 ** rng.uniform(-4.0, -3.0, n))
    hw = rng.uniform(0.0, 40.0, n)
    lat = rng.uniform(-90.0, 90.0, n)

    base = xu_randall_cloud_cover(qv, qc, qi, ta, pa, constants)
    wave = 0.15 * np.sin(np.pi * zg / MAX_HEIGHT_M) * np.cos(2.0 * np.radians(lat))
    wave += 0.05 * np.sin(2.0 * np.pi * hw / 40.0)
    clc = base + wave
    if noise_sd > 0:
        clc = clc + rng.normal(0.0, noise_sd, n)
    clc = np.clip(clc, 0.0, 1.0)

    features = np.column_stack([qv, qc, qi, ta, pa, hw, zg, lat])
    return Dataset(features, clc, FEATURE_NAMES)


def synthesis_metadata(n: int, seed: int, noise_sd: float, constants: XuRandallConstants) -> dict:
    """Sidecar record describing a synthesize_dataset call."""
    return {
        "generator_version": GENERATOR_VERSION,
        "n": int(n),
        "seed": int(seed),
        "noise_sd": float(noise_sd),
        "xu_randall_constants": {
            "p": constants.p,
            "alpha0": constants.alpha0,
            "gamma": constants.gamma,
        },
    }


def split(dataset: Dataset, fractions, seed: int) -> tuple[Dataset, Dataset, Dataset]:
    """Seeded permutation split into (train, validation, test).

    Sizes are floors of fraction * n; leftover rows go to the splits with the
    largest fractional parts (ties broken toward train first).
    """
    fractions = [float(f) for f in fractions]
    if len(fractions) != 3:
        raise ValidationError(f"need 3 fractions, got {len(fractions)}")
    if any(f < 0 for f in fractions):
        raise ValidationError(f"fractions must be non-negative, got {fractions}")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValidationError(f"fractions must sum to 1, got sum {sum(fractions)}")
    n = dataset.n_rows
    exact = [f * n for f in fractions]
    sizes = [int(np.floor(e)) for e in exact]
    leftover = n - sum(sizes)
    order = sorted(range(3), key=lambda i: (-(exact[i] - sizes[i]), i))
    for i in range(leftover):
        sizes[order[i]] += 1
    rng = np.random.default_rng(seed)
    permutation = rng.permutation(n)
    bounds = np.cumsum([0] + sizes)
    parts = [
        dataset.take(permutation[bounds[i] : bounds[i + 1]]) for i in range(3)
    ]
    return parts[0], parts[1], parts[2]
