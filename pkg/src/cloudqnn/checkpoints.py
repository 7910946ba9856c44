"""JSON checkpoint container for trained models.

One self-describing document per model: a format tag, the model kind, the
architecture, the flat parameter vector (see the flattening orders in qnn.py
and baselines.py), the feature-scaling record, and free-form metadata.
JSON float serialization round-trips exactly, so a save/load cycle restores
bit-identical parameters.
"""

from __future__ import annotations

import json

from .baselines import mlp_unflatten
from .data import FeatureScaling
from .errors import ValidationError
from .qnn import CircuitConfig, unflatten
from .training import FittedMlp, FittedQnn

CHECKPOINT_FORMAT = "cloudqnn-checkpoint-v1"


def save_checkpoint(path, fitted, metadata: dict | None = None) -> None:
    """Write a FittedQnn or FittedMlp to a JSON checkpoint file."""
    if isinstance(fitted, FittedQnn):
        record = {
            "format": CHECKPOINT_FORMAT,
            "model_kind": "qnn",
            "architecture": {
                "n_qubits": fitted.config.n_qubits,
                "n_enc": fitted.config.n_enc,
                "n_var": fitted.config.n_var,
            },
            "params": [float(v) for v in fitted.params.flatten()],
        }
    elif isinstance(fitted, FittedMlp):
        record = {
            "format": CHECKPOINT_FORMAT,
            "model_kind": "mlp",
            "architecture": {
                "n_inputs": fitted.model.n_inputs,
                "activation": fitted.model.activation,
            },
            "params": [float(v) for v in fitted.model.flatten()],
        }
    else:
        raise ValidationError(
            f"cannot checkpoint a {type(fitted).__name__}; need FittedQnn or FittedMlp"
        )
    record["scaling"] = fitted.scaling.to_dict()
    record["metadata"] = metadata or {}
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(record, handle, indent=2, sort_keys=True)
        handle.write("\n")


def load_checkpoint(path):
    """Read a checkpoint; returns (fitted model, metadata dict)."""
    with open(path, encoding="utf-8") as handle:
        try:
            record = json.load(handle)
        except json.JSONDecodeError as error:
            raise ValidationError(f"checkpoint {path} is not valid JSON: {error}") from None
    if not isinstance(record, dict) or record.get("format") != CHECKPOINT_FORMAT:
        raise ValidationError(
            f"checkpoint {path} lacks the {CHECKPOINT_FORMAT} format tag"
        )
    missing = [k for k in ("model_kind", "architecture", "params", "scaling") if k not in record]
    if missing:
        raise ValidationError(f"checkpoint {path} is missing keys {missing}")
    scaling = FeatureScaling.from_dict(record["scaling"])
    arch = record["architecture"]
    kind = record["model_kind"]
    if kind == "qnn":
        config = CircuitConfig(
            n_qubits=int(arch["n_qubits"]),
            n_enc=int(arch["n_enc"]),
            n_var=int(arch["n_var"]),
        )
        params = unflatten(config, record["params"])
        fitted = FittedQnn(config, params, scaling)
    elif kind == "mlp":
        model = mlp_unflatten(
            int(arch["n_inputs"]), record["params"], arch["activation"]
        )
        fitted = FittedMlp(model, scaling)
    else:
        raise ValidationError(f"checkpoint {path} has unknown model_kind {kind!r}")
    return fitted, record.get("metadata", {})
