import json

import numpy as np
import pytest

from cloudqnn.baselines import init_mlp
from cloudqnn.checkpoints import CHECKPOINT_FORMAT, load_checkpoint, save_checkpoint
from cloudqnn.data import Dataset, fit_scaling
from cloudqnn.errors import ValidationError
from cloudqnn.qnn import CircuitConfig, init_params
from cloudqnn.training import FittedMlp, FittedQnn


def small_scaling(n_features: int):
    rng = np.random.default_rng(0)
    names = tuple(f"f{i}" for i in range(n_features))
    ds = Dataset(rng.uniform(0.0, 2.0, size=(20, n_features)), rng.random(20), names)
    return fit_scaling(ds)


def make_qnn() -> FittedQnn:
    config = CircuitConfig(n_qubits=3, n_enc=2, n_var=1)
    params = init_params(config, np.random.default_rng(1))
    return FittedQnn(config, params, small_scaling(3))


def make_mlp() -> FittedMlp:
    return FittedMlp(init_mlp(4, np.random.default_rng(2)), small_scaling(4))


class TestRoundTrip:
    def test_qnn_parameters_bitwise_equal(self, tmp_path):
        fitted = make_qnn()
        path = tmp_path / "qnn.json"
        save_checkpoint(path, fitted)
        loaded, metadata = load_checkpoint(path)
        assert isinstance(loaded, FittedQnn)
        assert loaded.config == fitted.config
        assert np.array_equal(loaded.params.flatten(), fitted.params.flatten())
        assert metadata == {}

    def test_mlp_parameters_bitwise_equal(self, tmp_path):
        fitted = make_mlp()
        path = tmp_path / "mlp.json"
        save_checkpoint(path, fitted)
        loaded, _ = load_checkpoint(path)
        assert isinstance(loaded, FittedMlp)
        assert loaded.model.activation == fitted.model.activation
        assert np.array_equal(loaded.model.flatten(), fitted.model.flatten())

    def test_predictions_identical_after_reload(self, tmp_path):
        fitted = make_qnn()
        path = tmp_path / "qnn.json"
        save_checkpoint(path, fitted)
        loaded, _ = load_checkpoint(path)
        rows = np.random.default_rng(3).uniform(0.0, 2.0, size=(5, 3))
        assert np.array_equal(loaded.predict(rows), fitted.predict(rows))

    def test_scaling_record_preserved(self, tmp_path):
        fitted = make_mlp()
        path = tmp_path / "mlp.json"
        save_checkpoint(path, fitted)
        loaded, _ = load_checkpoint(path)
        assert loaded.scaling.feature_names == fitted.scaling.feature_names
        assert np.array_equal(loaded.scaling.mins, fitted.scaling.mins)
        assert np.array_equal(loaded.scaling.maxs, fitted.scaling.maxs)

    def test_metadata_round_trips(self, tmp_path):
        metadata = {"train_config": {"epochs": 3, "optimizer": "adam"}, "note": "x"}
        path = tmp_path / "qnn.json"
        save_checkpoint(path, make_qnn(), metadata)
        _, loaded = load_checkpoint(path)
        assert loaded == metadata


class TestValidation:
    def test_rejects_unwrapped_model(self, tmp_path):
        with pytest.raises(ValidationError, match="FittedQnn or FittedMlp"):
            save_checkpoint(tmp_path / "bad.json", init_mlp(4, np.random.default_rng(0)))

    def test_rejects_invalid_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(ValidationError, match="JSON"):
            load_checkpoint(path)

    def test_rejects_missing_format_tag(self, tmp_path):
        path = tmp_path / "untagged.json"
        path.write_text(json.dumps({"model_kind": "qnn"}))
        with pytest.raises(ValidationError, match="format tag"):
            load_checkpoint(path)

    def test_rejects_non_object_document(self, tmp_path):
        path = tmp_path / "list.json"
        path.write_text("[1, 2, 3]")
        with pytest.raises(ValidationError, match="format tag"):
            load_checkpoint(path)

    def test_rejects_missing_keys(self, tmp_path):
        path = tmp_path / "partial.json"
        path.write_text(json.dumps({"format": CHECKPOINT_FORMAT, "model_kind": "qnn"}))
        with pytest.raises(ValidationError, match="missing keys"):
            load_checkpoint(path)

    def test_rejects_unknown_model_kind(self, tmp_path):
        record = {
            "format": CHECKPOINT_FORMAT,
            "model_kind": "forest",
            "architecture": {},
            "params": [],
            "scaling": {
                "feature_names": ["a"],
                "mins": [0.0],
                "maxs": [1.0],
                "lo": 0.0,
                "hi": 3.141592653589793,
            },
        }
        path = tmp_path / "odd.json"
        path.write_text(json.dumps(record))
        with pytest.raises(ValidationError, match="model_kind"):
            load_checkpoint(path)
