import hashlib
import io
import json
from contextlib import redirect_stdout
from pathlib import Path

import numpy as np
import pytest

from cloudqnn.checkpoints import load_checkpoint
from cloudqnn.cli import main, manifest_to_argv
from cloudqnn.training import HISTORY_HEADER, SWEEP_HEADER


def run_cli(argv) -> tuple[int, str]:
    buffer = io.StringIO()
    with redirect_stdout(buffer):
        code = main([str(a) for a in argv])
    return code, buffer.getvalue()


def sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


TINY_TRAIN = [
    "--epochs", 2, "--batches-per-epoch", 3, "--batch-size", 20,
    "--optimizer", "adam", "--seed", 1,
]


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    data = root / "data.csv"
    code, _ = run_cli(["synth", "--n", 160, "--seed", 3, "--out", data])
    assert code == 0

    qnn = root / "qnn.json"
    code, qnn_stdout = run_cli(
        ["train", "--data", data, "--model", "qnn", "--features", "reduced",
         "--n-enc", 1, "--n-var", 0, *TINY_TRAIN,
         "--split", "0.7,0.1,0.2", "--out", qnn]
    )
    assert code == 0

    mlp = root / "mlp.json"
    code, mlp_stdout = run_cli(
        ["train", "--data", data, "--model", "mlp", "--features", "reduced",
         *TINY_TRAIN, "--split", "0.7,0.1,0.2", "--out", mlp]
    )
    assert code == 0
    return {
        "root": root,
        "data": data,
        "qnn": qnn,
        "mlp": mlp,
        "qnn_results": json.loads(qnn_stdout),
        "mlp_results": json.loads(mlp_stdout),
    }


class TestExitCodes:
    def test_help_exits_zero(self):
        code, out = run_cli(["--help"])
        assert code == 0
        assert "synth" in out

    def test_missing_command_is_usage_error(self):
        assert run_cli([])[0] == 1

    def test_unknown_command_is_usage_error(self):
        assert run_cli(["calibrate"])[0] == 1

    def test_missing_required_flag_is_usage_error(self):
        assert run_cli(["synth", "--n", 10])[0] == 1

    def test_missing_input_file_is_io_error(self, tmp_path):
        code, _ = run_cli(
            ["train", "--data", tmp_path / "absent.csv", "--model", "mlp",
             "--out", tmp_path / "m.json"]
        )
        assert code == 4

    def test_feature_mismatch_is_validation_error(self, workspace, tmp_path):
        narrow = tmp_path / "narrow.csv"
        narrow.write_text("qv,ta,pa,clc\n0.001,250.0,90000.0,0.5\n")
        code, _ = run_cli(["eval", "--checkpoint", workspace["qnn"], "--data", narrow])
        assert code == 2

    @pytest.mark.filterwarnings("ignore:overflow")
    @pytest.mark.filterwarnings("ignore:invalid value")
    def test_divergence_is_reported_distinctly(self, workspace, tmp_path):
        code, _ = run_cli(
            ["train", "--data", workspace["data"], "--model", "mlp",
             "--features", "reduced", "--epochs", 2, "--batches-per-epoch", 5,
             "--batch-size", 20, "--optimizer", "plain_gd",
             "--learning-rate", 1e6, "--out", tmp_path / "diverged.json"]
        )
        assert code == 3


class TestSynth:
    def test_writes_csv_sidecar_and_manifest(self, workspace):
        data = workspace["data"]
        assert data.exists()
        meta = json.loads(Path(str(data) + ".meta.json").read_text())
        assert meta["generator_version"] == "2"
        assert meta["n"] == 160
        manifest = json.loads(Path(str(data) + ".manifest.json").read_text())
        assert manifest["command"] == "synth"
        assert manifest["arguments"]["seed"] == 3

    def test_same_seed_reproduces_bytes(self, workspace, tmp_path):
        again = tmp_path / "again.csv"
        code, _ = run_cli(["synth", "--n", 160, "--seed", 3, "--out", again])
        assert code == 0
        assert sha256(again) == sha256(workspace["data"])

    def test_overwrite_needs_force(self, workspace):
        code, _ = run_cli(["synth", "--n", 160, "--seed", 3, "--out", workspace["data"]])
        assert code == 1
        code, _ = run_cli(
            ["synth", "--n", 160, "--seed", 3, "--out", workspace["data"], "--force"]
        )
        assert code == 0


class TestTrain:
    def test_reduced_qnn_parameter_count(self, workspace):
        # 6 qubits, one re-uploading block, no trailing blocks
        assert workspace["qnn_results"]["n_params"] == 22
        assert workspace["qnn_results"]["model_kind"] == "qnn"

    def test_full_architectures_match_published_sizes(self, workspace, tmp_path):
        code, out = run_cli(
            ["train", "--data", workspace["data"], "--model", "qnn",
             "--epochs", 1, "--batches-per-epoch", 1, "--batch-size", 10,
             "--optimizer", "adam", "--out", tmp_path / "q8.json"]
        )
        assert code == 0
        assert json.loads(out)["n_params"] == 201
        code, out = run_cli(
            ["train", "--data", workspace["data"], "--model", "mlp",
             "--epochs", 1, "--batches-per-epoch", 1, "--batch-size", 10,
             "--out", tmp_path / "m8.json"]
        )
        assert code == 0
        assert json.loads(out)["n_params"] == 203

    def test_history_csv_one_row_per_epoch(self, workspace):
        lines = Path(str(workspace["qnn"]).replace(".json", "_history.csv")).read_text().splitlines()
        assert lines[0] == HISTORY_HEADER
        assert len(lines) == 1 + 2

    def test_stdout_reports_split_metrics(self, workspace):
        results = workspace["qnn_results"]
        for key in ("final_train_mse", "final_val_mse", "test_mse", "test_r2"):
            assert np.isfinite(results[key])

    def test_checkpoint_carries_training_metadata(self, workspace):
        _, metadata = load_checkpoint(workspace["qnn"])
        assert metadata["train_config"]["optimizer"] == "adam"
        assert metadata["train_config"]["learning_rate"] == pytest.approx(1e-3)
        assert metadata["split"] == "0.7,0.1,0.2"

    def test_manifest_records_resolved_arguments(self, workspace):
        manifest = json.loads(Path(str(workspace["qnn"]) + ".manifest.json").read_text())
        assert manifest["command"] == "train"
        args = manifest["arguments"]
        assert args["model"] == "qnn"
        assert args["learning_rate"] == pytest.approx(1e-3)  # default resolved
        assert manifest["results"]["n_params"] == 22


class TestEval:
    def test_whole_file_eval_matches_final_history_row(self, workspace, tmp_path):
        ck = tmp_path / "full_train.json"
        code, _ = run_cli(
            ["train", "--data", workspace["data"], "--model", "mlp",
             "--features", "reduced", *TINY_TRAIN, "--split", "1,0,0", "--out", ck]
        )
        assert code == 0
        history = Path(str(ck).replace(".json", "_history.csv")).read_text().splitlines()
        final_mse = float(history[-1].split(",")[1])
        code, out = run_cli(["eval", "--checkpoint", ck, "--data", workspace["data"]])
        assert code == 0
        assert json.loads(out)["mse"] == pytest.approx(final_mse, abs=1e-10)

    def test_shot_noise_deterministic_given_seed(self, workspace):
        argv = ["eval", "--checkpoint", workspace["qnn"], "--data", workspace["data"],
                "--shots", 200, "--seed", 9]
        assert run_cli(argv) == run_cli(argv)

    def test_report_written_with_manifest(self, workspace, tmp_path):
        out = tmp_path / "report.json"
        code, stdout = run_cli(
            ["eval", "--checkpoint", workspace["qnn"], "--data", workspace["data"],
             "--split", "0.7,0.1,0.2", "--subset", "test", "--out", out]
        )
        assert code == 0
        report = json.loads(out.read_text())
        assert report == json.loads(stdout)
        assert report["rows"] == 32  # 20% of 160
        assert Path(str(out) + ".manifest.json").exists()


class TestShotSweep:
    def test_sweep_csv_with_exact_sentinel(self, workspace, tmp_path):
        out = tmp_path / "sweep.csv"
        code, _ = run_cli(
            ["shot-sweep", "--checkpoint", workspace["qnn"], "--data", workspace["data"],
             "--shots", "inf,100", "--repeats", 2, "--out", out]
        )
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0] == SWEEP_HEADER
        assert len(lines) == 3
        first = lines[1].split(",")
        assert first[0] == "inf"
        assert float(first[2]) == 0.0  # exact rows have no spread

    def test_rejects_mlp_checkpoints(self, workspace, tmp_path):
        code, _ = run_cli(
            ["shot-sweep", "--checkpoint", workspace["mlp"], "--data", workspace["data"],
             "--shots", "100", "--out", tmp_path / "s.csv"]
        )
        assert code == 2


class TestShap:
    def test_single_checkpoint_outputs(self, workspace, tmp_path):
        out_dir = tmp_path / "shap_one"
        code, _ = run_cli(
            ["shap", "--checkpoint", workspace["qnn"], "--data", workspace["data"],
             "--background-size", 8, "--n-test", 3, "--out-dir", out_dir]
        )
        assert code == 0
        attr_lines = (out_dir / "attributions.csv").read_text().splitlines()
        assert len(attr_lines) == 1 + 3 * 6
        imp_lines = (out_dir / "importance.csv").read_text().splitlines()
        assert len(imp_lines) == 1 + 6
        assert (out_dir / "shap.manifest.json").exists()

    def test_ensemble_outputs_include_spread(self, workspace, tmp_path):
        out_dir = tmp_path / "shap_two"
        code, _ = run_cli(
            ["shap", "--checkpoint", workspace["qnn"], "--checkpoint", workspace["mlp"],
             "--data", workspace["data"], "--background-size", 8, "--n-test", 3,
             "--out-dir", out_dir]
        )
        assert code == 0
        assert (out_dir / "attributions_model0.csv").exists()
        assert (out_dir / "attributions_model1.csv").exists()
        assert (out_dir / "stability_per_model.csv").exists()
        summary_lines = (out_dir / "stability_summary.csv").read_text().splitlines()
        assert len(summary_lines) == 1 + 6
        stds = [float(line.split(",")[2]) for line in summary_lines[1:]]
        assert all(s >= 0.0 for s in stds)

    def test_thread_pool_matches_serial_attributions(self, workspace, tmp_path):
        serial_dir, pooled_dir = tmp_path / "serial", tmp_path / "pooled"
        base = ["shap", "--checkpoint", workspace["qnn"], "--data", workspace["data"],
                "--background-size", 6, "--n-test", 2]
        assert run_cli([*base, "--out-dir", serial_dir])[0] == 0
        assert run_cli([*base, "--jobs", 2, "--out-dir", pooled_dir])[0] == 0
        assert sha256(serial_dir / "attributions.csv") == sha256(pooled_dir / "attributions.csv")

    def test_jobs_need_exact_mode(self, workspace, tmp_path):
        code, _ = run_cli(
            ["shap", "--checkpoint", workspace["qnn"], "--data", workspace["data"],
             "--mode", "sampled", "--n-coalitions", 16, "--jobs", 2,
             "--out-dir", tmp_path / "bad"]
        )
        assert code == 1


class TestCompare:
    def test_table_lists_all_three_models(self, workspace, tmp_path):
        out = tmp_path / "cmp.json"
        code, stdout = run_cli(
            ["compare", "--qnn", workspace["qnn"], "--mlp", workspace["mlp"],
             "--data", workspace["data"], "--split", "0.7,0.1,0.2",
             "--subset", "test", "--out", out]
        )
        assert code == 0
        for name in ("qnn", "mlp", "xu_randall"):
            assert name in stdout
        table = json.loads(out.read_text())["rows"]
        assert {row["model"] for row in table} == {"qnn", "mlp", "xu_randall"}
        assert all(np.isfinite(row["mse"]) for row in table)

    def test_swapped_checkpoints_rejected(self, workspace, tmp_path):
        code, _ = run_cli(
            ["compare", "--qnn", workspace["mlp"], "--mlp", workspace["qnn"],
             "--data", workspace["data"]]
        )
        assert code == 2


class TestConfigFile:
    def test_config_supplies_defaults(self, workspace, tmp_path):
        config = tmp_path / "train.json"
        config.write_text(json.dumps({"epochs": 1, "batches_per_epoch": 2,
                                      "batch_size": 10, "features": "reduced"}))
        ck = tmp_path / "cfg.json"
        code, _ = run_cli(
            ["train", "--config", config, "--data", workspace["data"],
             "--model", "mlp", "--out", ck]
        )
        assert code == 0
        history = Path(str(ck).replace(".json", "_history.csv")).read_text().splitlines()
        assert len(history) == 1 + 1

    def test_explicit_flag_beats_config(self, workspace, tmp_path):
        config = tmp_path / "train.json"
        config.write_text(json.dumps({"epochs": 1, "batches_per_epoch": 2,
                                      "batch_size": 10, "features": "reduced"}))
        ck = tmp_path / "cfg2.json"
        code, _ = run_cli(
            ["train", "--config", config, "--epochs", 2, "--data", workspace["data"],
             "--model", "mlp", "--out", ck]
        )
        assert code == 0
        history = Path(str(ck).replace(".json", "_history.csv")).read_text().splitlines()
        assert len(history) == 1 + 2

    def test_unknown_key_rejected(self, workspace, tmp_path):
        config = tmp_path / "bad.json"
        config.write_text(json.dumps({"epoch": 1}))
        code, _ = run_cli(
            ["train", "--config", config, "--data", workspace["data"],
             "--model", "mlp", "--out", tmp_path / "x.json"]
        )
        assert code == 1

    def test_uncoercible_value_rejected(self, workspace, tmp_path):
        config = tmp_path / "bad.json"
        config.write_text(json.dumps({"epochs": "plenty"}))
        code, _ = run_cli(
            ["train", "--config", config, "--data", workspace["data"],
             "--model", "mlp", "--out", tmp_path / "x.json"]
        )
        assert code == 1


class TestManifestRoundTrip:
    def test_train_manifest_reproduces_artifacts(self, workspace, tmp_path):
        data = workspace["data"]
        ck = tmp_path / "repro.json"
        history = tmp_path / "repro_history.csv"
        argv = ["train", "--data", data, "--model", "mlp", "--features", "reduced",
                *TINY_TRAIN, "--split", "0.7,0.1,0.2", "--out", ck]
        assert run_cli(argv)[0] == 0
        before = {path: sha256(path) for path in (ck, history)}

        manifest = json.loads(Path(str(ck) + ".manifest.json").read_text())
        replay = manifest_to_argv(manifest)
        ck.unlink()
        history.unlink()
        Path(str(ck) + ".manifest.json").unlink()
        assert run_cli(replay)[0] == 0
        assert {path: sha256(path) for path in (ck, history)} == before
