import logging

import numpy as np
import pytest
from numpy.testing import assert_allclose

from cloudqnn.baselines import xu_randall_cloud_cover
from cloudqnn.errors import ValidationError
from cloudqnn.data import (
    FEATURE_NAMES,
    REDUCED_FEATURES,
    Dataset,
    apply_scaling,
    fit_scaling,
    invert_scaling,
    load_csv,
    select_features,
    split,
    synthesize_dataset,
    write_csv,
)

CSV_HEADER = "qv,qc,qi,ta,pa,hw,zg,lat,clc"

ROW = "0.005,1e-5,0.0,273.0,85000.0,12.0,1400.0,45.0,{clc}"


def write_rows(path, rows):
    path.write_text(CSV_HEADER + "\n" + "\n".join(rows) + "\n", encoding="utf-8")


class TestLoadCsv:
    def test_well_formed_file(self, tmp_path):
        f = tmp_path / "d.csv"
        write_rows(f, [ROW.format(clc=0.1), ROW.format(clc=0.5), ROW.format(clc=1.0)])
        ds = load_csv(f)
        assert ds.n_rows == 3
        assert ds.feature_names == FEATURE_NAMES
        assert_allclose(ds.targets, [0.1, 0.5, 1.0])

    def test_missing_column_named(self, tmp_path):
        f = tmp_path / "d.csv"
        f.write_text("qv,qc,qi,ta,pa,hw,zg,lat\n1,0,0,273,85000,1,10,0\n")
        with pytest.raises(ValidationError, match="clc"):
            load_csv(f)

    def test_bad_target_cites_row(self, tmp_path):
        f = tmp_path / "d.csv"
        rows = [ROW.format(clc=0.2)] * 6 + [ROW.format(clc=1.2)]
        write_rows(f, rows)
        with pytest.raises(ValidationError, match="row 7"):
            load_csv(f)

    def test_unparsable_value_cites_row(self, tmp_path):
        f = tmp_path / "d.csv"
        write_rows(f, [ROW.format(clc=0.2), ROW.format(clc="oops")])
        with pytest.raises(ValidationError, match="row 2"):
            load_csv(f)

    def test_negative_humidity_rejected(self, tmp_path):
        f = tmp_path / "d.csv"
        write_rows(f, ["-0.001,0,0,273,85000,1,10,0,0.5"])
        with pytest.raises(ValidationError, match="row 1"):
            load_csv(f)

    def test_reduced_subset(self, tmp_path):
        f = tmp_path / "d.csv"
        write_rows(f, [ROW.format(clc=0.3)])
        ds = load_csv(f, REDUCED_FEATURES)
        assert ds.feature_names == REDUCED_FEATURES
        assert ds.features.shape == (1, 6)

    def test_round_trip_is_exact(self, tmp_path):
        original = synthesize_dataset(50, seed=3)
        f = tmp_path / "d.csv"
        write_csv(original, f)
        again = load_csv(f)
        assert np.array_equal(original.features, again.features)
        assert np.array_equal(original.targets, again.targets)


class TestSelectFeatures:
    def test_reorders_and_subsets(self):
        ds = synthesize_dataset(20, seed=0)
        sub = select_features(ds, ("ta", "qv"))
        assert sub.feature_names == ("ta", "qv")
        assert_allclose(sub.features[:, 1], ds.features[:, 0])

    def test_unknown_name_rejected(self):
        ds = synthesize_dataset(5, seed=0)
        with pytest.raises(ValidationError):
            select_features(ds, ("qv", "nope"))


class TestScaling:
    def test_min_maps_to_lo_max_to_hi(self):
        ds = synthesize_dataset(200, seed=1)
        scaling = fit_scaling(ds, lo=0.0, hi=float(np.pi))
        angles = apply_scaling(scaling, ds.features)
        assert_allclose(angles.min(axis=0), 0.0, atol=1e-12)
        assert_allclose(angles.max(axis=0), np.pi, atol=1e-12)

    def test_round_trip(self):
        ds = synthesize_dataset(100, seed=2)
        scaling = fit_scaling(ds)
        angles = apply_scaling(scaling, ds.features)
        back = invert_scaling(scaling, angles)
        assert np.max(np.abs(back - ds.features) / np.maximum(np.abs(ds.features), 1.0)) < 1e-12

    def test_constant_feature_rejected(self):
        features = np.ones((10, 2))
        features[:, 1] = np.arange(10)
        ds = Dataset(features, np.linspace(0, 1, 10), ("a", "b"))
        with pytest.raises(ValidationError, match="a"):
            fit_scaling(ds)

    def test_extrapolation_warns_but_proceeds(self, caplog):
        ds = synthesize_dataset(50, seed=4)
        scaling = fit_scaling(ds)
        outside = ds.features.copy()
        outside[0, 0] = ds.features[:, 0].max() * 10
        with caplog.at_level(logging.WARNING, logger="cloudqnn.data"):
            angles = apply_scaling(scaling, outside)
        assert any("outside" in m for m in caplog.messages)
        assert angles[0, 0] > np.pi

    def test_checksum_stable_across_phases(self):
        ds = synthesize_dataset(120, seed=5)
        train, _, test = split(ds, (0.7, 0.1, 0.2), seed=0)
        scaling = fit_scaling(train)
        before = scaling.checksum()
        apply_scaling(scaling, test.features)
        apply_scaling(scaling, train.features)
        assert scaling.checksum() == before

    def test_serialization_round_trip(self):
        ds = synthesize_dataset(30, seed=6)
        scaling = fit_scaling(ds)
        from cloudqnn.data import FeatureScaling

        again = FeatureScaling.from_dict(scaling.to_dict())
        assert again.checksum() == scaling.checksum()


class TestSynthesizeDataset:
    def test_deterministic(self):
        a = synthesize_dataset(1000, seed=11)
        b = synthesize_dataset(1000, seed=11)
        assert np.array_equal(a.features, b.features)
        assert np.array_equal(a.targets, b.targets)

    def test_targets_in_unit_interval(self):
        ds = synthesize_dataset(5000, seed=12)
        assert ds.targets.min() >= 0.0
        assert ds.targets.max() <= 1.0

    def test_clamping_occurs_at_both_bounds(self):
        ds = synthesize_dataset(10**4, seed=13)
        exact0 = float(np.mean(ds.targets == 0.0))
        exact1 = float(np.mean(ds.targets == 1.0))
        assert 0.0 < exact0 < 0.9
        assert 0.0 < exact1 < 0.9

    def test_zero_condensate_rows_have_zero_scheme_term(self):
        ds = synthesize_dataset(2000, seed=14, noise_sd=0.0)
        names = ds.feature_names
        col = {name: ds.features[:, i] for i, name in enumerate(names)}
        clear = (col["qc"] == 0.0) & (col["qi"] == 0.0)
        assert clear.any()
        base = xu_randall_cloud_cover(
            col["qv"][clear],
            col["qc"][clear],
            col["qi"][clear],
            col["ta"][clear],
            col["pa"][clear],
        )
        assert_allclose(base, 0.0, atol=1e-12)

    def test_documented_feature_ranges(self):
        ds = synthesize_dataset(5000, seed=15)
        col = {name: ds.features[:, i] for i, name in enumerate(ds.feature_names)}
        assert col["ta"].min() >= 200.0 and col["ta"].max() <= 310.0
        assert col["pa"].min() >= 1e4 - 1.0 and col["pa"].max() <= 1e5 + 1.0
        assert col["hw"].min() >= 0.0 and col["hw"].max() <= 40.0
        assert np.abs(col["lat"]).max() <= 90.0
        assert np.all(col["qv"] > 0.0)
        # pressure follows the fixed scale-height relation to height
        assert_allclose(col["pa"], 1e5 * np.exp(-col["zg"] / 7400.0), rtol=1e-12)


class TestSplit:
    def test_all_train(self):
        ds = synthesize_dataset(50, seed=20)
        train, val, test = split(ds, (1.0, 0.0, 0.0), seed=0)
        assert train.n_rows == 50
        assert val.n_rows == 0
        assert test.n_rows == 0

    def test_floor_then_distribute(self):
        ds = synthesize_dataset(10, seed=21)
        train, val, test = split(ds, (0.8, 0.1, 0.1), seed=0)
        assert (train.n_rows, val.n_rows, test.n_rows) == (8, 1, 1)

    def test_same_seed_identical_different_seed_not(self):
        ds = synthesize_dataset(100, seed=22)
        a = split(ds, (0.7, 0.1, 0.2), seed=5)
        b = split(ds, (0.7, 0.1, 0.2), seed=5)
        c = split(ds, (0.7, 0.1, 0.2), seed=6)
        assert np.array_equal(a[0].features, b[0].features)
        assert a[0].n_rows == c[0].n_rows
        assert not np.array_equal(a[0].features, c[0].features)

    def test_bad_fractions_rejected(self):
        ds = synthesize_dataset(10, seed=23)
        with pytest.raises(ValidationError):
            split(ds, (0.5, 0.2, 0.2), seed=0)
        with pytest.raises(ValidationError):
            split(ds, (0.5, 0.5), seed=0)

    def test_disjoint_and_exhaustive(self):
        rng = np.random.default_rng(24)
        for _ in range(10):
            n = int(rng.integers(3, 200))
            cut_a, cut_b = sorted(rng.uniform(0.05, 0.95, size=2))
            fractions = (cut_a, cut_b - cut_a, 1.0 - cut_b)
            ds = synthesize_dataset(n, seed=int(rng.integers(1000)))
            parts = split(ds, fractions, seed=int(rng.integers(1000)))
            assert sum(p.n_rows for p in parts) == n
            stacked = np.concatenate([p.targets for p in parts if p.n_rows])
            assert sorted(stacked.tolist()) == sorted(ds.targets.tolist())
