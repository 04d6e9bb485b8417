"""Tests for experiment configuration loading."""

import json

import pytest

from altmas.errors import ConfigError
from altmas.harness.synth import make_blobs_pool
from altmas.data.io import write_csv_pool, write_predictions
from altmas.models.experiment import ExperimentConfig, load_config, load_pool


class TestExperimentConfig:
    """Test defaults and validation of the experiment config model."""

    def test_defaults(self):
        config = ExperimentConfig()
        assert config.strategy == "altmas"
        assert config.budget_total == 300
        assert config.n0 == 100
        assert config.num_samples == 50
        assert config.surrogate.hidden_sizes == [256, 256]
        assert config.uses_augmentation
        assert not config.record_wall_time

    def test_metric_string_is_split(self):
        config = ExperimentConfig(metrics="accuracy, precision:2,recall:2")
        assert config.metrics == ["accuracy", "precision:2", "recall:2"]

    def test_full_set_keyword(self):
        assert len(ExperimentConfig(metrics="full21").metric_specs(10)) == 21

    def test_baselines_do_not_augment_by_default(self):
        assert not ExperimentConfig(strategy="bald").uses_augmentation
        assert ExperimentConfig(strategy="bald", augment_baselines=True).uses_augmentation
        assert not ExperimentConfig(augmentation=False).uses_augmentation

    def test_surrogate_settings(self):
        mlp = ExperimentConfig().surrogate.to_mlp_config(784, 10)
        assert mlp.layer_sizes == (784, 256, 256, 10)

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"strategy": "greedy"},
            {"budget_total": -1},
            {"metrics": "f1"},
            {"zero_division": 2},
            {"pool_source": "idx", "pool_paths": ["images"]},
            {"pool_source": "idx", "pool_paths": ["images", "labels"]},
            {"unknown_key": 1},
        ],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ConfigError):
            load_config(overrides=kwargs)


class TestLoadConfig:
    """Test reading JSON config files with command-line overrides."""

    def test_file_and_overrides(self, tmp_path):
        path = tmp_path / "experiment.json"
        path.write_text(json.dumps({"strategy": "bald", "budget_total": 50, "seed": 4}))
        config = load_config(path, {"budget_total": 20, "seed": None})
        assert config.strategy == "bald"
        assert config.budget_total == 20
        assert config.seed == 4

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError, match="invalid JSON"):
            load_config(path)

    def test_not_an_object(self, tmp_path):
        path = tmp_path / "list.json"
        path.write_text("[1, 2]")
        with pytest.raises(ConfigError, match="JSON object"):
            load_config(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            load_config(tmp_path / "absent.json")


class TestLoadPool:
    def test_csv_pool_with_predictions(self, tmp_path):
        pool = make_blobs_pool(n=50, mut_accuracy=0.6, seed=0)
        write_csv_pool(tmp_path / "pool.csv", pool)
        write_predictions(tmp_path / "preds.txt", pool.truth)
        config = ExperimentConfig(
            pool_paths=[str(tmp_path / "pool.csv")],
            predictions_path=str(tmp_path / "preds.txt"),
            budget_total=10,
            n0=10,
        )
        loaded = load_pool(config)
        assert loaded.num_points == 50
        assert loaded.mut_accuracy == 1.0

    def test_budget_checked_against_pool(self, tmp_path):
        write_csv_pool(tmp_path / "pool.csv", make_blobs_pool(n=50, seed=0))
        config = ExperimentConfig(pool_paths=[str(tmp_path / "pool.csv")], budget_total=45, n0=10)
        with pytest.raises(ConfigError, match="exceeds pool size"):
            load_pool(config)

    def test_no_paths(self):
        with pytest.raises(ConfigError, match="no pool paths"):
            load_pool(ExperimentConfig())
