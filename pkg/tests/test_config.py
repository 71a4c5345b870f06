import json

import pytest
import yaml

from travel_features.config import (
    PipelineConfig,
    apply_overrides,
    config_from_dict,
    load_config,
)
from travel_features.errors import ConfigError


def _write_yaml(tmp_path, data, name="run.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data), encoding="utf-8")
    return path


def test_defaults_without_a_file():
    config = load_config(None)
    assert config.matrix.dis_m == 500.0
    assert config.matrix.row_total == 1000
    assert config.matrix.min_records == 100
    assert config.meanshift.bandwidth_h == 500.0
    assert config.kmeans.sweep_k_min == 2 and config.kmeans.sweep_k_max == 12
    assert config.lda.beta == 0.01 and config.lda.alpha is None
    assert config.eval.train_fraction == 0.8
    assert len(config.lda.attributes) == 7


def test_nested_sections_load_from_yaml_and_json(tmp_path):
    data = {
        "rng_seed": 7,
        "meanshift": {"bandwidth_h": 300.0, "kernel": "gaussian"},
        "lda": {"attributes": ["age", "gender"], "n_sweeps": 50, "burn_in": 10, "k_classes": {"health": 3}},
        "synth": {"n_passengers": 20, "city_center": [110.0, 35.0]},
    }
    config = load_config(_write_yaml(tmp_path, data))
    assert config.rng_seed == 7
    assert config.meanshift.kernel == "gaussian"
    assert config.lda.attributes == ["age", "gender"]
    assert config.synth.city_center == (110.0, 35.0)

    json_path = tmp_path / "run.json"
    json_path.write_text(json.dumps(data), encoding="utf-8")
    assert load_config(json_path).to_dict() == config.to_dict()


@pytest.mark.parametrize(
    "data",
    [
        {"unknown": 1},
        {"matrix": {"radius": 500}},
        {"matrix": {"dis_m": -1}},
        {"kmeans": "fast"},
        {"lda": {"sampler": "gpu"}},
        {"lda": {"attributes": ["mood"]}},
        {"logging": {"level": "chatty"}},
        {"eval": {"train_fraction": 1.0}},
        {"meanshift": {"bandwidth_h": 0}},
    ],
)
def test_invalid_configs_raise_config_error(data):
    with pytest.raises(ConfigError):
        config_from_dict(data)


def test_unreadable_files_raise_config_error(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.yaml")
    bad = tmp_path / "bad.yaml"
    bad.write_text("matrix: [unclosed\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config(bad)


def test_overrides_replace_values_without_mutating():
    base = PipelineConfig()
    config = apply_overrides(base, out_dir="elsewhere", rng_seed=9, min_records=50, dis_m=250.0,
                             row_total=200, attributes=["gender"], log_level="debug", n_jobs=2)
    assert config.paths.out_dir == "elsewhere"
    assert config.rng_seed == 9 and config.synth.rng_seed == 9
    assert (config.matrix.min_records, config.matrix.dis_m, config.matrix.row_total) == (50, 250.0, 200)
    assert config.lda.attributes == ["gender"]
    assert config.logging.level == "DEBUG"
    assert config.n_jobs == 2

    assert base.rng_seed == 0 and base.matrix.min_records == 100 and base.paths.out_dir == "runs"
    with pytest.raises(ConfigError):
        apply_overrides(base, dis_m=0.0)


def test_digest_ignores_output_location_and_logging():
    base = PipelineConfig()
    moved = apply_overrides(base, out_dir="other", log_level="ERROR", n_jobs=4)
    assert moved.digest() == base.digest()
    assert apply_overrides(base, rng_seed=1).digest() != base.digest()
    assert base.run_dir().name == f"run-{base.digest()}"


def test_class_count_overrides_extend_attributes():
    config = config_from_dict({"lda": {"attributes": ["health", "age"], "k_classes": {"health": 3}}})
    attrs = config.lda.attribute_configs()
    assert list(attrs) == ["health", "age"]
    assert attrs["health"].k_classes == 3
    assert attrs["age"].k_classes == 3


def test_require_paths(tmp_path):
    existing = tmp_path / "pois.csv"
    existing.write_text("lat,lng,name,label,city,area,address\n", encoding="utf-8")
    config = config_from_dict({"paths": {"poi_csv": str(existing), "trajectory_csv": str(tmp_path / "nope.csv")}})
    config.require_paths(["poi_csv"])
    with pytest.raises(ConfigError):
        config.require_paths(["trajectory_csv"])
    with pytest.raises(ConfigError):
        config.require_paths(["ground_truth_csv"])
