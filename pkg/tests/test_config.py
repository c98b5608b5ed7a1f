"""Config round-trips, drift guards, and diagnostics.

The shipped JSON files must stay bitwise-equivalent (at the canonical
level) to the documents the library builds, and the maps parsed from
file must be the exact floats the builders produce.  A drift in either
direction silently changes every seeded experiment downstream.
"""

import json
import math
from pathlib import Path

import pytest

from circle_rds.config import (
    ConfigError,
    SEED,
    canonical_json,
    config_digest,
    load_config,
    parse_config,
    rotations_config,
    rotations_document,
    standard_config,
    standard_document,
    validate_config,
)

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"
STANDARD_PATH = CONFIG_DIR / "standard_pair.json"
ROTATIONS_PATH = CONFIG_DIR / "rotations_control.json"

STANDARD_DIGEST = "b6323fc268e6203cfdb7edc72e8183c843ee985e6b85552da1a38fc399a8d9f6"
ROTATIONS_DIGEST = "e8163a8f7d61fd051c1bf605f88ae05a7315964e43fea0121284065efc8b1a08"


def test_shipped_files_match_builders():
    with STANDARD_PATH.open() as fh:
        assert canonical_json(json.load(fh)) == canonical_json(standard_document())
    with ROTATIONS_PATH.open() as fh:
        assert canonical_json(json.load(fh)) == canonical_json(rotations_document())


def test_digests_frozen():
    assert config_digest(standard_document()) == STANDARD_DIGEST
    assert config_digest(rotations_document()) == ROTATIONS_DIGEST


def test_digest_ignores_formatting_not_values():
    doc = standard_document()
    reserialized = json.loads(json.dumps(doc))
    assert config_digest(reserialized) == STANDARD_DIGEST
    doc2 = standard_document()
    doc2["experiment"]["trials"] = "2001"
    assert config_digest(doc2) != STANDARD_DIGEST


def test_file_parsed_maps_bitwise_equal_builders():
    loaded = load_config(str(STANDARD_PATH))
    built = standard_config()
    for mu_file, mu_code in (
        (loaded.config.measure_1, built.measure_1),
        (loaded.config.measure_2, built.measure_2),
    ):
        assert len(mu_file.atoms) == len(mu_code.atoms)
        for i in range(len(mu_file.atoms)):
            a = mu_file.atom_map(i)
            b = mu_code.atom_map(i)
            assert (a.a, a.b, a.c, a.d) == (b.a, b.b, b.c, b.d)
            assert a.log_scale == b.log_scale
        assert mu_file.weights.tolist() == mu_code.weights.tolist()


def test_loaded_experiment_fields():
    loaded = load_config(str(STANDARD_PATH))
    cfg = loaded.config
    assert cfg.n_values == tuple(range(5, 61, 5))
    assert cfg.trials == 2000
    assert cfg.eps == (0.95,)
    assert cfg.K == 512
    assert cfg.seed == SEED
    assert cfg.x0 == 0.0
    assert cfg.y0 == 0.37
    assert cfg.radius == 0.02
    assert cfg.asserted_proximal is True
    assert loaded.out_dir == "out"
    assert loaded.digest == STANDARD_DIGEST


def test_rotations_control_flags():
    cfg = rotations_config()
    assert cfg.asserted_proximal is False
    assert len(cfg.measure_1.atoms) == 2
    assert math.isclose(sum(cfg.measure_1.weights), 1.0, abs_tol=1e-15)


def test_validate_shipped_configs_clean():
    assert validate_config(str(STANDARD_PATH)) == []
    assert validate_config(str(ROTATIONS_PATH)) == []


def test_overrides_via_builders():
    cfg = standard_config(trials=7, n_values=(5, 10))
    assert cfg.trials == 7
    assert cfg.n_values == (5, 10)
    base = standard_config()
    assert base.trials == 2000


def test_missing_file_raises_config_error():
    with pytest.raises(ConfigError):
        load_config("/nonexistent/nowhere.json")


def test_malformed_json_raises_config_error(tmp_path):
    p = tmp_path / "broken.json"
    p.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config(str(p))


def test_bad_weights_diagnostic():
    doc = standard_document()
    doc["measures"]["measure_1"]["atoms"][0]["weight"] = "0.9"
    with pytest.raises(ConfigError) as err:
        parse_config(doc)
    assert any("measure_1" in d for d in err.value.diagnostics)


def test_raw_json_numbers_accepted_and_digest_stable():
    doc = standard_document()
    doc["experiment"]["trials"] = 2000
    assert parse_config(doc).config.trials == 2000
    assert config_digest(doc) == STANDARD_DIGEST


def test_non_numeric_string_rejected():
    doc = standard_document()
    doc["experiment"]["trials"] = "plenty"
    with pytest.raises(ConfigError) as err:
        parse_config(doc)
    assert any("trials" in d for d in err.value.diagnostics)


def test_unknown_generator_kind():
    doc = standard_document()
    doc["measures"]["measure_1"]["generators"]["g"]["kind"] = "parabolic"
    with pytest.raises(ConfigError):
        parse_config(doc)


def test_diagnostics_list_multiple_problems(tmp_path):
    doc = standard_document()
    doc["experiment"]["trials"] = "0"
    doc["experiment"]["K"] = "2"
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(doc), encoding="utf-8")
    diags = validate_config(str(p))
    assert len(diags) >= 2


def test_single_measure_document_parses():
    doc = rotations_document()
    del doc["measures"]["measure_2"]
    loaded = parse_config(doc)
    assert loaded.config.measure_2 is None
