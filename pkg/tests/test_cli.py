import csv
import json

import numpy as np
import pytest

from parcov import cli, config
from parcov.theory import sigma11_compact


def _rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_theory_compact_from_config(tmp_path):
    cfg = {"theory": {"betas": [2], "lambdas": [0.0], "r_values": [1.0, 5.0, 10.0], "epsilon": {"2": 0.1035}}}
    path = tmp_path / "run.json"
    path.write_text(json.dumps(cfg))
    assert cli.main(["theory-compact", "--config", str(path), "--out", str(tmp_path / "o"), "--no-cache"]) == 0
    rows = _rows(tmp_path / "o" / "theory_compact.csv")
    assert len(rows) == 3
    assert tuple(rows[0]) == cli.THEORY_COLUMNS + ("provenance",)
    for row in rows:
        r = float(row["k_or_r"])
        assert float(row["value"]) == pytest.approx(sigma11_compact(r, 2, 0.0, 0.1035), rel=1e-9)


def test_manifest_fields(tmp_path):
    assert cli.main(["theory-compact", "--beta", "4", "--seed", "7", "--out", str(tmp_path), "--no-cache"]) == 0
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert {"config_hash", "config", "seed", "versions", "wall_time_s", "outputs", "passed"} <= set(man)
    assert man["seed"] == 7 and man["outputs"] == ["theory_compact.csv"] and man["passed"] is True
    assert man["config"]["theory"]["betas"] == [4]
    assert {"numpy", "scipy", "python", "parcov"} <= set(man["versions"])


@pytest.mark.parametrize("argv", [
    ["nonsense-mode"],
    ["theory-compact", "--beta", "3"],
    ["theory-compact", "--preset", "huge"],
    ["figure"],
    ["ncov", "--jobs", "x"],
])
def test_usage_errors_exit_2(argv, tmp_path, capsys):
    assert cli.main(argv + ["--out", str(tmp_path)]) == 2


def test_bad_config_field_named(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"ge": {"dim": -4}}))
    assert cli.main(["ge", "--config", str(path), "--out", str(tmp_path)]) == 2
    assert "ge.dim" in capsys.readouterr().err
    path.write_text(json.dumps({"ge": {"dimension": 4}}))
    assert cli.main(["ge", "--config", str(path), "--out", str(tmp_path)]) == 2
    path.write_text("{not json")
    assert cli.main(["ge", "--config", str(path), "--out", str(tmp_path)]) == 2


def test_reruns_byte_identical(tmp_path):
    for name in ("a", "b"):
        assert cli.main(["pnv", "--preset", "smoke", "--seed", "3", "--out", str(tmp_path / name), "--no-cache"]) == 0
    assert (tmp_path / "a" / "pnv.csv").read_bytes() == (tmp_path / "b" / "pnv.csv").read_bytes()
    ma, mb = (json.loads((tmp_path / n / "manifest.json").read_text()) for n in "ab")
    assert ma["config_hash"] == mb["config_hash"]


def test_ge_mode_writes_cache_format(tmp_path):
    cache = tmp_path / "cache"
    args = ["ge", "--preset", "smoke", "--out", str(tmp_path / "o"), "--cache", str(cache)]
    assert cli.main(args) == 0
    assert len(list(cache.glob("ge-*.prmt"))) == 1
    before = {p: p.stat().st_mtime_ns for p in cache.iterdir()}
    assert cli.main(args) == 0
    assert {p: p.stat().st_mtime_ns for p in cache.iterdir()} == before
    (spec,) = (tmp_path / "o").glob("spectra_*.prmt")
    from parcov.cache import read_spectra

    arr, head = read_spectra(spec)
    assert head["kind"] == "ge" and arr.shape[0] == head["members"]


def test_presets_validate():
    for name in config.PRESETS:
        cfg = config.from_dict({"mode": "ncov", "preset": name})
        assert cfg.ge.dim >= 16
