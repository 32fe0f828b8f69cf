import json

import pytest

from gandisc.cli import main
from gandisc.config import RunConfig, sha256_file


def test_simulate_writes_trajectory(tmp_path, capsys):
    out = tmp_path / "sim"
    main(["simulate", "--out", str(out), "--p-r", "0.5,0.5", "--p-g", "0.9,0.1", "--steps", "4"])
    lines = (out / "trajectory.jsonl").read_text().splitlines()
    assert len(lines) == 5
    assert json.loads(lines[2])["p_g"] == [1.0, 0.0]
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["artifacts"]["trajectory.jsonl"] == sha256_file(out / "trajectory.jsonl")


def test_check_passes(capsys):
    main(["check"])
    out = capsys.readouterr().out
    assert out.count("PASS") == 6 and "FAIL" not in out


def test_manifest_rerun_is_bit_identical(tmp_path):
    a = tmp_path / "a"
    main(["train-mgan", "--out", str(a), "--steps", "6", "--hidden", "16", "--feature-dim", "4",
          "--dataset", "two-mode", "--seed", "3", "--shares-removed", "1"])
    b = tmp_path / "b"
    main(["train-mgan", "--config", str(a / "manifest.json"), "--out", str(b)])
    ma = json.loads((a / "manifest.json").read_text())
    mb = json.loads((b / "manifest.json").read_text())
    assert ma["artifacts"] == mb["artifacts"]


def test_config_round_trip_and_unknown_keys():
    cfg = RunConfig()
    assert RunConfig.loads(cfg.dumps()) == cfg
    with pytest.raises(ValueError, match="unknown"):
        RunConfig.from_dict({"bogus": 1})


def test_invalid_sharing_rejected(tmp_path):
    with pytest.raises(ValueError):
        main(["train-mgan", "--out", str(tmp_path), "--shares-removed", "5"])
