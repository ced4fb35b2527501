import json

import numpy as np
import pytest

from cdgan import cli, rasters
from cdgan.errors import Divergence


def test_synth_list_prints_scenarios(capsys):
    assert cli.main(["synth", "--scenario", "list", "--out", "unused"]) == 0
    out = capsys.readouterr().out
    assert "null" in out and "blobs-10pct" in out
    assert out.count("\n") >= 5


def test_synth_unknown_scenario_exits_2(tmp_path, capsys):
    rc = cli.main(["synth", "--scenario", "blobs-99pct", "--out", str(tmp_path)])
    assert rc == 2
    assert "blobs-99pct" in capsys.readouterr().err


def test_synth_writes_scene_files(null_scene_dir):
    for name in ("x1.bsq", "x2.bsq", "mask.bsq"):
        assert (null_scene_dir / name).exists()
        assert rasters.sidecar_path(null_scene_dir / name).exists()
    for name in ("x1.png", "x2.png", "mask.png"):
        assert (null_scene_dir / name).exists()
    meta = rasters.read_sidecar(null_scene_dir / "x1.bsq")
    assert meta["provenance"]["scenario"] == "null"
    assert (meta["height"], meta["width"], meta["bands"]) == (256, 256, 3)


def _tiny_raster(path, bands=2, seed=0):
    rng = np.random.default_rng(seed)
    arr = rng.uniform(0, 1, (32, 32, bands)).astype(np.float32)
    rasters.write_raster(path, arr)
    return path


def test_train_cli_writes_run_artifacts(tmp_path, capsys):
    x1 = _tiny_raster(tmp_path / "x1.bsq")
    out = tmp_path / "run"
    rc = cli.main(
        [
            "train", "--x1", str(x1), "--out", str(out),
            "--epochs", "2", "--patch-size", "16", "--batch-size", "2",
            "--seed", "3", "--threads", "1",
        ]
    )
    assert rc == 0
    assert (out / "train_log.csv").exists()
    config = json.loads((out / "config.json").read_text())
    assert config["config"]["train"]["epochs"] == 2
    assert config["config"]["train"]["seed"] == 3
    assert len(config["config_hash"]) == 16
    assert (out / "checkpoints" / "best").exists()
    assert (out / "checkpoints" / "latest").exists()
    assert (out / "checkpoints" / "epoch_002" / "manifest.json").exists()
    assert "trained 2 epochs" in capsys.readouterr().out


def test_train_cli_missing_input_exits_2(tmp_path, capsys):
    rc = cli.main(
        ["train", "--x1", str(tmp_path / "absent.bsq"), "--out", str(tmp_path / "o")]
    )
    assert rc == 2
    assert "error" in capsys.readouterr().err


def test_train_cli_maps_divergence_to_exit_3(tmp_path, capsys, monkeypatch):
    x1 = _tiny_raster(tmp_path / "x1.bsq")

    def explode(*args, **kwargs):
        raise Divergence("loss went non-finite")

    monkeypatch.setattr(cli, "train", explode)
    rc = cli.main(
        ["train", "--x1", str(x1), "--patch-size", "16", "--out", str(tmp_path / "o")]
    )
    assert rc == 3
    assert "DIVERGENCE" in capsys.readouterr().err


def test_detect_cli_literal_mode_and_intermediates(
    bench_scene_dir, bench_training, tmp_path, capsys
):
    _, run_dir = bench_training
    out = tmp_path / "det"
    rc = cli.main(
        [
            "detect",
            "--x1", str(bench_scene_dir / "x1.bsq"),
            "--x2", str(bench_scene_dir / "x2.bsq"),
            "--checkpoint", str(run_dir / "checkpoints"),
            "--patch-size", "32", "--seed", "0", "--threads", "1",
            "--mode", "literal", "--threshold", "otsu",
            "--dump-intermediates",
            "--out", str(out),
        ]
    )
    assert rc == 0
    assert "change fraction" in capsys.readouterr().out
    mask = rasters.read_mask(out / "change_map.bsq")
    assert mask.shape == (256, 256)
    meta = rasters.read_sidecar(out / "change_map.bsq")
    assert meta["provenance"]["fuse_mode"] == "literal"
    assert meta["provenance"]["threshold_mode"] == "otsu"
    assert len(meta["provenance"]["checkpoint_id"]) == 16
    for name in ("e_r", "s_dif", "fused", "s_real", "s_gen"):
        assert (out / f"{name}.bsq").exists(), name
    assert (out / "panels.png").exists()


def test_detect_cli_checkpoint_band_mismatch_exits_2(
    bench_scene_dir, tmp_path, capsys
):
    x1 = _tiny_raster(tmp_path / "x1.bsq", bands=2)
    run = tmp_path / "run2"
    assert cli.main(
        ["train", "--x1", str(x1), "--out", str(run),
         "--epochs", "1", "--patch-size", "16", "--threads", "1"]
    ) == 0
    rc = cli.main(
        [
            "detect",
            "--x1", str(bench_scene_dir / "x1.bsq"),  # 3-band scene
            "--x2", str(bench_scene_dir / "x2.bsq"),
            "--checkpoint", str(run / "checkpoints"),
            "--out", str(tmp_path / "det"),
        ]
    )
    assert rc == 2
    assert "CHECKPOINT_MISMATCH" in capsys.readouterr().err


def test_detect_cli_missing_checkpoint_exits_2(bench_scene_dir, tmp_path, capsys):
    rc = cli.main(
        [
            "detect",
            "--x1", str(bench_scene_dir / "x1.bsq"),
            "--x2", str(bench_scene_dir / "x2.bsq"),
            "--checkpoint", str(tmp_path / "nothing"),
            "--out", str(tmp_path / "det"),
        ]
    )
    assert rc == 2
    assert "UNSUPPORTED_FORMAT" in capsys.readouterr().err


def test_eval_cli_writes_metrics(bench_scene_dir, bench_detection, tmp_path, capsys):
    out = tmp_path / "eval"
    rc = cli.main(
        [
            "eval",
            "--pred", str(bench_detection / "change_map.bsq"),
            "--ref", str(bench_scene_dir / "mask.bsq"),
            "--name", "bench",
            "--out", str(out),
        ]
    )
    assert rc == 0
    table = capsys.readouterr().out
    assert "bench" in table and "OA" in table
    data = json.loads((out / "metrics.json").read_text())
    assert set(data) == {"oa", "spc", "sen", "err", "tp", "tn", "fp", "fn"}
    assert 0.0 <= data["oa"] <= 1.0


def test_eval_cli_rejects_multiband_pred(bench_scene_dir, tmp_path, capsys):
    bad = tmp_path / "bad.bsq"
    rasters.write_raster(bad, np.zeros((256, 256, 3), dtype=np.uint8))
    rc = cli.main(
        [
            "eval", "--pred", str(bad), "--ref", str(bench_scene_dir / "mask.bsq"),
            "--out", str(tmp_path / "o"),
        ]
    )
    assert rc == 2
    assert "BAD_MASK" in capsys.readouterr().err
