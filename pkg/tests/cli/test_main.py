import io
import json

import numpy as np
import pandas as pd
import pytest

from occlite.cli import load_run_config, main
from occlite.cli.config import build_head_config
from occlite.errors import ConfigurationError
from occlite.metrics import (
    BENCH_COLUMNS,
    flops_conv2d,
    flops_conv3d,
    head2d_flops_layers,
    head3d_flops_layers,
    total_flops,
)
from occlite.supervision import LOSS_TERMS
from occlite.utils.io import read_occt, write_occt

SMALL_CONFIG = """\
seed: 0
grid:
  point_range: [-8.0, -8.0, -1.0, 8.0, 8.0, 3.0]
  dims: [8, 8, 4]
rig:
  num_cameras: 3
  image_size: [9, 12]
depth_bins:
  d_min: 1.0
  d_max: 17.0
  num_bins: 8
head:
  c3: 4
  decoder_widths: [4, 8]
  fcn3d_widths: [4, 4]
scene:
  num_boxes: 1
  num_pillars: 1
bench:
  repeats: 5
  warmup: 0
gradcheck:
  seeds: 1
"""


@pytest.fixture
def small_config(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text(SMALL_CONFIG)
    return str(path)


@pytest.fixture
def zero_config(tmp_path):
    path = tmp_path / "zeros.yaml"
    conf = SMALL_CONFIG.replace(
        "  fcn3d_widths: [4, 4]\n",
        "  fcn3d_widths: [4, 4]\n  weight_init: zeros\n",
    )
    path.write_text(conf)
    return str(path)


def _gen_scene(config, out, *extra):
    return main(["gen-scene", "--config", config, "--out", str(out), *extra])


def test_gen_scene(tmp_path, small_config):
    out = tmp_path / "scene"
    assert _gen_scene(small_config, out) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert len(manifest["cameras"]) == 3
    assert manifest["first_hit_voxels"] > 0
    labels = read_occt(out / "labels.occt")
    assert labels.shape == (8, 8, 4)
    assert read_occt(out / "features_cam0.occt").shape == (5, 9, 12)


def test_gen_scene_is_deterministic(tmp_path, small_config):
    assert _gen_scene(small_config, tmp_path / "a") == 0
    assert _gen_scene(small_config, tmp_path / "b") == 0
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert names == sorted(p.name for p in (tmp_path / "b").iterdir())
    for name in names:
        first = (tmp_path / "a" / name).read_bytes()
        assert first == (tmp_path / "b" / name).read_bytes()


def test_gen_scene_seed_flag(tmp_path, small_config):
    assert _gen_scene(small_config, tmp_path / "a", "--seed", "1") == 0
    assert _gen_scene(small_config, tmp_path / "b", "--seed", "2") == 0
    first = read_occt(tmp_path / "a" / "labels.occt")
    second = read_occt(tmp_path / "b" / "labels.occt")
    assert not np.array_equal(first, second)


def test_gen_scene_unplaceable_objects(tmp_path, small_config, caplog):
    path = tmp_path / "crowded.yaml"
    path.write_text(
        SMALL_CONFIG.replace(
            "  num_boxes: 1\n",
            "  num_boxes: 1\n  keep_out_radius: 100.0\n  max_retries: 3\n",
        )
    )
    assert _gen_scene(str(path), tmp_path / "out") == 2
    assert "seed=0" in caplog.text


def test_forward_with_zero_weights(tmp_path, zero_config, capsys):
    scene = tmp_path / "scene"
    assert _gen_scene(zero_config, scene) == 0
    capsys.readouterr()
    out = tmp_path / "forward"
    code = main(
        [
            "forward",
            "--config",
            zero_config,
            "--scene",
            str(scene),
            "--out",
            str(out),
        ]
    )
    assert code == 0
    logits = read_occt(out / "logits.occt")
    assert logits.shape == (5, 8, 8, 4)
    assert not logits.any()
    assert read_occt(out / "bev_logits.occt").shape == (5, 4, 4)

    losses = json.loads((out / "losses.json").read_text())
    assert np.isfinite(losses["total"])
    table = pd.read_csv(io.StringIO(capsys.readouterr().out))
    assert list(table.columns) == ["term", "value"]
    assert table["term"].iloc[-1] == "total"
    assert table["value"].iloc[-1] == pytest.approx(losses["total"])


def _forward(config, scene, out):
    args = ["--config", config, "--scene", str(scene), "--out", str(out)]
    return main(["forward", *args])


def test_forward_is_deterministic(tmp_path, small_config):
    scene = tmp_path / "scene"
    assert _gen_scene(small_config, scene) == 0
    assert _forward(small_config, scene, tmp_path / "a") == 0
    assert _forward(small_config, scene, tmp_path / "b") == 0
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert names == ["bev_logits.occt", "logits.occt", "losses.json"]
    for name in names:
        first = (tmp_path / "a" / name).read_bytes()
        assert first == (tmp_path / "b" / name).read_bytes()


def test_forward_total_is_sum_of_terms(tmp_path, small_config):
    scene = tmp_path / "scene"
    assert _gen_scene(small_config, scene) == 0
    assert _forward(small_config, scene, tmp_path / "out") == 0
    losses = json.loads((tmp_path / "out" / "losses.json").read_text())
    assert set(losses) == set(LOSS_TERMS) | {"total"}
    terms = [losses[name] for name in LOSS_TERMS]
    assert all(np.isfinite(terms))
    assert losses["total"] > 0
    assert losses["total"] == pytest.approx(sum(terms), rel=1e-12)


def test_forward_needs_a_scene(tmp_path, small_config, caplog):
    code = main(["forward", "--config", small_config, "--out", str(tmp_path)])
    assert code == 1
    assert "scene_dir" in caplog.text


def test_forward_missing_scene_directory(tmp_path, small_config):
    code = main(
        ["forward", "--config", small_config, "--scene", str(tmp_path / "x")]
    )
    assert code == 2


def test_unknown_config_key(tmp_path, caplog):
    path = tmp_path / "bad.yaml"
    path.write_text("grid:\n  bogus: 1\n")
    assert main(["flops", "--config", str(path)]) == 1
    assert "bogus" in caplog.text


def test_badly_typed_config_value(tmp_path, caplog):
    path = tmp_path / "bad.yaml"
    path.write_text("head:\n  c1: many\n")
    assert main(["flops", "--config", str(path)]) == 1
    assert "c1" in caplog.text


def test_eval_identical_volumes(tmp_path, small_config, capsys):
    assert _gen_scene(small_config, tmp_path / "scene") == 0
    capsys.readouterr()
    labels = str(tmp_path / "scene" / "labels.occt")
    assert main(["eval", labels, labels]) == 0
    table = pd.read_csv(io.StringIO(capsys.readouterr().out))
    mean = table.loc[table["class"] == "mean", "iou"].item()
    assert mean == 1.0


def test_eval_logits_against_labels(tmp_path, capsys):
    labels = np.zeros((2, 2, 2), dtype=np.int64)
    labels[0] = 1
    logits = np.zeros((3, 2, 2, 2))
    logits[1, 0] = 1.0
    logits[0, 1] = 1.0
    write_occt(tmp_path / "pred.occt", logits)
    write_occt(tmp_path / "gt.occt", labels)
    code = main(
        [
            "eval",
            str(tmp_path / "pred.occt"),
            str(tmp_path / "gt.occt"),
            "--num-classes",
            "3",
        ]
    )
    assert code == 0
    table = pd.read_csv(io.StringIO(capsys.readouterr().out))
    assert table.loc[table["class"] == "ground", "iou"].item() == 1.0


def test_eval_rejects_garbage(tmp_path):
    junk = tmp_path / "junk.occt"
    junk.write_bytes(b"not a tensor")
    assert main(["eval", str(junk), str(junk)]) == 1


def test_flops_default_config(tmp_path, capsys):
    assert main(["flops", "--out", str(tmp_path)]) == 0
    text = capsys.readouterr().out
    table = pd.read_csv(io.StringIO(text))
    interp = table.loc[table["kind"] == "interp", "flops"].item()
    assert interp == 4 * 4 * 8 * 40 * 40 * 8
    head3d = table.loc[table["stage"] == "head3d_total", "flops"].item()
    assert interp < 0.05 * head3d
    assert (tmp_path / "flops.csv").read_text() == text


def test_bench_csv(tmp_path, small_config, capsys):
    code = main(["bench", "--config", small_config, "--out", str(tmp_path)])
    assert code == 0
    table = pd.read_csv(io.StringIO(capsys.readouterr().out))
    assert list(table.columns) == BENCH_COLUMNS
    stages = set(table["stage"])
    assert {"head2d_interp", "head2d_total", "head3d_total"} <= stages
    assert {"pipeline_2d", "pipeline_2d_to_3d", "pipeline_total"} <= stages
    assert (table["median_ms"] > 0).all()
    assert (table["p10_ms"] > 0).all()
    assert (tmp_path / "bench.csv").exists()

    config = build_head_config(load_run_config(small_config))
    flops = table.set_index("stage")["flops"]
    head3d = head3d_flops_layers(config)
    assert flops["head3d_total"] == sum(flops_conv3d(lay) for lay in head3d)
    decode = [
        lay
        for lay in head2d_flops_layers(config, 3)
        if lay.stage == "head2d_decode"
    ]
    assert flops["head2d_decode"] == sum(flops_conv2d(lay) for lay in decode)
    head2d = head2d_flops_layers(config, 3, include_bev_head=False)
    assert flops["head2d_total"] == total_flops(head2d)


def test_bench_echoes_its_settings(tmp_path, small_config):
    code = main(
        [
            "bench",
            "--config",
            small_config,
            "--repeats",
            "9",
            "--out",
            str(tmp_path),
        ]
    )
    assert code == 0
    echo = json.loads((tmp_path / "bench.json").read_text())
    assert echo["repeats"] == 9
    assert echo["warmup"] == 0
    assert echo["mode"] == "single-threaded"
    assert echo["grid"] == [8, 8, 4]
    assert echo["num_cameras"] == 3


def test_bench_markdown(tmp_path, small_config, capsys):
    code = main(
        [
            "bench",
            "--config",
            small_config,
            "--format",
            "markdown",
            "--out",
            str(tmp_path),
        ]
    )
    assert code == 0
    header = capsys.readouterr().out.splitlines()[0]
    assert "stage" in header and "median_ms" in header
    assert (tmp_path / "bench.md").exists()


def test_bench_too_few_repeats(small_config):
    assert main(["bench", "--config", small_config, "--repeats", "2"]) == 1


def test_gradcheck_command(small_config, capsys):
    assert main(["gradcheck", "--config", small_config]) == 0
    table = pd.read_csv(io.StringIO(capsys.readouterr().out))
    assert (table["seeds"] == 1).all()
    assert table["passed"].all()


def test_unknown_format():
    assert main(["flops", "--format", "html"]) == 1


def test_argument_errors():
    assert main(["nonsense"]) == 1
    assert main([]) == 1
    assert main(["--help"]) == 0


def test_load_run_config_layers(tmp_path):
    conf = load_run_config()
    assert list(conf.grid.dims) == [40, 40, 8]
    assert conf.head.c1 == 8

    path = tmp_path / "run.json"
    path.write_text(json.dumps({"head": {"c1": 12}, "seed": 3}))
    conf = load_run_config(str(path), {"seed": 5})
    assert conf.head.c1 == 12
    assert conf.seed == 5
    assert conf.head.c2 == 8


def test_load_run_config_rejects_unknown_override():
    with pytest.raises(ConfigurationError, match="nope"):
        load_run_config(None, {"bench": {"nope": 1}})
