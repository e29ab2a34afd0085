from __future__ import annotations

import logging
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd
from omegaconf import DictConfig, OmegaConf

from occlite.cli.config import (
    build_bins,
    build_grid,
    build_head_config,
    build_loss_terms,
    build_rig,
    build_scene_spec,
    build_weights,
)
from occlite.errors import ConfigurationError, RejectedInputError
from occlite.gradcheck import GradcheckReport, run_gradcheck
from occlite.metrics import (
    BenchReport,
    MiouValue,
    bench_heads,
    bench_pipeline,
    flops_table,
    miou,
)
from occlite.occupancy_head import forward_fastocc
from occlite.scenegen import (
    feature_images,
    first_hit_voxels,
    gen_scene,
    load_scene,
    render_views,
    save_scene,
    synthetic_context,
    synthetic_depth_logits,
)
from occlite.supervision import breakdown, compute_losses, default_class_names
from occlite.utils.io import read_occt, save_json, write_occt

logger = logging.getLogger(__name__)


def cmd_gen_scene(conf: DictConfig, out_dir: str | Path) -> dict[str, Any]:
    """Generates a scene, renders every camera and writes both to
    `out_dir`. Returns the manifest.
    """
    spec = build_scene_spec(conf)
    rig = build_rig(conf)
    scene = gen_scene(spec)
    views = render_views(
        scene,
        rig,
        spec.grid,
        step=conf.scene.step,
        noise_std=conf.scene.noise_std,
        seed=conf.seed,
    )
    first_hits = first_hit_voxels(scene, rig, spec.grid, conf.scene.step)
    return save_scene(
        out_dir,
        scene,
        rig,
        spec.grid,
        views,
        seed=conf.seed,
        extra={"first_hit_voxels": int(first_hits.sum())},
    )


def cmd_forward(conf: DictConfig, out_dir: str | Path) -> dict[str, Any]:
    """Runs the full forward pass on a stored scene and writes the logits,
    the BEV logits and a JSON loss breakdown.

    Returns:
        The loss breakdown, each term plus the total.
    """
    if not conf.paths.scene_dir:
        raise ConfigurationError(
            "forward needs 'paths.scene_dir' (run gen-scene first)"
        )
    bundle = load_scene(conf.paths.scene_dir)
    grid = build_grid(conf)
    if bundle.grid != grid:
        logger.info("Using the stored scene grid %s", list(bundle.grid.dims))
        grid = bundle.grid
    config = build_head_config(conf, grid)
    if bundle.scene.num_classes != config.num_classes:
        raise ConfigurationError(
            f"Scene has {bundle.scene.num_classes} classes, the head "
            f"{config.num_classes}"
        )
    bins = build_bins(conf)
    weights = build_weights(conf, config)

    features = feature_images(bundle.features, config.c1)
    depth_logits = [
        synthetic_depth_logits(depth, bins, conf.scene.depth_sharpness)
        for depth in bundle.depths
    ]
    context = synthetic_context(features, config.c2, conf.seed)
    logits, bev_logits = forward_fastocc(
        features,
        bundle.rig,
        depth_logits,
        context,
        bins,
        grid,
        weights,
        config,
        parallel=conf.bench.parallel,
    )
    terms = compute_losses(
        logits,
        bev_logits,
        bundle.scene,
        depth_logits,
        bundle.depths,
        bins,
        build_loss_terms(conf),
    )
    losses = breakdown(terms).to_dict()

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_occt(out / "logits.occt", logits)
    if bev_logits is not None:
        write_occt(out / "bev_logits.occt", bev_logits)
    save_json(losses, out / "losses.json")
    logger.info("Total loss %.6f", losses["total"])
    return losses


def cmd_bench(conf: DictConfig) -> BenchReport:
    """Head comparison rows followed by the pipeline breakdown rows."""
    grid = build_grid(conf)
    config = build_head_config(conf, grid)
    rig = build_rig(conf)
    weights = build_weights(conf, config)
    options = {
        "weights": weights,
        "seed": conf.seed,
        "repeats": conf.bench.repeats,
        "warmup": conf.bench.warmup,
        "parallel": conf.bench.parallel,
    }
    heads = bench_heads(config, rig, grid, **options)
    pipeline = bench_pipeline(config, rig, grid, build_bins(conf), **options)
    return BenchReport(
        heads.stages + pipeline.stages,
        repeats=heads.repeats,
        warmup=heads.warmup,
        parallel=heads.parallel,
        config_echo={**heads.config_echo, **pipeline.config_echo},
    )


def cmd_gradcheck(conf: DictConfig) -> GradcheckReport:
    return run_gradcheck(
        seeds=conf.gradcheck.seeds,
        base_seed=conf.seed,
        h=conf.gradcheck.step,
        tolerance=conf.gradcheck.tolerance,
        show_progress=True,
    )


def _labels_from_file(path: str | Path, num_classes: int) -> np.ndarray:
    """Labels [H, W, Z] from a label file or argmax of a logits file."""
    data = read_occt(path)
    if data.ndim == 4:
        if data.shape[0] != num_classes:
            raise RejectedInputError(
                f"{path} holds {data.shape[0]}-class logits, expected "
                f"{num_classes}"
            )
        return np.argmax(data, axis=0)
    if data.ndim != 3:
        raise RejectedInputError(
            f"{path} must hold labels [H, W, Z] or logits [M, H, W, Z], got "
            f"{list(data.shape)}"
        )
    return data.astype(np.int64)


def cmd_eval(
    pred_path: str | Path,
    gt_path: str | Path,
    num_classes: int,
    class_names: list[str] | None = None,
) -> MiouValue:
    """mIoU of a stored prediction against stored ground truth."""
    if class_names is None or len(class_names) != num_classes:
        class_names = list(default_class_names(num_classes))
    pred = _labels_from_file(pred_path, num_classes)
    gt = _labels_from_file(gt_path, num_classes)
    return miou(pred, gt, num_classes, class_names=class_names)


def cmd_flops(conf: DictConfig) -> pd.DataFrame:
    config = build_head_config(conf)
    return flops_table(config, len(build_rig(conf)))


def config_echo(conf: DictConfig) -> dict[str, Any]:
    container = OmegaConf.to_container(conf, resolve=True)
    assert isinstance(container, dict)
    return container
