from __future__ import annotations

import argparse
import logging
import sys
from collections.abc import Sequence
from pathlib import Path
from typing import Any

import pandas as pd

from occlite._handle_logs import configure_cli_logging
from occlite.cli.commands import (
    cmd_bench,
    cmd_eval,
    cmd_flops,
    cmd_forward,
    cmd_gen_scene,
    cmd_gradcheck,
    config_echo,
)
from occlite.cli.config import load_run_config
from occlite.errors import (
    ConfigurationError,
    GenerationError,
    RejectedInputError,
    UsageError,
)
from occlite.metrics import TABLE_FORMATS, emit_frame
from occlite.utils.io import save_json

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_RUNTIME = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="occlite",
        description="Desk-scale semantic occupancy prediction toolkit.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON or YAML run config")
    common.add_argument("--out", help="Output directory")
    common.add_argument(
        "--format", default="csv", help="Table format: csv or markdown"
    )
    common.add_argument("--repeats", type=int, help="Benchmark repeats")
    common.add_argument("--seed", type=int, help="Run seed")
    common.add_argument(
        "--parallel",
        action="store_true",
        help="Run per-camera work on a thread pool",
    )
    common.add_argument("--verbose", action="store_true")

    verbs = parser.add_subparsers(dest="verb", required=True)
    verbs.add_parser(
        "gen-scene", parents=[common], help="Generate and render a scene"
    )
    forward = verbs.add_parser(
        "forward", parents=[common], help="Run a forward pass on a scene"
    )
    forward.add_argument("--scene", help="Scene directory from gen-scene")
    forward.add_argument("--weights", help="Weights manifest")
    verbs.add_parser("bench", parents=[common], help="Benchmark the heads")
    verbs.add_parser(
        "gradcheck", parents=[common], help="Finite-difference checks"
    )
    evaluate = verbs.add_parser(
        "eval", parents=[common], help="mIoU of a prediction"
    )
    evaluate.add_argument("pred", help="Predicted labels or logits (.occt)")
    evaluate.add_argument("gt", help="Ground-truth labels (.occt)")
    evaluate.add_argument("--num-classes", type=int, help="Class count M")
    verbs.add_parser("flops", parents=[common], help="Analytic FLOPs table")
    return parser


def _overrides(args: argparse.Namespace) -> dict[str, Any]:
    overrides: dict[str, Any] = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    bench: dict[str, Any] = {}
    if args.repeats is not None:
        bench["repeats"] = args.repeats
    if args.parallel:
        bench["parallel"] = True
    if bench:
        overrides["bench"] = bench
    paths: dict[str, Any] = {}
    if args.out is not None:
        paths["out_dir"] = args.out
    if getattr(args, "scene", None):
        paths["scene_dir"] = args.scene
    if getattr(args, "weights", None):
        paths["weights_manifest"] = args.weights
    if paths:
        overrides["paths"] = paths
    return overrides


def _emit(df: pd.DataFrame, fmt: str, out: str | None, name: str) -> None:
    text = emit_frame(df, fmt)
    sys.stdout.write(text)
    if out is not None:
        suffix = "csv" if fmt == "csv" else "md"
        path = Path(out)
        path.mkdir(parents=True, exist_ok=True)
        (path / f"{name}.{suffix}").write_text(text)


def run(args: argparse.Namespace) -> int:
    if args.format not in TABLE_FORMATS:
        raise UsageError(
            f"Unknown format '{args.format}', expected one of "
            f"{list(TABLE_FORMATS)}"
        )
    conf = load_run_config(args.config, _overrides(args))
    logger.debug("Run config: %s", config_echo(conf))
    out_dir = conf.paths.out_dir

    if args.verb == "gen-scene":
        manifest = cmd_gen_scene(conf, out_dir)
        logger.info(
            "Scene written: %d cameras, %d first-hit voxels",
            len(manifest["cameras"]),
            manifest["first_hit_voxels"],
        )
    elif args.verb == "forward":
        losses = cmd_forward(conf, out_dir)
        _emit(
            pd.DataFrame(
                {"term": list(losses), "value": list(losses.values())}
            ),
            args.format,
            None,
            "losses",
        )
    elif args.verb == "bench":
        report = cmd_bench(conf)
        logger.info("Benchmark settings: %s", report.echo())
        _emit(report.to_df(), args.format, args.out, "bench")
        if args.out is not None:
            save_json(report.echo(), Path(args.out) / "bench.json")
    elif args.verb == "gradcheck":
        result = cmd_gradcheck(conf)
        _emit(result.to_df(), args.format, args.out, "gradcheck")
        if not result.all_passed:
            logger.error("Gradient check failed for %s", result.failures)
            return EXIT_INVALID
    elif args.verb == "eval":
        num_classes = args.num_classes or conf.head.num_classes
        value = cmd_eval(
            args.pred, args.gt, num_classes, list(conf.scene.class_names)
        )
        _emit(value.to_df(), args.format, args.out, "eval")
    elif args.verb == "flops":
        _emit(cmd_flops(conf), args.format, args.out, "flops")
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    """Entry point of the `occlite` command. Returns the exit code: 0 on
    success, 1 for invalid input or configuration (or a failing gradient
    check), 2 for runtime and I/O failures.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return EXIT_OK if err.code == 0 else EXIT_INVALID
    configure_cli_logging(args.verbose)
    try:
        return run(args)
    except (RejectedInputError, ConfigurationError, UsageError) as err:
        logger.error("%s", err)
        return EXIT_INVALID
    except (GenerationError, OSError) as err:
        logger.error("%s", err)
        return EXIT_RUNTIME
