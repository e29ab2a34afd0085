from occlite.cli.commands import (
    cmd_bench,
    cmd_eval,
    cmd_flops,
    cmd_forward,
    cmd_gen_scene,
    cmd_gradcheck,
)
from occlite.cli.config import RunConfig, load_run_config
from occlite.cli.main import main

__all__ = [
    "RunConfig",
    "cmd_bench",
    "cmd_eval",
    "cmd_flops",
    "cmd_forward",
    "cmd_gen_scene",
    "cmd_gradcheck",
    "load_run_config",
    "main",
]
