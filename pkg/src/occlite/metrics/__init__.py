from occlite.metrics.bench import (
    BENCH_COLUMNS,
    BenchReport,
    StageTiming,
    bench_heads,
    bench_pipeline,
    emit_table,
    time_call,
)
from occlite.metrics.flops import (
    FlopsLayerSpec,
    flops_conv2d,
    flops_conv3d,
    flops_interp,
    flops_table,
    head2d_flops_layers,
    head3d_flops_layers,
    layer_flops,
    matched_conv2d,
    speedup_ratio,
    total_flops,
)
from occlite.metrics.miou import MiouValue, confusion_matrix, miou
from occlite.metrics.report import TABLE_FORMATS, emit_frame

__all__ = [
    "BENCH_COLUMNS",
    "TABLE_FORMATS",
    "BenchReport",
    "FlopsLayerSpec",
    "MiouValue",
    "StageTiming",
    "bench_heads",
    "bench_pipeline",
    "confusion_matrix",
    "emit_frame",
    "emit_table",
    "flops_conv2d",
    "flops_conv3d",
    "flops_interp",
    "flops_table",
    "head2d_flops_layers",
    "head3d_flops_layers",
    "layer_flops",
    "matched_conv2d",
    "miou",
    "speedup_ratio",
    "time_call",
    "total_flops",
]
