from occlite.tensor_core.conv import (
    conv2d,
    conv2d_backward,
    conv3d,
    conv_output_size,
    pointwise_conv,
)
from occlite.tensor_core.ops import (
    avg_pool2x,
    channel_log_softmax,
    channel_softmax,
    channel_softmax_backward,
    concat_channels,
    relu,
    relu_backward,
    repeat_z,
    upsample2x_bilinear,
    upsample2x_bilinear_backward,
    upsample_nearest,
)
from occlite.tensor_core.tensor import ConvParams, Tensor

__all__ = [
    "ConvParams",
    "Tensor",
    "avg_pool2x",
    "channel_log_softmax",
    "channel_softmax",
    "channel_softmax_backward",
    "concat_channels",
    "conv2d",
    "conv2d_backward",
    "conv3d",
    "conv_output_size",
    "pointwise_conv",
    "relu",
    "relu_backward",
    "repeat_z",
    "upsample2x_bilinear",
    "upsample2x_bilinear_backward",
    "upsample_nearest",
]
