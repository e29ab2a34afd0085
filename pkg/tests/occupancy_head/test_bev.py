import numpy as np
import pytest

from occlite.errors import ConfigurationError, RejectedInputError
from occlite.geometry import VoxelGridSpec
from occlite.gradcheck import numerical_gradient
from occlite.occupancy_head import (
    HeadConfig,
    HeadWeights,
    bev_collapse,
    bev_decode,
    bev_seg_head,
    bev_seg_head_backward,
    bev_uncollapse,
)
from occlite.tensor_core import ConvParams
from occlite.utils.prng import SplitMix64
from occlite.view_transform import LiftedVolume

CONFIG = HeadConfig(
    c1=3,
    c2=2,
    c3=4,
    num_classes=3,
    grid_dims=(8, 8, 4),
    decoder_widths=(4, 6),
)


def test_collapse_channel_order():
    vb = np.zeros((2, 3, 3, 2))
    vb[1, 0, 2, 0] = 7.0
    collapsed = bev_collapse(vb)
    assert collapsed.shape == (4, 3, 3)
    assert collapsed[2, 0, 2] == 7.0
    assert collapsed.sum() == 7.0


def test_collapse_accepts_lifted_volume():
    grid = VoxelGridSpec((0, 0, 0, 4, 4, 4), (2, 2, 2))
    features = SplitMix64(0).normal((3, 2, 2, 2))
    collapsed = bev_collapse(LiftedVolume(features, grid))
    np.testing.assert_array_equal(collapsed, bev_collapse(features))


def test_collapse_round_trip_is_exact():
    vb = SplitMix64(1).normal((3, 4, 5, 6))
    collapsed = bev_collapse(vb)
    np.testing.assert_array_equal(bev_uncollapse(collapsed, 6), vb)
    np.testing.assert_array_equal(
        np.sort(collapsed.ravel()), np.sort(vb.ravel())
    )


def test_uncollapse_rejects_bad_channel_count():
    with pytest.raises(RejectedInputError):
        bev_uncollapse(np.zeros((5, 2, 2)), 2)


def test_decode_zero_weights():
    weights = HeadWeights.init(CONFIG, mode="zeros")
    bprime = SplitMix64(2).normal((CONFIG.collapsed_channels, 4, 4))
    out = bev_decode(bprime, weights, CONFIG)
    assert out.shape == (CONFIG.c3, 4, 4)
    assert not out.any()


def test_single_stage_identity_decoder():
    config = HeadConfig(
        c1=2,
        c2=2,
        c3=4,
        num_classes=3,
        grid_dims=(6, 6, 4),
        decoder_widths=(4,),
    )
    channels = config.collapsed_channels
    weights = {
        "bev_decode.stem": ConvParams.identity(channels, 4, 3),
        "bev_decode.stage1.conv1": ConvParams.identity(4, 4, 3),
        "bev_decode.stage1.conv2": ConvParams.zeros(4, 4, 3),
        "bev_decode.stage1.skip": ConvParams.identity(4, 4, 1),
        "bev_decode.lateral1": ConvParams.identity(4, 4, 1),
    }
    bprime = SplitMix64(3).uniform(0.0, 1.0, (channels, 3, 3))
    np.testing.assert_array_equal(bev_decode(bprime, weights, config), bprime)


def test_decode_is_deterministic():
    weights = HeadWeights.init(CONFIG, seed=4)
    bprime = SplitMix64(4).normal((CONFIG.collapsed_channels, 4, 4))
    first = bev_decode(bprime, weights, CONFIG)
    again = HeadWeights.init(CONFIG, seed=4)
    second = bev_decode(bprime.copy(), again, CONFIG)
    np.testing.assert_array_equal(first, second)
    assert np.all(np.isfinite(first))


def test_decode_rejects_wrong_shape():
    weights = HeadWeights.init(CONFIG, mode="zeros")
    with pytest.raises(RejectedInputError):
        bev_decode(np.zeros((3, 4, 4)), weights, CONFIG)


def test_decode_missing_layer():
    weights = HeadWeights.init(CONFIG, mode="zeros")
    partial = HeadWeights(
        {k: v for k, v in weights.items() if "stage2" not in k}
    )
    with pytest.raises(ConfigurationError, match="stage2"):
        bev_decode(np.zeros((4, 4, 4)), partial, CONFIG)


def test_seg_head_zero_weights():
    weights = HeadWeights.init(CONFIG, mode="zeros")
    b = SplitMix64(5).normal((CONFIG.c3, 4, 4))
    logits = bev_seg_head(b, weights)
    assert logits.shape == (CONFIG.num_classes, 4, 4)
    assert not logits.any()


def test_seg_head_backward():
    weights = HeadWeights.init(CONFIG, seed=6)
    rng = SplitMix64(6)
    b = rng.normal((CONFIG.c3, 3, 3))
    upstream = rng.normal((CONFIG.num_classes, 3, 3))
    grad_b, grads = bev_seg_head_backward(b, weights, upstream)

    def objective(x):
        return float(np.sum(bev_seg_head(x, weights) * upstream))

    np.testing.assert_allclose(
        grad_b, numerical_gradient(objective, b), rtol=1e-6, atol=1e-8
    )
    conv2 = weights["bev_seg.conv2"]

    def objective_w2(w):
        replaced = dict(weights)
        replaced["bev_seg.conv2"] = ConvParams(w, conv2.bias)
        return float(np.sum(bev_seg_head(b, replaced) * upstream))

    np.testing.assert_allclose(
        grads["bev_seg.conv2"][0],
        numerical_gradient(objective_w2, conv2.weight),
        rtol=1e-6,
        atol=1e-8,
    )
