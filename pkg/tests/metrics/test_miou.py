import numpy as np
import pytest

from occlite.errors import RejectedInputError
from occlite.metrics import confusion_matrix, miou
from occlite.utils.prng import SplitMix64


def _oracle(pred, gt, num_classes, keep):
    """IoU per semantic class by explicit counting."""
    ious = []
    for m in range(1, num_classes):
        tp = fp = fn = 0
        for p, g, k in zip(pred.ravel(), gt.ravel(), keep.ravel()):
            if not k:
                continue
            tp += int(p == m and g == m)
            fp += int(p == m and g != m)
            fn += int(p != m and g == m)
        union = tp + fp + fn
        ious.append(tp / union if union else None)
    return ious


def test_perfect_prediction():
    gt = np.array([[[0, 1], [2, 2]]])
    value = miou(gt, gt, 3)
    assert value.mean == 1.0
    assert value.per_class == [1.0, 1.0]
    assert value.geometry_iou == 1.0


def test_hand_confusion():
    value = miou(np.array([1, 2, 2, 2]), np.array([1, 1, 2, 2]), 3)
    assert value.per_class[0] == pytest.approx(0.5)
    assert value.per_class[1] == pytest.approx(2 / 3)
    assert value.mean == pytest.approx(0.5833, abs=1e-4)


def test_undefined_class_is_flagged():
    with pytest.warns(UserWarning, match="pole"):
        value = miou(
            np.array([1, 0]),
            np.array([1, 1]),
            3,
            class_names=["empty", "car", "pole"],
        )
    assert value.per_class == [0.5, None]
    assert value.mean == 0.5
    assert value.undefined_classes == ["pole"]
    df = value.to_df()
    assert df["class"].tolist() == ["car", "pole", "mean", "geometry"]
    assert df["defined"].tolist() == [True, False, True, True]


def test_everything_empty():
    with pytest.warns(UserWarning):
        value = miou(np.zeros(4, int), np.zeros(4, int), 2)
    assert value.mean is None
    assert value.geometry_iou is None


@pytest.mark.parametrize("seed", range(10))
def test_matches_counting_oracle(seed):
    rng = SplitMix64(seed)
    gt = np.floor(rng.uniform(0, 5, (6, 5, 4))).astype(np.int64)
    pred = np.floor(rng.uniform(0, 5, (6, 5, 4))).astype(np.int64)
    ignore = rng.uniform(0, 1, gt.shape) < 0.2
    value = miou(pred, gt, 5, ignore_mask=ignore)
    assert value.per_class == _oracle(pred, gt, 5, ~ignore)


def test_confusion_matrix_rows_are_ground_truth():
    conf = confusion_matrix(np.array([1, 2, 2]), np.array([1, 1, 2]), 3)
    assert conf.tolist() == [[0, 0, 0], [0, 1, 1], [0, 0, 1]]


def test_ignored_voxels_do_not_count():
    pred, gt = np.array([1, 2]), np.array([1, 1])
    value = miou(pred, gt, 3, ignore_mask=np.array([False, True]))
    assert value.per_class[0] == 1.0


@pytest.mark.parametrize(
    "pred,gt,kwargs",
    [
        (np.zeros(3, int), np.zeros(4, int), {}),
        (np.array([0, 3]), np.array([0, 1]), {}),
        (np.array([0, 1]), np.array([0, -1]), {}),
        (np.zeros(2, int), np.zeros(2, int), {"class_names": ["a"]}),
        (np.zeros(2, int), np.zeros(2, int), {"ignore_mask": np.zeros(3)}),
    ],
)
def test_invalid_inputs(pred, gt, kwargs):
    with pytest.raises(RejectedInputError):
        miou(pred, gt, 3, **kwargs)
