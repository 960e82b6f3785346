"""Patch-logit averaging, patch-wise accuracy, and class heat maps.

The image-level prediction is the argmax (lowest index wins ties) of the
mean over all grid cells of the per-patch logits. Means reduce in fixed
row-major pairwise order so results are reproducible regardless of any
caller-side parallelism. Heat maps place each patch's class-k logit at
the patch's center pixel on an H x W raster, zero elsewhere.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import BinaryIO, Union

import numpy as np

from . import geometry
from .plg import ImageLogits, LogitSet

__all__ = [
    "Prediction",
    "HeatMap",
    "average_predict",
    "patchwise_accuracy",
    "build_heatmap",
    "render_heatmap",
    "predictions_csv",
]


@dataclass(frozen=True, eq=False)
class Prediction:
    image_id: int
    mean_logits: np.ndarray  # float64, length K
    predicted_class: int


@dataclass(frozen=True, eq=False)
class HeatMap:
    class_index: int
    values: np.ndarray = field(repr=False)  # float64, (H, W)
    patch_height: int
    patch_width: int
    stride_h: int
    stride_w: int


def _pairwise_sum(rows: np.ndarray) -> np.ndarray:
    """Sum over axis 0 by pairing adjacent rows until one remains."""
    while rows.shape[0] > 1:
        n = rows.shape[0]
        half = 2 * (n // 2)
        paired = rows[0:half:2] + rows[1:half:2]
        if n % 2:
            paired = np.concatenate([paired, rows[-1:]], axis=0)
        rows = paired
    return rows[0]


def average_predict(entry: ImageLogits) -> Prediction:
    """Mean logits over the grid, then argmax with lowest-index tie-break."""
    cells = entry.logits.reshape(-1, entry.logits.shape[-1])
    if cells.shape[0] == 0:
        raise ValueError(f"image {entry.image_id}: empty patch grid")
    mean = _pairwise_sum(cells.astype(np.float64)) / cells.shape[0]
    mean.setflags(write=False)
    return Prediction(image_id=entry.image_id, mean_logits=mean,
                      predicted_class=int(np.argmax(mean)))


def patchwise_accuracy(logit_set: LogitSet) -> float:
    """Percent of images whose averaged-logit argmax equals the true label."""
    if logit_set.n_images == 0:
        raise ValueError("logit set holds no images")
    correct = 0
    for entry in logit_set.images:
        if entry.label is None:
            raise ValueError(f"image {entry.image_id} has no label")
        correct += int(average_predict(entry).predicted_class == entry.label)
    return 100.0 * correct / logit_set.n_images


def build_heatmap(logit_set: LogitSet, image_id: int, class_index: int) -> HeatMap:
    """Raster of class-k logits placed at patch centers, zero-padded to H x W."""
    if not 0 <= class_index < logit_set.n_classes:
        raise ValueError(
            f"class index {class_index} not in [0, {logit_set.n_classes})")
    entry = logit_set.image(image_id)
    grid = geometry.enumerate_grid(logit_set.height, logit_set.width,
                                   logit_set.patch_height, logit_set.patch_width,
                                   logit_set.stride_h, logit_set.stride_w)
    values = np.zeros((logit_set.height, logit_set.width), dtype=np.float64)
    centers = grid.positions + np.array(
        [(logit_set.patch_height - 1) // 2, (logit_set.patch_width - 1) // 2],
        dtype=np.int64)
    values[centers[:, 0], centers[:, 1]] = entry.logits[:, :, class_index].reshape(-1)
    values.setflags(write=False)
    return HeatMap(class_index=class_index, values=values,
                   patch_height=logit_set.patch_height,
                   patch_width=logit_set.patch_width,
                   stride_h=logit_set.stride_h, stride_w=logit_set.stride_w)


def render_heatmap(heat_map: HeatMap,
                   destination: Union[str, Path, BinaryIO]) -> None:
    """Write the map as a binary PGM (P5, maxval 255).

    Values are min-max normalized to [0, 255] with 0.5 rounding away from
    zero; a constant map renders mid-gray 128.
    """
    values = heat_map.values
    lo = float(values.min())
    hi = float(values.max())
    if hi == lo:
        pixels = np.full(values.shape, 128, dtype=np.uint8)
    else:
        scaled = (values - lo) / (hi - lo) * 255.0
        pixels = np.floor(scaled + 0.5).astype(np.uint8)
    header = b"P5\n%d %d\n255\n" % (values.shape[1], values.shape[0])
    if isinstance(destination, (str, Path)):
        with open(destination, "wb") as fh:
            fh.write(header + pixels.tobytes())
    else:
        destination.write(header + pixels.tobytes())


def predictions_csv(logit_set: LogitSet) -> str:
    """CSV table ``image_id,label,predicted,correct`` in file order.

    Label and correctness fields are empty for unlabeled images.
    """
    lines = ["image_id,label,predicted,correct"]
    for entry in logit_set.images:
        predicted = average_predict(entry).predicted_class
        if entry.label is None:
            lines.append(f"{entry.image_id},,{predicted},")
        else:
            lines.append(f"{entry.image_id},{entry.label},{predicted},"
                         f"{int(predicted == entry.label)}")
    return "\n".join(lines) + "\n"
