"""Physical patch-grid enumeration and patch extraction.

Unlike the analytic effective-patch count in :mod:`patchbound.bound`,
enumeration floors the stride division: a partial final step is dropped.
Images are row-major, channel-last arrays; patches inherit the layout.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["PatchGrid", "grid_shape", "enumerate_grid", "center_pixel", "extract_patch"]


def _check_geometry(height, width, patch_height, patch_width, stride_h, stride_w):
    for name, v in (("height", height), ("width", width)):
        if v < 1:
            raise ValueError(f"{name} must be >= 1, got {v}")
    if not 1 <= patch_height <= height:
        raise ValueError(
            "patch exceeds image: patch_height=%d not in [1, height=%d]"
            % (patch_height, height))
    if not 1 <= patch_width <= width:
        raise ValueError(
            "patch exceeds image: patch_width=%d not in [1, width=%d]"
            % (patch_width, width))
    if stride_h < 1 or stride_w < 1:
        raise ValueError(f"strides must be >= 1, got ({stride_h}, {stride_w})")


def grid_shape(height: int, width: int, patch_height: int, patch_width: int,
               stride_h: int, stride_w: int) -> tuple[int, int]:
    """(rows, cols) of the patch grid: floor((L - L_T) / S) + 1 per axis."""
    _check_geometry(height, width, patch_height, patch_width, stride_h, stride_w)
    return ((height - patch_height) // stride_h + 1,
            (width - patch_width) // stride_w + 1)


@dataclass(frozen=True, eq=False)
class PatchGrid:
    height: int
    width: int
    patch_height: int
    patch_width: int
    stride_h: int
    stride_w: int
    n_rows: int
    n_cols: int
    positions: np.ndarray = field(repr=False)  # (n, 2) int64 top-left, row-major

    @property
    def count(self) -> int:
        return self.n_rows * self.n_cols


def enumerate_grid(height: int, width: int, patch_height: int, patch_width: int,
                   stride_h: int = 1, stride_w: int = 1) -> PatchGrid:
    """Enumerate top-left patch positions row-major for the given geometry."""
    rows, cols = grid_shape(height, width, patch_height, patch_width,
                            stride_h, stride_w)
    rs = np.arange(rows, dtype=np.int64) * stride_h
    cs = np.arange(cols, dtype=np.int64) * stride_w
    positions = np.stack(np.meshgrid(rs, cs, indexing="ij"), axis=-1).reshape(-1, 2)
    positions.setflags(write=False)
    return PatchGrid(height=height, width=width,
                     patch_height=patch_height, patch_width=patch_width,
                     stride_h=stride_h, stride_w=stride_w,
                     n_rows=rows, n_cols=cols, positions=positions)


def center_pixel(position: tuple[int, int], patch_height: int,
                 patch_width: int) -> tuple[int, int]:
    """Center pixel of the patch at ``position`` (top-left convention)."""
    row, col = position
    return row + (patch_height - 1) // 2, col + (patch_width - 1) // 2


def extract_patch(image: np.ndarray, position: tuple[int, int],
                  patch_height: int, patch_width: int) -> np.ndarray:
    """Copy out the patch at ``position`` from an (H, W, C) image."""
    if image.ndim != 3:
        raise ValueError(f"image must be (H, W, C), got shape {image.shape}")
    h, w = image.shape[:2]
    row, col = position
    if not (0 <= row <= h - patch_height and 0 <= col <= w - patch_width):
        raise ValueError(
            f"out-of-bounds patch position ({row}, {col}) for "
            f"{patch_height}x{patch_width} patch in {h}x{w} image")
    return image[row:row + patch_height, col:col + patch_width].copy()
