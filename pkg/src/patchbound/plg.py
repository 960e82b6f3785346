"""PLG1: the binary interchange format for per-patch, per-class logits.

One file carries logits for any number of images sharing a single patch
geometry. All integers are 32-bit unsigned little-endian; logits are
32-bit IEEE-754 little-endian floats.

Layout::

    magic    4 bytes  "PLG1"
    header   9 x u32  n_images, K, H, W, H_T, W_T, S_H, S_W, reserved(=0)
    per image:
             4 x u32  image_id, grid_rows, grid_cols, label+1 (0 = absent)
             grid_rows * grid_cols * K  f32, row-major, class index fastest

The header is 4 + 9*4 = 40 bytes. Every image's declared grid dimensions
must match the grid implied by the header geometry (floor stride
division, see :func:`patchbound.geometry.grid_shape`). Logits must be
finite and image ids unique. A file holds exactly one patch geometry;
mixing patch sizes requires multiple files.

In-memory sets are immutable after construction (arrays are read-only)
and safe to share across threads.
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Union

import numpy as np

from . import geometry

__all__ = ["PLGError", "ImageLogits", "LogitSet", "write_logits", "read_logits"]

MAGIC = b"PLG1"
_HEADER = struct.Struct("<9I")
_IMAGE_HEADER = struct.Struct("<4I")
_U32_MAX = 2**32 - 1

Destination = Union[str, Path, BinaryIO]


class PLGError(ValueError):
    """Malformed PLG1 data or a violated set invariant."""


@dataclass(frozen=True, eq=False)
class ImageLogits:
    """Logits of one image: a (grid_rows, grid_cols, K) float32 array."""

    image_id: int
    label: int | None
    logits: np.ndarray

    def __post_init__(self) -> None:
        arr = np.ascontiguousarray(self.logits, dtype=np.float32)
        arr.setflags(write=False)
        object.__setattr__(self, "logits", arr)
        if arr.ndim != 3:
            raise PLGError(
                f"image {self.image_id}: logits must be (rows, cols, K), "
                f"got shape {arr.shape}")
        if not 0 <= self.image_id <= _U32_MAX:
            raise PLGError(f"image_id {self.image_id} out of u32 range")

    @property
    def grid_rows(self) -> int:
        return self.logits.shape[0]

    @property
    def grid_cols(self) -> int:
        return self.logits.shape[1]


@dataclass(frozen=True, eq=False)
class LogitSet:
    """A validated collection of per-image logit grids with one geometry."""

    n_classes: int
    height: int
    width: int
    patch_height: int
    patch_width: int
    stride_h: int
    stride_w: int
    images: tuple[ImageLogits, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "images", tuple(self.images))
        self.validate()

    @property
    def n_images(self) -> int:
        return len(self.images)

    def grid_shape(self) -> tuple[int, int]:
        return geometry.grid_shape(self.height, self.width, self.patch_height,
                                   self.patch_width, self.stride_h, self.stride_w)

    def image(self, image_id: int) -> ImageLogits:
        for entry in self.images:
            if entry.image_id == image_id:
                return entry
        raise PLGError(f"no image with id {image_id}")

    def validate(self) -> None:
        if self.n_classes < 1:
            raise PLGError(f"n_classes must be >= 1, got {self.n_classes}")
        try:
            rows, cols = self.grid_shape()
        except ValueError as exc:
            raise PLGError(str(exc)) from None
        for v in (self.n_classes, self.height, self.width, self.patch_height,
                  self.patch_width, self.stride_h, self.stride_w):
            if v > _U32_MAX:
                raise PLGError(f"header value {v} out of u32 range")
        seen: set[int] = set()
        for entry in self.images:
            if entry.image_id in seen:
                raise PLGError(f"duplicate image_id {entry.image_id}")
            seen.add(entry.image_id)
            if entry.logits.shape != (rows, cols, self.n_classes):
                raise PLGError(
                    "geometry mismatch: image %d has grid %dx%dx%d, geometry "
                    "implies %dx%dx%d"
                    % (entry.image_id, *entry.logits.shape, rows, cols,
                       self.n_classes))
            if not np.isfinite(entry.logits).all():
                raise PLGError(f"non-finite logit in image {entry.image_id}")
            if entry.label is not None and not 0 <= entry.label < self.n_classes:
                raise PLGError(
                    f"image {entry.image_id}: label {entry.label} not in "
                    f"[0, {self.n_classes})")


def write_logits(logit_set: LogitSet, destination: Destination) -> int:
    """Write the set in PLG1 form; returns the byte count written."""
    logit_set.validate()
    payload = bytearray()
    payload += MAGIC
    payload += _HEADER.pack(logit_set.n_images, logit_set.n_classes,
                            logit_set.height, logit_set.width,
                            logit_set.patch_height, logit_set.patch_width,
                            logit_set.stride_h, logit_set.stride_w, 0)
    for entry in logit_set.images:
        label_field = 0 if entry.label is None else entry.label + 1
        payload += _IMAGE_HEADER.pack(entry.image_id, entry.grid_rows,
                                      entry.grid_cols, label_field)
        payload += entry.logits.astype("<f4", copy=False).tobytes()
    if isinstance(destination, (str, Path)):
        with open(destination, "wb") as fh:
            fh.write(payload)
    else:
        destination.write(payload)
    return len(payload)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.offset = 0

    def take(self, n: int, what: str) -> bytes:
        if self.offset + n > len(self.data):
            raise PLGError(
                f"truncated file: need {n} bytes for {what} at offset "
                f"{self.offset}, have {len(self.data) - self.offset}")
        chunk = self.data[self.offset:self.offset + n]
        self.offset += n
        return chunk


def read_logits(source: Destination) -> LogitSet:
    """Read and fully validate a PLG1 file."""
    if isinstance(source, (str, Path)):
        with open(source, "rb") as fh:
            data = fh.read()
    else:
        data = source.read()
    rd = _Reader(data)
    magic = rd.take(4, "magic")
    if magic != MAGIC:
        raise PLGError(f"bad magic: expected {MAGIC!r}, got {magic!r}")
    (n_images, n_classes, height, width, patch_height, patch_width,
     stride_h, stride_w, reserved) = _HEADER.unpack(rd.take(_HEADER.size, "header"))
    if reserved != 0:
        raise PLGError(f"reserved header field must be 0, got {reserved}")
    try:
        rows, cols = geometry.grid_shape(height, width, patch_height,
                                         patch_width, stride_h, stride_w)
    except ValueError as exc:
        raise PLGError(f"invalid header geometry: {exc}") from None
    images = []
    for i in range(n_images):
        image_id, grid_rows, grid_cols, label_field = _IMAGE_HEADER.unpack(
            rd.take(_IMAGE_HEADER.size, f"image {i} header"))
        if (grid_rows, grid_cols) != (rows, cols):
            raise PLGError(
                "geometry mismatch: image %d declares grid %dx%d, geometry "
                "implies %dx%d" % (image_id, grid_rows, grid_cols, rows, cols))
        n_floats = grid_rows * grid_cols * n_classes
        raw = rd.take(4 * n_floats, f"image {i} logits")
        logits = np.frombuffer(raw, dtype="<f4").reshape(grid_rows, grid_cols,
                                                         n_classes).copy()
        label = None if label_field == 0 else label_field - 1
        images.append(ImageLogits(image_id=image_id, label=label, logits=logits))
    if rd.offset != len(data):
        raise PLGError(
            f"trailing data: {len(data) - rd.offset} unexpected bytes after "
            f"image payloads")
    return LogitSet(n_classes=n_classes, height=height, width=width,
                    patch_height=patch_height, patch_width=patch_width,
                    stride_h=stride_h, stride_w=stride_w, images=tuple(images))
