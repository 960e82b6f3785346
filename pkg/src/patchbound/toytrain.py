"""Framework-free desk-scale patch training on synthetic image tasks.

Each synthetic class is a texture generator applied to a random region
covering a fraction of the image, over a shared uniform-noise background:

* ``iid`` textures draw i.i.d. pixels around a class-specific mean
  (default 255*(c+1)/(K+1), spread texture_std, clipped to [0, 255]);
* ``layout`` textures share one mean but split the region into a bright
  and a dark half whose orientation/polarity encodes the class, so the
  class is carried by spatial arrangement rather than color.

The model is a linear softmax classifier on flattened raw patches
(pixels scaled to [0, 1]). Training takes one uniformly random patch per
sampled image per mini-batch and assigns it the parent image's label,
which makes the patch labels intrinsically noisy; inference averages
logits over the stride-1 patch grid. Initialization is zeros (the
problem is convex) and all randomness flows through seeded Philox
streams, so fixed seeds give bit-identical models and accuracies.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import _kernels
from .aggregate import average_predict
from .plg import ImageLogits, LogitSet

__all__ = [
    "SyntheticTask",
    "ImageSet",
    "TrainSettings",
    "ToyPatchModel",
    "TrainResult",
    "TrainingDiverged",
    "generate_dataset",
    "train",
    "evaluate",
    "export_logits",
    "sample_patch_batch",
    "patch_batch_loss",
    "save_model",
    "load_model",
    "training_log_csv",
]

_MIN_MEAN_SEPARATION = 20.0  # on the 0..255 pixel scale
_CHECKPOINT_MAGIC = b"TOY1"
_CHECKPOINT_HEADER = struct.Struct("<3I")


class TrainingDiverged(RuntimeError):
    """Raised when training produces a non-finite loss or parameter."""


@dataclass(frozen=True)
class SyntheticTask:
    n_classes: int
    height: int = 32
    width: int = 32
    channels: int = 3
    class_fraction: float = 1.0
    texture: str = "iid"
    texture_std: float = 25.0
    class_means: tuple[float, ...] | None = None
    layout_amplitude: float = 40.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_classes < 2:
            raise ValueError(f"n_classes must be >= 2, got {self.n_classes}")
        for name in ("height", "width", "channels"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        if not 0.0 < self.class_fraction <= 1.0:
            raise ValueError(
                f"class_fraction must be in (0, 1], got {self.class_fraction}")
        if self.texture_std < 0:
            raise ValueError(f"texture_std must be >= 0, got {self.texture_std}")
        if self.texture == "iid":
            means = self.means()
            gaps = np.diff(np.sort(means))
            if gaps.size and gaps.min() < _MIN_MEAN_SEPARATION:
                raise ValueError(
                    "class mean pixel values must be separated by >= "
                    f"{_MIN_MEAN_SEPARATION}, got means {means}")
            if min(means) < 0 or max(means) > 255:
                raise ValueError(f"class means must lie in [0, 255], got {means}")
        elif self.texture == "layout":
            if self.n_classes > 4:
                raise ValueError("layout texture supports at most 4 classes")
            if not _MIN_MEAN_SEPARATION / 2 <= self.layout_amplitude <= 127.5:
                raise ValueError(
                    f"layout_amplitude must be in [10, 127.5], got "
                    f"{self.layout_amplitude}")
        else:
            raise ValueError(f"unknown texture {self.texture!r}")

    def means(self) -> tuple[float, ...]:
        if self.class_means is not None:
            if len(self.class_means) != self.n_classes:
                raise ValueError(
                    f"class_means must have length {self.n_classes}, "
                    f"got {len(self.class_means)}")
            return tuple(float(m) for m in self.class_means)
        return tuple(255.0 * (c + 1) / (self.n_classes + 1)
                     for c in range(self.n_classes))


@dataclass(frozen=True, eq=False)
class ImageSet:
    """Labeled uint8 images plus the class-texture region masks."""

    images: np.ndarray = field(repr=False)  # (n, H, W, C) uint8
    labels: np.ndarray = field(repr=False)  # (n,) int64
    masks: np.ndarray = field(repr=False)   # (n, H, W) bool
    n_classes: int

    def __post_init__(self) -> None:
        n = self.images.shape[0]
        if self.labels.shape != (n,) or self.masks.shape != self.images.shape[:3]:
            raise ValueError("images, labels and masks disagree in shape")
        if n and (self.labels.min() < 0 or self.labels.max() >= self.n_classes):
            raise ValueError("labels out of range")

    def __len__(self) -> int:
        return self.images.shape[0]


@dataclass(frozen=True)
class TrainSettings:
    patch_size: int
    learning_rate: float = 0.05
    steps: int = 20000
    batch_size: int = 64
    seed: int = 0

    def __post_init__(self) -> None:
        if self.patch_size < 1:
            raise ValueError(f"patch_size must be >= 1, got {self.patch_size}")
        if self.learning_rate < 0:
            raise ValueError(f"learning_rate must be >= 0, got {self.learning_rate}")
        if self.steps < 0:
            raise ValueError(f"steps must be >= 0, got {self.steps}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")


@dataclass(eq=False)
class ToyPatchModel:
    weights: np.ndarray  # (K, H_T * W_T * C) float64
    bias: np.ndarray     # (K,) float64
    patch_height: int
    patch_width: int
    channels: int
    settings: TrainSettings | None = None

    @property
    def n_classes(self) -> int:
        return self.weights.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.weights.shape[1]

    def patch_logits(self, patch: np.ndarray) -> np.ndarray:
        x = patch.reshape(-1) / 255.0
        if x.shape[0] != self.feature_dim:
            raise ValueError(
                f"patch has {x.shape[0]} values, model expects {self.feature_dim}")
        return self.weights @ x + self.bias


@dataclass(eq=False)
class TrainResult:
    model: ToyPatchModel
    losses: np.ndarray  # per-step mini-batch loss
    eval_trace: list[tuple[int, float]]  # (completed steps, held-out loss)


def _rng(seed_parts: Sequence[int]) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed_parts)))


def _layout_sign(task: SyntheticTask, label: int, rect_h: int, rect_w: int) -> np.ndarray:
    # classes 0/1: vertical split with opposite polarity; 2/3: horizontal
    yy, xx = np.mgrid[0:rect_h, 0:rect_w]
    if label < 2:
        sign = np.where(xx < rect_w / 2, 1.0, -1.0)
    else:
        sign = np.where(yy < rect_h / 2, 1.0, -1.0)
    return sign if label % 2 == 0 else -sign


def _generate_split(task: SyntheticTask, n: int, stream: int) -> ImageSet:
    g = _rng((task.seed, stream))
    h, w, c = task.height, task.width, task.channels
    means = task.means() if task.texture == "iid" else None
    images = np.empty((n, h, w, c), dtype=np.uint8)
    labels = np.empty(n, dtype=np.int64)
    masks = np.zeros((n, h, w), dtype=bool)
    for i in range(n):
        label = int(g.integers(task.n_classes))
        labels[i] = label
        if task.class_fraction >= 1.0:
            top, left, rect_h, rect_w = 0, 0, h, w
        else:
            aspect = g.uniform(0.8, 1.25)
            rect_h = int(np.clip(round(np.sqrt(task.class_fraction) * h * aspect), 1, h))
            rect_w = int(np.clip(round(task.class_fraction * h * w / rect_h), 1, w))
            top = int(g.integers(h - rect_h + 1))
            left = int(g.integers(w - rect_w + 1))
        image = g.integers(0, 256, size=(h, w, c)).astype(np.uint8)
        if task.texture == "iid":
            tex = g.normal(means[label], task.texture_std, size=(rect_h, rect_w, c))
        else:
            sign = _layout_sign(task, label, rect_h, rect_w)
            tex = (g.normal(0.0, task.texture_std, size=(rect_h, rect_w, c))
                   + (127.5 + task.layout_amplitude * sign)[:, :, None])
        image[top:top + rect_h, left:left + rect_w] = np.clip(
            np.rint(tex), 0, 255).astype(np.uint8)
        images[i] = image
        masks[i, top:top + rect_h, left:left + rect_w] = True
    for arr in (images, labels, masks):
        arr.setflags(write=False)
    return ImageSet(images=images, labels=labels, masks=masks,
                    n_classes=task.n_classes)


def generate_dataset(task: SyntheticTask, n_train: int,
                     n_test: int) -> tuple[ImageSet, ImageSet]:
    """Train and test sets from disjoint seed streams of the task seed."""
    if n_train < 0 or n_test < 0:
        raise ValueError("set sizes must be >= 0")
    return _generate_split(task, n_train, 0), _generate_split(task, n_test, 1)


def train(train_set: ImageSet, settings: TrainSettings,
          eval_batch: tuple[np.ndarray, np.ndarray] | None = None,
          eval_every: int = 0) -> TrainResult:
    """SGD on softmax cross-entropy over randomly positioned patches.

    Every step samples ``batch_size`` images with one uniform patch
    position each and labels the patch with its parent image's class.
    When ``eval_batch`` (features, labels) is given with ``eval_every`` > 0,
    the held-out loss is recorded every that many steps.
    """
    if len(train_set) == 0:
        raise ValueError("training set is empty")
    n, h, w, c = train_set.images.shape
    t = settings.patch_size
    if t > min(h, w):
        raise ValueError(
            f"patch exceeds image: patch_size={t} > min(height, width)={min(h, w)}")
    k = train_set.n_classes
    dim = t * t * c
    g = _rng((settings.seed, 2))
    steps, batch = settings.steps, settings.batch_size
    img_idx = g.integers(n, size=(steps, batch))
    pos_r = g.integers(h - t + 1, size=(steps, batch))
    pos_c = g.integers(w - t + 1, size=(steps, batch))
    weights = np.zeros((k, dim), dtype=np.float64)
    bias = np.zeros(k, dtype=np.float64)
    losses = np.empty(steps, dtype=np.float64)
    model = ToyPatchModel(weights=weights, bias=bias, patch_height=t,
                          patch_width=t, channels=c, settings=settings)

    trace: list[tuple[int, float]] = []

    def record(step: int) -> None:
        if eval_batch is not None and eval_every > 0:
            trace.append((step, patch_batch_loss(model, *eval_batch)))

    record(0)
    segment = eval_every if (eval_batch is not None and eval_every > 0) else steps
    done = 0
    while done < steps:
        end = min(done + segment, steps)
        _kernels.sgd_softmax(train_set.images, train_set.labels,
                             img_idx[done:end], pos_r[done:end], pos_c[done:end],
                             t, t, settings.learning_rate, weights, bias,
                             losses[done:end])
        seg = losses[done:end]
        if not np.isfinite(seg).all():
            bad = done + int(np.flatnonzero(~np.isfinite(seg))[0]) + 1
            raise TrainingDiverged(f"non-finite loss at step {bad}")
        done = end
        record(done)
    if not (np.isfinite(weights).all() and np.isfinite(bias).all()):
        raise TrainingDiverged("non-finite model parameter after training")
    return TrainResult(model=model, losses=losses, eval_trace=trace)


def sample_patch_batch(image_set: ImageSet, count: int, patch_size: int,
                       seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Fixed batch of (features, labels) patches for held-out loss checks."""
    if len(image_set) == 0:
        raise ValueError("image set is empty")
    n, h, w, c = image_set.images.shape
    t = patch_size
    g = _rng((seed, 4))
    ii = g.integers(n, size=count)
    r0 = g.integers(h - t + 1, size=count)
    c0 = g.integers(w - t + 1, size=count)
    rows = r0[:, None, None] + np.arange(t)[None, :, None]
    cols = c0[:, None, None] + np.arange(t)[None, None, :]
    x = image_set.images[ii[:, None, None], rows, cols, :].reshape(count, -1) / 255.0
    return x, image_set.labels[ii]


def patch_batch_loss(model: ToyPatchModel, features: np.ndarray,
                     labels: np.ndarray) -> float:
    """Mean softmax cross-entropy of the model on a fixed patch batch."""
    z = features @ model.weights.T + model.bias
    z = z - z.max(axis=1, keepdims=True)
    log_p = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    return float(-log_p[np.arange(len(labels)), labels].mean())


def _grid_logits_f32(model: ToyPatchModel, image: np.ndarray,
                     stride: int) -> np.ndarray:
    grid = _kernels.grid_logits(image, model.patch_height, model.patch_width,
                                stride, stride, model.weights, model.bias)
    return grid.astype(np.float32)


def evaluate(model: ToyPatchModel, test_set: ImageSet,
             seed: int = 0) -> tuple[float, float]:
    """(patch-averaged accuracy, single-random-patch accuracy), in percent.

    Patch-averaged inference uses the stride-1 grid and the standard
    logit-averaging prediction; the single-patch metric classifies one
    uniformly random patch per image. Grids are evaluated in float32 so
    results match aggregation over an exported logit file exactly.
    """
    if len(test_set) == 0:
        raise ValueError("test set is empty")
    n, h, w, _ = test_set.images.shape
    t = model.patch_height
    if t > h or model.patch_width > w:
        raise ValueError(
            f"model patch {t}x{model.patch_width} exceeds test image {h}x{w}")
    g = _rng((seed, 3))
    avg_ok = 0
    single_ok = 0
    for i in range(n):
        image = test_set.images[i]
        entry = ImageLogits(image_id=i, label=None,
                            logits=_grid_logits_f32(model, image, 1))
        avg_ok += int(average_predict(entry).predicted_class == test_set.labels[i])
        r0 = int(g.integers(h - t + 1))
        c0 = int(g.integers(w - model.patch_width + 1))
        z = model.patch_logits(image[r0:r0 + t, c0:c0 + model.patch_width])
        single_ok += int(int(np.argmax(z)) == test_set.labels[i])
    return 100.0 * avg_ok / n, 100.0 * single_ok / n


def export_logits(model: ToyPatchModel, image_set: ImageSet,
                  stride: int = 1) -> LogitSet:
    """Model logits on every grid patch of every image, as a logit set."""
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    if len(image_set) == 0:
        raise ValueError("image set is empty")
    _, h, w, _ = image_set.images.shape
    entries = []
    for i in range(len(image_set)):
        entries.append(ImageLogits(
            image_id=i, label=int(image_set.labels[i]),
            logits=_grid_logits_f32(model, image_set.images[i], stride)))
    return LogitSet(n_classes=model.n_classes, height=h, width=w,
                    patch_height=model.patch_height, patch_width=model.patch_width,
                    stride_h=stride, stride_w=stride, images=tuple(entries))


def save_model(model: ToyPatchModel, destination: str | Path) -> int:
    """Flat binary checkpoint: 16-byte header, then weights and bias (f64 LE)."""
    payload = (_CHECKPOINT_MAGIC
               + _CHECKPOINT_HEADER.pack(model.n_classes, model.patch_height,
                                         model.patch_width)
               + model.weights.astype("<f8").tobytes()
               + model.bias.astype("<f8").tobytes())
    with open(destination, "wb") as fh:
        fh.write(payload)
    return len(payload)


def load_model(source: str | Path) -> ToyPatchModel:
    with open(source, "rb") as fh:
        data = fh.read()
    if data[:4] != _CHECKPOINT_MAGIC:
        raise ValueError(f"bad checkpoint magic: {data[:4]!r}")
    if len(data) < 16:
        raise ValueError("truncated checkpoint header")
    k, ph, pw = _CHECKPOINT_HEADER.unpack(data[4:16])
    floats = np.frombuffer(data[16:], dtype="<f8")
    if floats.size < k or (floats.size - k) % (k * ph * pw) != 0:
        raise ValueError("checkpoint size inconsistent with header")
    channels = (floats.size - k) // (k * ph * pw)
    if channels < 1:
        raise ValueError("checkpoint holds no weight data")
    dim = ph * pw * channels
    weights = floats[:k * dim].reshape(k, dim).copy()
    bias = floats[k * dim:].copy()
    return ToyPatchModel(weights=weights, bias=bias, patch_height=ph,
                         patch_width=pw, channels=int(channels))


def training_log_csv(losses: np.ndarray) -> str:
    lines = ["step,loss"]
    for i, loss in enumerate(losses, start=1):
        lines.append(f"{i},{loss:.9g}")
    return "\n".join(lines) + "\n"
