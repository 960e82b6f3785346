"""Parameter sweeps of the error bound and comparison against published
patch-accuracy measurements.

Sweeps substitute one varied parameter at a time into a base
configuration and evaluate the bound over a grid of square patch sizes;
output ordering is deterministic (varied value major, patch size minor)
and every row reproduces a direct :mod:`patchbound.bound` evaluation.
Resolution values vary height and width jointly (square images), and
stride values vary both axes jointly.

The built-in fixture table transcribes published average patch-wise
train/test accuracies for CIFAR-10, CIFAR-100, STL-10 and ImageNet-1k;
the ImageNet rows carry test accuracy only.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Sequence

from .bound import BoundParams, bound_envelope, image_bound

__all__ = [
    "SweepSpec",
    "SweepRow",
    "EmpiricalRecord",
    "CompareRow",
    "DATASET_PRESETS",
    "run_sweep",
    "builtin_fixtures",
    "compare_report",
    "compare_dataset",
    "sweep_csv",
    "compare_csv",
    "fixtures_csv",
]

VARY_CHOICES = ("patch_size", "n_classes", "stride", "n_train", "resolution")

# (n_train, n_classes, height, width, channels); the ImageNet preset uses
# the 256x256 working resolution of the sweep baseline, while its fixture
# rows below carry the 224x224 training resolution.
DATASET_PRESETS: dict[str, tuple[int, int, int, int, int]] = {
    "cifar10": (50_000, 10, 32, 32, 3),
    "cifar100": (50_000, 100, 32, 32, 3),
    "stl10": (5_000, 10, 96, 96, 3),
    "imagenet1k": (1_200_000, 1000, 256, 256, 3),
}


@dataclass(frozen=True)
class SweepSpec:
    base: BoundParams
    vary: str
    values: tuple[float, ...]
    patch_grid: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", tuple(self.values))
        object.__setattr__(self, "patch_grid", tuple(self.patch_grid))
        if self.vary not in VARY_CHOICES:
            raise ValueError(f"vary must be one of {VARY_CHOICES}, got {self.vary!r}")
        if not self.values:
            raise ValueError("values must be non-empty")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ValueError(f"values must be strictly increasing, got {self.values}")
        if self.vary != "patch_size":
            if not self.patch_grid:
                raise ValueError("patch_grid must be non-empty")
            if any(b <= a for a, b in zip(self.patch_grid, self.patch_grid[1:])):
                raise ValueError(
                    f"patch_grid must be strictly increasing, got {self.patch_grid}")


@dataclass(frozen=True)
class SweepRow:
    varied_value: float
    patch_size: int
    t_eff: float
    mesh_term: float
    roughness: float
    noise_term: float
    total: float


def _substitute(base: BoundParams, vary: str, value: float,
                patch_size: int) -> BoundParams:
    patched = dict(patch_height=patch_size, patch_width=patch_size)
    if vary == "patch_size":
        return replace(base, **patched)
    if vary == "n_classes":
        return replace(base, n_classes=int(value), **patched)
    if vary == "stride":
        return replace(base, stride_h=int(value), stride_w=int(value), **patched)
    if vary == "n_train":
        return replace(base, n_train=int(value), **patched)
    if vary == "resolution":
        return replace(base, height=int(value), width=int(value), **patched)
    raise ValueError(f"unknown vary {vary!r}")


def run_sweep(spec: SweepSpec) -> list[SweepRow]:
    """One row per (varied value, patch size), in deterministic order."""
    rows = []
    for value in spec.values:
        grid = ((int(value),) if spec.vary == "patch_size" else spec.patch_grid)
        for patch_size in grid:
            try:
                params = _substitute(spec.base, spec.vary, value, patch_size)
            except ValueError as exc:
                raise ValueError(
                    f"sweep row (varied_value={value:g}, patch_size={patch_size}) "
                    f"is invalid: {exc}") from None
            b = image_bound(params)
            rows.append(SweepRow(varied_value=float(value), patch_size=patch_size,
                                 t_eff=b.t_eff, mesh_term=b.mesh_term,
                                 roughness=b.roughness, noise_term=b.noise_term,
                                 total=b.total))
    return rows


@dataclass(frozen=True)
class EmpiricalRecord:
    dataset: str
    n_train: int
    n_classes: int
    height: int
    width: int
    patch_size: int
    train_accuracy: float | None
    test_accuracy: float

    def __post_init__(self) -> None:
        for name, acc in (("train_accuracy", self.train_accuracy),
                          ("test_accuracy", self.test_accuracy)):
            if acc is not None and not 0.0 <= acc <= 100.0:
                raise ValueError(f"{name} must be in [0, 100], got {acc}")
        if self.patch_size > min(self.height, self.width):
            raise ValueError(
                f"patch_size={self.patch_size} exceeds image "
                f"{self.height}x{self.width}")


def _rec(dataset, n, k, hw, rows):
    return tuple(EmpiricalRecord(dataset=dataset, n_train=n, n_classes=k,
                                 height=hw, width=hw, patch_size=t,
                                 train_accuracy=tr, test_accuracy=te)
                 for t, tr, te in rows)


_FIXTURES: tuple[EmpiricalRecord, ...] = (
    _rec("cifar10", 50_000, 10, 32,
         [(32, 100.0, 93.5), (24, 100.0, 94.6), (16, 100.0, 93.3),
          (8, 98.6, 84.2), (4, 84.8, 66.7)])
    + _rec("cifar100", 50_000, 100, 32,
           [(32, 99.9, 66.8), (24, 99.9, 75.0), (16, 99.9, 70.5),
            (8, 99.6, 56.7), (4, 69.4, 40.2)])
    + _rec("stl10", 5_000, 10, 96,
           [(96, 100.0, 70.3), (64, 100.0, 81.7), (48, 100.0, 83.0),
            (32, 98.2, 79.2), (16, 78.8, 67.6), (8, 58.6, 52.5),
            (4, 62.5, 46.3)])
    + _rec("imagenet1k", 1_200_000, 1000, 224,
           [(96, None, 72.4), (224, None, 78.4)])
)


def builtin_fixtures() -> tuple[EmpiricalRecord, ...]:
    """The transcribed published accuracy records (19 in total)."""
    return _FIXTURES


@dataclass(frozen=True)
class CompareRow:
    patch_size: int
    empirical_error: float
    predicted_envelope: float


def compare_report(records: Sequence[EmpiricalRecord],
                   envelope: Sequence[tuple[int, float]]) -> list[CompareRow]:
    """Empirical error vs. bound envelope at each record's patch size.

    The records and the envelope must describe the same dataset (shared
    N, K, H, W); rows come out sorted by patch size.
    """
    if not records:
        raise ValueError("no fixture records given")
    names = {r.dataset for r in records}
    if len(names) > 1:
        raise ValueError(f"records mix datasets: {sorted(names)}")
    if not envelope:
        raise ValueError("empty envelope")
    env = dict(envelope)
    rows = []
    for record in sorted(records, key=lambda r: r.patch_size):
        if record.patch_size not in env:
            raise ValueError(
                f"envelope has no value for patch size {record.patch_size}")
        rows.append(CompareRow(patch_size=record.patch_size,
                               empirical_error=1.0 - record.test_accuracy / 100.0,
                               predicted_envelope=env[record.patch_size]))
    return rows


def compare_dataset(dataset: str, stride: int = 4, alpha: float = 3.0,
                    c4: float = 0.5, c6: float = 1.0,
                    min_patch: int = 3) -> list[CompareRow]:
    """Comparison rows for a named fixture dataset (channels = 3).

    The envelope is built from the fixture rows' own geometry so both
    columns describe the same N, K, H, W.
    """
    records = [r for r in builtin_fixtures() if r.dataset == dataset]
    if not records:
        known = sorted({r.dataset for r in builtin_fixtures()})
        raise ValueError(f"unknown fixture dataset {dataset!r}; known: {known}")
    ref = records[0]
    params = BoundParams(n_train=ref.n_train, n_classes=ref.n_classes,
                         height=ref.height, width=ref.width, channels=3,
                         patch_height=ref.height, patch_width=ref.width,
                         stride_h=stride, stride_w=stride,
                         alpha=alpha, c4=c4, c6=c6)
    envelope = bound_envelope(params, max_patch=min(ref.height, ref.width),
                              min_patch=min_patch)
    return compare_report(records, envelope)


def _fmt(x: float) -> str:
    return f"{x:.9g}"


def sweep_csv(rows: Iterable[SweepRow]) -> str:
    lines = ["varied_value,patch_size,t_eff,mesh_term,roughness,noise_term,total"]
    for r in rows:
        lines.append(",".join([_fmt(r.varied_value), str(r.patch_size),
                               _fmt(r.t_eff), _fmt(r.mesh_term), _fmt(r.roughness),
                               _fmt(r.noise_term), _fmt(r.total)]))
    return "\n".join(lines) + "\n"


def compare_csv(rows: Iterable[CompareRow]) -> str:
    lines = ["patch_size,empirical_error,predicted_envelope"]
    for r in rows:
        lines.append(f"{r.patch_size},{_fmt(r.empirical_error)},"
                     f"{_fmt(r.predicted_envelope)}")
    return "\n".join(lines) + "\n"


def fixtures_csv(records: Iterable[EmpiricalRecord] | None = None) -> str:
    if records is None:
        records = builtin_fixtures()
    lines = ["dataset,n_train,n_classes,height,width,patch_size,"
             "train_accuracy,test_accuracy"]
    for r in records:
        train = "" if r.train_accuracy is None else _fmt(r.train_accuracy)
        lines.append(f"{r.dataset},{r.n_train},{r.n_classes},{r.height},"
                     f"{r.width},{r.patch_size},{train},{_fmt(r.test_accuracy)}")
    return "\n".join(lines) + "\n"
