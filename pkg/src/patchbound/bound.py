"""A priori generalization-error bound for classifiers trained on image patches.

The bound for one dataset/patch configuration is

    total = (mesh_term * roughness + noise_term) / sqrt(t_eff)

with

    t_eff      = ((H - H_T)/S_H + 1) * ((W - W_T)/S_W + 1)
    mesh_term  = c6 * (1 / (N * t_eff)) ** (alpha / D_T),  D_T = H_T*W_T*C
    roughness  = ((H*W) / (H_T*W_T)) ** (1 / D_T)
    noise_term = c4 * sqrt(K) * (-ln(H_T*W_T / (H*W)))

t_eff is kept real-valued here (no flooring); the physical patch
enumeration in :mod:`patchbound.geometry` floors the stride division.
All arithmetic is 64-bit binary floating point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

__all__ = [
    "BoundParams",
    "BoundBreakdown",
    "NoiseModelChoice",
    "DEFAULT_MODELS",
    "effective_patches",
    "patch_dim",
    "mesh_norm_bound",
    "roughness_factor",
    "label_noise_bound",
    "image_bound",
    "bound_envelope",
]

DEFAULT_ALPHA = 3.0
DEFAULT_C4 = 0.5
DEFAULT_C6 = 1.0


@dataclass(frozen=True)
class BoundParams:
    """All inputs of the error bound for one dataset/patch configuration."""

    n_train: int
    n_classes: int
    height: int
    width: int
    channels: int
    patch_height: int
    patch_width: int
    stride_h: int = 1
    stride_w: int = 1
    alpha: float = DEFAULT_ALPHA
    c4: float = DEFAULT_C4
    c6: float = DEFAULT_C6

    def __post_init__(self) -> None:
        if self.n_train < 1:
            raise ValueError(f"n_train must be >= 1, got {self.n_train}")
        if self.n_classes < 1:
            raise ValueError(f"n_classes must be >= 1, got {self.n_classes}")
        for name in ("height", "width", "channels"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        if not 1 <= self.patch_height <= self.height:
            raise ValueError(
                "patch exceeds image: patch_height=%d not in [1, height=%d]"
                % (self.patch_height, self.height))
        if not 1 <= self.patch_width <= self.width:
            raise ValueError(
                "patch exceeds image: patch_width=%d not in [1, width=%d]"
                % (self.patch_width, self.width))
        if self.stride_h < 1 or self.stride_w < 1:
            raise ValueError(
                f"strides must be >= 1, got ({self.stride_h}, {self.stride_w})")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")
        if self.c4 < 0:
            raise ValueError(f"c4 must be >= 0, got {self.c4}")
        if self.c6 < 0:
            raise ValueError(f"c6 must be >= 0, got {self.c6}")


@dataclass(frozen=True)
class BoundBreakdown:
    """Evaluated terms of the bound; ``total`` is the right-hand side."""

    t_eff: float
    d_t: int
    mesh_term: float
    roughness: float
    noise_term: float
    total: float


# Model functions for roughness and label noise. Each family is an
# extension point: exactly one form is selected per function.

_M1_FORMS = {"reciprocal": lambda theta: 1.0 / theta}
_M2_FORMS = {"sqrt": lambda k: math.sqrt(k)}
_M3_FORMS = {"neg-log": lambda theta: -math.log(theta)}


@dataclass(frozen=True)
class NoiseModelChoice:
    """Selected forms for the roughness (m1), class-count (m2) and
    label-noise (m3) model functions.

    m1 must be monotonically decreasing on (0, 1], m2 increasing, and m3
    decreasing with m3(1) = 0. The defaults are 1/theta, sqrt(K) and
    -ln(theta).
    """

    m1_kind: str = "reciprocal"
    m2_kind: str = "sqrt"
    m3_kind: str = "neg-log"

    def __post_init__(self) -> None:
        for kind, forms, name in ((self.m1_kind, _M1_FORMS, "m1"),
                                  (self.m2_kind, _M2_FORMS, "m2"),
                                  (self.m3_kind, _M3_FORMS, "m3")):
            if kind not in forms:
                raise ValueError(
                    f"unknown {name} kind {kind!r}; known: {sorted(forms)}")

    def m1(self, theta: float) -> float:
        return _M1_FORMS[self.m1_kind](theta)

    def m2(self, n_classes: int) -> float:
        return _M2_FORMS[self.m2_kind](n_classes)

    def m3(self, theta: float) -> float:
        return _M3_FORMS[self.m3_kind](theta)


DEFAULT_MODELS = NoiseModelChoice()


def effective_patches(params: BoundParams) -> float:
    """Real-valued count of effective patches; 1.0 for a full-size patch."""
    return (((params.height - params.patch_height) / params.stride_h + 1.0)
            * ((params.width - params.patch_width) / params.stride_w + 1.0))


def patch_dim(params: BoundParams) -> int:
    """Flattened patch dimension H_T * W_T * C."""
    return params.patch_height * params.patch_width * params.channels


def _area_ratio(params: BoundParams) -> float:
    return (params.patch_height * params.patch_width) / (params.height * params.width)


def mesh_norm_bound(params: BoundParams) -> float:
    """c6 * (1 / (N * t_eff)) ** (alpha / D_T); strictly decreasing in N."""
    return params.c6 * (1.0 / (params.n_train * effective_patches(params))) ** (
        params.alpha / patch_dim(params))


def roughness_factor(params: BoundParams,
                     models: NoiseModelChoice = DEFAULT_MODELS) -> float:
    """m1 applied to the per-dimension area ratio; 1.0 at full patch size."""
    return models.m1(_area_ratio(params) ** (1.0 / patch_dim(params)))


def label_noise_bound(params: BoundParams,
                      models: NoiseModelChoice = DEFAULT_MODELS) -> float:
    """c4 * m2(K) * m3(area ratio); exactly 0 at full patch size."""
    # +0.0 folds the -0.0 produced by -log(1.0)
    return params.c4 * models.m2(params.n_classes) * models.m3(_area_ratio(params)) + 0.0


def image_bound(params: BoundParams,
                models: NoiseModelChoice = DEFAULT_MODELS) -> BoundBreakdown:
    """Evaluate the full image-level bound and return its term breakdown."""
    t_eff = effective_patches(params)
    mesh = mesh_norm_bound(params)
    rough = roughness_factor(params, models)
    noise = label_noise_bound(params, models)
    total = (mesh * rough + noise) / math.sqrt(t_eff)
    return BoundBreakdown(
        t_eff=t_eff,
        d_t=patch_dim(params),
        mesh_term=mesh,
        roughness=rough,
        noise_term=noise,
        total=total,
    )


def bound_envelope(params_at_full: BoundParams, max_patch: int,
                   min_patch: int = 3,
                   models: NoiseModelChoice = DEFAULT_MODELS,
                   ) -> list[tuple[int, float]]:
    """Running minimum of the bound over square patch sizes.

    For each integer T in [min_patch, max_patch], envelope(T) is the
    minimum of ``image_bound`` with H_T = W_T = T' over T' in
    [min_patch, T]. Returns an empty list when min_patch > max_patch.
    """
    if min_patch < 1:
        raise ValueError(f"min_patch must be >= 1, got {min_patch}")
    limit = min(params_at_full.height, params_at_full.width)
    if max_patch > limit:
        raise ValueError(
            f"max_patch={max_patch} exceeds min(height, width)={limit}")
    out: list[tuple[int, float]] = []
    best = math.inf
    for size in range(min_patch, max_patch + 1):
        p = replace(params_at_full, patch_height=size, patch_width=size)
        best = min(best, image_bound(p, models).total)
        out.append((size, best))
    return out
