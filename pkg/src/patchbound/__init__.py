"""patchbound: a priori error-bound numerics and patch-inference tooling
for classifiers trained on image patches."""

from .bound import (
    BoundBreakdown,
    BoundParams,
    NoiseModelChoice,
    bound_envelope,
    effective_patches,
    image_bound,
    label_noise_bound,
    mesh_norm_bound,
    roughness_factor,
)
from .geometry import PatchGrid, center_pixel, enumerate_grid, extract_patch
from .plg import ImageLogits, LogitSet, PLGError, read_logits, write_logits
from .aggregate import (
    HeatMap,
    Prediction,
    average_predict,
    build_heatmap,
    patchwise_accuracy,
    render_heatmap,
)
from .meshmc import MeshExperiment, estimate_mesh_norm, fit_scaling_exponent
from .sweep import (
    EmpiricalRecord,
    SweepSpec,
    builtin_fixtures,
    compare_dataset,
    compare_report,
    run_sweep,
)
from .toytrain import (
    SyntheticTask,
    ToyPatchModel,
    TrainSettings,
    evaluate,
    export_logits,
    generate_dataset,
    train,
)

__version__ = "0.1.0"
