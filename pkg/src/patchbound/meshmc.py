"""Monte-Carlo estimation of nearest-training-sample distances.

For uniform i.i.d. points in the unit cube [0, 1]^D the mean distance
from a random query to its nearest of N samples decays like N^(-1/D);
these experiments measure that decay and fit its exponent, which is how
the curse of dimensionality shows up: at large D the fitted exponent is
tiny and adding samples barely shrinks the distance.

Randomness comes from the counter-based Philox bit generator seeded
through numpy's SeedSequence with the tuple (seed, trial, count_index),
so every (trial, N) cell reproduces bit-for-bit and is independent of
execution order. Nearest-neighbor search is a brute-force scan (desk
scale); the hot loop lives in :mod:`patchbound._kernels`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import _kernels

__all__ = [
    "MeshExperiment",
    "MeshMeasurement",
    "FitResult",
    "estimate_mesh_norm",
    "run_experiment",
    "fit_scaling_exponent",
    "measurements_csv",
    "fit_csv",
]

_NORMS = ("euclidean",)

_MAX_REDRAWS = 8


@dataclass(frozen=True)
class MeshExperiment:
    dimension: int
    sample_counts: tuple[int, ...]
    queries: int = 100
    trials: int = 20
    seed: int = 0
    norm: str = "euclidean"

    def __post_init__(self) -> None:
        object.__setattr__(self, "sample_counts", tuple(self.sample_counts))
        if self.dimension < 1:
            raise ValueError(f"dimension must be >= 1, got {self.dimension}")
        if len(self.sample_counts) < 2:
            raise ValueError("need at least 2 sample counts")
        if any(n < 1 for n in self.sample_counts):
            raise ValueError("sample counts must be >= 1")
        if any(b <= a for a, b in zip(self.sample_counts, self.sample_counts[1:])):
            raise ValueError(
                f"sample counts must be strictly increasing, got {self.sample_counts}")
        if self.queries < 1:
            raise ValueError(f"queries must be >= 1, got {self.queries}")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if self.norm not in _NORMS:
            raise ValueError(f"unknown norm {self.norm!r}; known: {_NORMS}")


@dataclass(frozen=True)
class MeshMeasurement:
    dimension: int
    n_samples: int
    trial: int
    mean_mu: float


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    residual: float
    redraws: int = 0


def _rng(seed_parts: Sequence[int]) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed_parts)))


def estimate_mesh_norm(dimension: int, n_samples: int, queries: int,
                       seed: int | Sequence[int]) -> float:
    """Mean over queries of the distance to the nearest of n_samples points.

    Samples are drawn first, then queries, from one Philox stream.
    """
    if dimension < 1 or n_samples < 1 or queries < 1:
        raise ValueError("dimension, n_samples and queries must be >= 1")
    parts = (seed,) if isinstance(seed, int) else tuple(seed)
    g = _rng(parts)
    samples = g.random((n_samples, dimension))
    query_points = g.random((queries, dimension))
    d2 = _kernels.min_sq_dists(samples, query_points)
    return float(np.sqrt(d2).mean())


def run_experiment(experiment: MeshExperiment) -> tuple[list[MeshMeasurement], int]:
    """All (N, trial) measurements plus the count of zero-mean redraws.

    A mean of exactly 0 (coincident points) would break the log fit; the
    cell is redrawn with an extended seed and the redraw is counted.
    """
    rows: list[MeshMeasurement] = []
    redraws = 0
    for trial in range(experiment.trials):
        for idx, n in enumerate(experiment.sample_counts):
            mu = estimate_mesh_norm(experiment.dimension, n, experiment.queries,
                                    (experiment.seed, trial, idx))
            attempt = 0
            while mu == 0.0 and attempt < _MAX_REDRAWS:
                attempt += 1
                redraws += 1
                mu = estimate_mesh_norm(
                    experiment.dimension, n, experiment.queries,
                    (experiment.seed, trial, idx, attempt))
            if mu == 0.0:
                raise ArithmeticError(
                    f"mean distance still 0 after {_MAX_REDRAWS} redraws "
                    f"(D={experiment.dimension}, N={n}, trial={trial})")
            rows.append(MeshMeasurement(experiment.dimension, n, trial, mu))
    return rows, redraws


def fit_scaling_exponent(experiment: MeshExperiment,
                         measurements: Iterable[MeshMeasurement] | None = None,
                         ) -> FitResult:
    """Least-squares fit of ln(mean mu) against ln N.

    Per-trial means are averaged per N before fitting. The slope estimates
    -1/D; the intercept estimates the log of the decay constant. The
    residual is the root-mean-square deviation of the fitted line.
    """
    redraws = 0
    if measurements is None:
        measurements, redraws = run_experiment(experiment)
    rows = list(measurements)
    log_n = []
    log_mu = []
    for n in experiment.sample_counts:
        per_trial = [m.mean_mu for m in rows if m.n_samples == n]
        if not per_trial:
            raise ValueError(f"no measurements for N={n}")
        log_n.append(np.log(n))
        log_mu.append(np.log(np.mean(per_trial)))
    slope, intercept = np.polyfit(log_n, log_mu, 1)
    fitted = slope * np.asarray(log_n) + intercept
    residual = float(np.sqrt(np.mean((np.asarray(log_mu) - fitted) ** 2)))
    return FitResult(slope=float(slope), intercept=float(intercept),
                     residual=residual, redraws=redraws)


def measurements_csv(rows: Iterable[MeshMeasurement]) -> str:
    lines = ["D,N,trial,mean_mu"]
    for m in rows:
        lines.append(f"{m.dimension},{m.n_samples},{m.trial},{m.mean_mu:.9g}")
    return "\n".join(lines) + "\n"


def fit_csv(dimension: int, fit: FitResult) -> str:
    return ("D,slope,intercept,residual\n"
            f"{dimension},{fit.slope:.9g},{fit.intercept:.9g},{fit.residual:.9g}\n")
