import numpy as np
import pytest

from patchbound import _kernels
from patchbound.meshmc import (
    FitResult,
    MeshExperiment,
    estimate_mesh_norm,
    fit_csv,
    fit_scaling_exponent,
    measurements_csv,
    run_experiment,
)


class TestEstimate:
    def test_coincident_point_gives_zero(self):
        samples = np.array([[0.5]])
        queries = np.array([[0.5]])
        assert _kernels.min_sq_dists(samples, queries)[0] == 0.0

    def test_single_sample_is_plain_distance(self):
        # replay the generator: N=1 draws one sample then the queries
        seed = (99, 0, 0)
        g = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
        sample = g.random((1, 5))
        queries = g.random((7, 5))
        expected = float(np.sqrt(((queries - sample) ** 2).sum(axis=1)).mean())
        assert estimate_mesh_norm(5, 1, 7, seed) == expected

    def test_deterministic_given_seed(self):
        a = estimate_mesh_norm(3, 500, 50, 42)
        b = estimate_mesh_norm(3, 500, 50, 42)
        assert a == b
        assert a != estimate_mesh_norm(3, 500, 50, 43)

    def test_unit_square_magnitude(self):
        # trial-averaged mean distance for D=2, N=10^4 sits near 0.5/sqrt(N)
        mus = [estimate_mesh_norm(2, 10_000, 100, (7, t, 0)) for t in range(20)]
        assert 0.0045 < np.mean(mus) < 0.008

    def test_validates_arguments(self):
        with pytest.raises(ValueError):
            estimate_mesh_norm(0, 10, 10, 0)


class TestExperiment:
    def exp(self, **kw):
        base = dict(dimension=2, sample_counts=(100, 1000), queries=40,
                    trials=5, seed=1)
        base.update(kw)
        return MeshExperiment(**base)

    def test_validation(self):
        with pytest.raises(ValueError, match="strictly increasing"):
            self.exp(sample_counts=(100, 100))
        with pytest.raises(ValueError, match="at least 2"):
            self.exp(sample_counts=(100,))
        with pytest.raises(ValueError, match="dimension"):
            self.exp(dimension=0)
        with pytest.raises(ValueError, match="norm"):
            self.exp(norm="manhattan")

    def test_rows_and_determinism(self):
        rows1, redraws1 = run_experiment(self.exp())
        rows2, redraws2 = run_experiment(self.exp())
        assert rows1 == rows2
        assert redraws1 == redraws2 == 0
        assert len(rows1) == 2 * 5
        assert {(m.n_samples, m.trial) for m in rows1} == {
            (n, t) for n in (100, 1000) for t in range(5)}

    def test_mean_mu_shrinks_with_n_in_most_trials(self):
        exp = self.exp(sample_counts=(100, 10_000), trials=20, queries=100,
                       seed=3)
        rows, _ = run_experiment(exp)
        wins = 0
        for t in range(20):
            small = next(m for m in rows if m.trial == t and m.n_samples == 100)
            big = next(m for m in rows if m.trial == t and m.n_samples == 10_000)
            wins += int(big.mean_mu < small.mean_mu)
        assert wins >= 19


class TestFit:
    def test_exponent_magnitude_decreases_with_dimension(self):
        slopes = {}
        for dim in (1, 2, 4, 8, 16):
            exp = MeshExperiment(dimension=dim,
                                 sample_counts=(100, 1000, 10_000),
                                 queries=100, trials=10, seed=7)
            slopes[dim] = fit_scaling_exponent(exp).slope
        magnitudes = [abs(slopes[d]) for d in (1, 2, 4, 8, 16)]
        assert all(b < a for a, b in zip(magnitudes, magnitudes[1:]))
        assert all(s < 0 for s in slopes.values())

    def test_fit_reuses_measurements(self):
        exp = MeshExperiment(dimension=2, sample_counts=(100, 1000),
                             queries=30, trials=4, seed=5)
        rows, _ = run_experiment(exp)
        assert fit_scaling_exponent(exp, rows) == fit_scaling_exponent(
            exp, rows)

    def test_perfect_power_law_fit(self):
        # synthetic measurements on an exact line recover slope/intercept
        from patchbound.meshmc import MeshMeasurement
        exp = MeshExperiment(dimension=1, sample_counts=(10, 100, 1000),
                             queries=1, trials=1, seed=0)
        rows = [MeshMeasurement(1, n, 0, 0.5 * n ** -0.25) for n in
                exp.sample_counts]
        fit = fit_scaling_exponent(exp, rows)
        assert fit.slope == pytest.approx(-0.25, abs=1e-12)
        assert fit.intercept == pytest.approx(np.log(0.5), abs=1e-12)
        assert fit.residual == pytest.approx(0.0, abs=1e-12)


class TestCsv:
    def test_measurements_csv(self):
        exp = MeshExperiment(dimension=2, sample_counts=(10, 20), queries=5,
                             trials=2, seed=0)
        rows, _ = run_experiment(exp)
        text = measurements_csv(rows)
        lines = text.strip().split("\n")
        assert lines[0] == "D,N,trial,mean_mu"
        assert len(lines) == 1 + 4

    def test_fit_csv(self):
        text = fit_csv(2, FitResult(slope=-0.5, intercept=-0.6, residual=0.01))
        assert text == "D,slope,intercept,residual\n2,-0.5,-0.6,0.01\n"
