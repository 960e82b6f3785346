"""Checks of the bound terms against an arbitrary-precision reference."""

import math
from dataclasses import replace

import numpy as np
import pytest

from patchbound.bound import (
    BoundParams,
    NoiseModelChoice,
    bound_envelope,
    effective_patches,
    image_bound,
    label_noise_bound,
    mesh_norm_bound,
    roughness_factor,
)

from oracles import mp_bound_terms, rel_err

TOL = 1e-12


def params(n=50000, k=10, h=32, w=32, c=3, ht=8, wt=8, sh=4, sw=4, **kw):
    return BoundParams(n_train=n, n_classes=k, height=h, width=w, channels=c,
                       patch_height=ht, patch_width=wt, stride_h=sh,
                       stride_w=sw, **kw)


def mp_ref(p: BoundParams):
    return mp_bound_terms(p.n_train, p.n_classes, p.height, p.width, p.channels,
                          p.patch_height, p.patch_width, p.stride_h, p.stride_w,
                          alpha=p.alpha, c4=repr(p.c4), c6=repr(p.c6))


def random_params(rng: np.random.Generator) -> BoundParams:
    h = int(rng.integers(4, 128))
    w = int(rng.integers(4, 128))
    return params(
        n=int(rng.integers(1, 10**7)),
        k=int(rng.integers(2, 2000)),
        h=h, w=w,
        c=int(rng.integers(1, 4)),
        ht=int(rng.integers(1, h + 1)),
        wt=int(rng.integers(1, w + 1)),
        sh=int(rng.integers(1, 9)),
        sw=int(rng.integers(1, 9)),
    )


class TestEffectivePatches:
    def test_stride_4_grid(self):
        assert effective_patches(params()) == 49.0

    def test_full_image_patch(self):
        assert effective_patches(params(ht=32, wt=32)) == 1.0

    def test_large_grid(self):
        assert effective_patches(params(h=256, w=256, ht=32, wt=32)) == 3249.0

    def test_non_integer_when_stride_does_not_divide(self):
        p = params(h=32, w=32, ht=3, wt=3, sh=4, sw=4)
        assert effective_patches(p) == pytest.approx(8.25 * 8.25, rel=0, abs=0)


class TestMeshNormBound:
    def test_full_size_cifar(self):
        p = params(ht=32, wt=32)
        assert rel_err(mesh_norm_bound(p), mp_ref(p)["mesh"]) <= TOL

    def test_zero_coefficient(self):
        assert mesh_norm_bound(params(c6=0.0)) == 0.0

    def test_stride_4_cifar(self):
        p = params()
        assert rel_err(mesh_norm_bound(p), mp_ref(p)["mesh"]) <= TOL
        assert mesh_norm_bound(p) == pytest.approx(0.794637909, rel=1e-8)

    def test_decreasing_in_n(self):
        totals = [mesh_norm_bound(params(n=n)) for n in (10, 100, 10000, 10**6)]
        assert all(b > a for a, b in zip(totals[1:], totals))


class TestRoughnessFactor:
    def test_full_size_is_one(self):
        assert roughness_factor(params(ht=32, wt=32)) == 1.0

    def test_cifar_patch8(self):
        p = params()
        assert rel_err(roughness_factor(p), mp_ref(p)["rough"]) <= TOL
        assert roughness_factor(p) == pytest.approx(1.01454533, rel=1e-8)

    def test_large_image(self):
        p = params(h=256, w=256, ht=32, wt=32)
        assert roughness_factor(p) == pytest.approx(1.00135472, rel=1e-8)

    def test_at_least_one(self):
        rng = np.random.default_rng(7)
        assert all(roughness_factor(random_params(rng)) >= 1.0 for _ in range(100))


class TestLabelNoiseBound:
    def test_full_size_exactly_zero(self):
        for k in (2, 10, 1000):
            v = label_noise_bound(params(k=k, ht=32, wt=32))
            assert v == 0.0
            assert math.copysign(1.0, v) == 1.0

    def test_cifar_patch8(self):
        p = params()
        assert rel_err(label_noise_bound(p), mp_ref(p)["noise"]) <= TOL
        assert label_noise_bound(p) == pytest.approx(4.38384769, rel=1e-8)

    def test_imagenet_patch128(self):
        p = params(n=1200000, k=1000, h=256, w=256, ht=128, wt=128)
        assert label_noise_bound(p) == pytest.approx(21.9192384, rel=1e-8)

    def test_increasing_in_k_and_shrinking_patch(self):
        assert (label_noise_bound(params(k=100))
                > label_noise_bound(params(k=10)))
        assert (label_noise_bound(params(ht=4, wt=4))
                > label_noise_bound(params(ht=8, wt=8)))


class TestImageBound:
    def test_cifar10_reference_value(self):
        b = image_bound(params())
        assert rel_err(b.total, mp_ref(params())["total"]) <= TOL
        assert b.total == pytest.approx(0.741434839, rel=1e-8)

    def test_full_size_collapse(self):
        b = image_bound(params(ht=32, wt=32, c4=123.0))
        assert b.t_eff == 1.0
        assert b.roughness == 1.0
        assert b.noise_term == 0.0
        assert b.total == b.mesh_term

    def test_sweep_baseline_reference_value(self):
        p = params(n=1200000, k=1000, h=256, w=256, ht=128, wt=128)
        b = image_bound(p)
        assert rel_err(b.total, mp_ref(p)["total"]) <= TOL
        assert b.total == pytest.approx(0.694484432, rel=1e-8)

    def test_breakdown_identity_within_4_ulp(self):
        rng = np.random.default_rng(11)
        for _ in range(300):
            b = image_bound(random_params(rng))
            lhs = b.total * math.sqrt(b.t_eff)
            rhs = b.mesh_term * b.roughness + b.noise_term
            assert abs(lhs - rhs) <= 4 * np.spacing(max(abs(lhs), abs(rhs)))

    def test_oracle_agreement_on_random_configs(self):
        rng = np.random.default_rng(13)
        for _ in range(200):
            p = random_params(rng)
            assert rel_err(image_bound(p).total, mp_ref(p)["total"]) <= TOL


class TestMonotonicity:
    def test_strictly_increasing_in_k_at_interior_patch(self):
        totals = [image_bound(params(k=k)).total for k in (2, 10, 100, 1000)]
        assert all(b > a for a, b in zip(totals, totals[1:]))

    def test_constant_in_k_at_full_size(self):
        totals = {image_bound(params(k=k, ht=32, wt=32)).total
                  for k in (2, 10, 1000)}
        assert len(totals) == 1

    def test_non_increasing_in_n(self):
        rng = np.random.default_rng(17)
        for _ in range(50):
            p = random_params(rng)
            small, large = image_bound(p).total, image_bound(
                replace(p, n_train=p.n_train * 10)).total
            assert large <= small
            if image_bound(p).mesh_term > 0:
                assert large < small

    def test_stride_never_decreases_total(self):
        rng = np.random.default_rng(19)
        for _ in range(50):
            p = random_params(rng)
            if p.patch_height == p.height and p.patch_width == p.width:
                continue
            widened = replace(p, stride_h=p.stride_h + 1, stride_w=p.stride_w + 2)
            assert image_bound(widened).total >= image_bound(p).total


class TestEnvelope:
    def cifar(self):
        return params(ht=32, wt=32)

    def test_single_element_minimum(self):
        env = bound_envelope(self.cifar(), max_patch=3, min_patch=3)
        assert env == [(3, image_bound(params(ht=3, wt=3)).total)]

    def test_pointwise_below_raw_curve_and_non_increasing(self):
        env = bound_envelope(self.cifar(), max_patch=32)
        values = [v for _, v in env]
        assert all(b <= a for a, b in zip(values, values[1:]))
        for size, value in env:
            assert value <= image_bound(params(ht=size, wt=size)).total

    def test_brute_force_running_minimum(self):
        env = dict(bound_envelope(self.cifar(), max_patch=32))
        raw = {t: image_bound(params(ht=t, wt=t)).total for t in range(3, 33)}
        for t in range(3, 33):
            assert env[t] == min(raw[s] for s in range(3, t + 1))

    def test_empty_range(self):
        assert bound_envelope(self.cifar(), max_patch=4, min_patch=5) == []

    def test_invalid_bounds(self):
        with pytest.raises(ValueError, match="max_patch"):
            bound_envelope(self.cifar(), max_patch=33)
        with pytest.raises(ValueError, match="min_patch"):
            bound_envelope(self.cifar(), max_patch=32, min_patch=0)


class TestNoiseModelChoice:
    def test_monotonicity(self):
        models = NoiseModelChoice()
        thetas = np.linspace(0.01, 1.0, 50)
        m1 = [models.m1(t) for t in thetas]
        m3 = [models.m3(t) for t in thetas]
        assert all(b < a for a, b in zip(m1, m1[1:]))
        assert all(b < a for a, b in zip(m3, m3[1:]))
        m2 = [models.m2(k) for k in range(2, 50)]
        assert all(b > a for a, b in zip(m2, m2[1:]))

    def test_m3_of_one_is_zero(self):
        assert NoiseModelChoice().m3(1.0) == 0.0

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError, match="unknown m1 kind"):
            NoiseModelChoice(m1_kind="cubic")


class TestValidation:
    def test_patch_exceeds_image(self):
        with pytest.raises(ValueError, match="patch exceeds image"):
            params(ht=33)
        with pytest.raises(ValueError, match="patch exceeds image"):
            params(wt=40)

    @pytest.mark.parametrize("kw,msg", [
        (dict(n=0), "n_train"),
        (dict(k=0), "n_classes"),
        (dict(h=0, ht=1, wt=1), "height"),
        (dict(c=0), "channels"),
        (dict(sh=0), "strides"),
        (dict(alpha=0.0), "alpha"),
        (dict(c4=-1.0), "c4"),
        (dict(c6=-0.5), "c6"),
    ])
    def test_field_invariants(self, kw, msg):
        with pytest.raises(ValueError, match=msg):
            params(**kw)

    def test_k1_permitted(self):
        assert image_bound(params(k=1)).total > 0
