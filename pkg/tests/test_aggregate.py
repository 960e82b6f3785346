import io

import numpy as np
import pytest

from patchbound.aggregate import (
    average_predict,
    build_heatmap,
    patchwise_accuracy,
    predictions_csv,
    render_heatmap,
)
from patchbound.plg import ImageLogits, LogitSet

from oracles import brute_force_mean_argmax, quantized_logits


def entry(logits, image_id=0, label=None):
    return ImageLogits(image_id=image_id, label=label,
                       logits=np.asarray(logits, dtype=np.float32))


def unit_patch_set(entries, k, h, w):
    """1x1-patch stride-1 geometry: the grid is exactly h x w."""
    return LogitSet(n_classes=k, height=h, width=w, patch_height=1,
                    patch_width=1, stride_h=1, stride_w=1,
                    images=tuple(entries))


class TestAveragePredict:
    def test_single_patch_is_its_argmax(self):
        p = average_predict(entry([[[0.1, 0.9, -2.0]]]))
        assert p.predicted_class == 1
        assert np.allclose(p.mean_logits, [0.1, 0.9, -2.0], atol=1e-7)

    def test_tie_breaks_to_lowest_index(self):
        p = average_predict(entry([[[1.0, 0.0], [0.0, 1.0]]]))
        assert p.mean_logits.tolist() == [0.5, 0.5]
        assert p.predicted_class == 0

    def test_three_patch_hand_case(self):
        p = average_predict(entry([[[2.0, 0.0], [0.0, 1.0], [0.0, 2.0]]]))
        assert p.predicted_class == 1
        assert p.mean_logits == pytest.approx([2 / 3, 1.0], rel=1e-12)

    def test_matches_brute_force_on_quantized_corpus(self):
        rng = np.random.default_rng(21)
        for _ in range(200):
            rows = int(rng.integers(1, 20))
            cols = int(rng.integers(1, 20))
            k = int(rng.integers(1, 11))
            grid = quantized_logits(rng, (rows, cols, k))
            means, best = brute_force_mean_argmax(grid)
            p = average_predict(entry(grid))
            assert p.predicted_class == best
            assert p.mean_logits.tolist() == means.tolist()

    def test_shift_invariance_of_decision(self):
        rng = np.random.default_rng(23)
        for _ in range(50):
            grid = rng.normal(size=(6, 5, 4)).astype(np.float32)
            shifted = (grid.astype(np.float64) + 13.25).astype(np.float32)
            assert (average_predict(entry(grid)).predicted_class
                    == average_predict(entry(shifted)).predicted_class)

    def test_permutation_within_tolerance(self):
        rng = np.random.default_rng(25)
        grid = rng.normal(size=(16, 16, 5)).astype(np.float32)
        base = average_predict(entry(grid)).mean_logits
        flat = grid.reshape(-1, 5)
        for _ in range(10):
            shuffled = flat[rng.permutation(len(flat))].reshape(16, 16, 5)
            mean = average_predict(entry(shuffled)).mean_logits
            assert np.allclose(mean, base, rtol=1e-6)


class TestPatchwiseAccuracy:
    def build(self, labels, hits):
        entries = []
        for i, (label, hit) in enumerate(zip(labels, hits)):
            logits = np.zeros((2, 2, 3), dtype=np.float32)
            winner = label if hit else (label + 1) % 3
            logits[:, :, winner] = 1.0
            entries.append(ImageLogits(i, label, logits))
        return LogitSet(n_classes=3, height=2, width=2, patch_height=1,
                        patch_width=1, stride_h=1, stride_w=1,
                        images=tuple(entries))

    def test_all_correct(self):
        assert patchwise_accuracy(self.build([0, 1, 2], [1, 1, 1])) == 100.0

    def test_none_correct(self):
        assert patchwise_accuracy(self.build([0, 1, 2], [0, 0, 0])) == 0.0

    def test_three_of_four(self):
        assert patchwise_accuracy(self.build([0, 1, 2, 0], [1, 1, 1, 0])) == 75.0

    def test_missing_label_rejected(self):
        s = unit_patch_set([entry(np.zeros((2, 2, 3)), image_id=5)], 3, 2, 2)
        with pytest.raises(ValueError, match="image 5 has no label"):
            patchwise_accuracy(s)


class TestHeatMap:
    def test_single_pixel(self):
        s = unit_patch_set([entry([[[3.5]]])], 1, 1, 1)
        hm = build_heatmap(s, 0, 0)
        assert hm.values.tolist() == [[3.5]]

    def test_2x2_patch_on_3x3_image(self):
        logits = np.ones((2, 2, 1), dtype=np.float32)
        s = LogitSet(n_classes=1, height=3, width=3, patch_height=2,
                     patch_width=2, stride_h=1, stride_w=1,
                     images=(ImageLogits(0, None, logits),))
        hm = build_heatmap(s, 0, 0)
        expected = np.zeros((3, 3))
        expected[:2, :2] = 1.0
        assert np.array_equal(hm.values, expected)

    def test_class_out_of_range(self):
        s = unit_patch_set([entry(np.zeros((2, 2, 3)))], 3, 2, 2)
        with pytest.raises(ValueError, match="class index"):
            build_heatmap(s, 0, 3)

    def test_dimensions_and_nonzero_count(self):
        rng = np.random.default_rng(31)
        logits = rng.uniform(1.0, 2.0, size=(3, 5, 2)).astype(np.float32)
        s = LogitSet(n_classes=2, height=9, width=11, patch_height=5,
                     patch_width=3, stride_h=2, stride_w=2,
                     images=(ImageLogits(0, None, logits),))
        hm = build_heatmap(s, 0, 1)
        assert hm.values.shape == (9, 11)
        assert int(np.count_nonzero(hm.values)) == 15


class TestRender:
    def build_map(self, values):
        logits = np.asarray(values, dtype=np.float32)[:, :, None]
        h, w = logits.shape[:2]
        s = unit_patch_set([entry(logits)], 1, h, w)
        return build_heatmap(s, 0, 0)

    def parse_pgm(self, raw):
        magic, dims, maxval, pixels = raw.split(b"\n", 3)
        w, h = map(int, dims.split())
        return magic, w, h, int(maxval), np.frombuffer(pixels, dtype=np.uint8)

    def test_affine_normalization(self):
        buf = io.BytesIO()
        render_heatmap(self.build_map([[-1.0, 0.0, 1.0]]), buf)
        magic, w, h, maxval, pix = self.parse_pgm(buf.getvalue())
        assert (magic, w, h, maxval) == (b"P5", 3, 1, 255)
        assert pix.tolist() == [0, 128, 255]

    def test_constant_map_is_mid_gray(self):
        buf = io.BytesIO()
        render_heatmap(self.build_map([[2.0, 2.0], [2.0, 2.0]]), buf)
        *_, pix = self.parse_pgm(buf.getvalue())
        assert set(pix.tolist()) == {128}

    def test_header_dimensions(self, tmp_path):
        path = tmp_path / "m.pgm"
        render_heatmap(self.build_map([[0.0, 1.0, 2.0], [3.0, 4.0, 5.0],
                                       [1.0, 1.0, 1.0]]), path)
        magic, w, h, maxval, pix = self.parse_pgm(path.read_bytes())
        assert (w, h) == (3, 3)
        assert len(pix) == 9


class TestPredictionsCsv:
    def test_table(self):
        a = np.zeros((1, 1, 2), dtype=np.float32)
        a[0, 0, 1] = 2.0
        b = np.zeros((1, 1, 2), dtype=np.float32)
        b[0, 0, 0] = 1.0
        s = unit_patch_set([ImageLogits(0, 1, a), ImageLogits(1, 1, b),
                            ImageLogits(2, None, a)], 2, 1, 1)
        assert predictions_csv(s) == (
            "image_id,label,predicted,correct\n"
            "0,1,1,1\n"
            "1,1,0,0\n"
            "2,,1,\n")
