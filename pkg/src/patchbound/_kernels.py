"""Hot numeric kernels: numba-compiled loops with a pure-numpy fallback.

Backend selection happens once at import time. Setting the environment
variable ``PATCHBOUND_NUMBA=0`` (also ``off``/``false``/``no``) forces the
numpy fallback; otherwise numba is used whenever it imports. Both
implementations of every kernel stay importable so they can be benchmarked
against each other (see ``benchmarks/bench_kernels.py``).

The nearest-distance kernel applies the same floating-point operations in
the same order on both paths, so its results are bit-identical across
backends. The training and grid-logit kernels promise determinism per
backend only (the numpy path reduces through BLAS).
"""

from __future__ import annotations

import os

import numpy as np

__all__ = [
    "NUMBA_ACTIVE",
    "active_backend",
    "min_sq_dists",
    "sgd_softmax",
    "grid_logits",
]


def _numba_requested() -> bool:
    flag = os.environ.get("PATCHBOUND_NUMBA", "").strip().lower()
    return flag not in ("0", "off", "false", "no")


# ---------------------------------------------------------------------------
# pure-numpy implementations


def min_sq_dists_numpy(samples: np.ndarray, queries: np.ndarray) -> np.ndarray:
    """Per-query minimum squared Euclidean distance to the sample set.

    Accumulates one dimension at a time so the op order matches the loop
    kernel exactly (bit-identical output).
    """
    n_q = queries.shape[0]
    out = np.empty(n_q, dtype=np.float64)
    # chunk queries to bound the (chunk, n_samples) temporaries
    chunk = 64
    for lo in range(0, n_q, chunk):
        q = queries[lo:lo + chunk]
        acc = np.zeros((q.shape[0], samples.shape[0]), dtype=np.float64)
        for d in range(samples.shape[1]):
            diff = samples[:, d][None, :] - q[:, d][:, None]
            acc += diff * diff
        out[lo:lo + chunk] = acc.min(axis=1)
    return out


def sgd_softmax_numpy(images, labels, img_idx, pos_r, pos_c, ph, pw,
                      lr, weights, bias, losses):
    """Mini-batch SGD on softmax cross-entropy over sampled patches.

    Updates ``weights``/``bias`` in place and fills ``losses`` with the
    per-step mini-batch loss. Pixel features are scaled to [0, 1].
    """
    steps, batch = img_idx.shape
    rr = np.arange(ph)
    cc = np.arange(pw)
    barange = np.arange(batch)
    for t in range(steps):
        ii = img_idx[t]
        rows = pos_r[t][:, None, None] + rr[None, :, None]
        cols = pos_c[t][:, None, None] + cc[None, None, :]
        x = images[ii[:, None, None], rows, cols, :].reshape(batch, -1) / 255.0
        z = x @ weights.T + bias
        z -= z.max(axis=1, keepdims=True)
        e = np.exp(z)
        p = e / e.sum(axis=1, keepdims=True)
        y = labels[ii]
        losses[t] = -np.log(p[barange, y]).mean()
        dz = p
        dz[barange, y] -= 1.0
        weights -= lr * (dz.T @ x) / batch
        bias -= lr * dz.sum(axis=0) / batch


def grid_logits_numpy(image, ph, pw, sh, sw, weights, bias):
    """Logits of every stride-(sh, sw) patch of one image, (rows, cols, K)."""
    h, w, c = image.shape
    rows = (h - ph) // sh + 1
    cols = (w - pw) // sw + 1
    s0, s1, s2 = image.strides
    win = np.lib.stride_tricks.as_strided(
        image,
        shape=(rows, cols, ph, pw, c),
        strides=(s0 * sh, s1 * sw, s0, s1, s2),
        writeable=False,
    )
    x = win.reshape(rows * cols, ph * pw * c) / 255.0
    return (x @ weights.T + bias).reshape(rows, cols, weights.shape[0])


# ---------------------------------------------------------------------------
# loop forms, compiled when numba is active


def _min_sq_dists_loops(samples, queries):
    n, dim = samples.shape
    n_q = queries.shape[0]
    out = np.empty(n_q, dtype=np.float64)
    for j in range(n_q):
        best = np.inf
        for i in range(n):
            s = 0.0
            for d in range(dim):
                diff = samples[i, d] - queries[j, d]
                s += diff * diff
            if s < best:
                best = s
        out[j] = best
    return out


def _sgd_softmax_loops(images, labels, img_idx, pos_r, pos_c, ph, pw,
                       lr, weights, bias, losses):
    steps, batch = img_idx.shape
    k, dim = weights.shape
    c = images.shape[3]
    x = np.empty(dim, dtype=np.float64)
    logits = np.empty(k, dtype=np.float64)
    probs = np.empty(k, dtype=np.float64)
    gw = np.empty((k, dim), dtype=np.float64)
    gb = np.empty(k, dtype=np.float64)
    for t in range(steps):
        loss = 0.0
        gw[:, :] = 0.0
        gb[:] = 0.0
        for b in range(batch):
            ni = img_idx[t, b]
            r0 = pos_r[t, b]
            c0 = pos_c[t, b]
            m = 0
            for dr in range(ph):
                for dc in range(pw):
                    for ch in range(c):
                        x[m] = images[ni, r0 + dr, c0 + dc, ch] / 255.0
                        m += 1
            for j in range(k):
                s = bias[j]
                for mm in range(dim):
                    s += weights[j, mm] * x[mm]
                logits[j] = s
            mx = logits[0]
            for j in range(1, k):
                if logits[j] > mx:
                    mx = logits[j]
            tot = 0.0
            for j in range(k):
                probs[j] = np.exp(logits[j] - mx)
                tot += probs[j]
            for j in range(k):
                probs[j] /= tot
            y = labels[ni]
            loss += -np.log(probs[y])
            for j in range(k):
                dz = probs[j] - (1.0 if j == y else 0.0)
                gb[j] += dz
                for mm in range(dim):
                    gw[j, mm] += dz * x[mm]
        losses[t] = loss / batch
        scale = lr / batch
        for j in range(k):
            bias[j] -= scale * gb[j]
            for mm in range(dim):
                weights[j, mm] -= scale * gw[j, mm]


def _grid_logits_loops(image, ph, pw, sh, sw, weights, bias):
    h, w, c = image.shape
    rows = (h - ph) // sh + 1
    cols = (w - pw) // sw + 1
    k = weights.shape[0]
    out = np.empty((rows, cols, k), dtype=np.float64)
    for gy in range(rows):
        for gx in range(cols):
            r0 = gy * sh
            c0 = gx * sw
            for j in range(k):
                out[gy, gx, j] = bias[j]
            m = 0
            for dr in range(ph):
                for dc in range(pw):
                    for ch in range(c):
                        v = image[r0 + dr, c0 + dc, ch] / 255.0
                        for j in range(k):
                            out[gy, gx, j] += weights[j, m] * v
                        m += 1
    return out


NUMBA_ACTIVE = False
min_sq_dists_numba = None
sgd_softmax_numba = None
grid_logits_numba = None

if _numba_requested():
    try:
        from numba import njit
    except ImportError:
        pass
    else:
        min_sq_dists_numba = njit(cache=True)(_min_sq_dists_loops)
        sgd_softmax_numba = njit(cache=True)(_sgd_softmax_loops)
        grid_logits_numba = njit(cache=True)(_grid_logits_loops)
        NUMBA_ACTIVE = True

if NUMBA_ACTIVE:
    min_sq_dists = min_sq_dists_numba
    sgd_softmax = sgd_softmax_numba
else:
    min_sq_dists = min_sq_dists_numpy
    sgd_softmax = sgd_softmax_numpy

# the strided-view + BLAS form beats the compiled loops on every tested
# size (see benchmarks/bench_kernels.py), so it serves both backends
grid_logits = grid_logits_numpy


def active_backend() -> str:
    return "numba" if NUMBA_ACTIVE else "numpy"
