"""O(1)-per-pixel window statistics with half-sample mirrored borders."""
from __future__ import annotations

import numpy as np

from .imagecore import pad_mirror


def box_sum(a: np.ndarray, r: int) -> np.ndarray:
    """Sum over the ``(2r+1)^2`` mirror-extended window, via a summed-area table."""
    a = np.asarray(a, dtype=np.float64)
    if r == 0:
        return a.copy()
    h, w = a.shape[:2]
    p = pad_mirror(a, r)
    sat = np.zeros((p.shape[0] + 1, p.shape[1] + 1) + p.shape[2:], dtype=np.float64)
    np.cumsum(np.cumsum(p, axis=0), axis=1, out=sat[1:, 1:])
    k = 2 * r + 1
    return sat[k:k + h, k:k + w] - sat[:h, k:k + w] - sat[k:k + h, :w] + sat[:h, :w]


def box_mean(a: np.ndarray, r: int) -> np.ndarray:
    return box_sum(a, r) / float((2 * r + 1) ** 2)


def _sliding_min_lastaxis(p: np.ndarray, k: int, n: int) -> np.ndarray:
    # van Herk / Gil-Werman: block-wise prefix and suffix minima
    length = p.shape[-1]
    nblocks = -(-length // k)
    pad = nblocks * k - length
    if pad:
        p = np.concatenate([p, np.full(p.shape[:-1] + (pad,), np.inf)], axis=-1)
    blocks = p.reshape(p.shape[:-1] + (nblocks, k))
    prefix = np.minimum.accumulate(blocks, axis=-1).reshape(p.shape)
    suffix = np.minimum.accumulate(blocks[..., ::-1], axis=-1)[..., ::-1].reshape(p.shape)
    return np.minimum(suffix[..., :n], prefix[..., k - 1:k - 1 + n])


def min_filter(a: np.ndarray, r: int) -> np.ndarray:
    """Minimum over the ``(2r+1)^2`` mirror-extended window of a 2-D map."""
    a = np.asarray(a, dtype=np.float64)
    if r == 0:
        return a.copy()
    k = 2 * r + 1
    h, w = a.shape
    rows = _sliding_min_lastaxis(pad_mirror(a, r, axes=(1,)), k, w)
    cols = _sliding_min_lastaxis(pad_mirror(rows, r, axes=(0,)).T, k, h)
    return cols.T
