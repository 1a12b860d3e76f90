"""Gaussian / Laplacian pyramids with the separable [1/4, 1/2, 1/4] kernel.

Level sizes follow ``ceil(n / 2)`` per axis so odd dimensions reconstruct
exactly; every border access is half-sample mirrored.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .imagecore import ShapeMismatchError, as_image, pad_mirror

KERNEL_1D = np.array([0.25, 0.5, 0.25])


def kernel5() -> np.ndarray:
    """The 3x3 weights ``w(m, n) = w~(m) w~(n)``; they sum to exactly 1."""
    return np.outer(KERNEL_1D, KERNEL_1D)


def _reduce_axis(a: np.ndarray, axis: int) -> np.ndarray:
    n = a.shape[axis]
    p = pad_mirror(a, 1, axes=(axis,))
    out_n = (n + 1) // 2
    # output k reads padded samples 2k, 2k+1, 2k+2 (original 2k-1, 2k, 2k+1)
    left = np.take(p, np.arange(0, 2 * out_n, 2), axis=axis)
    mid = np.take(p, np.arange(1, 2 * out_n + 1, 2), axis=axis)
    right = np.take(p, np.arange(2, 2 * out_n + 2, 2), axis=axis)
    return 0.25 * left + 0.5 * mid + 0.25 * right


def _expand_axis(a: np.ndarray, axis: int, target: int) -> np.ndarray:
    n = a.shape[axis]
    nxt = np.take(a, np.minimum(np.arange(n) + 1, n - 1), axis=axis)
    even = a
    odd = 0.5 * (a + nxt)
    shape = list(a.shape)
    shape[axis] = 2 * n
    out = np.empty(shape, dtype=np.float64)
    sl_even = [slice(None)] * a.ndim
    sl_odd = [slice(None)] * a.ndim
    sl_even[axis] = slice(0, None, 2)
    sl_odd[axis] = slice(1, None, 2)
    out[tuple(sl_even)] = even
    out[tuple(sl_odd)] = odd
    return np.take(out, np.arange(target), axis=axis)


def reduce(img: np.ndarray) -> np.ndarray:
    """One Gaussian-pyramid step: blur with ``w`` and keep even samples.

    Accepts ``(H, W)`` maps or ``(H, W, C)`` images and returns the same rank.
    """
    a = np.asarray(img, dtype=np.float64)
    return _reduce_axis(_reduce_axis(a, 0), 1)


def expand(img: np.ndarray, target_h: int, target_w: int) -> np.ndarray:
    """Upsample to ``(target_h, target_w)``.

    Implements ``4 * sum w(m, n) img((i-m)/2, (j-n)/2)`` over integer-coordinate
    terms; separably this is "copy on even samples, average neighbours on odd".
    """
    a = np.asarray(img, dtype=np.float64)
    h, w = a.shape[:2]
    if (target_h + 1) // 2 != h or (target_w + 1) // 2 != w:
        raise ShapeMismatchError(
            f"cannot expand {h}x{w} to {target_h}x{target_w}: level sizes must be ceil(target/2)"
        )
    return _expand_axis(_expand_axis(a, 0, target_h), 1, target_w)


@dataclass(frozen=True)
class PyramidPair:
    """Gaussian levels ``0..L0`` and Laplacian residuals ``0..L0-1`` of one image."""

    gaussian: list
    laplacian: list

    @property
    def levels(self) -> int:
        return len(self.laplacian)

    @property
    def sizes(self) -> list[tuple[int, int]]:
        return [g.shape[:2] for g in self.gaussian]


def level_sizes(h: int, w: int, levels: int) -> list[tuple[int, int]]:
    sizes = [(h, w)]
    for _ in range(levels):
        h, w = (h + 1) // 2, (w + 1) // 2
        sizes.append((h, w))
    return sizes


def gaussian_pyramid(img: np.ndarray, levels: int) -> list[np.ndarray]:
    out = [np.asarray(img, dtype=np.float64)]
    for _ in range(levels):
        out.append(reduce(out[-1]))
    return out


def build_pyramid(img: np.ndarray, levels: int = 1) -> PyramidPair:
    """Build Gaussian and Laplacian pyramids with ``levels`` (L0) reductions."""
    img = as_image(img)
    if levels < 1:
        raise ValueError("levels must be >= 1")
    if min(img.shape[:2]) < 2 ** levels:
        raise ShapeMismatchError(
            f"image {img.shape[1]}x{img.shape[0]} too small for {levels} pyramid levels"
        )
    gauss = gaussian_pyramid(img, levels)
    lap = []
    for lvl in range(levels):
        h, w = gauss[lvl].shape[:2]
        lap.append(gauss[lvl] - expand(gauss[lvl + 1], h, w))
    return PyramidPair(gaussian=gauss, laplacian=lap)


def collapse_levels(base: np.ndarray, laplacian: list, clamp: bool = True) -> np.ndarray:
    """Fold ``acc <- expand(acc) + laplacian[l]`` from the coarsest level down."""
    acc = np.asarray(base, dtype=np.float64)
    for lap in reversed(laplacian):
        h, w = lap.shape[:2]
        acc = expand(acc, h, w) + lap
    return np.clip(acc, 0.0, 1.0) if clamp else acc


def collapse(pair: PyramidPair, clamp: bool = True) -> np.ndarray:
    if len(pair.gaussian) != len(pair.laplacian) + 1:
        raise ShapeMismatchError("pyramid needs exactly one more Gaussian level than Laplacian levels")
    for lvl, lap in enumerate(pair.laplacian):
        coarse = pair.gaussian[lvl + 1].shape[:2]
        if ((lap.shape[0] + 1) // 2, (lap.shape[1] + 1) // 2) != coarse:
            raise ShapeMismatchError(f"level {lvl} size {lap.shape[:2]} inconsistent with {coarse}")
    return collapse_levels(pair.gaussian[-1], pair.laplacian, clamp=clamp)


def visualize_laplacian(lap: np.ndarray) -> np.ndarray:
    """Offset a signed residual by +0.5 so it can be written as an image."""
    return np.clip(lap + 0.5, 0.0, 1.0)
