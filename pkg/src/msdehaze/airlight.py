"""Global atmospheric light by hierarchical quad-tree search."""
from __future__ import annotations

import numpy as np

from .imagecore import as_image

MIN_BLOCK_AREA = 1024
AIRLIGHT_FLOOR = 1.0 / 255.0


def _quadrants(r0: int, r1: int, c0: int, c1: int):
    rm = (r0 + r1) // 2
    cm = (c0 + c1) // 2
    return [(r0, rm, c0, cm), (r0, rm, cm, c1), (rm, r1, c0, cm), (rm, r1, cm, c1)]


def quadtree_block(gray: np.ndarray, min_area: int = MIN_BLOCK_AREA) -> tuple[int, int, int, int]:
    """Descend into the quadrant with the largest ``mean - std`` until the
    region is smaller than ``min_area`` pixels.

    Returns ``(r0, r1, c0, c1)`` half-open bounds.  Ties go to the first
    quadrant in raster order.
    """
    r0, r1, c0, c1 = 0, gray.shape[0], 0, gray.shape[1]
    while (r1 - r0) * (c1 - c0) >= min_area and r1 - r0 >= 2 and c1 - c0 >= 2:
        best, best_score = None, -np.inf
        for q in _quadrants(r0, r1, c0, c1):
            block = gray[q[0]:q[1], q[2]:q[3]]
            score = block.mean() - block.std()
            if score > best_score:
                best, best_score = q, score
        r0, r1, c0, c1 = best
    return r0, r1, c0, c1


def estimate_airlight(img: np.ndarray, min_area: int = MIN_BLOCK_AREA) -> np.ndarray:
    """Estimate per-channel atmospheric light ``A``.

    Inside the winning quad-tree block the pixel closest to white is picked
    and the 3x3 mean colour around it (clipped to the image) is returned,
    floored at 1/255 per channel.
    """
    img = as_image(img)
    if img.shape[2] == 1:
        img = np.repeat(img, 3, axis=2)
    gray = img.mean(axis=2)
    r0, r1, c0, c1 = quadtree_block(gray, min_area)
    block = img[r0:r1, c0:c1]
    dist = np.sum((1.0 - block) ** 2, axis=2)
    k = int(np.argmin(dist))
    pi, pj = r0 + k // block.shape[1], c0 + k % block.shape[1]
    h, w = img.shape[:2]
    window = img[max(pi - 1, 0):min(pi + 2, h), max(pj - 1, 0):min(pj + 2, w)]
    a = window.reshape(-1, 3).mean(axis=0)
    return np.maximum(a, AIRLIGHT_FLOOR)


def validate_airlight(a) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    if a.size == 1:
        a = np.repeat(a, 3)
    if a.size != 3 or not np.all(np.isfinite(a)) or np.any(a <= 0) or np.any(a > 1):
        raise ValueError(f"airlight must be three values in (0, 1], got {a.tolist()}")
    return a
