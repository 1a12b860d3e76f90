"""Forward haze synthesis, seeded noise and full-reference metrics."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .imagecore import ShapeMismatchError, as_image

PSNR_CAP_DB = 99.0
SKY_T = 0.02


def gaussian_noise(shape, seed: int) -> np.ndarray:
    """Standard normal samples from Box-Muller over a Philox4x64 counter stream.

    Sample ``2k`` and ``2k+1`` (raster order, channel fastest) come from
    counter words ``2k`` and ``2k+1``.
    """
    n = int(np.prod(shape))
    pairs = (n + 1) // 2
    raw = np.random.Philox(key=int(seed) & (2 ** 64 - 1)).random_raw(2 * pairs)
    u = ((raw >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0 ** -53  # (0, 1]
    u1, u2 = u[0::2], u[1::2]
    rad = np.sqrt(-2.0 * np.log(u1))
    z = np.empty(2 * pairs)
    z[0::2] = rad * np.cos(2.0 * np.pi * u2)
    z[1::2] = rad * np.sin(2.0 * np.pi * u2)
    return z[:n].reshape(shape)


@dataclass(frozen=True)
class HazeScene:
    clean: np.ndarray
    depth: np.ndarray
    alpha: float
    airlight: np.ndarray
    noise_std: float = 0.0
    seed: int = 0
    labels: np.ndarray | None = None  # palette index per pixel: ground-truth haze lines

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be > 0")
        if self.noise_std < 0:
            raise ValueError("noise_std must be >= 0")
        if np.any(np.asarray(self.depth) < 0):
            raise ValueError("depth must be >= 0")
        if as_image(self.clean).shape[:2] != np.shape(self.depth):
            raise ShapeMismatchError("clean image and depth map differ in size")

    @property
    def transmission(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return np.exp(-self.alpha * np.asarray(self.depth, dtype=np.float64))


def synthesize(scene: HazeScene, clamp: bool = True) -> np.ndarray:
    """``Z = I t + A (1 - t) + n`` with seeded i.i.d. Gaussian ``n``."""
    clean = as_image(scene.clean)
    t = scene.transmission[:, :, None]
    a = np.asarray(scene.airlight, dtype=np.float64)
    z = clean * t + a * (1.0 - t)
    if scene.noise_std > 0:
        z = z + scene.noise_std * gaussian_noise(z.shape, scene.seed)
    return np.clip(z, 0.0, 1.0) if clamp else z


def layer_depths(n_layers: int, alpha: float, far_t: float = 0.015) -> np.ndarray:
    """Band depths from 0 (nearest) to the depth where ``t == far_t``."""
    d_far = -math.log(far_t) / alpha
    return np.linspace(0.0, d_far, n_layers)


def textured_image(height: int, width: int, seed: int, n_colors: int = 48, cell: int = 4):
    """Piecewise-constant texture over a small colour palette.

    Every palette colour has one channel near zero, so each 15x15 window
    holds a dark pixel; a small palette makes haze lines well populated.

    Returns:
        ``(image, labels)`` where ``labels`` holds each pixel's palette index.
    """
    rng = np.random.default_rng(seed)
    palette = rng.uniform(0.15, 0.95, size=(n_colors, 3))
    dark = rng.integers(0, 3, size=n_colors)
    palette[np.arange(n_colors), dark] = rng.uniform(0.0, 0.03, size=n_colors)
    ch, cw = -(-height // cell), -(-width // cell)
    labels = rng.integers(0, n_colors, size=(ch, cw))
    labels = np.repeat(np.repeat(labels, cell, axis=0), cell, axis=1)[:height, :width]
    return palette[labels], labels


def make_layered_scene(width: int, height: int, n_layers: int, alpha: float, airlight, seed: int = 0,
                       noise_std: float = 0.0) -> HazeScene:
    """Textured scene with ``n_layers`` horizontal depth bands.

    The bottom band is at depth 0 and the top band is a synthetic sky with
    ``t = 0.015``.
    """
    if n_layers < 2:
        raise ValueError("n_layers must be >= 2")
    if width < 2 or height < n_layers:
        raise ValueError(f"degenerate scene size {width}x{height} for {n_layers} layers")
    depths = layer_depths(n_layers, alpha)
    band = np.minimum(np.arange(height) * n_layers // height, n_layers - 1)
    # row 0 is the top of the image: farthest band
    depth_rows = depths[::-1][band]
    depth = np.repeat(depth_rows[:, None], width, axis=1)
    clean, labels = textured_image(height, width, seed)
    return HazeScene(clean, depth, alpha, np.asarray(airlight, dtype=np.float64), noise_std, seed, labels)


def make_constant_scene(width: int, height: int, t: float, airlight, seed: int = 0, alpha: float = 1.0) -> HazeScene:
    depth = np.full((height, width), -math.log(t) / alpha)
    clean, labels = textured_image(height, width, seed)
    return HazeScene(clean, depth, alpha, np.asarray(airlight, dtype=np.float64), 0.0, seed, labels)


# ---------------------------------------------------------------------------
# metrics


@dataclass
class MetricsReport:
    psnr_db: float
    mae: float
    hazy_psnr_db: float | None = None
    hazy_mae: float | None = None
    transmission_mae: float | None = None
    sky_noise_gain: float | None = None
    timings_ms: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def mae(x: np.ndarray, y: np.ndarray) -> float:
    return float(np.mean(np.abs(np.asarray(x, dtype=np.float64) - np.asarray(y, dtype=np.float64))))


def psnr(x: np.ndarray, y: np.ndarray) -> float:
    """PSNR for unit peak; identical inputs give the 99 dB cap."""
    mse = float(np.mean((np.asarray(x, dtype=np.float64) - np.asarray(y, dtype=np.float64)) ** 2))
    if mse == 0:
        return PSNR_CAP_DB
    return min(PSNR_CAP_DB, 10.0 * math.log10(1.0 / mse))


def sky_noise_gain(restored: np.ndarray, reference: np.ndarray, mask: np.ndarray, noise_std: float) -> float:
    """Std of ``restored - reference`` inside ``mask``, relative to the input noise std."""
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise ValueError("sky mask is empty")
    if noise_std <= 0:
        raise ValueError("noise_std must be > 0 for a noise gain")
    diff = np.asarray(restored, dtype=np.float64) - np.asarray(reference, dtype=np.float64)
    return float(np.std(diff[mask]) / noise_std)


def evaluate(clean, restored, hazy=None, t_true=None, t_est=None, sky_mask=None, reference=None,
             noise_std: float | None = None, timings_ms=None) -> MetricsReport:
    """Compare a restoration against ground truth.

    ``sky_noise_gain`` needs ``sky_mask``, ``reference`` (the restoration of the
    noise-free synthesis) and ``noise_std``; ``transmission_mae`` needs both
    maps and is taken over ``t_true >= 0.02`` pixels.
    """
    clean = as_image(clean)
    restored = as_image(restored)
    if clean.shape != restored.shape:
        raise ShapeMismatchError(f"clean {clean.shape} and restored {restored.shape} differ")
    report = MetricsReport(psnr(clean, restored), mae(clean, restored), timings_ms=dict(timings_ms or {}))
    if hazy is not None:
        hazy = as_image(hazy)
        if hazy.shape != clean.shape:
            raise ShapeMismatchError("hazy image size differs")
        report.hazy_psnr_db = psnr(clean, hazy)
        report.hazy_mae = mae(clean, hazy)
    if t_true is not None and t_est is not None:
        t_true = np.squeeze(np.asarray(t_true, dtype=np.float64))
        t_est = np.squeeze(np.asarray(t_est, dtype=np.float64))
        if t_true.shape != t_est.shape:
            raise ShapeMismatchError("transmission maps differ in size")
        valid = t_true >= SKY_T
        report.transmission_mae = float(np.mean(np.abs(t_true - t_est)[valid])) if valid.any() else 0.0
    if sky_mask is not None or reference is not None:
        if sky_mask is None or reference is None or noise_std is None:
            raise ValueError("sky noise gain needs mask, reference restoration and noise_std")
        mask = np.squeeze(np.asarray(sky_mask)) > 0.5
        report.sky_noise_gain = sky_noise_gain(restored, as_image(reference), mask, noise_std)
    return report


def within_line_variance(values: np.ndarray, labels: np.ndarray) -> float:
    """Mean over groups (``labels >= 0``, at least two members) of the group variance."""
    lab = np.asarray(labels).ravel()
    v = np.asarray(values, dtype=np.float64).ravel()
    keep = lab >= 0
    _, inv, cnt = np.unique(lab[keep], return_inverse=True, return_counts=True)
    s = np.bincount(inv, v[keep])
    s2 = np.bincount(inv, v[keep] ** 2)
    var = np.maximum(s2 / cnt - (s / cnt) ** 2, 0.0)
    multi = cnt > 1
    return float(var[multi].mean()) if multi.any() else 0.0
