"""Transmission estimation: dark direct attenuation prior, haze-line averaging
and weighted guided filtering.

Everything here operates at full resolution on the expanded low-pass image
``expand(reduce(Z))``, which carries less noise than ``Z`` itself.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .imagecore import ShapeMismatchError, as_image
from .pyramid import gaussian_pyramid
from .windows import box_mean, min_filter

T_FLOOR = 1.0 / 255.0
DDAP_COEFF = 31.0 / 32.0
GAMMA_EPS = 0.001 ** 2

STAGES = ("initial", "averaged", "refined")


@dataclass(frozen=True)
class TransmissionMap:
    t: np.ndarray
    stage: str

    def __post_init__(self):
        if self.stage not in STAGES:
            raise ValueError(f"unknown transmission stage {self.stage!r}")


@dataclass(frozen=True)
class HazeLineClusters:
    """Haze-line grouping of every pixel.

    Attributes:
        bin_id: (H, W) histogram bin of the pixel's (longitude, latitude);
            -1 for pixels too close to the airlight to have a direction.
        subset_id: (H, W) global subset label in ``[0, n_subsets)``.
        radius: (H, W) distance ``||Z - A||``.
        n_subsets: number of subsets.
    """

    bin_id: np.ndarray
    subset_id: np.ndarray
    radius: np.ndarray
    n_subsets: int

    def subset_sizes(self) -> np.ndarray:
        return np.bincount(self.subset_id.ravel(), minlength=self.n_subsets)


def _rgb(img: np.ndarray) -> np.ndarray:
    img = as_image(img)
    return np.repeat(img, 3, axis=2) if img.shape[2] == 1 else img


def dark_channel(img: np.ndarray, rho: int = 7) -> np.ndarray:
    """Windowed minimum over space (radius ``rho``) and colour channels."""
    if rho < 0:
        raise ValueError("rho must be >= 0")
    return min_filter(as_image(img).min(axis=2), rho)


def normalized(img: np.ndarray, airlight: np.ndarray) -> np.ndarray:
    """``Z_c / A_c`` clamped to [0, 1]."""
    return np.clip(_rgb(img) / np.asarray(airlight, dtype=np.float64), 0.0, 1.0)


def initial_transmission(img: np.ndarray, airlight: np.ndarray, rho: int = 7) -> TransmissionMap:
    """``t0 = 1 - (31/32) * dark_channel(Z / A)``; lies in [1/32, 1]."""
    t0 = 1.0 - DDAP_COEFF * dark_channel(normalized(img, airlight), rho)
    return TransmissionMap(t0, "initial")


def guidance(img: np.ndarray, airlight: np.ndarray) -> np.ndarray:
    """Guidance image ``1 - min_c(Z_c / A_c)`` clamped to [0, 1]."""
    ratio = (_rgb(img) / np.asarray(airlight, dtype=np.float64)).min(axis=2)
    return np.clip(1.0 - ratio, 0.0, 1.0)


# ---------------------------------------------------------------------------
# haze lines


def spherical_coords(zhat: np.ndarray):
    """Radius, longitude in [0, 2*pi) and latitude in [0, pi] of ``Z - A``.

    The blue axis is the pole: ``Zhat_B = r cos(lat)``.  At ``r == 0`` both
    angles are reported as 0.
    """
    zhat = np.asarray(zhat, dtype=np.float64)
    r = np.sqrt(np.sum(zhat * zhat, axis=-1))
    theta = np.arctan2(zhat[..., 1], zhat[..., 0])
    theta = np.where(theta < 0, theta + 2 * np.pi, theta)
    theta = np.where(theta >= 2 * np.pi, 0.0, theta)
    with np.errstate(invalid="ignore", divide="ignore"):
        cos_lat = np.where(r > 0, zhat[..., 2] / np.where(r > 0, r, 1.0), 1.0)
    lat = np.arccos(np.clip(cos_lat, -1.0, 1.0))
    return r, theta, lat


def bins_per_half_turn(bin_step: float) -> int:
    n = round(math.pi / bin_step)
    if n < 1 or abs(n * bin_step - math.pi) > 1e-9:
        raise ValueError(f"bin step {bin_step!r} does not divide pi")
    return n


def _chunk_index(rank: np.ndarray, count: np.ndarray, nu: int) -> tuple[np.ndarray, np.ndarray]:
    # split `count` items into ceil(count/nu) near-equal chunks, in order
    n_sub = -(-count // nu)
    q, rem = count // n_sub, count % n_sub
    big = (q + 1) * rem
    chunk = np.where(rank < big, rank // (q + 1), rem + (rank - big) // np.maximum(q, 1))
    return chunk, n_sub


def cluster_haze_lines(
    img: np.ndarray,
    airlight: np.ndarray,
    bin_step: float = math.pi / 720,
    nu: int = 200,
    r_min: float = 0.02,
) -> HazeLineClusters:
    """Group pixels into haze-line subsets of at most ``nu`` members.

    Pixels are binned on a uniform ``bin_step x bin_step`` grid over
    longitude [0, 2*pi) and latitude [0, pi].  An over-full bin is cut, in
    raster order, into ``ceil(n / nu)`` subsets whose sizes differ by at most
    one.  Pixels with ``||Z - A|| < r_min`` get a singleton subset each.
    """
    if nu < 1:
        raise ValueError("nu must be >= 1")
    n_lat = bins_per_half_turn(bin_step)
    n_lon = 2 * n_lat
    zhat = _rgb(img) - np.asarray(airlight, dtype=np.float64)
    r, theta, lat = spherical_coords(zhat)
    h, w = r.shape

    i_lon = np.minimum((theta / bin_step).astype(np.int64), n_lon - 1)
    i_lat = np.minimum((lat / bin_step).astype(np.int64), n_lat - 1)
    bin_id = i_lon * n_lat + i_lat
    bin_id = np.where(r < r_min, -1, bin_id).ravel()

    # unique keys: clustered pixels share their bin, bypassed pixels are alone
    npix = h * w
    idx = np.arange(npix)
    key = np.where(bin_id >= 0, bin_id, n_lon * n_lat + idx)
    order = np.argsort(key, kind="stable")
    skey = key[order]
    starts = np.flatnonzero(np.r_[True, skey[1:] != skey[:-1]])
    counts = np.diff(np.r_[starts, npix])
    group = np.repeat(np.arange(starts.size), counts)
    rank = idx - starts[group]
    chunk, n_sub = _chunk_index(rank, counts[group], nu)
    offsets = np.r_[0, np.cumsum(-(-counts // nu))]
    subset_sorted = offsets[group] + chunk

    subset = np.empty(npix, dtype=np.int64)
    subset[order] = subset_sorted
    return HazeLineClusters(
        bin_id=bin_id.reshape(h, w),
        subset_id=subset.reshape(h, w),
        radius=r,
        n_subsets=int(offsets[-1]),
    )


def haze_line_average(t0: TransmissionMap, clusters: HazeLineClusters, clamp: bool = True) -> TransmissionMap:
    """Non-local averaging along haze lines.

    For each subset ``S`` and member ``p``:
    ``t(p) = ||Zhat(p)|| * sum_S t0 / sum_S ||Zhat||``.  Singletons keep ``t0``.
    """
    t0v = np.asarray(t0.t if isinstance(t0, TransmissionMap) else t0, dtype=np.float64)
    if t0v.shape != clusters.subset_id.shape:
        raise ShapeMismatchError("transmission and clusters differ in shape")
    sid = clusters.subset_id.ravel()
    r = clusters.radius.ravel()
    sum_t0 = np.bincount(sid, weights=t0v.ravel(), minlength=clusters.n_subsets)
    sum_r = np.bincount(sid, weights=r, minlength=clusters.n_subsets)
    size = np.bincount(sid, minlength=clusters.n_subsets)
    with np.errstate(invalid="ignore", divide="ignore"):
        scale = np.where(sum_r > 0, sum_t0 / np.where(sum_r > 0, sum_r, 1.0), 0.0)
    t = r * scale[sid]
    lone = (size[sid] == 1) | (sum_r[sid] <= 0)
    t = np.where(lone, t0v.ravel(), t).reshape(t0v.shape)
    if clamp:
        t = np.clip(t, T_FLOOR, 1.0)
    return TransmissionMap(t, "averaged")


# ---------------------------------------------------------------------------
# weighted guided filter


def edge_aware_weight(g: np.ndarray, eps: float = GAMMA_EPS) -> np.ndarray:
    """``Gamma(p) = (var3(p) + eps) * mean_q 1 / (var3(q) + eps)`` over 3x3 variances."""
    g = np.asarray(g, dtype=np.float64)
    g = g - g.mean()
    var3 = np.maximum(box_mean(g * g, 1) - box_mean(g, 1) ** 2, 0.0)
    v = var3 + eps
    return v * np.mean(1.0 / v)


def wgif_coefficients(t: np.ndarray, g: np.ndarray, rho: int, lam: float, gamma: np.ndarray | None = None):
    """Per-window ridge regression of ``t`` on ``g``.

    Minimises ``sum_window Gamma (a g + b - t)^2 + lam a^2`` whose solution is
    ``a = cov(g, t) / (var(g) + lam / Gamma)``, ``b = mean(t) - a mean(g)``.
    """
    t = np.asarray(t, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    if gamma is None:
        gamma = edge_aware_weight(g)
    # centring keeps the E[x^2] - E[x]^2 cancellation small
    gc = g - g.mean()
    tc = t - t.mean()
    mg = box_mean(gc, rho)
    mt = box_mean(tc, rho)
    var_g = np.maximum(box_mean(gc * gc, rho) - mg * mg, 0.0)
    cov = box_mean(gc * tc, rho) - mg * mt
    denom = var_g + lam / gamma
    a = np.divide(cov, denom, out=np.zeros_like(cov), where=denom > 0)
    b = (mt + t.mean()) - a * (mg + g.mean())
    return a, b


def wgif_refine(
    t: TransmissionMap | np.ndarray,
    g: np.ndarray,
    rho: int = 25,
    lam: float = 1e-3,
    clamp: bool = True,
) -> TransmissionMap:
    """Refine ``t`` with a weighted guided filter steered by ``g``.

    The output is ``mean(a) * g + mean(b)`` with the coefficient means taken
    over each pixel's own window.
    """
    tv = np.asarray(t.t if isinstance(t, TransmissionMap) else t, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    if tv.shape != g.shape:
        raise ShapeMismatchError(f"transmission {tv.shape} and guidance {g.shape} differ")
    if rho < 1:
        raise ValueError("rho must be >= 1")
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    a, b = wgif_coefficients(tv, g, rho, lam)
    out = box_mean(a, rho) * g + box_mean(b, rho)
    if clamp:
        out = np.clip(out, T_FLOOR, 1.0)
    return TransmissionMap(out, "refined")


def transmission_pyramid(t: TransmissionMap | np.ndarray, levels: int) -> list[np.ndarray]:
    """Gaussian pyramid ``[t, reduce(t), ...]`` with ``levels`` reductions."""
    tv = t.t if isinstance(t, TransmissionMap) else t
    return gaussian_pyramid(tv, levels)


@dataclass(frozen=True)
class TransmissionStages:
    initial: TransmissionMap
    averaged: TransmissionMap
    refined: TransmissionMap
    clusters: HazeLineClusters
    guidance: np.ndarray

    def stage(self, name: str) -> TransmissionMap:
        return getattr(self, name)


def estimate_transmission(
    img: np.ndarray,
    airlight: np.ndarray,
    rho_dark: int = 7,
    rho_wgif: int = 25,
    lam: float = 1e-3,
    bin_step: float = math.pi / 720,
    nu: int = 200,
    r_min: float = 0.02,
) -> TransmissionStages:
    t0 = initial_transmission(img, airlight, rho_dark)
    clusters = cluster_haze_lines(img, airlight, bin_step, nu, r_min)
    averaged = haze_line_average(t0, clusters)
    g = guidance(img, airlight)
    refined = wgif_refine(averaged, g, rho_wgif, lam)
    return TransmissionStages(t0, averaged, refined, clusters, g)
