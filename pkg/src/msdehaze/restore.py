"""Level-wise scene radiance recovery and the single-scale baseline."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .airlight import estimate_airlight, validate_airlight
from .imagecore import ShapeMismatchError, check_pipeline_image
from .pyramid import PyramidPair, build_pyramid, collapse_levels, expand
from .transmission import TransmissionStages, estimate_transmission, transmission_pyramid

log = logging.getLogger(__name__)

SIGMOID_SLOPE = 32.0


@dataclass(frozen=True)
class RestoreConfig:
    eta: float = 0.25
    levels: int = 1
    detail_gain: tuple = (1.0,)

    def __post_init__(self):
        if not 0.0 < self.eta <= 1.0:
            raise ValueError(f"eta must be in (0, 1], got {self.eta}")
        if self.levels < 1:
            raise ValueError(f"levels must be >= 1, got {self.levels}")
        gains = tuple(float(g) for g in self.detail_gain)
        if not gains or any(not g > 0 for g in gains):
            raise ValueError(f"detail gains must be > 0, got {gains}")
        if len(gains) not in (1, self.levels):
            raise ValueError(f"need 1 or {self.levels} detail gains, got {len(gains)}")
        object.__setattr__(self, "detail_gain", gains)

    def gain(self, level: int) -> float:
        return self.detail_gain[0] if len(self.detail_gain) == 1 else self.detail_gain[level]


def _match(a: np.ndarray, t: np.ndarray) -> np.ndarray:
    if a.shape[:2] != t.shape[:2]:
        raise ShapeMismatchError(f"image {a.shape[:2]} and transmission {t.shape[:2]} differ")
    return t[:, :, None] if a.ndim == 3 else t


def restore_base(zg: np.ndarray, tg: np.ndarray, airlight: np.ndarray, eta: float) -> np.ndarray:
    """Invert the scattering model on the coarsest Gaussian level, with ``t >= eta``."""
    zg = np.asarray(zg, dtype=np.float64)
    t = _match(zg, np.asarray(tg, dtype=np.float64))
    a = np.asarray(airlight, dtype=np.float64)
    return (zg - a) / np.maximum(t, eta) + a


def phi(t, eta: float):
    """Sigmoid blend weight ``1 / (1 + exp(32 (t/eta - 1)))``; 1/2 at ``t == eta``."""
    x = SIGMOID_SLOPE * (np.asarray(t, dtype=np.float64) / eta - 1.0)
    out = 1.0 / (1.0 + np.exp(np.minimum(x, 700.0)))
    return float(out) if out.ndim == 0 else out


def psi_amp(t, eta: float):
    out = np.asarray(t, dtype=np.float64) / eta + 1.0
    return float(out) if out.ndim == 0 else out


def restore_laplacian(zl: np.ndarray, tg: np.ndarray, level: int, eta: float) -> np.ndarray:
    """Recover a Laplacian level.

    Blends the plain inverse ``zl / max(t, eta)`` with a mild gain
    ``psi_amp * zl`` wherever ``t`` falls below ``eta``; the blend weight is
    ``phi / 2**level``, so coarser (cleaner) levels lean on the plain inverse.
    """
    zl = np.asarray(zl, dtype=np.float64)
    t = _match(zl, np.asarray(tg, dtype=np.float64))
    w = phi(t, eta) / 2.0 ** level
    return (1.0 - w) * zl / np.maximum(t, eta) + w * psi_amp(t, eta) * zl


def restore_single_scale(z: np.ndarray, t: np.ndarray, airlight: np.ndarray, t_low: float = 0.1,
                         clamp: bool = True) -> np.ndarray:
    """Classic ``(Z - A) / max(t, t_low) + A``; amplifies sky noise by ``1/t_low``."""
    z = np.asarray(z, dtype=np.float64)
    tv = _match(z, np.asarray(getattr(t, "t", t), dtype=np.float64))
    a = np.asarray(airlight, dtype=np.float64)
    out = (z - a) / np.maximum(tv, t_low) + a
    return np.clip(out, 0.0, 1.0) if clamp else out


@dataclass
class DehazeResult:
    image: np.ndarray
    airlight: np.ndarray
    pyramid: PyramidPair
    expanded: np.ndarray
    stages: TransmissionStages
    t_pyramid: list
    timings_ms: dict = field(default_factory=dict)


class _Clock:
    def __init__(self):
        self.timings = {}
        self._t = time.perf_counter()

    def lap(self, name: str):
        now = time.perf_counter()
        self.timings[name] = (now - self._t) * 1e3
        log.debug("stage %s: %.1f ms", name, self.timings[name])
        self._t = now


def _config_parts(config):
    from .config import PipelineConfig

    if config is None:
        config = PipelineConfig()
    return config, RestoreConfig(config.eta, config.levels, tuple(config.detail_gain))


def estimate(z: np.ndarray, config=None, airlight=None, clock: _Clock | None = None):
    """Steps shared by the multi-scale and single-scale paths: pyramid,
    airlight and the three transmission stages, all on ``expand(reduce(Z))``."""
    config, rcfg = _config_parts(config)
    clock = clock or _Clock()
    z = check_pipeline_image(z, 2 ** rcfg.levels)
    if z.shape[2] == 1:
        z = np.repeat(z, 3, axis=2)
    pyr = build_pyramid(z, rcfg.levels)
    clock.lap("pyramid")
    ze0 = expand(pyr.gaussian[1], *z.shape[:2])
    a = estimate_airlight(ze0) if airlight is None else validate_airlight(airlight)
    clock.lap("airlight")
    stages = estimate_transmission(
        ze0, a, config.rho_dark, config.rho_wgif, config.lam, config.bin_step, config.nu, config.r_min
    )
    clock.lap("transmission")
    return z, pyr, ze0, a, stages


def run_pipeline(z: np.ndarray, config=None, airlight=None) -> DehazeResult:
    """Full multi-scale dehazing with all intermediate products kept."""
    config, rcfg = _config_parts(config)
    clock = _Clock()
    z, pyr, ze0, a, stages = estimate(z, config, airlight, clock)
    tpyr = transmission_pyramid(stages.refined, rcfg.levels)
    base = restore_base(pyr.gaussian[-1], tpyr[-1], a, rcfg.eta)
    laps = [
        rcfg.gain(lvl) * restore_laplacian(pyr.laplacian[lvl], tpyr[lvl], lvl, rcfg.eta)
        for lvl in range(rcfg.levels)
    ]
    clock.lap("restore")
    out = collapse_levels(base, laps, clamp=True)
    clock.lap("collapse")
    return DehazeResult(out, a, pyr, ze0, stages, tpyr, clock.timings)


def dehaze(z: np.ndarray, config=None, airlight=None) -> np.ndarray:
    return run_pipeline(z, config, airlight).image


def run_single_scale(z: np.ndarray, config=None, airlight=None) -> DehazeResult:
    """Baseline: same transmission estimate, restored in one shot with ``t_low``."""
    config, rcfg = _config_parts(config)
    clock = _Clock()
    z, pyr, ze0, a, stages = estimate(z, config, airlight, clock)
    out = restore_single_scale(z, stages.refined.t, a, config.t_low)
    clock.lap("restore")
    return DehazeResult(out, a, pyr, ze0, stages, [stages.refined.t], clock.timings)
