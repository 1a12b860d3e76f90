"""Pipeline configuration and its flat ``key = value`` file format."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace

from .transmission import bins_per_half_turn


class ConfigError(ValueError):
    pass


def _src(kind: str, note: str = ""):
    return {"source": kind, "note": note}


@dataclass(frozen=True)
class PipelineConfig:
    rho_dark: int = field(default=7, metadata=_src("method", "dark channel window radius"))
    rho_wgif: int = field(default=25, metadata=_src("method", "WGIF radius; 60 for the large-radius ablation"))
    lam: float = field(default=1e-3, metadata=_src("method", "WGIF regulariser"))
    bin_step: float = field(default=math.pi / 720, metadata=_src("method", "haze-line histogram bin size"))
    nu: int = field(default=200, metadata=_src("method", "max haze-line subset size"))
    eta: float = field(default=0.25, metadata=_src("method", "restoration floor; 0.125 for heavy haze"))
    levels: int = field(default=1, metadata=_src("method", "pyramid depth L0"))
    r_min: float = field(default=0.02, metadata=_src("artifact", "near-airlight bypass radius"))
    t_low: float = field(default=0.1, metadata=_src("method", "single-scale baseline floor"))
    detail_gain: tuple = field(default=(1.0,), metadata=_src("artifact", "per-level Laplacian gains"))

    def __post_init__(self):
        object.__setattr__(self, "detail_gain", tuple(float(g) for g in self.detail_gain))
        checks = [
            (self.rho_dark >= 0, "rho_dark must be >= 0"),
            (self.rho_wgif >= 1, "rho_wgif must be >= 1"),
            (self.lam >= 0 and math.isfinite(self.lam), "lam must be a finite value >= 0"),
            (self.nu >= 1, "nu must be >= 1"),
            (0 < self.eta <= 1, "eta must be in (0, 1]"),
            (1 <= self.levels <= 3, "levels must be in 1..3"),
            (self.r_min >= 0, "r_min must be >= 0"),
            (0 < self.t_low <= 1, "t_low must be in (0, 1]"),
            (len(self.detail_gain) in (1, self.levels), "detail_gain needs 1 or `levels` entries"),
            (all(g > 0 and math.isfinite(g) for g in self.detail_gain), "detail_gain entries must be > 0"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)
        try:
            bins_per_half_turn(self.bin_step)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def provenance(self) -> dict:
        return {f.name: dict(f.metadata) for f in fields(self)}

    def updated(self, **kw) -> "PipelineConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


def _fmt(value) -> str:
    if isinstance(value, tuple):
        return ",".join(repr(float(v)) for v in value)
    return repr(value)


def serialize(cfg: PipelineConfig) -> str:
    return "".join(f"{f.name} = {_fmt(getattr(cfg, f.name))}\n" for f in fields(cfg))


def parse_value(name: str, text: str):
    types = {f.name: f.type for f in fields(PipelineConfig)}
    if name not in types:
        raise ConfigError(f"unknown config key {name!r}")
    text = text.strip()
    try:
        if name == "detail_gain":
            return tuple(float(v) for v in text.split(","))
        if types[name] == "int":
            return int(text)
        if name == "bin_step" and text.startswith("pi/"):
            return math.pi / float(text[3:])
        return float(text)
    except ValueError as exc:
        raise ConfigError(f"bad value for {name}: {text!r}") from exc


def parse(text: str) -> PipelineConfig:
    """Parse ``key = value`` lines (``#`` starts a comment) over the defaults."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        values[key] = parse_value(key, val)
    return PipelineConfig(**values)


def load_config(path) -> PipelineConfig:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read())
