"""Multi-scale single image dehazing on Laplacian and Gaussian pyramids."""
from .airlight import estimate_airlight
from .config import PipelineConfig
from .imagecore import load_image, save_image
from .pyramid import build_pyramid, collapse, expand, reduce
from .restore import dehaze, restore_single_scale, run_pipeline, run_single_scale
from .synth import evaluate, make_layered_scene, synthesize

__all__ = [
    "PipelineConfig",
    "build_pyramid",
    "collapse",
    "dehaze",
    "estimate_airlight",
    "evaluate",
    "expand",
    "load_image",
    "make_layered_scene",
    "reduce",
    "restore_single_scale",
    "run_pipeline",
    "run_single_scale",
    "save_image",
    "synthesize",
]
