"""Pixel containers, netpbm/PNG codecs and boundary-aware sampling.

Images are float64 numpy arrays of shape ``(H, W, C)`` with ``C`` in ``{1, 3}``
and values in ``[0, 1]``.  Single-channel maps (transmission, guidance, dark
channel) are plain ``(H, W)`` arrays.  Values are only quantized to 8 bits
inside :func:`save_image`.
"""
from __future__ import annotations

import os
import re
from pathlib import Path

import numpy as np

__all__ = [
    "ImageError",
    "UnreadableImageError",
    "UnsupportedDepthError",
    "EmptyImageError",
    "ShapeMismatchError",
    "as_image",
    "check_pipeline_image",
    "load_image",
    "save_image",
    "encode_netpbm",
    "decode_netpbm",
    "mirror_index",
    "sample_mirror",
    "pad_mirror",
]


class ImageError(ValueError):
    """Base class for image codec and shape errors."""


class UnreadableImageError(ImageError):
    pass


class UnsupportedDepthError(ImageError):
    pass


class EmptyImageError(ImageError):
    pass


class ShapeMismatchError(ImageError):
    pass


def as_image(data) -> np.ndarray:
    """Return ``data`` as a float64 ``(H, W, C)`` array (2-D input gets C=1)."""
    img = np.asarray(data, dtype=np.float64)
    if img.ndim == 2:
        img = img[:, :, None]
    if img.ndim != 3 or img.shape[2] not in (1, 3):
        raise ShapeMismatchError(f"expected (H, W, 1|3) image, got shape {img.shape}")
    if img.shape[0] == 0 or img.shape[1] == 0:
        raise EmptyImageError("image has zero size")
    return img


def check_pipeline_image(img: np.ndarray, min_size: int = 2) -> np.ndarray:
    img = as_image(img)
    if min(img.shape[:2]) < min_size:
        raise ShapeMismatchError(
            f"image {img.shape[1]}x{img.shape[0]} is smaller than {min_size} pixels per axis"
        )
    if not np.all(np.isfinite(img)):
        raise ImageError("image contains non-finite values")
    return img


# ---------------------------------------------------------------------------
# netpbm (P5 / P6, maxval 255)

_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def decode_netpbm(raw: bytes) -> np.ndarray:
    """Decode binary P5/P6 bytes into a float image with values ``u/255``."""
    pos = 0
    fields = []
    for _ in range(4):
        m = _TOKEN.match(raw, pos)
        if m is None:
            raise UnreadableImageError("truncated netpbm header")
        fields.append(m.group(1))
        pos = m.end()
    magic = fields[0]
    if magic not in (b"P5", b"P6"):
        raise UnreadableImageError(f"unsupported netpbm magic {magic!r}")
    try:
        width, height, maxval = (int(f) for f in fields[1:])
    except ValueError as exc:
        raise UnreadableImageError("malformed netpbm header") from exc
    if width <= 0 or height <= 0:
        raise EmptyImageError(f"zero-sized image ({width}x{height})")
    if maxval != 255:
        raise UnsupportedDepthError(f"maxval {maxval} is not supported (only 8-bit, maxval 255)")
    # exactly one whitespace byte separates the header from the raster
    pos += 1
    channels = 3 if magic == b"P6" else 1
    count = width * height * channels
    body = raw[pos:pos + count]
    if len(body) != count:
        raise UnreadableImageError("truncated netpbm raster")
    codes = np.frombuffer(body, dtype=np.uint8).reshape(height, width, channels)
    return codes.astype(np.float64) / 255.0


def quantize(img: np.ndarray) -> np.ndarray:
    """Round-half-up to 8-bit codes, clamped to [0, 255]."""
    return np.clip(np.floor(np.asarray(img, dtype=np.float64) * 255.0 + 0.5), 0, 255).astype(np.uint8)


def encode_netpbm(img: np.ndarray) -> bytes:
    img = as_image(img)
    h, w, c = img.shape
    magic = b"P6" if c == 3 else b"P5"
    return magic + b"\n%d %d\n255\n" % (w, h) + quantize(img).tobytes()


# ---------------------------------------------------------------------------
# file I/O

_NETPBM_EXT = {".ppm", ".pgm", ".pnm"}


def load_image(path: str | os.PathLike) -> np.ndarray:
    """Load an 8-bit PPM/PGM (or PNG) file as a float image in ``[0, 1]``.

    Raises:
        UnreadableImageError: missing file or corrupt data.
        UnsupportedDepthError: anything other than 8 bits per sample.
        EmptyImageError: zero width or height.
    """
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise UnreadableImageError(f"cannot read {path}: {exc.strerror}") from exc
    if raw[:2] in (b"P5", b"P6"):
        return decode_netpbm(raw)
    if raw[:8] == b"\x89PNG\r\n\x1a\n":
        return _load_png(path)
    raise UnreadableImageError(f"{path}: unrecognised image format")


def _load_png(path: Path) -> np.ndarray:
    from PIL import Image

    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            if mode in ("I;16", "I;16B", "I;16L", "I", "F"):
                raise UnsupportedDepthError(f"{path}: {mode} samples are not 8-bit")
            if mode == "1" or mode == "L" or mode == "LA":
                im = im.convert("L")
            else:
                im = im.convert("RGB")
            codes = np.asarray(im, dtype=np.uint8)
    except (OSError, SyntaxError) as exc:
        raise UnreadableImageError(f"cannot decode {path}: {exc}") from exc
    if codes.size == 0:
        raise EmptyImageError(f"{path}: zero-sized image")
    return as_image(codes.astype(np.float64) / 255.0)


def save_image(img: np.ndarray, path: str | os.PathLike) -> None:
    """Write ``img`` as 8-bit PPM/PGM (or PNG by extension).

    Each value ``v`` is stored as ``floor(v*255 + 0.5)`` clamped to ``[0, 255]``.
    """
    img = as_image(img)
    path = Path(path)
    ext = path.suffix.lower()
    if ext == ".pgm" and img.shape[2] != 1:
        raise ShapeMismatchError("PGM output needs a single-channel image")
    if ext == ".ppm" and img.shape[2] != 3:
        img = np.repeat(img, 3, axis=2)
    if ext == ".png":
        from PIL import Image

        codes = quantize(img)
        Image.fromarray(codes[:, :, 0] if codes.shape[2] == 1 else codes).save(path)
        return
    if ext not in _NETPBM_EXT:
        raise ImageError(f"unsupported output extension {ext!r}")
    path.write_bytes(encode_netpbm(img))


# ---------------------------------------------------------------------------
# half-sample symmetric boundary handling


def mirror_index(k, n: int):
    """Map (possibly out-of-range) indices onto ``[0, n)`` by half-sample mirroring.

    ``-1 -> 0``, ``-2 -> 1``, ``n -> n-1``; the extension is periodic with period ``2n``.
    """
    k = np.mod(k, 2 * n)
    return np.where(k < n, k, 2 * n - 1 - k) if isinstance(k, np.ndarray) else (k if k < n else 2 * n - 1 - k)


def sample_mirror(img: np.ndarray, i: int, j: int, c: int = 0) -> float:
    img = as_image(img)
    h, w = img.shape[:2]
    return float(img[mirror_index(i, h), mirror_index(j, w), c])


def pad_mirror(a: np.ndarray, r: int, axes=(0, 1)) -> np.ndarray:
    """Half-sample symmetric padding of ``r`` samples on both sides of ``axes``."""
    width = [(0, 0)] * a.ndim
    for ax in axes:
        width[ax] = (r, r)
    return np.pad(a, width, mode="symmetric")
