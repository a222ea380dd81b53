"""Decoding, grayscale conversion, patch grids, resampling, and quantization.

All functions are pure and operate on immutable uint8 buffers, so they are
safe to call concurrently and buffers may be shared read-only across workers.
"""

from __future__ import annotations

import io
import os
from dataclasses import dataclass, field

import numpy as np

DEFAULT_MAX_DIM = 20000

# ITU-R 601 luma weights, integer-rounded form.
_LUMA_WEIGHTS = (0.299, 0.587, 0.114)


class DecodeError(ValueError):
    """Unreadable, malformed, or unsupported image file."""


class ImageTooLargeError(DecodeError):
    """Image dimensions exceed the configured maximum."""


@dataclass(frozen=True)
class ImageBuffer:
    """Decoded 8-bit raster, row-major and channel-interleaved.

    ``data`` has shape (height, width, channels); channels is 1 or 3.
    """

    data: np.ndarray

    def __post_init__(self):
        a = self.data
        if a.ndim != 3 or a.dtype != np.uint8:
            raise ValueError("ImageBuffer expects a uint8 array of shape (h, w, c)")
        if a.shape[2] not in (1, 3):
            raise ValueError("channel count must be 1 or 3")
        if a.shape[0] < 1 or a.shape[1] < 1:
            raise ValueError("width and height must be >= 1")
        a.flags.writeable = False

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]


@dataclass(frozen=True)
class GrayBuffer:
    """8-bit single-channel luma raster, shape (height, width)."""

    data: np.ndarray

    def __post_init__(self):
        a = self.data
        if a.ndim != 2 or a.dtype != np.uint8:
            raise ValueError("GrayBuffer expects a uint8 array of shape (h, w)")
        if a.shape[0] < 1 or a.shape[1] < 1:
            raise ValueError("width and height must be >= 1")
        a.flags.writeable = False

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class PatchSpec:
    """Rectangular region inside an image grid, row-major ordinal ``index``."""

    x0: int
    y0: int
    w: int
    h: int
    index: int

    def slice_from(self, a: np.ndarray) -> np.ndarray:
        return a[self.y0:self.y0 + self.h, self.x0:self.x0 + self.w]


def _read_pnm_token(f) -> bytes:
    tok = b""
    while True:
        c = f.read(1)
        if not c:
            raise DecodeError("truncated PNM header")
        if c == b"#":  # comment runs to end of line
            while c not in (b"\n", b"", b"\r"):
                c = f.read(1)
            continue
        if c.isspace():
            if tok:
                return tok
            continue
        tok += c


def _decode_pnm(f, max_dim: int) -> ImageBuffer:
    magic = _read_pnm_token(f)
    if magic not in (b"P5", b"P6"):
        raise DecodeError(f"unsupported PNM magic {magic!r}")
    try:
        w = int(_read_pnm_token(f))
        h = int(_read_pnm_token(f))
        maxval = int(_read_pnm_token(f))
    except ValueError as e:
        raise DecodeError("malformed PNM header") from e
    if w < 1 or h < 1 or not (0 < maxval < 65536):
        raise DecodeError("invalid PNM dimensions or maxval")
    if w > max_dim or h > max_dim:
        raise ImageTooLargeError(f"{w}x{h} exceeds maximum {max_dim}x{max_dim}")
    channels = 1 if magic == b"P5" else 3
    n = w * h * channels
    if maxval > 255:
        raw = f.read(2 * n)
        if len(raw) != 2 * n:
            raise DecodeError("truncated PNM raster")
        samples = np.frombuffer(raw, dtype=">u2")
        data = (samples >> 8).astype(np.uint8)
    else:
        raw = f.read(n)
        if len(raw) != n:
            raise DecodeError("truncated PNM raster")
        data = np.frombuffer(raw, dtype=np.uint8).copy()
    return ImageBuffer(data.reshape(h, w, channels))


def _decode_pil(path: str, max_dim: int) -> ImageBuffer:
    from PIL import Image

    # The 20000x20000 limit below supersedes Pillow's decompression-bomb cap.
    Image.MAX_IMAGE_PIXELS = None
    try:
        with Image.open(path) as im:
            w, h = im.size
            if w > max_dim or h > max_dim:
                raise ImageTooLargeError(
                    f"{w}x{h} exceeds maximum {max_dim}x{max_dim}")
            if im.mode == "I;16":
                arr = np.asarray(im, dtype=np.uint16)
                return ImageBuffer((arr >> 8).astype(np.uint8)[:, :, None])
            if im.mode == "L":
                return ImageBuffer(np.asarray(im, dtype=np.uint8)[:, :, None])
            if im.mode != "RGB":
                im = im.convert("RGB")
            return ImageBuffer(np.asarray(im, dtype=np.uint8))
    except ImageTooLargeError:
        raise
    except Exception as e:
        raise DecodeError(f"cannot decode {path}: {e}") from e


def decode_image(path: str | os.PathLike, max_dim: int = DEFAULT_MAX_DIM) -> ImageBuffer:
    """Decode a PNG, JPEG, or binary PNM (P5/P6) file.

    16-bit sources are reduced to 8 bits by an integer right shift (no
    dithering) so results are identical across platforms.
    """
    try:
        with open(path, "rb") as f:
            magic = f.read(2)
    except OSError as e:
        raise DecodeError(f"cannot read {path}: {e}") from e
    if magic in (b"P5", b"P6"):
        with open(path, "rb") as f:
            return _decode_pnm(f, max_dim)
    if magic == b"\x89P" or magic == b"\xff\xd8":
        return _decode_pil(os.fspath(path), max_dim)
    raise DecodeError(f"unsupported format in {path}")


def decode_pnm_bytes(buf: bytes, max_dim: int = DEFAULT_MAX_DIM) -> ImageBuffer:
    return _decode_pnm(io.BytesIO(buf), max_dim)


def encode_pnm(img: ImageBuffer) -> bytes:
    """Encode as binary PNM, maxval 255, one whitespace after each header token."""
    magic = b"P5" if img.channels == 1 else b"P6"
    header = b"%s\n%d %d\n255\n" % (magic, img.width, img.height)
    return header + img.data.tobytes()


def write_pnm(img: ImageBuffer, path: str | os.PathLike) -> None:
    with open(path, "wb") as f:
        f.write(encode_pnm(img))


def to_grayscale(img: ImageBuffer) -> GrayBuffer:
    """ITU-R 601 luma: round(0.299 R + 0.587 G + 0.114 B); identity for 1-channel."""
    if img.channels == 1:
        return GrayBuffer(img.data[:, :, 0].copy())
    r, g, b = (img.data[:, :, i].astype(np.float64) for i in range(3))
    y = _LUMA_WEIGHTS[0] * r + _LUMA_WEIGHTS[1] * g + _LUMA_WEIGHTS[2] * b
    # floor(x + 0.5): round-half-up, independent of FPU rounding mode
    return GrayBuffer(np.floor(y + 0.5).astype(np.uint8))


def patch_grid(width: int, height: int, patch: int,
               drop_partial: bool = True) -> list[PatchSpec]:
    """Non-overlapping row-major grid with stride = patch.

    With ``drop_partial`` only full patches are returned; otherwise edge
    patches are clipped remainders and the grid tiles the image exactly.
    """
    if patch < 1:
        raise ValueError("patch must be >= 1")
    if drop_partial and patch > width and patch > height:
        raise ValueError("patch larger than both image dimensions")
    xs = range(0, width - patch + 1 if drop_partial else width, patch)
    ys = range(0, height - patch + 1 if drop_partial else height, patch)
    specs = []
    idx = 0
    for y0 in ys:
        for x0 in xs:
            specs.append(PatchSpec(x0, y0, min(patch, width - x0),
                                   min(patch, height - y0), idx))
            idx += 1
    if drop_partial and not specs:
        raise ValueError("no full patches fit the image")
    return specs


def _area_reduce_axis(a: np.ndarray, target: int, axis: int) -> np.ndarray:
    """Box-filter reduction along one axis (float64).

    Each output cell averages the source interval [i*m/t, (i+1)*m/t) with
    exact fractional end weights. All arithmetic is IEEE float64 applied in a
    fixed left-to-right order, so results are platform-independent.
    """
    m = a.shape[axis]
    a = np.moveaxis(a, axis, 0).astype(np.float64)
    out = np.zeros((target,) + a.shape[1:], dtype=np.float64)
    scale = m / target
    for i in range(target):
        lo = i * m / target
        hi = (i + 1) * m / target
        j0 = int(np.floor(lo))
        j1 = int(np.ceil(hi))
        acc = np.zeros(a.shape[1:], dtype=np.float64)
        for j in range(j0, min(j1, m)):
            wgt = min(hi, j + 1) - max(lo, j)
            acc += wgt * a[j]
        out[i] = acc / scale
    return np.moveaxis(out, 0, axis)


def _bilinear_axis(a: np.ndarray, target: int, axis: int) -> np.ndarray:
    """Bilinear (tent) interpolation along one axis, half-pixel centers."""
    m = a.shape[axis]
    a = np.moveaxis(a, axis, 0).astype(np.float64)
    pos = (np.arange(target) + 0.5) * (m / target) - 0.5
    pos = np.clip(pos, 0.0, m - 1.0)
    j0 = np.floor(pos).astype(np.int64)
    j1 = np.minimum(j0 + 1, m - 1)
    frac = (pos - j0).reshape((target,) + (1,) * (a.ndim - 1))
    out = a[j0] * (1.0 - frac) + a[j1] * frac
    return np.moveaxis(out, 0, axis)


def resample(img: ImageBuffer, target_w: int, target_h: int) -> ImageBuffer:
    """Resize: area averaging when shrinking an axis, bilinear when growing.

    Identity targets return a bit-identical copy.
    """
    if target_w < 1 or target_h < 1:
        raise ValueError("target dimensions must be >= 1")
    if target_w == img.width and target_h == img.height:
        return ImageBuffer(img.data.copy())
    a = img.data.astype(np.float64)
    if target_h != img.height:
        fn = _area_reduce_axis if target_h < img.height else _bilinear_axis
        a = fn(a, target_h, 0)
    if target_w != img.width:
        fn = _area_reduce_axis if target_w < img.width else _bilinear_axis
        a = fn(a, target_w, 1)
    return ImageBuffer(np.floor(np.clip(a, 0.0, 255.0) + 0.5).astype(np.uint8))


def quantize_levels(g: GrayBuffer, levels: int) -> GrayBuffer:
    """Uniform quantization to [0, levels-1]: q = floor(v * levels / 256)."""
    if not (2 <= levels <= 256):
        raise ValueError("levels must be in [2, 256]")
    q = (g.data.astype(np.uint32) * levels) >> 8
    return GrayBuffer(q.astype(np.uint8))
