"""Image container, PGM/PNG file I/O, bilinear resize and grayscale conversion."""

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image as PILImage
from PIL import UnidentifiedImageError

from .errors import CorruptDataError, UnsupportedFormatError

# Rec. 601 luma weights
_LUMA = np.array([0.299, 0.587, 0.114])


@dataclass
class Image:
    """Dense H x W x C grid of intensities in [0, 1], C in {1, 3}."""

    data: np.ndarray  # float64, shape (height, width, channels)

    def __post_init__(self):
        d = np.asarray(self.data, dtype=np.float64)
        if d.ndim == 2:
            d = d[:, :, None]
        if d.ndim != 3 or d.shape[2] not in (1, 3):
            raise ValueError(f"image data must be (H, W, 1|3), got shape {d.shape}")
        if d.shape[0] < 1 or d.shape[1] < 1:
            raise ValueError("image must have height >= 1 and width >= 1")
        if not np.all(np.isfinite(d)) or d.min() < 0.0 or d.max() > 1.0:
            raise ValueError("intensities must be finite and within [0, 1]")
        self.data = d

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]


def _read_pgm(raw: bytes) -> Image:
    # binary PGM (P5), maxval 255; header tokens may be separated by
    # whitespace or '#' comments
    pos = 2  # past magic
    tokens = []
    while len(tokens) < 3:
        while pos < len(raw) and raw[pos : pos + 1].isspace():
            pos += 1
        if pos < len(raw) and raw[pos : pos + 1] == b"#":
            while pos < len(raw) and raw[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise CorruptDataError("truncated PGM header")
        tokens.append(raw[start:pos])
    pos += 1  # single whitespace after maxval
    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError as exc:
        raise CorruptDataError("malformed PGM header") from exc
    if maxval != 255:
        raise UnsupportedFormatError(f"only maxval 255 PGM is supported, got {maxval}")
    if width < 1 or height < 1:
        raise CorruptDataError("non-positive PGM dimensions")
    payload = raw[pos : pos + width * height]
    if len(payload) < width * height:
        raise CorruptDataError("truncated PGM pixel data")
    pixels = np.frombuffer(payload, dtype=np.uint8).reshape(height, width)
    return Image(pixels.astype(np.float64) / 255.0)


def _read_png(raw: bytes) -> Image:
    try:
        with PILImage.open(io.BytesIO(raw)) as img:
            img.load()
            mode = img.mode
            if mode in ("RGBA", "LA", "PA"):
                raise UnsupportedFormatError("PNG alpha channels are not supported")
            if mode not in ("L", "RGB"):
                raise UnsupportedFormatError(f"unsupported PNG mode {mode!r} (need 8-bit L or RGB)")
            arr = np.asarray(img, dtype=np.uint8)
    except UnidentifiedImageError as exc:
        raise CorruptDataError("malformed PNG stream") from exc
    except (OSError, SyntaxError, ValueError) as exc:
        raise CorruptDataError("truncated or corrupt PNG stream") from exc
    return Image(arr.astype(np.float64) / 255.0)


def load_image(path) -> Image:
    """Load a binary PGM (P5) or 8-bit PNG file, mapping bytes to [0, 1]."""
    raw = Path(path).read_bytes()
    if raw[:2] == b"P5":
        return _read_pgm(raw)
    if raw[:8] == b"\x89PNG\r\n\x1a\n":
        return _read_png(raw)
    raise UnsupportedFormatError(f"{path}: not a binary PGM or PNG file")


def quantize(img: Image) -> np.ndarray:
    """Map intensities to bytes with round-half-up, i.e. byte = floor(255*v + 0.5)."""
    return np.floor(img.data * 255.0 + 0.5).astype(np.uint8)


def save_image(img: Image, path) -> None:
    """Write `img` to `path`: PGM for 1-channel images, PNG for 3-channel."""
    path = Path(path)
    q = quantize(img)
    if img.channels == 1:
        header = f"P5\n{img.width} {img.height}\n255\n".encode("ascii")
        path.write_bytes(header + q[:, :, 0].tobytes())
    else:
        PILImage.fromarray(q, mode="RGB").save(path, format="PNG")


def bilinear_sample(data: np.ndarray, rows: np.ndarray, cols: np.ndarray, fill: float = 1.0) -> np.ndarray:
    """Sample (H, W, C) data at fractional (rows, cols); outside [0,H-1]x[0,W-1] -> fill.

    rows/cols share any broadcastable shape S; the result has shape S + (C,).
    """
    h, w = data.shape[:2]
    inside = (rows >= 0) & (rows <= h - 1) & (cols >= 0) & (cols <= w - 1)
    r = np.clip(rows, 0, h - 1)
    c = np.clip(cols, 0, w - 1)
    r0 = np.floor(r).astype(np.intp)
    c0 = np.floor(c).astype(np.intp)
    r1 = np.minimum(r0 + 1, h - 1)
    c1 = np.minimum(c0 + 1, w - 1)
    fr = (r - r0)[..., None]
    fc = (c - c0)[..., None]
    top = data[r0, c0] * (1 - fc) + data[r0, c1] * fc
    bot = data[r1, c0] * (1 - fc) + data[r1, c1] * fc
    out = top * (1 - fr) + bot * fr
    out[~inside] = fill
    return out


def resize_bilinear(img: Image, out_h: int, out_w: int) -> Image:
    """Resize with corner-aligned bilinear interpolation.

    For an output dimension of size m > 1 the sample grid is
    i * (n - 1) / (m - 1), so the first and last samples coincide with the
    input corners. A size-1 output dimension samples the input center.
    """
    if out_h < 1 or out_w < 1:
        raise ValueError(f"target dimensions must be >= 1, got {out_h}x{out_w}")
    if out_h == img.height and out_w == img.width:
        return Image(img.data.copy())
    rows = (
        np.arange(out_h) * ((img.height - 1) / (out_h - 1))
        if out_h > 1
        else np.array([(img.height - 1) / 2.0])
    )
    cols = (
        np.arange(out_w) * ((img.width - 1) / (out_w - 1))
        if out_w > 1
        else np.array([(img.width - 1) / 2.0])
    )
    grid_r, grid_c = np.meshgrid(rows, cols, indexing="ij")
    out = bilinear_sample(img.data, grid_r, grid_c)
    return Image(np.clip(out, 0.0, 1.0))


def to_grayscale(img: Image) -> Image:
    """Collapse RGB to a single luminance channel (Rec. 601 weights)."""
    if img.channels == 1:
        return img
    gray = img.data @ _LUMA
    return Image(np.clip(gray, 0.0, 1.0)[:, :, None])
