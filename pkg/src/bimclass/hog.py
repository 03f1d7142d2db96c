"""Histogram-of-Oriented-Gradients descriptor (Dalal-Triggs style).

Defaults: 4x4-pixel cells, 2x2-cell blocks with stride 1, 9 unsigned
orientation bins, L2-Hys block normalization with clipping at 0.2.
Orientation votes are split linearly between the two nearest bin centers;
there is no inter-cell spatial interpolation.
"""

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .image import Image, to_grayscale

_EPS = 1e-12
_CLIP = 0.2


@dataclass
class HogParams:
    cell_size: int = 4      # pixels
    block_size: int = 2     # cells per block side
    block_stride: int = 1   # cells
    n_bins: int = 9
    signed: bool = False    # False: orientations folded into [0, 180)

    def __post_init__(self):
        if self.cell_size < 1 or self.block_size < 1 or self.n_bins < 2:
            raise ValueError("cell_size, block_size >= 1 and n_bins >= 2 required")
        if not 1 <= self.block_stride <= self.block_size:
            raise ValueError("block_stride must be in [1, block_size]")
        if self.signed:
            raise NotImplementedError("signed orientations are not supported")


@dataclass
class HogDescriptor:
    """Flat block-normalized descriptor, laid out (blocks_y, blocks_x, block^2, bins)."""

    values: np.ndarray
    blocks_y: int
    blocks_x: int
    block_size: int
    n_bins: int

    def __len__(self) -> int:
        return self.values.size


def descriptor_length(height: int, width: int, params: HogParams) -> int:
    by = (height // params.cell_size - params.block_size) // params.block_stride + 1
    bx = (width // params.cell_size - params.block_size) // params.block_stride + 1
    return by * bx * params.block_size**2 * params.n_bins


def gradients(img: Image) -> tuple[np.ndarray, np.ndarray]:
    """Per-pixel derivative estimates: centered (x[i+1]-x[i-1])/2 in the
    interior, one-sided differences on the borders."""
    if img.channels != 1:
        raise ValueError("gradients require a grayscale image")
    x = img.data[:, :, 0]
    gx = np.empty_like(x)
    gy = np.empty_like(x)
    gx[:, 1:-1] = (x[:, 2:] - x[:, :-2]) / 2.0
    gx[:, 0] = x[:, 1] - x[:, 0] if x.shape[1] > 1 else 0.0
    gx[:, -1] = x[:, -1] - x[:, -2] if x.shape[1] > 1 else 0.0
    gy[1:-1, :] = (x[2:, :] - x[:-2, :]) / 2.0
    gy[0, :] = x[1, :] - x[0, :] if x.shape[0] > 1 else 0.0
    gy[-1, :] = x[-1, :] - x[-2, :] if x.shape[0] > 1 else 0.0
    return gx, gy


def cell_histograms(gx: np.ndarray, gy: np.ndarray, params: HogParams) -> np.ndarray:
    """Per-cell orientation histograms, shape (cells_y, cells_x, n_bins).

    Each pixel votes its gradient magnitude, split linearly between the two
    bin centers nearest its unsigned orientation (centers at
    (i + 0.5) * 180 / n_bins, wrapping between the last and first bin).
    """
    if gx.shape != gy.shape:
        raise ValueError(f"gradient grids disagree: {gx.shape} vs {gy.shape}")
    h, w = gx.shape
    cs, nb = params.cell_size, params.n_bins
    if h % cs or w % cs:
        raise ValueError(f"dims {h}x{w} not divisible by cell_size {cs}")
    cy, cx = h // cs, w // cs

    mag = np.hypot(gx, gy)
    theta = np.degrees(np.arctan2(gy, gx)) % 180.0
    width = 180.0 / nb
    t = theta / width - 0.5
    lo = np.floor(t)
    frac = t - lo
    bin_lo = lo.astype(np.int64) % nb
    bin_hi = (bin_lo + 1) % nb

    rows = np.arange(h) // cs
    cols = np.arange(w) // cs
    cell_idx = rows[:, None] * cx + cols[None, :]
    flat_lo = cell_idx * nb + bin_lo
    flat_hi = cell_idx * nb + bin_hi
    hist = np.bincount(flat_lo.ravel(), weights=(mag * (1 - frac)).ravel(), minlength=cy * cx * nb)
    hist += np.bincount(flat_hi.ravel(), weights=(mag * frac).ravel(), minlength=cy * cx * nb)
    return hist.reshape(cy, cx, nb)


def block_normalize(cells: np.ndarray, params: HogParams) -> HogDescriptor:
    """Gather overlapping blocks of cells and L2-Hys normalize each one."""
    cy, cx, nb = cells.shape
    bs, stride = params.block_size, params.block_stride
    if cy < bs or cx < bs:
        raise ValueError(f"cell grid {cy}x{cx} smaller than block size {bs}")
    windows = sliding_window_view(cells, (bs, bs), axis=(0, 1))[::stride, ::stride]
    by, bx = windows.shape[:2]
    # (by, bx, nb, bs, bs) -> (by, bx, bs*bs, nb) -> per-block flat vectors
    blocks = windows.transpose(0, 1, 3, 4, 2).reshape(by, bx, bs * bs * nb).copy()
    norm = np.sqrt(np.sum(blocks**2, axis=-1, keepdims=True) + _EPS)
    blocks /= norm
    np.clip(blocks, None, _CLIP, out=blocks)
    norm = np.sqrt(np.sum(blocks**2, axis=-1, keepdims=True) + _EPS)
    blocks /= norm
    return HogDescriptor(blocks.reshape(-1), by, bx, bs, nb)


def hog_descriptor(img: Image, params: HogParams = HogParams()) -> HogDescriptor:
    """Full pipeline: grayscale -> gradients -> cell histograms -> blocks."""
    gx, gy = gradients(to_grayscale(img))
    return block_normalize(cell_histograms(gx, gy, params), params)
