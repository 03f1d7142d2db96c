"""Stochastic augmentation: random rotations, horizontal flips and shifts.

Transform kinds are fixed; magnitudes are configurable via AugmentParams.
The combined `augment` applies flip, then rotation, then shift, drawing all
parameters from a caller-provided generator so streams are reproducible.
"""

from dataclasses import dataclass

import numpy as np

from .image import Image, bilinear_sample


@dataclass
class AugmentParams:
    max_rotation_deg: float = 20.0
    max_shift_frac: float = 0.1
    hflip_prob: float = 0.5
    fill_value: float = 1.0  # white, matching the renderer's background

    def __post_init__(self):
        if self.max_rotation_deg < 0:
            raise ValueError("max_rotation_deg must be >= 0")
        if not 0.0 <= self.max_shift_frac < 1.0:
            raise ValueError("max_shift_frac must be in [0, 1)")
        if not 0.0 <= self.hflip_prob <= 1.0:
            raise ValueError("hflip_prob must be a probability")
        if not 0.0 <= self.fill_value <= 1.0:
            raise ValueError("fill_value must be an intensity in [0, 1]")


def rotate(img: Image, angle_deg: float, fill: float = 1.0) -> Image:
    """Rotate about the image center with bilinear resampling; dims unchanged."""
    if angle_deg == 0.0:
        return Image(img.data.copy())
    theta = np.deg2rad(angle_deg)
    c, s = np.cos(theta), np.sin(theta)
    cy, cx = (img.height - 1) / 2.0, (img.width - 1) / 2.0
    rows, cols = np.meshgrid(np.arange(img.height), np.arange(img.width), indexing="ij")
    y = rows - cy
    x = cols - cx
    src_r = c * y - s * x + cy
    src_c = s * y + c * x + cx
    out = bilinear_sample(img.data, src_r, src_c, fill=fill)
    return Image(np.clip(out, 0.0, 1.0))


def shift(img: Image, dx: int, dy: int, fill: float = 1.0) -> Image:
    """Translate by whole pixels (dx columns, dy rows); vacated pixels get fill."""
    if abs(dx) >= img.width or abs(dy) >= img.height:
        raise ValueError(f"shift ({dx}, {dy}) out of range for {img.width}x{img.height}")
    out = np.full_like(img.data, fill)
    h, w = img.height, img.width
    src_r = slice(max(0, -dy), min(h, h - dy))
    src_c = slice(max(0, -dx), min(w, w - dx))
    dst_r = slice(max(0, dy), min(h, h + dy))
    dst_c = slice(max(0, dx), min(w, w + dx))
    out[dst_r, dst_c] = img.data[src_r, src_c]
    return Image(out)


def hflip(img: Image) -> Image:
    """Mirror left-right."""
    return Image(img.data[:, ::-1].copy())


def augment(img: Image, params: AugmentParams, rng: np.random.Generator) -> Image:
    """One random draw: flip, then rotate, then shift.

    Draw order is fixed (angle, dx, dy, flip) so a seeded generator yields
    the same stream regardless of which transforms end up as no-ops.
    """
    angle = rng.uniform(-params.max_rotation_deg, params.max_rotation_deg)
    mx = int(img.width * params.max_shift_frac)
    my = int(img.height * params.max_shift_frac)
    dx = int(rng.integers(-mx, mx + 1))
    dy = int(rng.integers(-my, my + 1))
    flip = rng.random() < params.hflip_prob

    out = hflip(img) if flip else img
    if angle != 0.0:
        out = rotate(out, angle, fill=params.fill_value)
    if dx != 0 or dy != 0:
        out = shift(out, dx, dy, fill=params.fill_value)
    if out is img:
        out = Image(img.data.copy())
    return out
