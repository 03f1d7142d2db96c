"""Deterministic renderer of synthetic wireframe building images.

Three structure classes are drawn as dark line work on a white canvas:
apartment buildings (tall outline with a regular window grid), industrial
halls (wide and low with roof-truss diagonals) and a mixed "other" class
(tower / bridge / tank / mixed primitives). Each structure gets four views,
produced by distinct seeded affine skews of the same base drawing, so the
four images of a group stay strongly correlated the way multiple renders of
one building model would be.
"""

import csv
import json
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path

import numpy as np

from .errors import DatasetError
from .image import Image, save_image
from .rng import make_rng, mix_seed

_OUTLINE = 0.12
_DETAIL = 0.18
_WINDOW = 0.26


class StructureClass(IntEnum):
    APARTMENT_BUILDING = 0
    INDUSTRIAL_BUILDING = 1
    OTHER = 2

    @property
    def label(self) -> str:
        return self.name.lower()

    @classmethod
    def from_label(cls, label: str) -> "StructureClass":
        try:
            return cls[label.strip().upper()]
        except KeyError:
            raise DatasetError(f"unknown structure class label {label!r}") from None


@dataclass
class ManifestEntry:
    path: str  # relative to the dataset root, forward slashes
    label: StructureClass
    group_id: int
    view_index: int


@dataclass
class DatasetManifest:
    entries: list[ManifestEntry] = field(default_factory=list)

    def write_csv(self, path) -> None:
        lines = ["path,label,group_id,view_index"]
        for e in self.entries:
            lines.append(f"{e.path},{e.label.label},{e.group_id},{e.view_index}")
        Path(path).write_bytes(("\n".join(lines) + "\n").encode("utf-8"))

    @classmethod
    def read_csv(cls, path) -> "DatasetManifest":
        entries = []
        with open(path, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                entries.append(
                    ManifestEntry(
                        path=row["path"],
                        label=StructureClass.from_label(row["label"]),
                        group_id=int(row["group_id"]),
                        view_index=int(row["view_index"]),
                    )
                )
        return cls(entries)


@dataclass
class Recipe:
    """Base drawing of one structure, in [0,1]^2 coordinates (y grows down)."""

    variant: str
    filled_rects: list = field(default_factory=list)   # (x0, y0, x1, y1, value)
    outline_rects: list = field(default_factory=list)  # (x0, y0, x1, y1, value, thick)
    segments: list = field(default_factory=list)       # (x0, y0, x1, y1, value, thick)

    @property
    def rectangle_count(self) -> int:
        return len(self.filled_rects) + len(self.outline_rects)

    @property
    def segment_count(self) -> int:
        return len(self.segments)

    def counts(self) -> dict:
        return {
            "variant": self.variant,
            "rectangles": self.rectangle_count,
            "segments": self.segment_count,
        }


def _plan_apartment(rng) -> Recipe:
    r = Recipe("apartment")
    floors = int(rng.integers(4, 8))
    bays = int(rng.integers(3, 6))
    half_w = rng.uniform(0.16, 0.24)
    x0, x1 = 0.5 - half_w, 0.5 + half_w
    y0, y1 = rng.uniform(0.06, 0.12), rng.uniform(0.88, 0.94)
    r.outline_rects.append((x0, y0, x1, y1, _OUTLINE, 0.012))
    # window grid: floors x bays, inset from the facade edges
    mx, my = 0.18 / bays, 0.16 / floors
    cw, ch = (x1 - x0) / bays, (y1 - y0 - 0.06) / floors
    for fl in range(floors):
        for b in range(bays):
            wx0 = x0 + b * cw + mx
            wy0 = y0 + fl * ch + my
            r.filled_rects.append((wx0, wy0, wx0 + cw - 2 * mx, wy0 + ch - 2 * my, _WINDOW))
    # entrance door
    dw = cw * 0.45
    r.filled_rects.append((0.5 - dw / 2, y1 - 0.055, 0.5 + dw / 2, y1, 0.2))
    # parapet line
    r.segments.append((x0 - 0.02, y0 - 0.015, x1 + 0.02, y0 - 0.015, _OUTLINE, 0.01))
    return r


def _plan_industrial(rng) -> Recipe:
    r = Recipe("industrial")
    x0, x1 = rng.uniform(0.05, 0.1), rng.uniform(0.9, 0.95)
    y0, y1 = rng.uniform(0.42, 0.5), rng.uniform(0.86, 0.92)
    r.outline_rects.append((x0, y0, x1, y1, _OUTLINE, 0.012))
    # gable roof with truss work under the ridge
    apex_y = y0 - rng.uniform(0.12, 0.2)
    r.segments.append((x0, y0, 0.5, apex_y, _OUTLINE, 0.012))
    r.segments.append((0.5, apex_y, x1, y0, _OUTLINE, 0.012))
    n_diag = int(rng.integers(6, 11))
    xs = np.linspace(x0, x1, n_diag + 1)
    for i in range(n_diag):
        xa, xb = xs[i], xs[i + 1]
        # zigzag: alternate rising/falling diagonals clipped under the gable
        ya = y0 - (1 - abs(xa - 0.5) / (0.5 - x0 + 1e-9)) * (y0 - apex_y) * 0.9
        if i % 2 == 0:
            r.segments.append((xa, y0, xb, min(ya, y0 - 0.01), _DETAIL, 0.007))
        else:
            r.segments.append((xa, min(ya, y0 - 0.01), xb, y0, _DETAIL, 0.007))
    # big sliding door, few or no windows
    dw = rng.uniform(0.12, 0.2)
    dx = rng.uniform(x0 + 0.08, x1 - 0.08 - dw)
    r.filled_rects.append((dx, y1 - 0.22, dx + dw, y1, 0.22))
    for _ in range(int(rng.integers(0, 3))):
        wx = rng.uniform(x0 + 0.04, x1 - 0.1)
        r.filled_rects.append((wx, y0 + 0.05, wx + 0.05, y0 + 0.1, _WINDOW))
    # ground line
    r.segments.append((0.02, y1, 0.98, y1, _OUTLINE, 0.008))
    return r


def _plan_other(rng) -> Recipe:
    variant = ["tower", "bridge", "tank", "mixed"][int(rng.integers(0, 4))]
    r = Recipe(variant)
    if variant == "tower":
        hw = rng.uniform(0.05, 0.09)
        x0, x1 = 0.5 - hw, 0.5 + hw
        y0, y1 = rng.uniform(0.08, 0.14), 0.92
        r.outline_rects.append((x0, y0, x1, y1, _OUTLINE, 0.012))
        levels = int(rng.integers(3, 7))
        ys = np.linspace(y0, y1, levels + 1)
        for i in range(levels):
            r.segments.append((x0, ys[i], x1, ys[i + 1], _DETAIL, 0.007))
            r.segments.append((x1, ys[i], x0, ys[i + 1], _DETAIL, 0.007))
            r.segments.append((x0, ys[i + 1], x1, ys[i + 1], _DETAIL, 0.007))
        r.segments.append((0.5, y0, 0.5, y0 - rng.uniform(0.04, 0.07), _OUTLINE, 0.008))
    elif variant == "bridge":
        deck_y = rng.uniform(0.5, 0.6)
        r.segments.append((0.04, deck_y, 0.96, deck_y, _OUTLINE, 0.012))
        r.segments.append((0.04, deck_y + 0.03, 0.96, deck_y + 0.03, _OUTLINE, 0.008))
        px = [rng.uniform(0.2, 0.3), rng.uniform(0.7, 0.8)]
        top_y = deck_y - rng.uniform(0.22, 0.3)
        for x in px:
            r.outline_rects.append((x - 0.015, top_y, x + 0.015, deck_y + 0.2, _OUTLINE, 0.01))
        # suspension cables sagging between pylons, plus hangers
        n = 8
        for i in range(n):
            t0, t1 = i / n, (i + 1) / n
            xa = px[0] + (px[1] - px[0]) * t0
            xb = px[0] + (px[1] - px[0]) * t1
            sag = deck_y - 0.02 - (top_y - deck_y + 0.02) * -4 * 0.25
            ya = top_y + (sag - top_y) * 4 * t0 * (1 - t0)
            yb = top_y + (sag - top_y) * 4 * t1 * (1 - t1)
            r.segments.append((xa, ya, xb, yb, _DETAIL, 0.007))
        for t in np.linspace(0.1, 0.9, 5):
            x = px[0] + (px[1] - px[0]) * t
            y = top_y + (deck_y - 0.02 - top_y) * 4 * t * (1 - t)
            r.segments.append((x, y, x, deck_y, _DETAIL, 0.005))
    elif variant == "tank":
        hw = rng.uniform(0.14, 0.2)
        x0, x1 = 0.5 - hw, 0.5 + hw
        y0, y1 = rng.uniform(0.34, 0.42), rng.uniform(0.84, 0.9)
        r.outline_rects.append((x0, y0, x1, y1, _OUTLINE, 0.012))
        for y in np.linspace(y0 + 0.08, y1 - 0.08, int(rng.integers(3, 6))):
            r.segments.append((x0, y, x1, y, _DETAIL, 0.006))
        # shallow dome cap as two slanted segments
        r.segments.append((x0, y0, 0.5, y0 - 0.05, _OUTLINE, 0.01))
        r.segments.append((0.5, y0 - 0.05, x1, y0, _OUTLINE, 0.01))
        # side ladder
        lx = x1 + 0.03
        r.segments.append((lx, y0 + 0.02, lx, y1, _DETAIL, 0.006))
        for y in np.linspace(y0 + 0.06, y1 - 0.04, 6):
            r.segments.append((x1, y, lx, y, _DETAIL, 0.004))
    else:  # mixed: loose scatter of boxes and braces
        for _ in range(int(rng.integers(2, 4))):
            x = rng.uniform(0.1, 0.7)
            y = rng.uniform(0.2, 0.7)
            w = rng.uniform(0.08, 0.22)
            h = rng.uniform(0.08, 0.22)
            r.outline_rects.append((x, y, x + w, y + h, _OUTLINE, 0.01))
        for _ in range(int(rng.integers(4, 9))):
            r.segments.append(
                (rng.uniform(0.05, 0.95), rng.uniform(0.1, 0.9),
                 rng.uniform(0.05, 0.95), rng.uniform(0.1, 0.9), _DETAIL, 0.007)
            )
    return r


_PLANNERS = {
    StructureClass.APARTMENT_BUILDING: _plan_apartment,
    StructureClass.INDUSTRIAL_BUILDING: _plan_industrial,
    StructureClass.OTHER: _plan_other,
}


def structure_recipe(cls: StructureClass, structure_seed: int) -> Recipe:
    """Base drawing plan for one structure; views share it unchanged."""
    return _PLANNERS[StructureClass(cls)](make_rng(structure_seed, int(cls)))


# per-view mean skew/rotation offsets keep the four angles clearly apart
_VIEW_ROT = (-9.0, -3.0, 3.0, 9.0)
_VIEW_SHEAR = (-0.12, -0.04, 0.04, 0.12)


def _view_matrix(structure_seed: int, view_index: int, size: int) -> np.ndarray:
    """Homogeneous 3x3 map from base [0,1]^2 coordinates to pixel coordinates."""
    rng = make_rng(structure_seed, 7, view_index)
    rot = np.deg2rad(_VIEW_ROT[view_index] + rng.uniform(-3.0, 3.0))
    shear = _VIEW_SHEAR[view_index] + rng.uniform(-0.04, 0.04)
    scale = rng.uniform(0.82, 0.98)
    tx = rng.uniform(-0.03, 0.03) * size
    ty = rng.uniform(-0.03, 0.03) * size

    s = (size - 1) * scale
    base = np.array([[s, 0.0, 0.0], [0.0, s, 0.0], [0.0, 0.0, 1.0]])
    sh = np.array([[1.0, shear, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    c, n = np.cos(rot), np.sin(rot)
    ro = np.array([[c, -n, 0.0], [n, c, 0.0], [0.0, 0.0, 1.0]])
    m = ro @ sh @ base
    # recenter the transformed unit square and add translation jitter
    corners = m @ np.array([[0, 1, 0, 1], [0, 0, 1, 1], [1, 1, 1, 1]], dtype=float)
    cx = (corners[0].min() + corners[0].max()) / 2
    cy = (corners[1].min() + corners[1].max()) / 2
    m[0, 2] = (size - 1) / 2 - cx + tx
    m[1, 2] = (size - 1) / 2 - cy + ty
    return m


def _apply(m: np.ndarray, x, y) -> tuple[float, float]:
    return (m[0, 0] * x + m[0, 1] * y + m[0, 2], m[1, 0] * x + m[1, 1] * y + m[1, 2])


def _draw_segment(canvas, p0, p1, value, thick_px):
    h, w = canvas.shape[:2]
    half = thick_px / 2.0
    pad = int(np.ceil(half)) + 2
    r0 = max(0, int(np.floor(min(p0[1], p1[1]))) - pad)
    r1 = min(h, int(np.ceil(max(p0[1], p1[1]))) + pad + 1)
    c0 = max(0, int(np.floor(min(p0[0], p1[0]))) - pad)
    c1 = min(w, int(np.ceil(max(p0[0], p1[0]))) + pad + 1)
    if r0 >= r1 or c0 >= c1:
        return
    ys, xs = np.meshgrid(np.arange(r0, r1), np.arange(c0, c1), indexing="ij")
    dx, dy = p1[0] - p0[0], p1[1] - p0[1]
    len2 = dx * dx + dy * dy
    if len2 < 1e-12:
        dist = np.hypot(xs - p0[0], ys - p0[1])
    else:
        t = np.clip(((xs - p0[0]) * dx + (ys - p0[1]) * dy) / len2, 0.0, 1.0)
        dist = np.hypot(xs - (p0[0] + t * dx), ys - (p0[1] + t * dy))
    cov = np.clip(half + 0.5 - dist, 0.0, 1.0)
    region = canvas[r0:r1, c0:c1]
    region -= cov[:, :, None] * (region - value)


def _fill_rect(canvas, m, rect, value):
    x0, y0, x1, y1 = rect
    h, w = canvas.shape[:2]
    pts = [_apply(m, x, y) for x, y in ((x0, y0), (x1, y0), (x0, y1), (x1, y1))]
    xs_p = [p[0] for p in pts]
    ys_p = [p[1] for p in pts]
    r0 = max(0, int(np.floor(min(ys_p))) - 1)
    r1 = min(h, int(np.ceil(max(ys_p))) + 2)
    c0 = max(0, int(np.floor(min(xs_p))) - 1)
    c1 = min(w, int(np.ceil(max(xs_p))) + 2)
    if r0 >= r1 or c0 >= c1:
        return
    minv = np.linalg.inv(m)
    ys, xs = np.meshgrid(np.arange(r0, r1), np.arange(c0, c1), indexing="ij")
    bx = minv[0, 0] * xs + minv[0, 1] * ys + minv[0, 2]
    by = minv[1, 0] * xs + minv[1, 1] * ys + minv[1, 2]
    mask = (bx >= x0) & (bx <= x1) & (by >= y0) & (by <= y1)
    region = canvas[r0:r1, c0:c1]
    region[mask] = value


def render_structure(cls: StructureClass, structure_seed: int, view_index: int, size: int) -> Image:
    """Render one view of one structure; a pure function of its arguments."""
    if size < 32:
        raise ValueError(f"canvas size must be >= 32, got {size}")
    if not 0 <= view_index <= 3:
        raise ValueError(f"view_index must be in 0..3, got {view_index}")
    recipe = structure_recipe(cls, structure_seed)
    m = _view_matrix(structure_seed, view_index, size)
    canvas = np.ones((size, size, 3), dtype=np.float64)
    for x0, y0, x1, y1, value in recipe.filled_rects:
        _fill_rect(canvas, m, (x0, y0, x1, y1), value)
    for x0, y0, x1, y1, value, thick in recipe.outline_rects:
        t_px = max(1.0, thick * size)
        corners = ((x0, y0), (x1, y0), (x1, y1), (x0, y1))
        for i in range(4):
            pa = _apply(m, *corners[i])
            pb = _apply(m, *corners[(i + 1) % 4])
            _draw_segment(canvas, pa, pb, value, t_px)
    for x0, y0, x1, y1, value, thick in recipe.segments:
        _draw_segment(canvas, _apply(m, x0, y0), _apply(m, x1, y1), value, max(1.0, thick * size))
    return Image(np.clip(canvas, 0.0, 1.0))


def generate_dataset(out_dir, per_class_groups: int, seed: int, size: int = 224) -> DatasetManifest:
    """Render per_class_groups structures per class, 4 views each, under out_dir.

    Per-structure seeds are mix_seed(seed, group_id), independent of render
    order. Writes manifest.csv plus a recipes.json sidecar with the primitive
    counts of every structure's drawing plan.
    """
    if per_class_groups < 1:
        raise ValueError("per_class_groups must be >= 1")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = DatasetManifest()
    recipes = {}
    for cls in StructureClass:
        (out_dir / cls.label).mkdir(exist_ok=True)
        for g in range(per_class_groups):
            group_id = int(cls) * per_class_groups + g
            structure_seed = mix_seed(seed, group_id)
            recipes[str(group_id)] = {"label": cls.label} | structure_recipe(cls, structure_seed).counts()
            for view in range(4):
                rel = f"{cls.label}/{cls.label}_{group_id:03d}_v{view}.png"
                save_image(render_structure(cls, structure_seed, view, size), out_dir / rel)
                manifest.entries.append(ManifestEntry(rel, cls, group_id, view))
    manifest.write_csv(out_dir / "manifest.csv")
    (out_dir / "recipes.json").write_bytes(
        json.dumps(recipes, indent=2, sort_keys=True).encode("utf-8")
    )
    return manifest
