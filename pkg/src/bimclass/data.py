"""Loading labeled image datasets from a directory.

A dataset directory either carries a manifest.csv (path,label,group_id,
view_index; written by the synthetic generator) or is a plain tree of
class-named subdirectories. The manifest form preserves structure groups so
grouped splits are possible; the bare form assigns every file its own group
and grouped splitting is refused.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DatasetError
from .image import Image, load_image, resize_bilinear
from .synth import DatasetManifest, StructureClass


@dataclass
class Dataset:
    images: list[Image]
    labels: np.ndarray      # (n,) int64 class indices
    group_ids: np.ndarray   # (n,) int64
    paths: list[str]        # relative paths, for error reports
    has_groups: bool

    def __len__(self) -> int:
        return len(self.images)

    @property
    def image_shape(self) -> tuple[int, int]:
        return self.images[0].height, self.images[0].width

    def subset(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(
            images=[self.images[i] for i in idx],
            labels=self.labels[idx],
            group_ids=self.group_ids[idx],
            paths=[self.paths[i] for i in idx],
            has_groups=self.has_groups,
        )


def _load_resized(path, image_size) -> Image:
    img = load_image(path)
    if image_size is not None and (img.height, img.width) != (image_size, image_size):
        img = resize_bilinear(img, image_size, image_size)
    return img


def load_dataset(data_dir, image_size: int | None = None) -> Dataset:
    """Load every labeled image under data_dir, resized to a square."""
    root = Path(data_dir)
    if not root.is_dir():
        raise DatasetError(f"{data_dir} is not a directory")
    manifest_path = root / "manifest.csv"
    images, labels, groups, paths = [], [], [], []
    if manifest_path.exists():
        manifest = DatasetManifest.read_csv(manifest_path)
        if not manifest.entries:
            raise DatasetError(f"manifest {manifest_path} is empty")
        for e in manifest.entries:
            images.append(_load_resized(root / e.path, image_size))
            labels.append(int(e.label))
            groups.append(e.group_id)
            paths.append(e.path)
        has_groups = True
    else:
        class_dirs = sorted(d for d in root.iterdir() if d.is_dir())
        if not class_dirs:
            raise DatasetError(f"{data_dir} has neither manifest.csv nor class subdirectories")
        for d in class_dirs:
            label = int(StructureClass.from_label(d.name))
            for f in sorted(d.iterdir()):
                if f.suffix.lower() not in (".png", ".pgm"):
                    continue
                images.append(_load_resized(f, image_size))
                labels.append(label)
                groups.append(len(groups))  # one group per file
                paths.append(f"{d.name}/{f.name}")
        has_groups = False
    if not images:
        raise DatasetError(f"no images found under {data_dir}")
    return Dataset(images, np.asarray(labels, dtype=np.int64),
                   np.asarray(groups, dtype=np.int64), paths, has_groups)
