"""On-disk corpora laid out as ``root/<class>/<set>/<image files>``."""

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from setlrc.errors import IngestError, InvalidInputError

IMAGE_SUFFIXES = (".png", ".pgm", ".bmp")


@dataclass(frozen=True)
class ImageSetEntry:
    set_id: str
    paths: tuple


@dataclass(frozen=True)
class ClassEntry:
    label: str
    sets: tuple


@dataclass(frozen=True)
class DatasetManifest:
    root: str
    classes: tuple

    @property
    def labels(self):
        return [c.label for c in self.classes]

    @property
    def image_count(self):
        return sum(len(s.paths) for c in self.classes for s in c.sets)

    @property
    def set_count(self):
        return sum(len(c.sets) for c in self.classes)

    def to_dict(self):
        return {
            "root": self.root,
            "classes": [
                {
                    "label": c.label,
                    "sets": [{"set_id": s.set_id, "images": list(s.paths)} for s in c.sets],
                }
                for c in self.classes
            ],
        }


def _check_image(path):
    if path.suffix.lower() not in IMAGE_SUFFIXES:
        return f"{path}: not an image file (expected {', '.join(IMAGE_SUFFIXES)})"
    try:
        with Image.open(path) as im:
            im.verify()
    except (OSError, UnidentifiedImageError, SyntaxError) as exc:
        return f"{path}: unreadable image ({exc})"
    return None


def ingest_dataset(root):
    """Enumerate classes, sets and images under ``root`` in lexicographic order.

    Regular files directly under ``root`` (e.g. a ground-truth record) are
    ignored. Anything else out of place is collected and reported in a
    single :class:`IngestError`.
    """
    root = Path(root)
    if not root.is_dir():
        raise IngestError(f"{root}: not a directory")
    problems = []
    classes = []
    for class_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        sets = []
        for entry in sorted(class_dir.iterdir()):
            if not entry.is_dir():
                problems.append(f"{entry}: stray file at class level")
                continue
            paths = []
            for f in sorted(entry.iterdir()):
                if f.is_dir():
                    problems.append(f"{f}: nested directory inside an image set")
                    continue
                err = _check_image(f)
                if err:
                    problems.append(err)
                else:
                    paths.append(str(f))
            if not paths:
                problems.append(f"{entry}: image set has no images")
            sets.append(ImageSetEntry(f"{class_dir.name}/{entry.name}", tuple(paths)))
        if not sets:
            problems.append(f"{class_dir}: class has no image sets")
        classes.append(ClassEntry(class_dir.name, tuple(sets)))
    if not classes:
        problems.append(f"{root}: no class directories")
    if problems:
        raise IngestError("dataset ingest failed:\n  " + "\n  ".join(problems))
    return DatasetManifest(str(root), tuple(classes))


def load_raster(path):
    """Read an image file into a ``(h, w)`` or ``(h, w, 3)`` float array."""
    with Image.open(path) as im:
        if im.mode in ("I;16", "I;16B", "I;16L", "I", "F"):
            raise InvalidInputError(f"{path}: only 8-bit images are supported (mode {im.mode})")
        if im.mode not in ("L", "RGB"):
            im = im.convert("RGB")
        return np.asarray(im, dtype=np.float64)


def load_image_dir(directory):
    """Sorted image paths of a single set directory."""
    directory = Path(directory)
    if not directory.is_dir():
        raise IngestError(f"{directory}: not a directory")
    problems, paths = [], []
    for f in sorted(directory.iterdir()):
        if f.is_dir():
            continue
        err = _check_image(f)
        if err:
            problems.append(err)
        else:
            paths.append(str(f))
    if problems:
        raise IngestError("image set ingest failed:\n  " + "\n  ".join(problems))
    if not paths:
        raise IngestError(f"{directory}: no images")
    return paths
