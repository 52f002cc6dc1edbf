"""Synthetic corpora whose classes lie on known low-rank subspaces."""

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from setlrc.errors import InvalidConfigError
from setlrc.seeds import derive_seed

TRUTH_FILE = "truth.json"
MID_GRAY = 127.5


@dataclass(frozen=True)
class SynthParams:
    classes: int
    sets_per_class: int
    images_per_set: int
    dims: tuple
    rank: int
    sigma: float = 0.0
    seed: int = 0
    amplitude: float = 25.0

    def __post_init__(self):
        a, b = self.dims
        object.__setattr__(self, "dims", (int(a), int(b)))
        if min(self.classes, self.sets_per_class, self.images_per_set, a, b) < 1:
            raise InvalidConfigError("counts and dims must be positive")
        if not 1 <= self.rank <= a * b:
            raise InvalidConfigError(f"rank {self.rank} must lie in [1, T={a * b}]")
        if self.sigma < 0:
            raise InvalidConfigError("sigma must be non-negative")
        if self.amplitude <= 0:
            raise InvalidConfigError("amplitude must be positive")

    @property
    def T(self):
        return self.dims[0] * self.dims[1]


def synthesize(p):
    """Generate the corpus in memory.

    Returns ``{label: [set images]}`` where each set is a list of uint8
    ``a x b`` arrays. Each image is ``127.5 + B_c w + sigma z``, clipped and
    rounded to 8 bits, with ``B_c`` an orthonormal rank-``r`` class basis
    and ``w`` scaled so each pixel deviates by about ``amplitude`` levels.
    The noise draws ``z`` are independent of ``sigma``, so corpora that
    differ only in ``sigma`` share the same clean images and noise pattern.
    """
    a, b = p.dims
    T = p.T
    coef_scale = p.amplitude * np.sqrt(T / p.rank)
    corpus = {}
    for c in range(p.classes):
        basis_rng = np.random.default_rng(derive_seed(p.seed, c, 0))
        B, _ = np.linalg.qr(basis_rng.standard_normal((T, p.rank)))
        sets = []
        for s in range(p.sets_per_class):
            rng = np.random.default_rng(derive_seed(p.seed, c, 1, s))
            noise_rng = np.random.default_rng(derive_seed(p.seed, c, 2, s))
            W = rng.standard_normal((p.rank, p.images_per_set)) * coef_scale
            Z = noise_rng.standard_normal((T, p.images_per_set))
            X = MID_GRAY + B @ W + p.sigma * Z
            X = np.clip(np.rint(X), 0, 255).astype(np.uint8)
            sets.append([X[:, m].reshape((a, b), order="F") for m in range(p.images_per_set)])
        corpus[f"class_{c:02d}"] = sets
    return corpus


def generate_synthetic(p, out_dir):
    """Write a synthetic corpus as PNG files plus a ground-truth record.

    Layout: ``out_dir/class_XX/set_YY/img_ZZZZ.png`` and
    ``out_dir/truth.json``. Returns the ground-truth record.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    sets_record = []
    for label, sets in synthesize(p).items():
        for s, images in enumerate(sets):
            set_dir = out / label / f"set_{s:02d}"
            set_dir.mkdir(parents=True, exist_ok=True)
            for m, img in enumerate(images):
                Image.fromarray(img).save(set_dir / f"img_{m:04d}.png")
            sets_record.append({"set_id": f"{label}/set_{s:02d}", "label": label})
    params = asdict(p)
    params["dims"] = list(p.dims)
    truth = {"params": params, "sets": sets_record}
    (out / TRUTH_FILE).write_text(json.dumps(truth, indent=2, sort_keys=True) + "\n")
    return truth
