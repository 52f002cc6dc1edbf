"""Repeated random gallery/test split evaluation and timing."""

import logging
import time
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from setlrc.classifier import REMEDIES, TestSet, VoteConfig, classify_set, gallery_from_vectors
from setlrc.errors import InvalidConfigError, ProtocolError
from setlrc.harness.dataset import load_raster
from setlrc.preprocess import PreprocessConfig, finalize, pixel_vector
from setlrc import kernels
from setlrc.seeds import derive_seed

logger = logging.getLogger(__name__)

MODES = ("fast", "naive")
_MODE_METHOD = {"fast": "auto", "naive": "naive"}
TIMING_FIELDS = frozenset({"seconds", "gallery_seconds", "mean_set_seconds"})
_FOLD_STREAM = 7919


@dataclass(frozen=True)
class ProtocolConfig:
    """Settings for one evaluation protocol.

    ``gallery_images_per_set=None`` uses every image of each gallery set.
    With ``folds`` set, each class's sets are split into that many disjoint
    folds and repeat ``r`` draws its gallery and test sets from fold
    ``r % folds`` only.
    """

    dims: tuple = (32, 32)
    alpha: float = 0.2
    strategy: str = "exponential"
    k: int = None
    remedy: str = "perturb"
    equalize: bool = False
    standardize: bool = False
    repeats: int = 10
    gallery_sets_per_class: int = 1
    gallery_images_per_set: int = None
    folds: int = None
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        if self.repeats < 1:
            raise InvalidConfigError("repeats must be >= 1")
        if self.gallery_sets_per_class < 1:
            raise InvalidConfigError("gallery_sets_per_class must be >= 1")
        if self.gallery_images_per_set is not None and self.gallery_images_per_set < 1:
            raise InvalidConfigError("gallery_images_per_set must be >= 1")
        if self.folds is not None and self.folds < 1:
            raise InvalidConfigError("folds must be >= 1")
        if self.remedy not in REMEDIES:
            raise InvalidConfigError(f"unknown remedy {self.remedy!r}")
        if self.seed < 0:
            raise InvalidConfigError("seed must be non-negative")
        self.vote_config()
        self.preprocess_config()

    def vote_config(self):
        alpha = self.alpha if self.strategy == "exponential" else None
        return VoteConfig(self.strategy, alpha=alpha, k=self.k)

    def preprocess_config(self):
        return PreprocessConfig(self.dims, self.equalize, self.standardize)

    def to_dict(self):
        d = asdict(self)
        d["dims"] = list(self.dims)
        return d


# Per-dataset resolutions, vote constants and gallery sizes.
PRESETS = {
    "mobo": ProtocolConfig(
        dims=(40, 40), alpha=0.2, equalize=True,
        gallery_sets_per_class=1, gallery_images_per_set=50,
    ),
    "ytc": ProtocolConfig(
        dims=(30, 30), alpha=10.5, equalize=True,
        gallery_sets_per_class=3, gallery_images_per_set=20, folds=5, repeats=5,
    ),
    "honda": ProtocolConfig(
        dims=(20, 20), alpha=0.2, equalize=True, standardize=True,
        gallery_sets_per_class=1, gallery_images_per_set=50,
    ),
    "eth80": ProtocolConfig(
        dims=(32, 32), alpha=0.2, standardize=True, gallery_sets_per_class=5,
    ),
}


def preset(name, **overrides):
    """Preset protocol ``name`` with selected fields replaced."""
    if name not in PRESETS:
        raise InvalidConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return replace(PRESETS[name], **overrides)


@dataclass
class ProtocolReport:
    config: dict
    mode: str
    backend: str
    seeds: list
    repeats: list = field(default_factory=list)

    @property
    def accuracies(self):
        return [r["accuracy"] for r in self.repeats]

    @property
    def mean_accuracy(self):
        return float(np.mean(self.accuracies))

    @property
    def std_accuracy(self):
        return float(np.std(self.accuracies))

    @property
    def mean_set_seconds(self):
        secs = [p["seconds"] for r in self.repeats for p in r["predictions"]]
        return float(np.mean(secs)) if secs else 0.0

    def to_dict(self):
        return {
            "config": self.config,
            "mode": self.mode,
            "backend": self.backend,
            "seeds": self.seeds,
            "repeats": self.repeats,
            "accuracies": self.accuracies,
            "mean_accuracy": self.mean_accuracy,
            "std_accuracy": self.std_accuracy,
            "mean_set_seconds": self.mean_set_seconds,
        }


def strip_timing(obj):
    """Copy of a report dict with every wall-clock field removed."""
    if isinstance(obj, dict):
        return {k: strip_timing(v) for k, v in obj.items() if k not in TIMING_FIELDS}
    if isinstance(obj, list):
        return [strip_timing(v) for v in obj]
    return obj


class VectorCache:
    """Pixel-scale vectors per image path, computed once per preprocessing config."""

    def __init__(self, cfg, loader=load_raster):
        self.cfg = cfg
        self.loader = loader
        self._cache = {}

    def pixel(self, path):
        vec = self._cache.get(path)
        if vec is None:
            vec = pixel_vector(self.loader(path), self.cfg)
            self._cache[path] = vec
        return vec

    def test_matrix(self, paths):
        return np.column_stack([finalize(self.pixel(p), self.cfg).values for p in paths])


def _fold_sets(manifest, cfg, repeat):
    if cfg.folds is None:
        return [list(c.sets) for c in manifest.classes]
    fold = repeat % cfg.folds
    out = []
    for ci, c in enumerate(manifest.classes):
        rng = np.random.default_rng(derive_seed(cfg.seed, _FOLD_STREAM, ci))
        order = rng.permutation(len(c.sets))
        chunk = np.array_split(order, cfg.folds)[fold]
        out.append([c.sets[i] for i in np.sort(chunk)])
    return out


def check_feasible(manifest, cfg):
    """Raise :class:`ProtocolError` if some repeat cannot be split as requested."""
    g = cfg.gallery_sets_per_class
    for r in range(min(cfg.repeats, cfg.folds or 1)):
        class_sets = _fold_sets(manifest, cfg, r)
        short = [
            f"{c.label} has {len(s)}" for c, s in zip(manifest.classes, class_sets) if len(s) < g
        ]
        if short:
            raise ProtocolError(
                f"split infeasible: {g} gallery sets required per class"
                + (f" (fold {r})" if cfg.folds else "")
                + "; " + ", ".join(short)
            )
        if sum(len(s) - g for s in class_sets) < 1:
            raise ProtocolError(
                f"split infeasible: no test sets left after taking {g} gallery sets per class"
            )


def draw_split(manifest, cfg, repeat):
    """Gallery image paths per class and the held-out test sets for one repeat."""
    rng = np.random.default_rng(derive_seed(cfg.seed, repeat))
    gallery, tests = [], []
    for c, sets in zip(manifest.classes, _fold_sets(manifest, cfg, repeat)):
        chosen = set(rng.choice(len(sets), size=cfg.gallery_sets_per_class, replace=False).tolist())
        paths = []
        for i, s in enumerate(sets):
            if i not in chosen:
                tests.append((c.label, s))
                continue
            n = cfg.gallery_images_per_set
            if n is None or n >= len(s.paths):
                paths.extend(s.paths)
            else:
                idx = np.sort(rng.choice(len(s.paths), size=n, replace=False))
                paths.extend(s.paths[j] for j in idx)
        gallery.append((c.label, [s.set_id for i, s in enumerate(sets) if i in chosen], paths))
    return gallery, tests


def _build_gallery(cache, gallery_split, cfg, repeat_seed, mode):
    class_vectors = [(label, [cache.pixel(p) for p in paths]) for label, _, paths in gallery_split]
    gallery = gallery_from_vectors(
        class_vectors, cache.cfg, seed=repeat_seed, remedy=cfg.remedy
    )
    if mode == "naive":
        # Q'Q is part of gallery formation, not of the per-set test time
        for reg in gallery.regressors:
            _ = reg.gram
    return gallery


def run_protocol(manifest, cfg, mode="fast", loader=load_raster):
    """Evaluate ``cfg`` over ``cfg.repeats`` random gallery/test splits.

    Only ``classify_set`` is inside each per-set timer; image loading and
    preprocessing are excluded. Gallery formation is timed separately.
    """
    if mode not in MODES:
        raise InvalidConfigError(f"mode must be one of {MODES}")
    check_feasible(manifest, cfg)
    vote = cfg.vote_config()
    cache = VectorCache(cfg.preprocess_config(), loader)
    method = _MODE_METHOD[mode]
    report = ProtocolReport(config=cfg.to_dict(), mode=mode, backend=kernels.BACKEND, seeds=[])
    for r in range(cfg.repeats):
        repeat_seed = derive_seed(cfg.seed, r)
        report.seeds.append(repeat_seed)
        gallery_split, tests = draw_split(manifest, cfg, r)
        for _, _, paths in gallery_split:
            for p in paths:
                cache.pixel(p)
        t0 = time.perf_counter()
        gallery = _build_gallery(cache, gallery_split, cfg, repeat_seed, mode)
        gallery_seconds = time.perf_counter() - t0
        predictions = []
        correct = 0
        for true_label, s in tests:
            test = TestSet(cache.test_matrix(s.paths), s.set_id)
            t0 = time.perf_counter()
            res = classify_set(gallery, test, vote, method=method)
            seconds = time.perf_counter() - t0
            predicted = gallery.labels[res.predicted]
            correct += predicted == true_label
            predictions.append({
                "set_id": s.set_id,
                "true_label": true_label,
                "predicted_label": predicted,
                "tie": res.tie,
                "seconds": seconds,
            })
        accuracy = correct / len(tests)
        logger.info("repeat %d: accuracy %.4f over %d sets", r, accuracy, len(tests))
        report.repeats.append({
            "repeat": r,
            "seed": repeat_seed,
            "gallery_sets": {label: ids for label, ids, _ in gallery_split},
            "gallery_sizes": [reg.N for reg in gallery.regressors],
            "perturbed": [label for label, reg in zip(gallery.labels, gallery.regressors)
                          if reg.perturbed],
            "accuracy": accuracy,
            "gallery_seconds": gallery_seconds,
            "predictions": predictions,
        })
    return report


def benchmark_timing(manifest, cfg, mode, loops=5, loader=load_raster):
    """Time gallery formation and per-set classification on the first split.

    Every test set is classified ``loops`` times; the per-set figure is the
    fastest pass divided by the number of sets, which filters scheduler
    noise. Returns a dict with the predictions so modes can be compared.
    """
    if mode not in MODES:
        raise InvalidConfigError(f"mode must be one of {MODES}")
    check_feasible(manifest, cfg)
    vote = cfg.vote_config()
    cache = VectorCache(cfg.preprocess_config(), loader)
    gallery_split, tests = draw_split(manifest, cfg, 0)
    for _, _, paths in gallery_split:
        for p in paths:
            cache.pixel(p)
    t0 = time.perf_counter()
    gallery = _build_gallery(cache, gallery_split, cfg, derive_seed(cfg.seed, 0), mode)
    gallery_seconds = time.perf_counter() - t0
    test_sets = [(label, TestSet(cache.test_matrix(s.paths), s.set_id)) for label, s in tests]
    method = _MODE_METHOD[mode]
    best = np.inf
    predictions = None
    for _ in range(max(1, loops)):
        t0 = time.perf_counter()
        preds = [classify_set(gallery, t, vote, method=method).predicted for _, t in test_sets]
        best = min(best, time.perf_counter() - t0)
        predictions = preds
    return {
        "mode": mode,
        "backend": kernels.BACKEND,
        "classes": gallery.C,
        "gallery_sizes": [reg.N for reg in gallery.regressors],
        "T": gallery.T,
        "test_sets": len(test_sets),
        "gallery_seconds": gallery_seconds,
        "per_set_seconds": best / len(test_sets),
        "predictions": [gallery.labels[i] for i in predictions],
        "true_labels": [label for label, _ in test_sets],
    }
