"""Gallery formation, per-image voting and the set-level decision.

Every test image is reconstructed from every class subspace; its residual
distances are turned into votes and the class with the largest accumulated
vote wins. Ties go to the smallest class index and are flagged.
"""

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from setlrc import kernels
from setlrc.errors import (
    ConditionViolationError,
    DegenerateInputWarning,
    InvalidConfigError,
    InvalidInputError,
    UnsupportedStreamingError,
)
from setlrc.preprocess import ImageVector, PreprocessConfig, pixel_vector, standardize
from setlrc.regression import (
    build_regressor,
    numerical_rank,
    perturb,
    precompute_pinv,
    reconstruct,
)
from setlrc.seeds import derive_seed

STRATEGIES = ("exponential", "majority", "knn")
REMEDIES = ("perturb", "qr")

# per-dataset exponential voting constants
ALPHA_PRESETS = {"mobo": 0.2, "honda": 0.2, "eth80": 0.2, "ytc": 10.5}

_SAMPLE_STREAM = 0
_PERTURB_STREAM = 1


@dataclass(frozen=True)
class VoteConfig:
    strategy: str = "exponential"
    alpha: float = None
    k: int = None

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise InvalidConfigError(f"unknown voting strategy {self.strategy!r}")
        if self.strategy == "exponential":
            if self.alpha is None or not self.alpha > 0:
                raise InvalidConfigError("exponential voting needs alpha > 0")
        if self.strategy == "knn":
            _check_k(self.k)

    @classmethod
    def preset(cls, name):
        return cls("exponential", alpha=ALPHA_PRESETS[name])

    def to_dict(self):
        return {"strategy": self.strategy, "alpha": self.alpha, "k": self.k}


def _check_k(k):
    if k is None or int(k) != k or k < 1 or k % 2 == 0:
        raise InvalidConfigError(f"k must be an odd positive integer, got {k!r}")


@dataclass(frozen=True, eq=False)
class Gallery:
    regressors: list
    preprocess_cfg: PreprocessConfig
    labels: list
    remedy: str = "perturb"
    seed: int = 0

    def __post_init__(self):
        if not self.regressors:
            raise InvalidInputError("gallery has no classes")
        if len({r.T for r in self.regressors}) != 1:
            raise InvalidInputError("all regressors must share the same T")
        ids = [r.class_id for r in self.regressors]
        if len(set(ids)) != len(ids):
            raise InvalidInputError("class ids must be unique")
        if len(self.labels) != len(self.regressors):
            raise InvalidInputError("one label per regressor is required")

    @property
    def T(self):
        return self.regressors[0].T

    @property
    def C(self):
        return len(self.regressors)


@dataclass(frozen=True, eq=False)
class TestSet:
    __test__ = False  # not a pytest class

    X: np.ndarray
    set_id: str = None

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        if X.ndim == 1:
            X = X[:, None]
        if X.ndim != 2 or X.shape[1] < 1:
            raise InvalidInputError("a test set needs at least one image column")
        object.__setattr__(self, "X", X)

    @classmethod
    def from_vectors(cls, vectors, set_id=None):
        cols = [v.values if isinstance(v, ImageVector) else np.asarray(v, float) for v in vectors]
        return cls(np.column_stack(cols), set_id)

    @property
    def M(self):
        return self.X.shape[1]


@dataclass
class ClassificationResult:
    distances: np.ndarray
    theta: np.ndarray
    Theta: np.ndarray
    predicted: int
    tie: bool
    set_id: str = None

    def to_dict(self, labels=None, verbose=False):
        labels = labels if labels is not None else list(range(len(self.Theta)))
        d = {
            "set_id": self.set_id,
            "predicted_label": labels[self.predicted],
            "predicted_index": self.predicted,
            "tie": self.tie,
            "Theta": {str(lbl): float(v) for lbl, v in zip(labels, self.Theta)},
        }
        if verbose:
            d["distances"] = self.distances.tolist()
        return d


def _standardize_columns(Q):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateInputWarning)
        cols = [standardize(Q[:, n]) for n in range(Q.shape[1])]
    return np.column_stack(cols)


def _finalize_regressor(raw, cfg):
    if not cfg.standardize:
        return raw
    Q = _standardize_columns(raw.Q)
    return replace(raw, Q=Q, rank=numerical_rank(Q), pinv=None)


def gallery_from_vectors(class_vectors, cfg, seed=0, remedy="perturb"):
    """Form a gallery from per-class pixel-scale vectors.

    ``class_vectors`` is a list of ``(label, vectors)`` where each vector is
    the output of :func:`setlrc.preprocess.pixel_vector`, i.e. still on the
    0-255 scale. Rank-deficient regressors are repaired per ``remedy``:
    ``perturb`` adds seeded uniform noise to the pixel values before
    standardization, ``qr`` keeps the matrix and leaves it without a cached
    pseudoinverse so it is solved through the QR basic solution.
    """
    if remedy not in REMEDIES:
        raise InvalidConfigError(f"unknown remedy {remedy!r}")
    regressors, labels = [], []
    for c, (label, vectors) in enumerate(class_vectors):
        if len(vectors) == 0:
            raise InvalidInputError(f"class {label!r} has no gallery images")
        raw = build_regressor(vectors, c, dims=cfg.target_dims)
        reg = _finalize_regressor(raw, cfg)
        if reg.rank_deficient and remedy == "perturb":
            raw = perturb(raw, derive_seed(seed, c, _PERTURB_STREAM))
            reg = _finalize_regressor(raw, cfg)
        if not (reg.rank_deficient and remedy == "qr"):
            reg = precompute_pinv(reg)
        regressors.append(reg)
        labels.append(label)
    return Gallery(regressors, cfg, labels, remedy=remedy, seed=seed)


def form_gallery(sets, cfg, gallery_size=None, seed=0, remedy="perturb"):
    """Build a :class:`Gallery` from raw rasters.

    Parameters
    ----------
    sets : list of (label, list of raster)
        Gallery images per class, in class order.
    cfg : PreprocessConfig
    gallery_size : int, optional
        Images drawn per class without replacement; a class with fewer
        images uses all of them. ``None`` uses every image.
    seed : int
        Drives both the image sampling and any perturbation.
    remedy : {'perturb', 'qr'}
    """
    if gallery_size is not None:
        if gallery_size < 1:
            raise InvalidConfigError("gallery_size must be positive")
        if gallery_size > cfg.T:
            raise ConditionViolationError(
                f"gallery_size {gallery_size} exceeds T={cfg.T}; T>=N must hold"
            )
    class_vectors = []
    for c, (label, rasters) in enumerate(sets):
        if len(rasters) == 0:
            raise InvalidInputError(f"class {label!r} has no gallery images")
        idx = np.arange(len(rasters))
        if gallery_size is not None and gallery_size < len(rasters):
            rng = np.random.default_rng(derive_seed(seed, c, _SAMPLE_STREAM))
            idx = np.sort(rng.choice(len(rasters), size=gallery_size, replace=False))
        class_vectors.append((label, [pixel_vector(rasters[i], cfg) for i in idx]))
    return gallery_from_vectors(class_vectors, cfg, seed=seed, remedy=remedy)


def _check_distances(distances):
    d = np.asarray(distances, dtype=np.float64)
    if d.ndim != 2 or d.shape[0] < 1:
        raise InvalidInputError("distances must be a C x M matrix with C >= 1")
    if np.any(d < 0) or not np.all(np.isfinite(d)):
        raise InvalidInputError("distances must be finite and non-negative")
    return d


def vote_exponential(distances, alpha):
    """Weights ``exp(-alpha * d)`` per image and class, and their per-class sums."""
    if alpha is None or not alpha > 0:
        raise InvalidConfigError(f"alpha must be positive, got {alpha!r}")
    return kernels.accumulate_exp(_check_distances(distances), float(alpha))


def vote_majority(distances):
    """One vote per image for its nearest class (lowest index on ties)."""
    d = _check_distances(distances)
    return np.bincount(np.argmin(d, axis=0), minlength=d.shape[0]).astype(np.float64)


def vote_knn(distances, k):
    """Count classes among the ``k`` smallest of all pooled (class, image) distances."""
    d = _check_distances(distances)
    _check_k(k)
    if k > d.size:
        raise InvalidConfigError(f"k={k} exceeds the {d.size} pooled distances")
    order = np.argsort(d.ravel(), kind="stable")[: int(k)]
    return np.bincount(order // d.shape[1], minlength=d.shape[0]).astype(np.float64)


def decide(Theta):
    """Index of the largest score and whether it was tied."""
    Theta = np.asarray(Theta, dtype=np.float64)
    if Theta.size < 1:
        raise InvalidInputError("no class scores to decide between")
    winners = np.flatnonzero(Theta == Theta.max())
    return int(winners[0]), bool(winners.size > 1)


def apply_vote(distances, cfg):
    """Return ``(theta, Theta)`` for the configured strategy."""
    if cfg.strategy == "exponential":
        return vote_exponential(distances, cfg.alpha)
    if cfg.strategy == "majority":
        return None, vote_majority(distances)
    return None, vote_knn(distances, cfg.k)


def class_distances(gallery, X, method="auto"):
    """``C x M`` matrix of residual distances of the columns of ``X``."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] != gallery.T:
        raise InvalidInputError(f"test vectors have length {X.shape[0]}, gallery T={gallery.T}")
    return np.vstack([reconstruct(reg, X, method).distances for reg in gallery.regressors])


def classify_set(gallery, test, cfg, method="auto"):
    """Classify a whole test set against ``gallery``.

    ``method`` selects the reconstruction path (see
    :func:`setlrc.regression.reconstruct`); the default is the cached
    pseudoinverse fast path.
    """
    if not isinstance(test, TestSet):
        test = TestSet(test)
    distances = class_distances(gallery, test.X, method)
    theta, Theta = apply_vote(distances, cfg)
    predicted, tie = decide(Theta)
    return ClassificationResult(distances, theta, Theta, predicted, tie, test.set_id)


@dataclass(frozen=True)
class StreamState:
    """Running per-class vote totals of a streamed test set."""

    Theta: np.ndarray
    distances: tuple = field(default=())

    @property
    def count(self):
        return len(self.distances)


def new_stream_state(gallery):
    return StreamState(np.zeros(gallery.C))


def classify_stream(gallery, state, next_image, cfg):
    """Fold one more test image into ``state`` and re-decide.

    Returns the new state and the decision over all images seen so far.
    Only strategies with an online accumulator are supported.
    """
    if cfg.strategy == "knn":
        raise UnsupportedStreamingError("k-NN voting needs all distances and cannot stream")
    x = next_image.values if isinstance(next_image, ImageVector) else np.asarray(next_image, float)
    if x.ndim != 1:
        raise InvalidInputError("streamed images must be single vectors")
    d = class_distances(gallery, x)[:, 0]
    if cfg.strategy == "exponential":
        theta, _ = vote_exponential(d[:, None], cfg.alpha)
        Theta = state.Theta + theta[:, 0]
    else:
        Theta = state.Theta.copy()
        Theta[int(np.argmin(d))] += 1.0
    state = StreamState(Theta, state.distances + (d,))
    distances = np.column_stack(state.distances)
    theta_all = np.exp(-cfg.alpha * distances) if cfg.strategy == "exponential" else None
    predicted, tie = decide(Theta)
    return state, ClassificationResult(distances, theta_all, Theta.copy(), predicted, tie)
