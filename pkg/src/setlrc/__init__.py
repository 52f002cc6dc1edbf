"""Image set classification by linear-regression reconstruction.

Each gallery class is the column space of its vectorized images. Test
images are projected onto every class subspace and the residual distances
are turned into votes for the set as a whole.
"""

from setlrc.classifier import (
    ALPHA_PRESETS,
    ClassificationResult,
    Gallery,
    StreamState,
    TestSet,
    VoteConfig,
    classify_set,
    classify_stream,
    decide,
    form_gallery,
    gallery_from_vectors,
    new_stream_state,
    vote_exponential,
    vote_knn,
    vote_majority,
)
from setlrc.kernels import BACKEND
from setlrc.preprocess import (
    ImageVector,
    PreprocessConfig,
    downsample,
    equalize_histogram,
    preprocess_pipeline,
    standardize,
    to_grayscale,
    vectorize,
)
from setlrc.regression import (
    Reconstruction,
    Regressor,
    build_regressor,
    perturb,
    precompute_pinv,
    reconstruct,
    residual_distances,
    solve_gamma_normal,
    solve_gamma_qr,
)

__version__ = "0.1.0"

__all__ = [
    "ALPHA_PRESETS",
    "BACKEND",
    "ClassificationResult",
    "Gallery",
    "ImageVector",
    "PreprocessConfig",
    "Reconstruction",
    "Regressor",
    "StreamState",
    "TestSet",
    "VoteConfig",
    "build_regressor",
    "classify_set",
    "classify_stream",
    "decide",
    "downsample",
    "equalize_histogram",
    "form_gallery",
    "gallery_from_vectors",
    "new_stream_state",
    "perturb",
    "precompute_pinv",
    "preprocess_pipeline",
    "reconstruct",
    "residual_distances",
    "solve_gamma_normal",
    "solve_gamma_qr",
    "standardize",
    "to_grayscale",
    "vectorize",
    "vote_exponential",
    "vote_knn",
    "vote_majority",
]
