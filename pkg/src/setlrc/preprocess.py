"""Raster to vector preprocessing.

Rasters are plain NumPy arrays: ``(height, width)`` for grayscale or
``(height, width, 3)`` for RGB, with intensities in [0, 255]. The pipeline
order is fixed: grayscale, downsample, equalize, vectorize, standardize.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from setlrc import kernels
from setlrc.errors import DegenerateInputWarning, InvalidConfigError, InvalidInputError

LUMA_WEIGHTS = (0.299, 0.587, 0.114)


@dataclass(frozen=True)
class ImageVector:
    """A column-concatenated ``a x b`` image.

    ``values[c * a + r]`` holds the raster pixel at row ``r``, column ``c``.
    """

    values: np.ndarray
    dims: tuple

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1:
            raise InvalidInputError("ImageVector values must be one-dimensional")
        a, b = self.dims
        if values.size != a * b:
            raise InvalidInputError(
                f"ImageVector of length {values.size} does not match dims {a}x{b}"
            )
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "dims", (int(a), int(b)))

    def __len__(self):
        return self.values.size

    def to_raster(self):
        """Inverse of :func:`vectorize`."""
        return self.values.reshape(self.dims, order="F")


@dataclass(frozen=True)
class PreprocessConfig:
    target_dims: tuple
    equalize: bool = False
    standardize: bool = False

    def __post_init__(self):
        a, b = self.target_dims
        if int(a) < 1 or int(b) < 1:
            raise InvalidConfigError(f"target dims must be positive, got {a}x{b}")
        object.__setattr__(self, "target_dims", (int(a), int(b)))

    @property
    def T(self):
        a, b = self.target_dims
        return a * b

    def to_dict(self):
        return {
            "target_dims": list(self.target_dims),
            "equalize": self.equalize,
            "standardize": self.standardize,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(d["target_dims"]), bool(d["equalize"]), bool(d["standardize"]))


def check_raster(img):
    """Validate a raster and return it as a float64 array."""
    arr = np.asarray(img)
    if arr.ndim == 3 and arr.shape[2] == 1:
        arr = arr[:, :, 0]
    if arr.ndim == 2:
        pass
    elif arr.ndim == 3:
        if arr.shape[2] != 3:
            raise InvalidInputError(f"expected 1 or 3 channels, got {arr.shape[2]}")
    else:
        raise InvalidInputError(f"raster must be 2-D or 3-D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InvalidInputError("raster has no pixels")
    arr = arr.astype(np.float64, copy=False)
    if not np.all(np.isfinite(arr)) or arr.min() < 0 or arr.max() > 255:
        raise InvalidInputError("raster values must lie in [0, 255]")
    return arr


def to_grayscale(img):
    """Convert an RGB raster to 8-bit-level luminance.

    Single-channel rasters are returned unchanged.
    """
    arr = check_raster(img)
    if arr.ndim == 2:
        return arr
    r, g, b = LUMA_WEIGHTS
    luma = r * arr[:, :, 0] + g * arr[:, :, 1] + b * arr[:, :, 2]
    return np.clip(np.rint(luma), 0, 255)


def downsample(img, a, b):
    """Shrink a grayscale raster to ``a`` rows by ``b`` columns.

    Every output pixel is the area-weighted mean of the source pixels it
    covers, so constant images stay constant and the identity size is a
    no-op. Upsampling is rejected.
    """
    arr = check_raster(img)
    if arr.ndim != 2:
        raise InvalidInputError("downsample expects a single-channel raster")
    h, w = arr.shape
    if a < 1 or b < 1:
        raise InvalidInputError(f"target size must be positive, got {a}x{b}")
    if a > h or b > w:
        raise InvalidInputError(f"cannot upsample {h}x{w} to {a}x{b}")
    if (a, b) == (h, w):
        return arr.copy()
    return np.clip(kernels.box_downsample(arr, int(a), int(b)), 0, 255)


def equalize_histogram(img):
    """Histogram-equalize a grayscale raster of integer levels.

    Uses ``round((cdf(v) - cdf_min) / (P - cdf_min) * 255)``. A constant
    image has no spread to stretch and maps to all zeros.
    """
    arr = check_raster(img)
    if arr.ndim != 2:
        raise InvalidInputError("equalize_histogram expects a single-channel raster")
    levels = np.rint(arr)
    if not np.array_equal(levels, arr):
        raise InvalidInputError("equalize_histogram expects integer levels")
    return kernels.equalize_levels(levels.astype(np.intp))


def vectorize(img):
    """Column-concatenate a grayscale raster into an :class:`ImageVector`."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim == 3 and arr.shape[2] == 1:
        arr = arr[:, :, 0]
    if arr.ndim != 2:
        raise InvalidInputError("vectorize expects a single-channel raster")
    return ImageVector(arr.ravel(order="F"), arr.shape)


def standardize(v):
    """Shift to zero mean and scale to unit population standard deviation.

    A constant input returns the zero vector and emits
    :class:`DegenerateInputWarning`.
    """
    if isinstance(v, ImageVector):
        values, dims = v.values, v.dims
    else:
        values = np.asarray(v, dtype=np.float64)
        dims = (values.size, 1)
    if values.size < 2:
        raise InvalidInputError("standardize needs at least two values")
    centered = values - values.mean()
    std = np.sqrt(np.mean(centered * centered))
    if std == 0.0:
        warnings.warn("constant vector cannot be standardized", DegenerateInputWarning,
                      stacklevel=2)
        out = np.zeros_like(values)
    else:
        out = centered / std
    return ImageVector(out, dims) if isinstance(v, ImageVector) else out


def pixel_vector(img, cfg):
    """Run the pipeline up to vectorization; the result stays on the 0-255 scale.

    Box averaging yields fractional levels, so they are rounded to integers
    before equalization.
    """
    a, b = cfg.target_dims
    gray = downsample(to_grayscale(img), a, b)
    if cfg.equalize:
        gray = equalize_histogram(np.rint(gray))
    return vectorize(gray)


def finalize(vec, cfg):
    """Apply the post-vectorization steps (standardization) of ``cfg``."""
    return standardize(vec) if cfg.standardize else vec


def preprocess_pipeline(img, cfg):
    """Full preprocessing of one raster into an :class:`ImageVector`."""
    return finalize(pixel_vector(img, cfg), cfg)
