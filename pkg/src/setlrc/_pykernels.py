"""NumPy implementations of the hot kernels.

Used when the compiled ``_ckernels`` extension is unavailable, and as the
reference the compiled kernels are tested against.
"""

import numpy as np


def _overlap_matrix(src, dst):
    # Output cell i covers [i*src, (i+1)*src) and source cell j covers
    # [j*dst, (j+1)*dst) in units of 1/(src*dst); overlaps are exact integers.
    lo_out = np.arange(dst)[:, None] * src
    lo_src = np.arange(src)[None, :] * dst
    overlap = np.minimum(lo_out + src, lo_src + dst) - np.maximum(lo_out, lo_src)
    return np.clip(overlap, 0, None).astype(np.float64)


def box_downsample(img, a, b):
    """Area-weighted box average of a 2-D float array down to ``a x b``."""
    img = np.asarray(img, dtype=np.float64)
    h, w = img.shape
    rows = _overlap_matrix(h, a)
    cols = _overlap_matrix(w, b)
    return (rows @ img @ cols.T) / float(h * w)


def equalize_levels(levels):
    """Classic 256-bin CDF equalization of integer levels in [0, 255]."""
    levels = np.asarray(levels, dtype=np.intp)
    total = levels.size
    cdf = np.cumsum(np.bincount(levels.ravel(), minlength=256))
    cdf_min = cdf[cdf > 0][0]
    if total == cdf_min:
        return np.zeros(levels.shape, dtype=np.float64)
    lut = np.rint((cdf - cdf_min) / float(total - cdf_min) * 255.0)
    return lut[levels]


def residual_norms(X, X_hat):
    """Euclidean norm of every column of ``X - X_hat``."""
    diff = np.asarray(X, dtype=np.float64) - np.asarray(X_hat, dtype=np.float64)
    return np.sqrt(np.einsum("ij,ij->j", diff, diff))


def accumulate_exp(distances, alpha):
    """Exponential vote weights and their per-class running sum over images."""
    theta = np.exp(-alpha * np.asarray(distances, dtype=np.float64))
    # cumsum is strictly sequential over m, matching the streaming order
    Theta = np.cumsum(theta, axis=1)[:, -1].copy()
    return theta, Theta
