"""Class subspace regressors and the least-squares machinery behind them.

A regressor stacks one class's gallery vectors as the columns of a ``T x N``
matrix. A test matrix ``X`` (``T x M``) is reconstructed by projecting it onto
that column space, either through a cached pseudoinverse (two matrix
products), a column-pivoted QR basic solution, or the normal equations.
"""

from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np
import scipy.linalg

from setlrc import kernels
from setlrc.errors import ConditionViolationError, InvalidInputError, SingularRegressorError
from setlrc.preprocess import ImageVector

PERTURBATION_HALF_WIDTH = 0.5

METHODS = ("auto", "pinv", "qr", "normal", "naive")


def rank_tolerance(shape, sigma_max):
    """Singular values at or below this are treated as zero."""
    return max(shape) * np.finfo(np.float64).eps * sigma_max


def numerical_rank(Q):
    """Number of singular values of ``Q`` above :func:`rank_tolerance`."""
    Q = np.asarray(Q, dtype=np.float64)
    if Q.size == 0:
        return 0
    s = np.linalg.svd(Q, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > rank_tolerance(Q.shape, s[0])))


@dataclass(frozen=True, eq=False)
class Regressor:
    """One class's gallery subspace.

    Attributes
    ----------
    class_id : int
        Index of the class in its gallery.
    Q : ndarray, shape (T, N)
        Gallery image vectors as columns.
    rank : int
        Numerical rank of ``Q``.
    pinv : ndarray, shape (N, T), optional
        Cached Moore-Penrose pseudoinverse; enables the fast path.
    perturbed : bool
        Whether ``Q`` carries the uniform perturbation remedy.
    perturb_seed : int, optional
        Seed the perturbation was drawn with.
    dims : tuple, optional
        Raster size ``(a, b)`` the columns were vectorized from.
    """

    class_id: int
    Q: np.ndarray
    rank: int
    pinv: np.ndarray = None
    perturbed: bool = False
    perturb_seed: int = None
    dims: tuple = field(default=None)

    @property
    def T(self):
        return self.Q.shape[0]

    @property
    def N(self):
        return self.Q.shape[1]

    @property
    def rank_deficient(self):
        return self.rank < self.N

    @cached_property
    def gram(self):
        return self.Q.T @ self.Q

    @cached_property
    def pivoted_qr(self):
        # economic QR with column pivoting: Q[:, perm] = Qf @ R
        Qf, R, perm = scipy.linalg.qr(self.Q, mode="economic", pivoting=True)
        return Qf, R, perm


def _as_column(v):
    if isinstance(v, ImageVector):
        return v.values, v.dims
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1:
        raise InvalidInputError("gallery images must be one-dimensional vectors")
    return arr, None


def build_regressor(images, class_id, dims=None):
    """Stack image vectors as columns of a new :class:`Regressor`.

    Raises
    ------
    InvalidInputError
        If ``images`` is empty or the vectors differ in length.
    ConditionViolationError
        If there are more images than pixels per image.
    """
    if len(images) == 0:
        raise InvalidInputError(f"class {class_id}: no gallery images")
    columns = []
    for img in images:
        values, img_dims = _as_column(img)
        columns.append(values)
        if dims is None:
            dims = img_dims
    T = columns[0].size
    if any(c.size != T for c in columns):
        raise InvalidInputError(f"class {class_id}: gallery vectors differ in length")
    N = len(columns)
    if T < N:
        raise ConditionViolationError(
            f"class {class_id}: {N} gallery images but only T={T} pixels; "
            "T>=N must hold for a unique least-squares solution"
        )
    Q = np.column_stack(columns)
    return Regressor(class_id=int(class_id), Q=Q, rank=numerical_rank(Q), dims=dims)


def perturb(reg, seed):
    """Add uniform noise in [-0.5, 0.5] to every entry of a pixel-scale regressor.

    Meant for raw 0-255 values, where it changes no pixel by more than half
    a gray level. A cached pseudoinverse is recomputed for the new matrix.
    """
    rng = np.random.default_rng(seed)
    eps = rng.uniform(-PERTURBATION_HALF_WIDTH, PERTURBATION_HALF_WIDTH, size=reg.Q.shape)
    Q = reg.Q + eps
    out = Regressor(
        class_id=reg.class_id,
        Q=Q,
        rank=numerical_rank(Q),
        perturbed=True,
        perturb_seed=int(seed),
        dims=reg.dims,
    )
    if reg.pinv is not None:
        out = precompute_pinv(out)
    return out


def _as_matrix(reg, X):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] != reg.T:
        raise InvalidInputError(
            f"test matrix has shape {X.shape}; expected {reg.T} rows"
        )
    return X


def solve_gamma_normal(reg, X):
    """Least-squares parameters from the normal equations ``(Q'Q) G = Q'X``."""
    X = _as_matrix(reg, X)
    if reg.rank_deficient:
        raise SingularRegressorError(
            f"class {reg.class_id}: regressor has rank {reg.rank} < N={reg.N}; "
            "apply perturb() or use solve_gamma_qr()"
        )
    return np.linalg.solve(reg.gram, reg.Q.T @ X)


def solve_gamma_qr(reg, X):
    """Basic least-squares solution from a column-pivoted QR factorization.

    Each column of the result has at most ``reg.rank`` nonzero entries,
    placed on the first ``rank`` pivot columns.
    """
    X = _as_matrix(reg, X)
    r = reg.rank
    gamma = np.zeros((reg.N, X.shape[1]))
    if r == 0:
        return gamma
    Qf, R, perm = reg.pivoted_qr
    rhs = Qf[:, :r].T @ X
    gamma[perm[:r]] = scipy.linalg.solve_triangular(R[:r, :r], rhs)
    return gamma


def pseudoinverse(Q):
    """Moore-Penrose pseudoinverse via the thin SVD, rank-truncated."""
    Q = np.asarray(Q, dtype=np.float64)
    U, s, Vt = np.linalg.svd(Q, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros(Q.T.shape)
    r = int(np.count_nonzero(s > rank_tolerance(Q.shape, s[0])))
    return (Vt[:r].T / s[:r]) @ U[:, :r].T


def precompute_pinv(reg):
    """Return a copy of ``reg`` with its pseudoinverse cached."""
    return replace(reg, pinv=pseudoinverse(reg.Q))


@dataclass
class Reconstruction:
    X_hat: np.ndarray
    distances: np.ndarray
    gamma: np.ndarray


def residual_distances(X, X_hat):
    """Euclidean norm of each column of ``X - X_hat``."""
    X = np.asarray(X, dtype=np.float64)
    X_hat = np.asarray(X_hat, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X_hat.ndim == 1:
        X_hat = X_hat[:, None]
    if X.shape != X_hat.shape:
        raise InvalidInputError(f"shape mismatch: {X.shape} vs {X_hat.shape}")
    return kernels.residual_norms(X, X_hat)


def _solve_naive(reg, X):
    # one solve per test vector, as in the per-image formulation
    gamma = np.empty((reg.N, X.shape[1]))
    if reg.rank_deficient:
        for m in range(X.shape[1]):
            gamma[:, m] = solve_gamma_qr(reg, X[:, m])[:, 0]
        return gamma
    G = reg.gram
    for m in range(X.shape[1]):
        gamma[:, m] = np.linalg.solve(G, reg.Q.T @ X[:, m])
    return gamma


def reconstruct(reg, X, method="auto"):
    """Project the columns of ``X`` onto the column space of ``reg.Q``.

    Parameters
    ----------
    method : {'auto', 'pinv', 'qr', 'normal', 'naive'}
        ``auto`` uses the cached pseudoinverse when present and the QR basic
        solution otherwise. ``naive`` solves the normal equations one test
        vector at a time; it is the timing baseline.
    """
    X = _as_matrix(reg, X)
    if method == "auto":
        method = "pinv" if reg.pinv is not None else "qr"
    if method == "pinv":
        pinv = reg.pinv if reg.pinv is not None else pseudoinverse(reg.Q)
        gamma = pinv @ X
    elif method == "qr":
        gamma = solve_gamma_qr(reg, X)
    elif method == "normal":
        gamma = solve_gamma_normal(reg, X)
    elif method == "naive":
        gamma = _solve_naive(reg, X)
    else:
        raise InvalidInputError(f"unknown reconstruction method {method!r}")
    X_hat = reg.Q @ gamma
    return Reconstruction(X_hat=X_hat, distances=kernels.residual_norms(X, X_hat), gamma=gamma)
