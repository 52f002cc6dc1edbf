"""Kernel dispatch: the compiled extension when importable, NumPy otherwise.

Set ``SETLRC_PURE_PYTHON=1`` to force the NumPy kernels.
"""

import os

from setlrc import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("SETLRC_PURE_PYTHON", "") in ("", "0"):
    try:
        from setlrc import _ckernels as _impl
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels


def available_backends():
    """Names of the kernel backends importable in this environment."""
    names = ["python"]
    try:
        from setlrc import _ckernels  # noqa: F401
    except ImportError:
        pass
    else:
        names.append("cython")
    return names


def get_backend(name):
    """Return the kernel module for ``name`` ('python' or 'cython')."""
    if name == "python":
        return _pykernels
    if name == "cython":
        from setlrc import _ckernels
        return _ckernels
    raise ValueError(f"unknown kernel backend {name!r}")


box_downsample = _impl.box_downsample
equalize_levels = _impl.equalize_levels
residual_norms = _impl.residual_norms
accumulate_exp = _impl.accumulate_exp
