"""Binary gallery container.

All integers and floats are little-endian. Layout, version 1::

    magic            4 bytes   b"LRGS"
    version          u8        1
    cfg flags        u8        bit 0 equalize, bit 1 standardize
    a, b             u32 u32   preprocessing target size
    remedy           u8        0 perturb, 1 qr
    gallery seed     u64
    C                u32       number of classes
    C class records, each:
        class_id     i64
        label len    u32, then that many UTF-8 bytes
        a, b         u32 u32   raster size of the columns (T = a*b)
        N            u32
        rank         u32
        flags        u8        bit 0 pinv present, bit 1 perturbed,
                               bit 2 perturbation seed present
        perturb seed u64       (0 when absent)
        Q            T*N f64   column-major
        pinv         N*T f64   column-major, only if flag bit 0
"""

import struct

import numpy as np

from setlrc.classifier import REMEDIES, Gallery
from setlrc.errors import GalleryFormatError
from setlrc.preprocess import PreprocessConfig
from setlrc.regression import Regressor

MAGIC = b"LRGS"
FORMAT_VERSION = 1

_HEADER = struct.Struct("<4sBBIIBQI")
_CLASS_HEAD = struct.Struct("<qI")
_CLASS_BODY = struct.Struct("<IIIIBQ")


def _f64_bytes(A):
    return np.asarray(A, dtype="<f8").tobytes(order="F")


def dumps(gallery):
    """Serialize ``gallery`` to bytes."""
    cfg = gallery.preprocess_cfg
    a, b = cfg.target_dims
    parts = [
        _HEADER.pack(
            MAGIC,
            FORMAT_VERSION,
            int(cfg.equalize) | (int(cfg.standardize) << 1),
            a,
            b,
            REMEDIES.index(gallery.remedy),
            int(gallery.seed),
            gallery.C,
        )
    ]
    for reg, label in zip(gallery.regressors, gallery.labels):
        name = str(label).encode("utf-8")
        ra, rb = reg.dims if reg.dims is not None else (reg.T, 1)
        flags = (
            int(reg.pinv is not None)
            | (int(reg.perturbed) << 1)
            | (int(reg.perturb_seed is not None) << 2)
        )
        parts.append(_CLASS_HEAD.pack(reg.class_id, len(name)))
        parts.append(name)
        parts.append(
            _CLASS_BODY.pack(ra, rb, reg.N, reg.rank, flags, reg.perturb_seed or 0)
        )
        parts.append(_f64_bytes(reg.Q))
        if reg.pinv is not None:
            parts.append(_f64_bytes(reg.pinv))
    return b"".join(parts)


class _Reader:
    def __init__(self, data):
        self.data = memoryview(data)
        self.pos = 0

    def take(self, n):
        if self.pos + n > len(self.data):
            raise GalleryFormatError("truncated gallery container")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, st):
        return st.unpack(self.take(st.size))

    def matrix(self, rows, cols):
        raw = self.take(8 * rows * cols)
        return np.frombuffer(raw, dtype="<f8").reshape((rows, cols), order="F").astype(np.float64)


def loads(data):
    """Inverse of :func:`dumps`."""
    rd = _Reader(data)
    magic, version, cfg_flags, a, b, remedy, seed, C = rd.unpack(_HEADER)
    if magic != MAGIC:
        raise GalleryFormatError("not a gallery container (bad magic)")
    if version != FORMAT_VERSION:
        raise GalleryFormatError(f"unsupported gallery format version {version}")
    if remedy >= len(REMEDIES):
        raise GalleryFormatError(f"unknown remedy code {remedy}")
    cfg = PreprocessConfig((a, b), bool(cfg_flags & 1), bool(cfg_flags & 2))
    regressors, labels = [], []
    for _ in range(C):
        class_id, name_len = rd.unpack(_CLASS_HEAD)
        label = bytes(rd.take(name_len)).decode("utf-8")
        ra, rb, N, rank, flags, pseed = rd.unpack(_CLASS_BODY)
        T = ra * rb
        Q = rd.matrix(T, N)
        pinv = rd.matrix(N, T) if flags & 1 else None
        regressors.append(
            Regressor(
                class_id=class_id,
                Q=Q,
                rank=rank,
                pinv=pinv,
                perturbed=bool(flags & 2),
                perturb_seed=pseed if flags & 4 else None,
                dims=(ra, rb),
            )
        )
        labels.append(label)
    if rd.pos != len(rd.data):
        raise GalleryFormatError("trailing bytes after gallery records")
    return Gallery(regressors, cfg, labels, remedy=REMEDIES[remedy], seed=seed)


def save_gallery(gallery, path):
    with open(path, "wb") as fh:
        fh.write(dumps(gallery))


def load_gallery(path):
    with open(path, "rb") as fh:
        return loads(fh.read())
