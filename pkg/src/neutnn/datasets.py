"""Dataset ingestion: UCR text files, MNIST IDX files, synthetic prototypes."""

from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .temporal import GammaCycle, encode_image, encode_timeseries

__all__ = [
    "Dataset",
    "load_ucr",
    "read_idx",
    "write_idx",
    "load_mnist",
    "encode_ucr",
    "prototype_series",
]

_IDX_DTYPES = {
    0x08: np.uint8,
    0x09: np.int8,
    0x0B: np.dtype(">i2"),
    0x0C: np.dtype(">i4"),
    0x0D: np.dtype(">f4"),
    0x0E: np.dtype(">f8"),
}


@dataclass
class Dataset:
    """Encoded spike volleys, one row per sample, with optional labels."""

    volleys: np.ndarray
    labels: np.ndarray | None = None

    def __post_init__(self):
        self.volleys = np.asarray(self.volleys, dtype=np.int64)
        if self.volleys.ndim != 2:
            raise ValueError(f"volleys must be 2-D (samples x width), got {self.volleys.shape}")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)
            if len(self.labels) != len(self.volleys):
                raise ValueError("one label per sample required")

    def __len__(self):
        return len(self.volleys)

    @property
    def width(self) -> int:
        return self.volleys.shape[1]

    def subset(self, index) -> "Dataset":
        labels = None if self.labels is None else self.labels[index]
        return Dataset(self.volleys[index], labels)


def _open(path):
    path = Path(path)
    if path.suffix == ".gz":
        return gzip.open(path, "rb")
    return open(path, "rb")


def load_ucr(path) -> tuple[np.ndarray, np.ndarray]:
    """Read a UCR-archive style file: label first, then the samples.

    Fields may be tab- or comma-separated.  Returns ``(labels, series)``;
    all rows must have the same length.
    """
    labels, rows = [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            fields = line.replace(",", " ").split()
            try:
                labels.append(int(float(fields[0])))
                rows.append([float(v) for v in fields[1:]])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
            if not rows[-1]:
                raise ValueError(f"{path}:{lineno}: row has a label but no samples")
    if not rows:
        raise ValueError(f"{path}: no samples")
    lengths = {len(r) for r in rows}
    if len(lengths) != 1:
        raise ValueError(f"{path}: rows have differing lengths {sorted(lengths)}")
    return np.array(labels, dtype=np.int64), np.array(rows, dtype=float)


def read_idx(path) -> np.ndarray:
    """Parse an IDX file (big-endian magic, dims, raw data), gzipped or not."""
    with _open(path) as fh:
        raw = fh.read()
    if len(raw) < 4:
        raise ValueError(f"{path}: truncated IDX header")
    zero, code, ndim = struct.unpack(">HBB", raw[:4])
    if zero != 0 or code not in _IDX_DTYPES:
        raise ValueError(f"{path}: bad IDX magic {raw[:4].hex()}")
    dims = struct.unpack(f">{ndim}I", raw[4:4 + 4 * ndim])
    dtype = np.dtype(_IDX_DTYPES[code])
    count = int(np.prod(dims)) if dims else 1
    body = raw[4 + 4 * ndim:]
    if len(body) != count * dtype.itemsize:
        raise ValueError(f"{path}: expected {count * dtype.itemsize} data bytes, found {len(body)}")
    return np.frombuffer(body, dtype=dtype).reshape(dims)


def write_idx(path, array) -> None:
    array = np.ascontiguousarray(array)
    codes = {np.dtype(v).str: k for k, v in _IDX_DTYPES.items()}
    key = array.dtype.newbyteorder(">").str if array.dtype.itemsize > 1 else array.dtype.str
    if key not in codes:
        raise ValueError(f"dtype {array.dtype} has no IDX code")
    header = struct.pack(">HBB", 0, codes[key], array.ndim) + struct.pack(f">{array.ndim}I", *array.shape)
    data = header + array.astype(key).tobytes()
    path = Path(path)
    if path.suffix == ".gz":
        with gzip.GzipFile(path, "wb", mtime=0) as fh:
            fh.write(data)
    else:
        path.write_bytes(data)


def load_mnist(images_path, labels_path, cycle: GammaCycle = GammaCycle(),
               absent_threshold: int = 1) -> Dataset:
    images = read_idx(images_path)
    labels = read_idx(labels_path)
    if images.ndim != 3 or labels.ndim != 1 or len(images) != len(labels):
        raise ValueError(f"unexpected MNIST shapes {images.shape} / {labels.shape}")
    return Dataset(encode_image(images, cycle, absent_threshold), labels.astype(np.int64))


def encode_ucr(series: np.ndarray, labels=None, cycle: GammaCycle = GammaCycle(),
               dual_rail: bool = True) -> Dataset:
    volleys = np.stack([encode_timeseries(s, cycle, dual_rail) for s in series])
    return Dataset(volleys, labels)


def prototype_series(per_class: int = 30, length: int = 32, centers=(6, 16, 26),
                     width: float = 3.0, noise: float = 0.1, seed: int = 0):
    """Noisy copies of Gaussian-bump prototypes.  Returns ``(labels, series)``."""
    rng = np.random.default_rng(seed)
    xs = np.arange(length)
    labels, rows = [], []
    for k, c in enumerate(centers):
        bump = np.exp(-0.5 * ((xs - c) / width) ** 2)
        for _ in range(per_class):
            rows.append(bump + rng.normal(0.0, noise, length))
            labels.append(k)
    return np.array(labels, dtype=np.int64), np.array(rows)
