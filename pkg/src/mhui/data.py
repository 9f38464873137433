"""Dataset provisioning: synthetic Gaussian blobs and IDX image files.

Features are float64 row vectors in [0, 1]; labels are 0-based class
indices. IDX files follow the big-endian layout used for raster/label
archives:

    images: u32 magic 0x00000803 | u32 count | u32 rows | u32 cols | u8 pixels
    labels: u32 magic 0x00000801 | u32 count | u8 labels
"""

import struct
from dataclasses import dataclass

import numpy as np

from .errors import BadMagicError, NumericError, ShapeError, TruncatedError
from .rng import Xorshift64Star

IDX_IMAGE_MAGIC = 0x00000803
IDX_LABEL_MAGIC = 0x00000801


@dataclass
class Dataset:
    features: np.ndarray  # (n, dim), values in the feature domain
    labels: np.ndarray  # (n,), ints in [0, n_classes)
    n_classes: int
    dim: int

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2 or self.features.shape[1] != self.dim:
            raise ValueError("features must be an (n, dim) matrix")
        if self.labels.shape != (self.features.shape[0],):
            raise ValueError("labels must align with feature rows")
        if self.features.shape[0] < 1:
            raise ValueError("dataset must not be empty")
        if np.any(self.labels < 0) or np.any(self.labels >= self.n_classes):
            raise ValueError("labels out of range")

    @property
    def n(self) -> int:
        return self.features.shape[0]


def gen_blobs(
    n_classes: int,
    n_per_class: int,
    dim: int,
    spread: float,
    seed: int,
) -> Dataset:
    """Isotropic Gaussian blobs with retry-enforced center separation.

    Centers are drawn uniformly inside [0.2, 0.8]^dim until every pair is
    at least 4*spread apart (at most 1000 redraws in total); samples are
    center + spread * N(0, I), clipped to [0, 1].
    """
    if n_classes < 2 or dim < 2 or n_per_class < 1 or spread < 0:
        raise ValueError("invalid blob parameters")
    rng = Xorshift64Star(seed)

    centers: list[np.ndarray] = []
    retries = 0
    while len(centers) < n_classes:
        c = 0.2 + 0.6 * np.array(rng.uniforms(dim), dtype=np.float64)
        if all(np.linalg.norm(c - other) >= 4.0 * spread for other in centers):
            centers.append(c)
        else:
            retries += 1
            if retries > 1000:
                raise NumericError(
                    "could not place class centers with the requested separation"
                )

    features = np.empty((n_classes * n_per_class, dim), dtype=np.float64)
    labels = np.empty(n_classes * n_per_class, dtype=np.int64)
    row = 0
    for c in range(n_classes):
        for _ in range(n_per_class):
            noise = np.array(rng.normals(dim), dtype=np.float64)
            features[row] = np.clip(centers[c] + spread * noise, 0.0, 1.0)
            labels[row] = c
            row += 1
    return Dataset(features, labels, n_classes, dim)


def split(ds: Dataset, train_frac: float, seed: int) -> tuple[Dataset, Dataset]:
    """Seeded shuffle, then cut into train/test keeping the shuffled order."""
    if not 0.0 < train_frac < 1.0:
        raise ValueError("train_frac must lie strictly between 0 and 1")
    rng = Xorshift64Star(seed)
    order = rng.shuffled_indices(ds.n)
    k = int(round(ds.n * train_frac))
    if k < 1 or k >= ds.n:
        raise ValueError("split would leave one side empty")
    train_idx, test_idx = order[:k], order[k:]
    make = lambda idx: Dataset(ds.features[idx], ds.labels[idx], ds.n_classes, ds.dim)
    return make(train_idx), make(test_idx)


def _read_u32(fh, what: str) -> int:
    data = fh.read(4)
    if len(data) != 4:
        raise TruncatedError(f"{what}: file truncated in header")
    return struct.unpack(">I", data)[0]


def load_idx(images_path: str, labels_path: str, max_n: int | None = None) -> Dataset:
    """Load an IDX image/label pair; pixels are scaled by 1/255 into [0, 1]."""
    with open(images_path, "rb") as fh:
        magic = _read_u32(fh, "images")
        if magic != IDX_IMAGE_MAGIC:
            raise BadMagicError(f"images: bad magic 0x{magic:08x}")
        count = _read_u32(fh, "images")
        rows = _read_u32(fh, "images")
        cols = _read_u32(fh, "images")
        pixel_bytes = fh.read(count * rows * cols)
        if len(pixel_bytes) < count * rows * cols:
            raise TruncatedError("images: file truncated in pixel data")

    with open(labels_path, "rb") as fh:
        magic = _read_u32(fh, "labels")
        if magic != IDX_LABEL_MAGIC:
            raise BadMagicError(f"labels: bad magic 0x{magic:08x}")
        label_count = _read_u32(fh, "labels")
        label_bytes = fh.read(label_count)
        if len(label_bytes) < label_count:
            raise TruncatedError("labels: file truncated in label data")

    if label_count != count:
        raise ShapeError(f"count mismatch: {count} images vs {label_count} labels")

    n = count if max_n is None else min(count, max_n)
    if n < 1:
        raise ShapeError("no samples to load")
    pixels = np.frombuffer(pixel_bytes, dtype=np.uint8).reshape(count, rows * cols)[:n]
    labels = np.frombuffer(label_bytes, dtype=np.uint8)[:n].astype(np.int64)
    features = pixels.astype(np.float64) / 255.0
    n_classes = int(labels.max()) + 1 if n > 0 else 0
    return Dataset(features, labels, max(n_classes, 2), rows * cols)


def save_idx(ds: Dataset, images_path: str, labels_path: str) -> None:
    """Write a dataset as an IDX pair, quantizing features to bytes.

    Each sample is stored as a 1 x dim image with pixel = round(255 * x),
    so load_idx recovers the features up to 1/510 per component.
    """
    if ds.n_classes > 256:
        raise ValueError("IDX labels are single bytes; need n_classes <= 256")
    pixels = np.clip(np.rint(ds.features * 255.0), 0, 255).astype(np.uint8)
    with open(images_path, "wb") as fh:
        fh.write(struct.pack(">IIII", IDX_IMAGE_MAGIC, ds.n, 1, ds.dim))
        fh.write(pixels.tobytes())
    with open(labels_path, "wb") as fh:
        fh.write(struct.pack(">II", IDX_LABEL_MAGIC, ds.n))
        fh.write(ds.labels.astype(np.uint8).tobytes())
