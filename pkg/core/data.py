"""
Datasets

Labeled sample containers, IDX / CSV loaders and the synthetic
teacher-student task used for desk-scale experiments.

IDX layout (big-endian):
    0000  u32  magic (2051 images, 2049 labels)
    0004  u32  item count
    0008  u32  rows, u32 columns (images only)
    ....  u8   raw values, row-wise
"""

import struct
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal, Optional, Tuple

import numpy as np

from core.errors import DegenerateTeacherError, DomainError, FormatError, ShapeError
from core.network.model import Network, init_network
from core.network.presets import mlp_spec
from core.network.propagation import predict
from infra.logger import logger_data


IDX_IMAGE_MAGIC = 2051
IDX_LABEL_MAGIC = 2049

MAX_TEACHER_ATTEMPTS = 100

Split = Literal["train", "validation", "test"]


# ═══════════════════════════════════════════════════════════════════════════════
# DATASET
# ═══════════════════════════════════════════════════════════════════════════════

@dataclass
class Dataset:
    """
    Immutable-by-convention labeled samples.

    Attributes:
        inputs: (N, *sample_shape) float64
        labels: (N,) int64 class indices
        class_count: Number of classes
        split: Split tag
    """
    inputs: np.ndarray
    labels: np.ndarray
    class_count: int
    split: Split = "train"
    indices: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        self.inputs = np.asarray(self.inputs, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.inputs.shape[0] != self.labels.shape[0] or self.labels.ndim != 1:
            raise ShapeError("Inputs and labels disagree on sample count", self.inputs.shape, self.labels.shape)
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.class_count):
            raise DomainError(f"labels must lie in [0, {self.class_count})")
        if self.indices is None:
            self.indices = np.arange(len(self))

    def __len__(self) -> int:
        return int(self.labels.shape[0])

    @property
    def sample_shape(self) -> Tuple[int, ...]:
        return tuple(self.inputs.shape[1:])

    def subset(self, rows: np.ndarray, split: Optional[Split] = None) -> "Dataset":
        rows = np.asarray(rows, dtype=np.int64)
        return Dataset(
            inputs=self.inputs[rows].copy(),
            labels=self.labels[rows].copy(),
            class_count=self.class_count,
            split=split or self.split,
            indices=self.indices[rows].copy(),
        )


def split_dataset(dataset: Dataset, validation_count: int, seed: int) -> Tuple[Dataset, Dataset]:
    """
    Seeded disjoint train / validation split.

    Returns:
        (train, validation); validation holds validation_count samples
    """
    if not 0 <= validation_count <= len(dataset):
        raise DomainError(f"validation_count {validation_count} outside [0, {len(dataset)}]")
    order = np.random.default_rng(seed).permutation(len(dataset))
    validation = dataset.subset(np.sort(order[:validation_count]), "validation")
    train = dataset.subset(np.sort(order[validation_count:]), "train")
    return train, validation


# ═══════════════════════════════════════════════════════════════════════════════
# IDX
# ═══════════════════════════════════════════════════════════════════════════════

def _read_idx(path, expected_magic: int, extra_dims: int) -> np.ndarray:
    data = Path(path).read_bytes()
    header_size = 8 + 4 * extra_dims
    if len(data) < 4:
        raise FormatError(f"{path}: truncated IDX magic", len(data))
    (magic,) = struct.unpack(">I", data[:4])
    if magic != expected_magic:
        raise FormatError(f"{path}: bad IDX magic {magic}, expected {expected_magic}", 0)
    if len(data) < header_size:
        raise FormatError(f"{path}: truncated IDX header", len(data))
    dims = struct.unpack(f">{1 + extra_dims}I", data[4:header_size])
    expected = int(np.prod(dims))
    available = len(data) - header_size
    if available < expected:
        raise FormatError(f"{path}: truncated IDX payload ({available} of {expected} bytes)", len(data))
    if available > expected:
        raise FormatError(f"{path}: trailing bytes after IDX payload", header_size + expected)
    return np.frombuffer(data, dtype=np.uint8, count=expected, offset=header_size).reshape(dims)


def load_idx(
    images_path,
    labels_path,
    class_count: Optional[int] = None,
    split: Split = "train",
) -> Dataset:
    """
    Load an IDX image/label pair.

    Pixels are divided by 255; each image becomes a [1, H, W] tensor.

    Args:
        images_path: IDX3 image file
        labels_path: IDX1 label file
        class_count: Number of classes (default: max label + 1)
        split: Split tag

    Raises:
        FormatError: bad magic, truncated file, count mismatch
    """
    images = _read_idx(images_path, IDX_IMAGE_MAGIC, 2)
    labels = _read_idx(labels_path, IDX_LABEL_MAGIC, 0)
    if images.shape[0] != labels.shape[0]:
        raise FormatError(f"{labels_path}: {labels.shape[0]} labels for {images.shape[0]} images", 4)
    inputs = images[:, None, :, :].astype(np.float64) / 255.0
    classes = class_count if class_count is not None else (int(labels.max()) + 1 if labels.size else 1)
    logger_data.info(f"IDX_LOADED | samples={labels.shape[0]} | shape={list(inputs.shape[1:])} | classes={classes}")
    return Dataset(inputs=inputs, labels=labels.astype(np.int64), class_count=classes, split=split)


def write_idx(dataset: Dataset, images_path, labels_path):
    """
    Write a [1, H, W] dataset as an IDX pair.

    Inputs must be multiples of 1/255 in [0, 1] (as load_idx produces).
    """
    if len(dataset.sample_shape) != 3 or dataset.sample_shape[0] != 1:
        raise ShapeError("IDX images must be single-channel [1, H, W]", dataset.sample_shape, (1, 0, 0))
    pixels = np.rint(dataset.inputs[:, 0] * 255.0)
    if pixels.min(initial=0) < 0 or pixels.max(initial=0) > 255:
        raise DomainError("IDX pixel values must lie in [0, 1]")
    if dataset.class_count > 256:
        raise DomainError("IDX labels are single bytes")
    n, h, w = pixels.shape
    Path(images_path).write_bytes(struct.pack(">IIII", IDX_IMAGE_MAGIC, n, h, w) + pixels.astype(np.uint8).tobytes())
    Path(labels_path).write_bytes(struct.pack(">II", IDX_LABEL_MAGIC, n) + dataset.labels.astype(np.uint8).tobytes())


# ═══════════════════════════════════════════════════════════════════════════════
# CSV
# ═══════════════════════════════════════════════════════════════════════════════

def load_csv(path, class_count: Optional[int] = None, split: Split = "train") -> Dataset:
    """Tabular samples with header label,f0,f1,..."""
    path = Path(path)
    with path.open() as f:
        header = f.readline().strip().split(",")
    if not header or header[0] != "label" or header[1:] != [f"f{i}" for i in range(len(header) - 1)]:
        raise FormatError(f"{path}: CSV header must be label,f0,f1,...", 0)
    with warnings.catch_warnings():
        # an empty body is reported below as a FormatError
        warnings.simplefilter("ignore", UserWarning)
        try:
            table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        except ValueError as e:
            raise FormatError(f"{path}: {e}") from e
    if table.shape[0] == 0:
        raise FormatError(f"{path}: no samples", path.stat().st_size)
    if table.shape[1] != len(header):
        raise FormatError(f"{path}: rows have {table.shape[1]} columns, header has {len(header)}")
    labels = table[:, 0]
    if not np.array_equal(labels, np.rint(labels)):
        raise FormatError(f"{path}: labels must be integers")
    labels = labels.astype(np.int64)
    classes = class_count if class_count is not None else int(labels.max()) + 1
    return Dataset(inputs=table[:, 1:], labels=labels, class_count=classes, split=split)


# ═══════════════════════════════════════════════════════════════════════════════
# TEACHER-STUDENT TASK
# ═══════════════════════════════════════════════════════════════════════════════

def synth_teacher_student(
    seed: int,
    teacher_width: int,
    input_dim: int,
    classes: int,
    n_samples: int,
) -> Tuple[Dataset, Network]:
    """
    Label Gaussian inputs with a random frozen one-hidden-layer teacher.

    Attempts sub-seeds 0, 1, ... until the teacher produces every class.

    Args:
        seed: Base seed
        teacher_width: k hidden neurons (>= classes)
        input_dim: Input dimension
        classes: Number of classes
        n_samples: Samples to draw (>= 10 k)

    Returns:
        (dataset, teacher network)

    Raises:
        DegenerateTeacherError: no attempt covered every class
    """
    if teacher_width < classes:
        raise DomainError(f"teacher width {teacher_width} must be >= classes {classes}")
    if n_samples < 10 * teacher_width:
        raise DomainError(f"n_samples {n_samples} must be >= 10 * teacher width")

    spec = mlp_spec(input_dim, [teacher_width], classes)
    for attempt in range(MAX_TEACHER_ATTEMPTS):
        rng = np.random.default_rng([seed, attempt])
        teacher = init_network(spec, seed=int(rng.integers(2**31)))
        inputs = rng.normal(0.0, 1.0, size=(n_samples, input_dim))
        labels = np.argmax(predict(teacher, inputs), axis=1)
        if np.unique(labels).size == classes:
            logger_data.info(
                f"TEACHER_READY | seed={seed} | attempt={attempt} | "
                f"class_counts={np.bincount(labels, minlength=classes).tolist()}"
            )
            return Dataset(inputs=inputs, labels=labels, class_count=classes), teacher
        logger_data.warning(f"TEACHER_DEGENERATE | seed={seed} | attempt={attempt}")

    raise DegenerateTeacherError(
        f"teacher seed {seed} missed a class in all {MAX_TEACHER_ATTEMPTS} attempts"
    )
