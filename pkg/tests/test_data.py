"""
Test suite for datasets, loaders and the synthetic teacher-student task
"""

import struct
import sys
import tempfile
from pathlib import Path

import numpy as np

# Add project root to path so we can import from core/
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from core.data import Dataset, load_csv, load_idx, split_dataset, synth_teacher_student, write_idx
from core.errors import DomainError, FormatError, ShapeError
from core.trainer import evaluate


def _write_fixture(folder: Path):
    """Two 2x2 images and labels {0, 1}"""
    images = folder / "images.idx"
    labels = folder / "labels.idx"
    images.write_bytes(struct.pack(">IIII", 2051, 2, 2, 2) + bytes([0, 255, 51, 102, 10, 20, 30, 40]))
    labels.write_bytes(struct.pack(">II", 2049, 2) + bytes([1, 0]))
    return images, labels


# ═══════════════════════════════════════════════════════════════════════════════
# IDX
# ═══════════════════════════════════════════════════════════════════════════════

def test_idx_fixture():
    """Test loading a hand-built IDX pair."""

    print("Testing IDX fixture...")

    with tempfile.TemporaryDirectory() as tmp:
        images, labels = _write_fixture(Path(tmp))
        data = load_idx(images, labels)

    assert len(data) == 2
    assert data.sample_shape == (1, 2, 2)
    assert data.class_count == 2
    assert data.labels.tolist() == [1, 0]
    assert data.inputs[0, 0].tolist() == [[0.0, 1.0], [0.2, 0.4]]
    assert data.inputs.min() >= 0.0 and data.inputs.max() <= 1.0

    print("✓ IDX fixture tests passed")


def test_idx_round_trip():
    """Test bit-exact write / read of a random dataset."""

    print("Testing IDX round trip...")

    rng = np.random.default_rng(1)
    original = Dataset(
        inputs=rng.integers(0, 256, size=(7, 1, 5, 4)) / 255.0,
        labels=rng.integers(0, 10, size=7),
        class_count=10,
    )
    with tempfile.TemporaryDirectory() as tmp:
        images, labels = Path(tmp) / "x.idx", Path(tmp) / "y.idx"
        write_idx(original, images, labels)
        loaded = load_idx(images, labels, class_count=10)

    assert loaded.inputs.tobytes() == original.inputs.tobytes()
    assert np.array_equal(loaded.labels, original.labels)

    try:
        write_idx(Dataset(np.zeros((2, 3)), np.zeros(2), 2), "unused_x", "unused_y")
        assert False, "expected ShapeError"
    except ShapeError:
        pass

    print("✓ IDX round trip tests passed")


def test_idx_errors():
    """Test bad magic, truncation and trailing bytes."""

    print("Testing IDX errors...")

    with tempfile.TemporaryDirectory() as tmp:
        folder = Path(tmp)
        images, labels = _write_fixture(folder)
        raw = images.read_bytes()

        bad = folder / "bad.idx"
        bad.write_bytes(struct.pack(">I", 1234) + raw[4:])
        try:
            load_idx(bad, labels)
            assert False, "expected FormatError"
        except FormatError as e:
            assert e.offset == 0

        for cut in (2, 10, len(raw) - 1):
            bad.write_bytes(raw[:cut])
            try:
                load_idx(bad, labels)
                assert False, "expected FormatError"
            except FormatError as e:
                assert e.offset is not None

        bad.write_bytes(raw + b"\0")
        try:
            load_idx(bad, labels)
            assert False, "expected FormatError"
        except FormatError as e:
            assert e.offset == len(raw)

        # Label count disagrees with image count
        short = folder / "short.idx"
        short.write_bytes(struct.pack(">II", 2049, 1) + bytes([0]))
        try:
            load_idx(images, short)
            assert False, "expected FormatError"
        except FormatError:
            pass

    print("✓ IDX error tests passed")


# ═══════════════════════════════════════════════════════════════════════════════
# CSV AND SPLITS
# ═══════════════════════════════════════════════════════════════════════════════

def test_csv():
    """Test the tabular loader."""

    print("Testing CSV loader...")

    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "table.csv"
        path.write_text("label,f0,f1,f2\n0,0.5,1.0,-2.0\n2,1.5,0.0,3.25\n1,0.0,0.0,0.0\n")
        data = load_csv(path)
        assert data.class_count == 3
        assert data.labels.tolist() == [0, 2, 1]
        assert data.sample_shape == (3,)
        assert data.inputs[1].tolist() == [1.5, 0.0, 3.25]

        path.write_text("y,a,b\n0,1,2\n")
        try:
            load_csv(path)
            assert False, "expected FormatError"
        except FormatError:
            pass

        path.write_text("label,f0\n0.5,1.0\n")
        try:
            load_csv(path)
            assert False, "expected FormatError"
        except FormatError:
            pass

        # Header without rows
        path.write_text("label,f0,f1\n")
        try:
            load_csv(path)
            assert False, "expected FormatError"
        except FormatError as e:
            assert e.offset == len("label,f0,f1\n")
            assert "no samples" in str(e)

        for body in ("label,f0,f1\n0,1.0\n", "label,f0\n1,abc\n", "label,f0\n0,1\n1,2,3\n"):
            path.write_text(body)
            try:
                load_csv(path)
                assert False, f"expected FormatError for {body!r}"
            except FormatError:
                pass

    print("✓ CSV loader tests passed")


def test_dataset_and_split():
    """Test dataset invariants and seeded disjoint splits."""

    print("Testing dataset splits...")

    try:
        Dataset(np.zeros((3, 2)), np.array([0, 1, 5]), 3)
        assert False, "expected DomainError"
    except DomainError:
        pass
    try:
        Dataset(np.zeros((3, 2)), np.array([0, 1]), 3)
        assert False, "expected ShapeError"
    except ShapeError:
        pass

    data = Dataset(np.arange(40.0).reshape(20, 2), np.arange(20) % 4, 4)
    train, validation = split_dataset(data, 5, seed=3)
    assert len(train) == 15 and len(validation) == 5
    assert train.split == "train" and validation.split == "validation"
    assert set(train.indices.tolist()).isdisjoint(validation.indices.tolist())
    assert sorted(train.indices.tolist() + validation.indices.tolist()) == list(range(20))
    assert np.array_equal(train.inputs[:, 0] / 2, train.indices)

    again, _ = split_dataset(data, 5, seed=3)
    assert np.array_equal(again.indices, train.indices)

    try:
        split_dataset(data, 21, seed=0)
        assert False, "expected DomainError"
    except DomainError:
        pass

    print("✓ dataset split tests passed")


# ═══════════════════════════════════════════════════════════════════════════════
# TEACHER-STUDENT
# ═══════════════════════════════════════════════════════════════════════════════

def test_teacher_student():
    """Test determinism, teacher accuracy and preconditions."""

    print("Testing teacher-student task...")

    data, teacher = synth_teacher_student(seed=3, teacher_width=8, input_dim=10, classes=4, n_samples=500)
    again, _ = synth_teacher_student(seed=3, teacher_width=8, input_dim=10, classes=4, n_samples=500)
    assert data.inputs.tobytes() == again.inputs.tobytes()
    assert np.array_equal(data.labels, again.labels)
    assert evaluate(teacher, data) == 1.0
    assert np.unique(data.labels).size == 4
    assert teacher.widths() == {"layer0": 8}

    other, _ = synth_teacher_student(seed=4, teacher_width=8, input_dim=10, classes=4, n_samples=500)
    assert not np.array_equal(other.inputs, data.inputs)

    # Smallest legal teacher
    small, _ = synth_teacher_student(seed=0, teacher_width=2, input_dim=3, classes=2, n_samples=20)
    assert set(small.labels.tolist()) == {0, 1}

    for kwargs in (
        {"teacher_width": 2, "classes": 3, "n_samples": 100},
        {"teacher_width": 8, "classes": 4, "n_samples": 79},
    ):
        try:
            synth_teacher_student(seed=0, input_dim=4, **kwargs)
            assert False, "expected DomainError"
        except DomainError:
            pass

    print("✓ teacher-student tests passed")


def run_all_tests():
    """Run all test functions."""
    print("\n" + "="*60)
    print("Running Data Tests")
    print("="*60 + "\n")

    try:
        test_idx_fixture()
        test_idx_round_trip()
        test_idx_errors()
        test_csv()
        test_dataset_and_split()
        test_teacher_student()

        print("\n" + "="*60)
        print("✅ ALL TESTS PASSED!")
        print("="*60 + "\n")

    except AssertionError as e:
        print("\n" + "="*60)
        print("❌ TEST FAILED!")
        print("="*60)
        print(f"Error: {e}\n")
        raise


if __name__ == "__main__":
    run_all_tests()
