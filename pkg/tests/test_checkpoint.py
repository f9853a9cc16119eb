"""
Test suite for the checkpoint format
"""

import sys
import tempfile
from pathlib import Path

import numpy as np

# Add project root to path so we can import from core/
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from core.errors import FormatError
from core.network import dec3_spec, init_network, load_checkpoint, mlp_spec, save_checkpoint
from core.network.checkpoint import MAGIC, decode_checkpoint, encode_checkpoint


def _expect_format_error(data: bytes):
    try:
        decode_checkpoint(data)
    except FormatError as e:
        return e
    assert False, "expected FormatError"


def test_round_trip():
    """Test bit-exact save / load and metadata preservation."""

    print("Testing checkpoint round trip...")

    for spec in (mlp_spec(6, [5, 4], 3, loss="squared_error"), dec3_spec([1, 8, 8], [3, 4, 5], 2, 3, 4)):
        net = init_network(spec, seed=12)
        # awkward values survive unchanged
        first = net.blocks[0]
        first.weights.reshape(-1)[:3] = [np.nextafter(0.0, 1.0), -0.0, 1e-300]

        with tempfile.TemporaryDirectory() as tmp:
            path = save_checkpoint(Path(tmp) / "nested" / "net.bin", net, {"seed": 12, "role": "regularized"})
            loaded, metadata = load_checkpoint(path)

        assert metadata == {"seed": 12, "role": "regularized"}
        assert loaded.spec.family() == net.spec.family()
        assert loaded.widths() == net.widths()
        for a, b in zip(net.blocks, loaded.blocks):
            assert a.key == b.key and a.prunable == b.prunable
            assert a.weights.tobytes() == b.weights.tobytes()
            assert a.bias.tobytes() == b.bias.tobytes()

    # Encoding is deterministic
    net = init_network(mlp_spec(3, [2], 2), seed=1)
    assert encode_checkpoint(net, {"a": 1}) == encode_checkpoint(net.copy(), {"a": 1})
    assert encode_checkpoint(net)[:len(MAGIC)] == MAGIC

    print("✓ round trip tests passed")


def test_corruption():
    """Test that every kind of damage is reported with an offset."""

    print("Testing checkpoint corruption...")

    data = encode_checkpoint(init_network(mlp_spec(4, [3], 2), seed=2), {"epoch": 3})

    # Bad magic is caught at the very start
    error = _expect_format_error(b"XXXXXXXX" + data[8:])
    assert error.offset == 0

    # Truncation anywhere
    for cut in (4, 12, 40, len(data) - 40, len(data) - 1):
        error = _expect_format_error(data[:cut])
        assert error.offset is not None

    # One flipped payload byte breaks the checksum
    damaged = bytearray(data)
    damaged[len(data) - 40] ^= 0x01
    error = _expect_format_error(bytes(damaged))
    assert "checksum" in str(error)

    # A damaged checksum is a mismatch too
    damaged = bytearray(data)
    damaged[-1] ^= 0xFF
    _expect_format_error(bytes(damaged))

    # Trailing garbage after a valid checksum
    error = _expect_format_error(data + b"\0")
    assert error.offset == len(data)

    # Unsupported version
    damaged = bytearray(data)
    damaged[8] = 99
    error = _expect_format_error(bytes(damaged))
    assert error.offset == 8

    print("✓ corruption tests passed")


def test_missing_file():
    """Test that a missing file is not a format error."""

    print("Testing missing checkpoint...")

    with tempfile.TemporaryDirectory() as tmp:
        try:
            load_checkpoint(Path(tmp) / "absent.bin")
            assert False, "expected FileNotFoundError"
        except FileNotFoundError:
            pass

    print("✓ missing file tests passed")


def run_all_tests():
    """Run all test functions."""
    print("\n" + "="*60)
    print("Running Checkpoint Tests")
    print("="*60 + "\n")

    try:
        test_round_trip()
        test_corruption()
        test_missing_file()

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
