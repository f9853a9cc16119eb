"""
Checkpoint Format

Layout (all integers little-endian):

    magic        8 bytes   b"GSPRUNE\\0"
    version      u32
    header_len   u32
    header       JSON text (spec, block shapes, metadata)
    value_count  u64
    payload      value_count float64 LE, per block: weights then bias
    checksum     32 bytes  SHA-256 of everything above

Round trips are bit-exact.
"""

import hashlib
import json
import struct
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import numpy as np
from pydantic import ValidationError

from core.errors import ContractError, FormatError
from core.network.model import Network, ParamBlock
from core.network.spec import NetworkSpec
from infra.logger import logger_network


MAGIC = b"GSPRUNE\0"
VERSION = 1
_DIGEST_SIZE = 32


# ═══════════════════════════════════════════════════════════════════════════════
# ENCODING
# ═══════════════════════════════════════════════════════════════════════════════

def encode_checkpoint(net: Network, metadata: Optional[Dict[str, Any]] = None) -> bytes:
    header = {
        "spec": net.spec.model_dump(mode="json"),
        "blocks": [
            {"key": b.key, "weights": list(b.weights.shape), "bias": list(b.bias.shape), "prunable": b.prunable}
            for b in net.blocks
        ],
        "metadata": metadata or {},
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    payload = np.concatenate([np.concatenate([b.weights.ravel(), b.bias]) for b in net.blocks])
    body = b"".join([
        MAGIC,
        struct.pack("<II", VERSION, len(header_bytes)),
        header_bytes,
        struct.pack("<Q", payload.size),
        payload.astype("<f8").tobytes(),
    ])
    return body + hashlib.sha256(body).digest()


def save_checkpoint(path, net: Network, metadata: Optional[Dict[str, Any]] = None) -> Path:
    """
    Write a network to disk.

    Args:
        path: Destination file
        net: Network to persist
        metadata: JSON-serializable extras (seed, epoch, regularizer, ...)

    Returns:
        The written path
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = encode_checkpoint(net, metadata)
    path.write_bytes(data)
    logger_network.info(f"CHECKPOINT_SAVED | path={path} | bytes={len(data)}")
    return path


# ═══════════════════════════════════════════════════════════════════════════════
# DECODING
# ═══════════════════════════════════════════════════════════════════════════════

def _read(data: bytes, offset: int, size: int, what: str) -> bytes:
    if offset + size > len(data):
        raise FormatError(f"Truncated checkpoint while reading {what}", offset)
    return data[offset:offset + size]


def decode_checkpoint(data: bytes) -> Tuple[Network, Dict[str, Any]]:
    """Parse checkpoint bytes into (network, metadata)"""
    if _read(data, 0, len(MAGIC), "magic") != MAGIC:
        raise FormatError("Bad checkpoint magic", 0)
    offset = len(MAGIC)

    version, header_len = struct.unpack("<II", _read(data, offset, 8, "version"))
    if version != VERSION:
        raise FormatError(f"Unsupported checkpoint version {version}", offset)
    offset += 8

    header_raw = _read(data, offset, header_len, "header")
    try:
        header = json.loads(header_raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise FormatError(f"Unreadable checkpoint header ({e})", offset) from e
    offset += header_len

    (count,) = struct.unpack("<Q", _read(data, offset, 8, "value count"))
    offset += 8
    payload = np.frombuffer(_read(data, offset, 8 * count, "payload"), dtype="<f8").astype(np.float64)
    offset += 8 * count

    digest = _read(data, offset, _DIGEST_SIZE, "checksum")
    if hashlib.sha256(data[:offset]).digest() != digest:
        raise FormatError("Checkpoint checksum mismatch", offset)
    if offset + _DIGEST_SIZE != len(data):
        raise FormatError("Trailing bytes after checkpoint checksum", offset + _DIGEST_SIZE)

    try:
        spec = NetworkSpec.model_validate(header["spec"])
        entries = header["blocks"]
    except (KeyError, ValidationError) as e:
        raise FormatError(f"Invalid network spec in checkpoint header ({e})", len(MAGIC) + 8) from e

    blocks, cursor = [], 0
    for entry in entries:
        w_shape, b_shape = tuple(entry["weights"]), tuple(entry["bias"])
        w_size, b_size = int(np.prod(w_shape)), int(np.prod(b_shape))
        if cursor + w_size + b_size > payload.size:
            raise FormatError(f"Payload too short for block {entry['key']}", len(MAGIC) + 16 + header_len)
        weights = payload[cursor:cursor + w_size].reshape(w_shape).copy()
        cursor += w_size
        bias = payload[cursor:cursor + b_size].reshape(b_shape).copy()
        cursor += b_size
        blocks.append(ParamBlock(entry["key"], weights, bias, bool(entry["prunable"])))
    if cursor != payload.size:
        raise FormatError("Payload holds more values than the declared blocks", len(MAGIC) + 16 + header_len)

    try:
        net = Network(spec, blocks)
    except ContractError as e:
        raise FormatError(f"Checkpoint blocks disagree with its spec ({e})", len(MAGIC) + 8) from e
    return net, header.get("metadata", {})


def load_checkpoint(path) -> Tuple[Network, Dict[str, Any]]:
    """
    Read a checkpoint written by save_checkpoint.

    Raises:
        FormatError: bad magic, version, checksum or truncated data
        FileNotFoundError: path does not exist
    """
    path = Path(path)
    net, metadata = decode_checkpoint(path.read_bytes())
    logger_network.debug(f"CHECKPOINT_LOADED | path={path} | blocks={len(net.blocks)}")
    return net, metadata
