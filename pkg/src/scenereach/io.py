"""File formats: deterministic binary containers for sequences and
checkpoints, canonical JSON for human-edited artifacts, atomic writes.

The binary container is: 4-byte magic, u32 little-endian header length,
UTF-8 canonical JSON header, then the raw little-endian array payload in
the order listed by the header. Identical data serializes to identical
bytes, which the end-to-end determinism contract relies on.
"""

from __future__ import annotations

import hashlib
import json
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .motion import MotionSequence

SEQUENCE_MAGIC = b"SRQ1"
CHECKPOINT_MAGIC = b"SRCK"
CONTAINER_VERSION = 1


class FileFormatError(ValueError):
    """Malformed or truncated file; the message names the byte offset."""


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def atomic_write_bytes(path: str | Path, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path: str | Path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def write_container(path: str | Path, magic: bytes, header: dict,
                    arrays: dict[str, np.ndarray]) -> None:
    """Serialize header + named arrays; array order is recorded in the header."""
    names = sorted(arrays)
    header = dict(header)
    header["container_version"] = CONTAINER_VERSION
    header["arrays"] = [
        {"name": n, "shape": list(arrays[n].shape), "dtype": str(arrays[n].dtype)}
        for n in names
    ]
    header_bytes = canonical_json(header).encode("utf-8")
    parts = [magic, struct.pack("<I", len(header_bytes)), header_bytes]
    for n in names:
        arr = np.ascontiguousarray(arrays[n])
        parts.append(arr.astype(arr.dtype.newbyteorder("<"), copy=False).tobytes())
    atomic_write_bytes(path, b"".join(parts))


def read_container(path: str | Path, magic: bytes) -> tuple[dict, dict[str, np.ndarray]]:
    data = Path(path).read_bytes()
    if len(data) < 8:
        raise FileFormatError(f"{path}: truncated at byte {len(data)} (want 8-byte preamble)")
    if data[:4] != magic:
        raise FileFormatError(f"{path}: bad magic at byte 0: {data[:4]!r} != {magic!r}")
    (header_len,) = struct.unpack("<I", data[4:8])
    if len(data) < 8 + header_len:
        raise FileFormatError(f"{path}: truncated at byte {len(data)} "
                              f"(header needs {8 + header_len})")
    try:
        header = json.loads(data[8:8 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FileFormatError(f"{path}: bad header JSON at byte 8: {exc}") from exc
    if header.get("container_version") != CONTAINER_VERSION:
        raise FileFormatError(
            f"{path}: unsupported container version {header.get('container_version')!r}")

    arrays: dict[str, np.ndarray] = {}
    offset = 8 + header_len
    for spec in header.get("arrays", []):
        dtype = np.dtype(spec["dtype"]).newbyteorder("<")
        count = int(np.prod(spec["shape"], dtype=np.int64)) if spec["shape"] else 1
        nbytes = count * dtype.itemsize
        if len(data) < offset + nbytes:
            raise FileFormatError(
                f"{path}: truncated at byte {len(data)} "
                f"(array {spec['name']!r} needs bytes [{offset}, {offset + nbytes}))")
        arr = np.frombuffer(data[offset:offset + nbytes], dtype=dtype).reshape(spec["shape"])
        arrays[spec["name"]] = arr.astype(dtype.newbyteorder("="))
        offset += nbytes
    if offset != len(data):
        raise FileFormatError(f"{path}: {len(data) - offset} trailing bytes at byte {offset}")
    return header, arrays


def save_sequence(path: str | Path, seq: MotionSequence) -> None:
    header = {
        "kind": "motion-sequence",
        "version": 1,
        "fps": float(seq.fps),
        "label": seq.label,
        "scene_id": seq.scene_id,
        "seq_id": seq.seq_id,
        "task_id": seq.task_id,
        "goal": None if seq.goal is None else [float(v) for v in seq.goal],
        "n_frames": len(seq),
    }
    write_container(path, SEQUENCE_MAGIC, header,
                    {"roots": seq.roots, "joints": seq.joints, "rot6d": seq.rot6d})


def load_sequence(path: str | Path) -> MotionSequence:
    header, arrays = read_container(path, SEQUENCE_MAGIC)
    if header.get("kind") != "motion-sequence" or header.get("version") != 1:
        raise FileFormatError(f"{path}: not a v1 motion-sequence container")
    return MotionSequence(
        roots=arrays["roots"], joints=arrays["joints"], rot6d=arrays["rot6d"],
        fps=header["fps"],
        goal=None if header.get("goal") is None else np.asarray(header["goal"]),
        label=header.get("label", "reaching"),
        scene_id=header.get("scene_id", ""),
        seq_id=header.get("seq_id", ""),
        task_id=header.get("task_id", ""),
    )


def write_json(path: str | Path, obj) -> None:
    atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def read_json(path: str | Path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)
