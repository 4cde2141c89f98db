"""Standalone EMBR0001 record writer and reader.

The fusion pipeline consumes embedding files in the EMBR0001 container:
the 8-byte magic ``EMBR0001`` once at the head, then records until EOF,
each laid out as

    u16 LE   id byte length
    bytes    id, UTF-8
    i32 LE   label
    u8       modality (0 = code, 1 = image)
    u32 LE   token count T
    u32 LE   dimension d
    f32 LE   payload, T*d floats, row-major

This module implements that layout independently; the only coupling to
the pipeline is the byte format itself.
"""

from __future__ import annotations

import struct

import numpy as np

MAGIC = b"EMBR0001"
MODALITY_CODE = 0
MODALITY_IMAGE = 1

_HEADER = struct.Struct("<iBII")  # label, modality, T, d


class RecordError(ValueError):
    pass


def _validate(rec_id: str, label: int, modality: int, data: np.ndarray) -> np.ndarray:
    if not rec_id:
        raise RecordError("record id must be nonempty")
    if len(rec_id.encode("utf-8")) > 0xFFFF:
        raise RecordError(f"record id too long: {rec_id[:32]!r}...")
    if int(label) < 0:
        raise RecordError(f"label must be >= 0, got {label}")
    if modality not in (MODALITY_CODE, MODALITY_IMAGE):
        raise RecordError(f"modality must be 0 or 1, got {modality}")
    arr = np.asarray(data, dtype=np.float32)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise RecordError(
            f"record {rec_id!r}: data must be (T, d) with T, d >= 1, got {arr.shape}"
        )
    if not np.all(np.isfinite(arr)):
        raise RecordError(f"record {rec_id!r}: non-finite embedding values")
    return arr


def write_embeddings(path, rows) -> int:
    """Write (id, label, modality, (T, d) array) rows; returns the count."""
    n = 0
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        for rec_id, label, modality, data in rows:
            arr = _validate(rec_id, label, modality, data)
            id_bytes = rec_id.encode("utf-8")
            fh.write(struct.pack("<H", len(id_bytes)))
            fh.write(id_bytes)
            fh.write(_HEADER.pack(int(label), modality, arr.shape[0], arr.shape[1]))
            fh.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())
            n += 1
    return n


def _read_exact(fh, n: int, what: str) -> bytes:
    buf = fh.read(n)
    if len(buf) != n:
        raise RecordError(f"truncated file: expected {n} bytes for {what}")
    return buf


def read_embeddings(path) -> list:
    """Read back (id, label, modality, array) tuples."""
    out = []
    with open(path, "rb") as fh:
        if fh.read(len(MAGIC)) != MAGIC:
            raise RecordError(f"{path}: bad magic, not an EMBR0001 file")
        while True:
            head = fh.read(2)
            if not head:
                return out
            if len(head) != 2:
                raise RecordError("truncated file: expected 2 bytes for id length")
            (id_len,) = struct.unpack("<H", head)
            rec_id = _read_exact(fh, id_len, "id").decode("utf-8")
            label, modality, t, d = _HEADER.unpack(
                _read_exact(fh, _HEADER.size, "record header")
            )
            payload = _read_exact(fh, 4 * t * d, f"payload of {rec_id!r}")
            arr = np.frombuffer(payload, dtype="<f4").reshape(t, d)
            out.append((rec_id, label, modality, arr.astype(np.float32)))
