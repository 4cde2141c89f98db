"""The EMBR0001 embedding record container.

One file = the 8-byte magic ``EMBR0001`` followed by records until EOF.
Each record:

    u16 LE   id byte length
    bytes    id, UTF-8
    i32 LE   label
    u8       modality (0 = code, 1 = image)
    u32 LE   token count T
    u32 LE   dimension d
    f32 LE   payload, T*d floats, row-major

Binary rather than text so embeddings round-trip exactly and files stay
small; a JSON-lines import path exists for small hand-written fixtures:
each line {"id": ..., "label": ..., "modality": ..., "data": [[...], ...]}.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

from ..errors import EmptyArtifactError, InvalidInputError

MAGIC = b"EMBR0001"

_MODALITY_CODE = {"code": 0, "image": 1}
_CODE_MODALITY = {0: "code", 1: "image"}


@dataclass
class EmbeddingRecord:
    id: str
    label: int
    modality: str
    data: np.ndarray  # (T, d) float32

    def __post_init__(self):
        if not self.id:
            raise InvalidInputError("record id must be nonempty")
        if self.modality not in _MODALITY_CODE:
            raise InvalidInputError(f"unknown modality {self.modality!r}")
        self.label = int(self.label)
        if self.label < 0:
            raise InvalidInputError(f"label must be >= 0, got {self.label}")
        arr = np.asarray(self.data, dtype=np.float32)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise InvalidInputError(
                f"record {self.id!r}: data must be (T, d) with T, d >= 1, got {arr.shape}"
            )
        if not np.all(np.isfinite(arr)):
            raise InvalidInputError(f"record {self.id!r}: non-finite embedding values")
        self.data = arr

    @property
    def T(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]


def write_records(path, records) -> None:
    records = list(records)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        for rec in records:
            id_bytes = rec.id.encode("utf-8")
            if len(id_bytes) > 0xFFFF:
                raise InvalidInputError(f"record id too long: {rec.id[:32]!r}...")
            fh.write(struct.pack("<H", len(id_bytes)))
            fh.write(id_bytes)
            fh.write(struct.pack("<iBII", rec.label, _MODALITY_CODE[rec.modality], rec.T, rec.d))
            fh.write(np.ascontiguousarray(rec.data, dtype="<f4").tobytes())


def _read_exact(fh, n, what):
    buf = fh.read(n)
    if len(buf) != n:
        raise InvalidInputError(f"truncated record file while reading {what}")
    return buf


def read_records(path) -> list:
    with open(path, "rb") as fh:
        magic = fh.read(len(MAGIC))
        if magic != MAGIC:
            raise InvalidInputError(
                f"{path}: bad magic {magic!r}, expected {MAGIC!r}"
            )
        records = []
        while True:
            head = fh.read(2)
            if not head:
                break
            if len(head) != 2:
                raise InvalidInputError("truncated record file while reading id length")
            (id_len,) = struct.unpack("<H", head)
            rec_id = _read_exact(fh, id_len, "id").decode("utf-8")
            label, mod, t, d = struct.unpack(
                "<iBII", _read_exact(fh, 13, f"header of {rec_id!r}")
            )
            if mod not in _CODE_MODALITY:
                raise InvalidInputError(f"record {rec_id!r}: bad modality byte {mod}")
            payload = _read_exact(fh, 4 * t * d, f"payload of {rec_id!r}")
            data = np.frombuffer(payload, dtype="<f4").reshape(t, d)
            records.append(
                EmbeddingRecord(rec_id, label, _CODE_MODALITY[mod], data.copy())
            )
    return records


def import_jsonl(path) -> list:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise InvalidInputError(f"{path}:{line_no}: bad JSON: {exc}") from exc
            try:
                records.append(
                    EmbeddingRecord(
                        id=obj["id"],
                        label=obj["label"],
                        modality=obj["modality"],
                        data=np.asarray(obj["data"], dtype=np.float32),
                    )
                )
            except KeyError as exc:
                raise InvalidInputError(f"{path}:{line_no}: missing field {exc}") from exc
    if not records:
        raise EmptyArtifactError(f"{path}: no records")
    return records
