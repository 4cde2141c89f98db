"""Dataset manifests: validated views over record files.

A manifest names its record files, the class set, the per-modality pre-scale
statistics and (once assigned) the split memberships. The pre-scale statistic
is 1 + the largest token norm over the training portion; when no split exists
yet at ingest time, the statistic covers all records and `make_splits`
recomputes it over the realized training split, so no test information leaks
into it once splits exist.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidInputError
from .records import import_jsonl, read_records


@dataclass
class DatasetManifest:
    record_paths: list
    class_names: list
    n_classes: int
    pre_scale: dict  # {"code": float, "image": float}
    jsonl: bool = False
    split_mode: str | None = None
    split_seed: int | None = None
    assignments: dict = field(default_factory=dict)  # id -> train|val|test
    folds: dict = field(default_factory=dict)  # id -> 0..k-1

    def to_dict(self) -> dict:
        return {
            "record_paths": list(self.record_paths),
            "class_names": list(self.class_names),
            "n_classes": self.n_classes,
            "pre_scale": dict(self.pre_scale),
            "jsonl": self.jsonl,
            "split_mode": self.split_mode,
            "split_seed": self.split_seed,
            "assignments": dict(self.assignments),
            "folds": dict(self.folds),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DatasetManifest":
        return cls(
            record_paths=list(d["record_paths"]),
            class_names=list(d["class_names"]),
            n_classes=int(d["n_classes"]),
            pre_scale={k: float(v) for k, v in d["pre_scale"].items()},
            jsonl=bool(d.get("jsonl", False)),
            split_mode=d.get("split_mode"),
            split_seed=d.get("split_seed"),
            assignments=dict(d.get("assignments", {})),
            folds={k: int(v) for k, v in d.get("folds", {}).items()},
        )

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "DatasetManifest":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def _read_all(record_paths, jsonl: bool) -> list:
    records = []
    for path in record_paths:
        if not os.path.exists(path):
            raise InvalidInputError(f"record file not found: {path}")
        records.extend(import_jsonl(path) if jsonl else read_records(path))
    return records


def _pair_and_validate(records) -> dict:
    """Returns {id: {"code": rec, "image": rec}} or raises naming the id."""
    by_modality = {"code": {}, "image": {}}
    for rec in records:
        bucket = by_modality[rec.modality]
        if rec.id in bucket:
            raise InvalidInputError(
                f"duplicate id {rec.id!r} in modality {rec.modality}"
            )
        bucket[rec.id] = rec

    for modality, bucket in by_modality.items():
        if not bucket:
            raise InvalidInputError(f"no {modality} records found")
        dims = {rec.data.shape for rec in bucket.values()}
        if len(dims) > 1:
            ref_shape = bucket[min(bucket)].data.shape
            offender = min(
                rec_id for rec_id, rec in bucket.items() if rec.data.shape != ref_shape
            )
            raise InvalidInputError(
                f"inconsistent {modality} shapes {sorted(dims)} "
                f"(first offending id {offender!r}); records must agree on (T, d)"
            )

    code_ids = set(by_modality["code"])
    image_ids = set(by_modality["image"])
    for missing in sorted(code_ids - image_ids):
        raise InvalidInputError(f"id {missing!r} has no image pair")
    for missing in sorted(image_ids - code_ids):
        raise InvalidInputError(f"id {missing!r} has no code pair")

    paired = {}
    for rec_id in sorted(code_ids):
        code_rec = by_modality["code"][rec_id]
        image_rec = by_modality["image"][rec_id]
        if code_rec.label != image_rec.label:
            raise InvalidInputError(
                f"id {rec_id!r}: label {code_rec.label} (code) != "
                f"{image_rec.label} (image)"
            )
        paired[rec_id] = {"code": code_rec, "image": image_rec}
    return paired


def compute_pre_scale(paired: dict, train_ids=None) -> dict:
    """1 + max token norm per modality over the given ids (default: all)."""
    ids = sorted(paired) if train_ids is None else sorted(train_ids)
    if not ids:
        raise InvalidInputError("no ids to compute pre-scale statistics over")
    out = {}
    for modality in ("code", "image"):
        peak = 0.0
        for rec_id in ids:
            data = paired[rec_id][modality].data.astype(np.float64)
            peak = max(peak, float(np.linalg.norm(data, axis=-1).max()))
        out[modality] = 1.0 + peak
    return out


def ingest(record_paths, split_assignments=None, jsonl: bool = False, class_names=None) -> DatasetManifest:
    """Validate record files and build a manifest.

    `split_assignments` (id -> train|val|test), when given, scopes the
    pre-scale statistic to the training ids and is stored on the manifest.
    """
    record_paths = [str(p) for p in record_paths]
    paired = _pair_and_validate(_read_all(record_paths, jsonl))

    labels = {rec_id: recs["code"].label for rec_id, recs in paired.items()}
    n_classes = max(labels.values()) + 1

    train_ids = None
    if split_assignments:
        unknown = sorted(set(split_assignments) - set(paired))
        if unknown:
            raise InvalidInputError(f"split names unknown id {unknown[0]!r}")
        missing = sorted(set(paired) - set(split_assignments))
        if missing:
            raise InvalidInputError(f"split missing id {missing[0]!r}")
        bad = {v for v in split_assignments.values()} - {"train", "val", "test"}
        if bad:
            raise InvalidInputError(f"split contains unknown portion {sorted(bad)[0]!r}")
        train_ids = [i for i, portion in split_assignments.items() if portion == "train"]
        if not train_ids:
            raise InvalidInputError("split assigns no training ids")

    manifest = DatasetManifest(
        record_paths=record_paths,
        class_names=list(class_names) if class_names else [f"class{k}" for k in range(n_classes)],
        n_classes=n_classes,
        pre_scale=compute_pre_scale(paired, train_ids),
        jsonl=jsonl,
        split_mode="official-80-10-10" if split_assignments else None,
        assignments=dict(split_assignments) if split_assignments else {},
    )
    if len(manifest.class_names) != n_classes:
        raise InvalidInputError(
            f"{len(manifest.class_names)} class names for {n_classes} classes"
        )
    return manifest


def load_dataset(manifest: DatasetManifest):
    """Read the manifest's record files back into paired, array form.

    Returns (ids, y, X_code, X_image): ids sorted ascending, labels int64,
    arrays (B, T, d) float64 in id order.
    """
    paired = _pair_and_validate(_read_all(manifest.record_paths, manifest.jsonl))
    ids = sorted(paired)
    y = np.array([paired[i]["code"].label for i in ids], dtype=np.int64)
    X_code = np.stack([paired[i]["code"].data for i in ids]).astype(np.float64)
    X_image = np.stack([paired[i]["image"].data for i in ids]).astype(np.float64)
    return ids, y, X_code, X_image
