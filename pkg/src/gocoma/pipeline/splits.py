"""Split construction: official mappings and stratified 80-20 with 5 folds.

Stratification works per class on ids sorted then shuffled by the seeded
generator, so assignments are deterministic and per-class proportions stay
within one sample of exact. Folds are dealt round-robin over each class's
training ids: disjoint, covering, and class-balanced within one sample.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidInputError

OFFICIAL = "official-80-10-10"
STRATIFIED = "stratified-80-20-with-5-fold"

_FOLDS = 5
_TEST_FRACTION = 0.2


@dataclass
class SplitSpec:
    mode: str
    seed: int = 0
    stratify_key: str = "label"

    def __post_init__(self):
        if self.mode not in (OFFICIAL, STRATIFIED):
            raise InvalidInputError(
                f"unknown split mode {self.mode!r}; "
                f"expected {OFFICIAL!r} or {STRATIFIED!r}"
            )
        if self.stratify_key != "label":
            raise InvalidInputError("only label stratification is supported")


def make_splits(labels: dict, spec: SplitSpec, official_assignments: dict | None = None):
    """Returns (assignments, folds): id->portion and id->fold (train ids only)."""
    if not labels:
        raise InvalidInputError("no ids to split")

    if spec.mode == OFFICIAL:
        if not official_assignments:
            raise InvalidInputError(
                "official mode needs an id->{train,val,test} mapping file"
            )
        missing = sorted(set(labels) - set(official_assignments))
        if missing:
            raise InvalidInputError(f"official split missing id {missing[0]!r}")
        unknown = sorted(set(official_assignments) - set(labels))
        if unknown:
            raise InvalidInputError(f"official split names unknown id {unknown[0]!r}")
        bad = set(official_assignments.values()) - {"train", "val", "test"}
        if bad:
            raise InvalidInputError(f"unknown split portion {sorted(bad)[0]!r}")
        assignments = {i: official_assignments[i] for i in sorted(labels)}
        if not any(v == "train" for v in assignments.values()):
            raise InvalidInputError("official split assigns no training ids")
        return assignments, {}

    rng = np.random.default_rng(spec.seed)
    by_class = {}
    for rec_id in sorted(labels):
        by_class.setdefault(labels[rec_id], []).append(rec_id)

    assignments = {}
    folds = {}
    for label in sorted(by_class):
        ids = np.array(by_class[label])
        rng.shuffle(ids)
        n_test = int(len(ids) * _TEST_FRACTION + 0.5)
        n_train = len(ids) - n_test
        if n_train < _FOLDS:
            raise InvalidInputError(
                f"class {label} has {n_train} training samples, fewer than "
                f"{_FOLDS} folds"
            )
        for rec_id in ids[:n_test]:
            assignments[str(rec_id)] = "test"
        for pos, rec_id in enumerate(ids[n_test:]):
            assignments[str(rec_id)] = "train"
            folds[str(rec_id)] = pos % _FOLDS
    return assignments, folds


def apply_split(manifest, spec: SplitSpec, official_assignments: dict | None = None):
    """Attach split assignments to a manifest, rescoping pre-scale to train.

    Returns a new manifest; the input is not mutated. The pre-scale statistic
    is recomputed over the training ids only, since downstream lifting must
    not peek at validation or test norms.
    """
    from .manifest import DatasetManifest, _pair_and_validate, _read_all, compute_pre_scale

    paired = _pair_and_validate(_read_all(manifest.record_paths, manifest.jsonl))
    labels = {rec_id: recs["code"].label for rec_id, recs in paired.items()}
    assignments, folds = make_splits(labels, spec, official_assignments)
    train_ids = [i for i, portion in assignments.items() if portion == "train"]

    return DatasetManifest(
        record_paths=list(manifest.record_paths),
        class_names=list(manifest.class_names),
        n_classes=manifest.n_classes,
        pre_scale=compute_pre_scale(paired, train_ids),
        jsonl=manifest.jsonl,
        split_mode=spec.mode,
        split_seed=spec.seed,
        assignments=assignments,
        folds=folds,
    )
