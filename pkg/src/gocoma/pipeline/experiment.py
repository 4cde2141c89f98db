"""Experiment orchestration: one fusion mode, one manifest, one results dict.

Every fusion mode is wrapped as a model object exposing the forward/params
contract the training loop expects, with the classifier head trained jointly
with any fusion parameters. Inputs are always (code, image) array pairs so
the data stream is identical across modes; only the fusion path differs.
Batch order comes from the seed alone (see classifier.train.seed_streams),
which the emitted batch_order_digest makes checkable across runs.

Two split protocols:
  official: train on train, early-stop on val, report test metrics.
  stratified-80-20-with-5-fold: optionally run 5-fold CV over the training
  portion (val = fold k, train = the rest, fresh model each fold), then fit
  the final model with fold 0 as validation and report held-out test metrics.

Results are plain dicts; `results_to_json` fixes the byte-level encoding so
equal runs produce equal files.
"""

from __future__ import annotations

import hashlib
import json
import os

import numpy as np

from .. import autodiff as ad
from ..classifier.heads import CnnHead, FcnHead, save_head
from ..classifier.train import TrainConfig, evaluate, seed_streams, train
from ..errors import InvalidInputError
from ..fusion import baselines
from ..fusion.gcsa import GcsaConfig, gcsa_forward, init_params, save_checkpoint
from .manifest import DatasetManifest, load_dataset
from .splits import OFFICIAL, STRATIFIED

FUSION_MODES = (
    "unimodal-code",
    "unimodal-image",
    "concat",
    "euclid-xattn",
    "mobius",
    "gcsa",
)


class UnimodalModel:
    """Mean-pooled single-modality tokens into the CNN head."""

    def __init__(self, index: int, head):
        self.index = index
        self.head = head

    def params(self):
        return self.head.params()

    def forward(self, X, train=False, rng=None):
        return self.head.forward(X[self.index], train=train, rng=rng)


class ConcatModel:
    def __init__(self, head):
        self.head = head

    def params(self):
        return self.head.params()

    def forward(self, X, train=False, rng=None):
        fused = baselines.baseline_concat(X[0].mean(axis=1), X[1].mean(axis=1))
        return self.head.forward(fused, train=train, rng=rng)


class XattnModel:
    def __init__(self, p, head):
        self.p = p
        self.head = head

    def params(self):
        return self.p.tensors() + self.head.params()

    def forward(self, X, train=False, rng=None):
        fused = baselines.baseline_euclid_xattn(X[0], X[1], self.p)
        return self.head.forward(fused, train=train, rng=rng)


class MobiusModel:
    """Pooled vectors, scaled into the ball, one Mobius addition.

    Unequal dims get learnable projections to min(d_code, d_img).
    """

    def __init__(self, c, pre_scale, head, proj_code=None, proj_img=None):
        self.c = c
        self.pre_scale = pre_scale
        self.head = head
        self.proj_code = proj_code
        self.proj_img = proj_img

    def params(self):
        own = [p for p in (self.proj_code, self.proj_img) if p is not None]
        return own + self.head.params()

    def forward(self, X, train=False, rng=None):
        vc = X[0].mean(axis=1) / self.pre_scale["code"]
        vi = X[1].mean(axis=1) / self.pre_scale["image"]
        fused = baselines.baseline_mobius_fuse(
            vc, vi, self.c, proj_code=self.proj_code, proj_img=self.proj_img
        )
        return self.head.forward(fused, train=train, rng=rng)


class GcsaModel:
    def __init__(self, p, cfg, pre_scale, head):
        self.p = p
        self.cfg = cfg
        self.pre_scale = pre_scale
        self.head = head

    def params(self):
        return self.p.tensors() + self.head.params()

    def forward(self, X, train=False, rng=None):
        fused = gcsa_forward(
            X[0],
            X[1],
            self.p,
            self.cfg,
            pre_scale_code=self.pre_scale["code"],
            pre_scale_img=self.pre_scale["image"],
        )
        return self.head.forward(fused.z_euc, train=train, rng=rng)


def build_model(
    fusion: str,
    d_code: int,
    d_img: int,
    n_classes: int,
    cfg: TrainConfig,
    gcsa_cfg: GcsaConfig,
    pre_scale: dict,
):
    """Fresh model for one training run; head seed is fusion seed + 1."""
    if fusion not in FUSION_MODES:
        raise InvalidInputError(
            f"unknown fusion mode {fusion!r}; expected one of {FUSION_MODES}"
        )
    dp, s = cfg.dropout, cfg.seed

    def cnn(input_len):
        return CnnHead(input_len=input_len, n_classes=n_classes, dropout=dp, seed=s + 1)

    if fusion == "unimodal-code":
        return UnimodalModel(0, cnn(d_code))
    if fusion == "unimodal-image":
        return UnimodalModel(1, cnn(d_img))
    if fusion == "concat":
        return ConcatModel(cnn(d_code + d_img))
    if fusion == "euclid-xattn":
        p = baselines.init_xattn_params(d_code, d_img, gcsa_cfg.d_model, seed=s)
        return XattnModel(p, cnn(2 * gcsa_cfg.d_model))
    if fusion == "mobius":
        proj_code = proj_img = None
        d_out = d_code
        if d_code != d_img:
            d_out = min(d_code, d_img)
            rng = np.random.default_rng(s)
            proj_code = ad.Tensor(
                rng.uniform(-1 / np.sqrt(d_code), 1 / np.sqrt(d_code), (d_out, d_code)),
                requires_grad=True,
            )
            proj_img = ad.Tensor(
                rng.uniform(-1 / np.sqrt(d_img), 1 / np.sqrt(d_img), (d_out, d_img)),
                requires_grad=True,
            )
        return MobiusModel(gcsa_cfg.curvature, pre_scale, cnn(d_out), proj_code, proj_img)
    p = init_params(d_code, d_img, gcsa_cfg, seed=s)
    head = FcnHead(d_in=gcsa_cfg.d_model, n_classes=n_classes, dropout=dp, seed=s + 1)
    return GcsaModel(p, gcsa_cfg, pre_scale, head)


def dataset_digest(manifest: DatasetManifest, ids, y) -> str:
    """Hash of everything that defines the data a run sees."""
    payload = json.dumps(
        {
            "ids": list(ids),
            "labels": [int(v) for v in y],
            "n_classes": manifest.n_classes,
            "pre_scale": manifest.pre_scale,
            "assignments": manifest.assignments,
            "folds": manifest.folds,
        },
        sort_keys=True,
        separators=(",", ":"),
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def batch_order_digest(train_ids, epochs: int, seed: int) -> str:
    """Hash of the sorted train ids plus every epoch's shuffle.

    Regenerated from the seed's order stream, so it equals what training used
    (early stopping consumes a prefix) and is identical across fusion modes.
    """
    order_rng, _ = seed_streams(seed)
    h = hashlib.sha256()
    for rec_id in train_ids:
        h.update(rec_id.encode("utf-8"))
        h.update(b"\x00")
    n = len(train_ids)
    for _ in range(epochs):
        h.update(order_rng.permutation(n).astype("<i8").tobytes())
    return h.hexdigest()


def results_to_json(results: dict) -> str:
    return json.dumps(results, sort_keys=True, indent=2) + "\n"


def _portion_indices(ids, assignments, portion):
    index_of = {rec_id: i for i, rec_id in enumerate(ids)}
    return np.array(
        [index_of[i] for i in ids if assignments.get(i) == portion], dtype=np.int64
    )


def _fit_and_score(fusion, X, y, tr, va, te, cfg, gcsa_cfg, pre_scale, n_classes):
    """One fresh model: train on tr, stop on va, return everything measured."""
    d_code, d_img = X[0].shape[-1], X[1].shape[-1]
    model = build_model(fusion, d_code, d_img, n_classes, cfg, gcsa_cfg, pre_scale)
    Xtr = (X[0][tr], X[1][tr])
    Xva = (X[0][va], X[1][va])
    history, best_epoch = train(model, Xtr, y[tr], Xva, y[va], cfg, n_classes)
    val_report = evaluate(model, Xva, y[va], n_classes)
    test_report = None
    if te is not None and len(te):
        test_report = evaluate(model, (X[0][te], X[1][te]), y[te], n_classes)
    return model, history, best_epoch, val_report, test_report


def run_experiment(
    manifest: DatasetManifest,
    fusion: str,
    train_cfg: TrainConfig | None = None,
    gcsa_cfg: GcsaConfig | None = None,
    cv: bool | None = None,
    out_path=None,
    history_path=None,
    checkpoint_dir=None,
) -> dict:
    """Train one fusion mode on a split manifest; return the results dict.

    cv=None lets the split mode decide (folds present -> CV on). out_path,
    history_path and checkpoint_dir are optional writers for the results
    JSON, per-epoch history JSONL and parameter checkpoints.
    """
    if isinstance(manifest, (str, os.PathLike)):
        manifest = DatasetManifest.load(manifest)
    cfg = train_cfg or TrainConfig()

    ids, y, X_code, X_image = load_dataset(manifest)
    X = (X_code, X_image)
    n_classes = manifest.n_classes
    if y.max() >= n_classes:
        raise InvalidInputError(
            f"label {int(y.max())} out of range for {n_classes} classes"
        )
    if not manifest.assignments:
        raise InvalidInputError("manifest has no split; run the split step first")
    gcsa_cfg = gcsa_cfg or GcsaConfig()

    train_idx = _portion_indices(ids, manifest.assignments, "train")
    test_idx = _portion_indices(ids, manifest.assignments, "test")

    folds_of = manifest.folds
    if cv is None:
        cv = manifest.split_mode == STRATIFIED and bool(folds_of)

    cv_block = None
    if manifest.split_mode == OFFICIAL or not folds_of:
        val_idx = _portion_indices(ids, manifest.assignments, "val")
        if val_idx.size == 0:
            raise InvalidInputError("official split has no validation ids")
        final_tr, final_va = train_idx, val_idx
    else:
        fold_ids = np.array([folds_of[ids[i]] for i in train_idx], dtype=np.int64)
        n_folds = int(fold_ids.max()) + 1
        if cv:
            fold_rows = []
            accs, f1s = [], []
            for k in range(n_folds):
                tr = train_idx[fold_ids != k]
                va = train_idx[fold_ids == k]
                _, _, best_epoch, val_report, _ = _fit_and_score(
                    fusion, X, y, tr, va, None, cfg, gcsa_cfg,
                    manifest.pre_scale, n_classes,
                )
                accs.append(val_report.accuracy)
                f1s.append(val_report.macro_f1)
                fold_rows.append(
                    {
                        "fold": k,
                        "best_epoch": best_epoch,
                        "val": val_report.to_dict(),
                        "batch_order_digest": batch_order_digest(
                            [ids[i] for i in tr], cfg.epochs, cfg.seed
                        ),
                    }
                )
            cv_block = {
                "folds": fold_rows,
                "accuracy_mean": float(np.mean(accs)),
                "accuracy_std": float(np.std(accs)),
                "macro_f1_mean": float(np.mean(f1s)),
                "macro_f1_std": float(np.std(f1s)),
            }
        final_tr = train_idx[fold_ids != 0]
        final_va = train_idx[fold_ids == 0]

    if test_idx.size == 0:
        raise InvalidInputError("split has no test ids")

    model, history, best_epoch, val_report, test_report = _fit_and_score(
        fusion, X, y, final_tr, final_va, test_idx, cfg, gcsa_cfg,
        manifest.pre_scale, n_classes,
    )

    results = {
        "fusion": fusion,
        "n_classes": n_classes,
        "split_mode": manifest.split_mode,
        "dataset_digest": dataset_digest(manifest, ids, y),
        "batch_order_digest": batch_order_digest(
            [ids[i] for i in final_tr], cfg.epochs, cfg.seed
        ),
        "config": {
            "train": {
                "epochs": cfg.epochs,
                "learning_rate": cfg.learning_rate,
                "batch_size": cfg.batch_size,
                "dropout": cfg.dropout,
                "patience": cfg.patience,
                "seed": cfg.seed,
            },
            "gcsa": {
                "d_model": gcsa_cfg.d_model,
                "curvature": gcsa_cfg.curvature,
                "softmax_scores": gcsa_cfg.softmax_scores,
                "symmetric_values": gcsa_cfg.symmetric_values,
            },
            "cv": bool(cv),
        },
        "best_epoch": best_epoch,
        "history": history,
        "val": val_report.to_dict(),
        "test": test_report.to_dict(),
        "cv": cv_block,
    }

    if history_path is not None:
        with open(history_path, "w", encoding="utf-8") as fh:
            for row in history:
                fh.write(json.dumps(row, sort_keys=True) + "\n")
    if checkpoint_dir is not None:
        os.makedirs(checkpoint_dir, exist_ok=True)
        save_head(os.path.join(checkpoint_dir, f"head_{fusion}.clsf"), model.head)
        if fusion == "gcsa":
            save_checkpoint(os.path.join(checkpoint_dir, "fusion_gcsa.gcsa"), model.p)
    if out_path is not None:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(results_to_json(results))
    return results
