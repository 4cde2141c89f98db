"""Command-line front end: synth, ingest, split, train, report.

Config file for `train` is JSON with two optional blocks, e.g.
{"train": {"epochs": 25, "learning_rate": 5e-6, "seed": 0},
 "gcsa": {"d_model": 128, "curvature": 1.0}}.
The environment variable GOCOMA_SEED, when set, overrides the train seed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from ..classifier.train import TrainConfig
from ..errors import GocomaError
from ..fusion.gcsa import GcsaConfig
from .experiment import run_experiment
from .manifest import DatasetManifest, ingest
from .report import build_report, load_results
from .splits import OFFICIAL, STRATIFIED, SplitSpec, apply_split
from .synth import synth_generate

_FUSION_ALIASES = {
    "code": "unimodal-code",
    "image": "unimodal-image",
    "xattn": "euclid-xattn",
    "concat": "concat",
    "mobius": "mobius",
    "gcsa": "gcsa",
    "unimodal-code": "unimodal-code",
    "unimodal-image": "unimodal-image",
    "euclid-xattn": "euclid-xattn",
}

_MODE_ALIASES = {"official": OFFICIAL, "stratified5cv": STRATIFIED}


def _load_json(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gocoma")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic hierarchical dataset")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--n-samples", type=int, required=True)
    p.add_argument("--n-classes", type=int, required=True)
    p.add_argument("--t-code", type=int, default=2)
    p.add_argument("--t-image", type=int, default=2)
    p.add_argument("--d-code", type=int, default=8)
    p.add_argument("--d-image", type=int, default=8)
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--noise", type=float, default=0.3)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("ingest", help="validate record files into a manifest")
    p.add_argument("records", nargs="+", help="EmbeddingRecord files")
    p.add_argument("--out", required=True, help="manifest path to write")
    p.add_argument("--jsonl", action="store_true", help="records are JSON lines")
    p.add_argument("--class-names", help="comma-separated class names")
    p.add_argument("--assignments", help="JSON id->{train,val,test} mapping")

    p = sub.add_parser("split", help="attach split assignments to a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--mode", choices=sorted(_MODE_ALIASES), required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--assignments", help="JSON mapping, required for official mode")
    p.add_argument("--out", help="output manifest path (default: in place)")

    p = sub.add_parser("train", help="train one fusion mode and write results")
    p.add_argument("--manifest", required=True)
    p.add_argument("--fusion", choices=sorted(_FUSION_ALIASES), required=True)
    p.add_argument("--config", help="JSON with train/gcsa hyperparameters")
    p.add_argument("--out", required=True, help="results JSON path")
    p.add_argument("--history", help="per-epoch history JSONL path")
    p.add_argument("--checkpoint-dir", help="directory for parameter checkpoints")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--cv", dest="cv", action="store_true", default=None)
    group.add_argument("--no-cv", dest="cv", action="store_false")

    p = sub.add_parser("report", help="build the comparison table")
    p.add_argument("results", nargs="+", help="results JSON files")
    p.add_argument("--json", dest="json_out", help="also write the table as JSON")
    return parser


def _cmd_synth(args) -> int:
    manifest = synth_generate(
        n_samples=args.n_samples,
        n_classes=args.n_classes,
        T_c=args.t_code,
        T_v=args.t_image,
        d_code=args.d_code,
        d_img=args.d_image,
        hierarchy_depth=args.depth,
        noise=args.noise,
        seed=args.seed,
        out_dir=args.out,
    )
    path = os.path.join(args.out, "manifest.json")
    manifest.save(path)
    print(f"wrote {args.n_samples} samples, {args.n_classes} classes -> {path}")
    return 0


def _cmd_ingest(args) -> int:
    class_names = args.class_names.split(",") if args.class_names else None
    assignments = _load_json(args.assignments) if args.assignments else None
    manifest = ingest(
        args.records,
        split_assignments=assignments,
        jsonl=args.jsonl,
        class_names=class_names,
    )
    manifest.save(args.out)
    print(f"ingested {len(args.records)} file(s) -> {args.out}")
    return 0


def _cmd_split(args) -> int:
    manifest = DatasetManifest.load(args.manifest)
    spec = SplitSpec(mode=_MODE_ALIASES[args.mode], seed=args.seed)
    official = _load_json(args.assignments) if args.assignments else None
    manifest = apply_split(manifest, spec, official)
    out = args.out or args.manifest
    manifest.save(out)
    counts = {}
    for portion in manifest.assignments.values():
        counts[portion] = counts.get(portion, 0) + 1
    print(f"split {spec.mode}: {counts} -> {out}")
    return 0


def _cmd_train(args) -> int:
    raw = _load_json(args.config) if args.config else {}
    train_kwargs = dict(raw.get("train", {}))
    seed_env = os.environ.get("GOCOMA_SEED")
    if seed_env is not None:
        train_kwargs["seed"] = int(seed_env)
    train_cfg = TrainConfig(**train_kwargs)
    gcsa_cfg = GcsaConfig(**raw.get("gcsa", {}))
    results = run_experiment(
        args.manifest,
        _FUSION_ALIASES[args.fusion],
        train_cfg=train_cfg,
        gcsa_cfg=gcsa_cfg,
        cv=args.cv,
        out_path=args.out,
        history_path=args.history,
        checkpoint_dir=args.checkpoint_dir,
    )
    test = results["test"]
    print(
        f"{results['fusion']}: test acc {test['accuracy']:.2f}, "
        f"macro-F1 {test['macro_f1']:.2f} -> {args.out}"
    )
    return 0


def _cmd_report(args) -> int:
    text, table = build_report(load_results(args.results))
    if args.json_out:
        with open(args.json_out, "w", encoding="utf-8") as fh:
            json.dump(table, fh, indent=2, sort_keys=True)
            fh.write("\n")
    print(text, end="")
    return 0


_COMMANDS = {
    "synth": _cmd_synth,
    "ingest": _cmd_ingest,
    "split": _cmd_split,
    "train": _cmd_train,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except GocomaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
