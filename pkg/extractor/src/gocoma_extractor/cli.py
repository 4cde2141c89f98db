"""gocoma-extract: embed sources or artifact images into EMBR0001 shards.

Inputs mirror the imaging tool's manifest conventions: ``--in`` accepts
a .jsonl manifest (rows with id plus source_path/image_path), a
directory (ids are relative paths, suffix dropped, '/' -> '__'), or a
single file. ``--labels`` is a JSON id->label mapping shared by both
modalities so the paired files ingest cleanly.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .codeembed import extract_code
from .imageembed import extract_image
from .registry import CODE_MODELS, VISION_MODELS

_CODE_SUFFIXES = (".c", ".cc", ".cpp", ".cxx", ".java", ".py")


class CliError(Exception):
    pass


def _path_id(path: Path, root: Path) -> str:
    rel = path.relative_to(root) if root.is_dir() else Path(path.name)
    return rel.with_suffix("").as_posix().replace("/", "__")


def _manifest_items(path: Path, key: str) -> list:
    items = []
    base = path.parent
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
                rec_id, target = row["id"], row[key]
            except (json.JSONDecodeError, KeyError) as exc:
                raise CliError(f"{path}:{line_no}: bad manifest row ({exc})")
            target = Path(target)
            if not target.is_absolute():
                target = base / target
            items.append((rec_id, target))
    return items


def _gather(in_path: str, key: str, suffixes) -> list:
    path = Path(in_path)
    if path.suffix == ".jsonl" and path.is_file():
        return _manifest_items(path, key)
    if path.is_file():
        return [(_path_id(path, path), path)]
    if path.is_dir():
        found = sorted(p for p in path.rglob("*") if p.is_file() and p.suffix in suffixes)
        return [(_path_id(p, path), p) for p in found]
    raise CliError(f"input path not found: {in_path}")


def _load_labels(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        return {str(k): int(v) for k, v in raw.items()}
    except (OSError, ValueError) as exc:
        raise CliError(f"cannot read labels {path}: {exc}")


def _common_args(p, models):
    p.add_argument("--in", dest="in_path", required=True,
                   help="manifest .jsonl, directory, or single file")
    p.add_argument("--out", required=True, help="EMBR0001 output path")
    p.add_argument("--model", required=True, choices=sorted(models))
    p.add_argument("--labels", help="JSON id->label mapping")
    p.add_argument("--default-label", type=int, default=0)
    p.add_argument("--batch-size", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--pretrained", dest="pretrained", action="store_true",
                      default=True, help="hub weights (default)")
    mode.add_argument("--random-init", dest="pretrained", action="store_false",
                      help="config-built random weights, no network")
    p.add_argument("--revision", default="main", help="hub revision pin")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gocoma-extract",
        description="frozen pretrained-model embeddings -> EMBR0001 shards",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("code", help="embed source files")
    _common_args(p, CODE_MODELS)
    p.add_argument("--max-length", type=int, default=512)
    p.add_argument("--token-level", action="store_true",
                   help="per-token states instead of pooled (T=1)")

    p = sub.add_parser("image", help="embed artifact PNGs")
    _common_args(p, VISION_MODELS)
    return parser


def _run(args) -> int:
    labels = _load_labels(args.labels)
    if args.command == "code":
        found = _gather(args.in_path, "source_path", _CODE_SUFFIXES)
        if not found:
            raise CliError(f"no source files under {args.in_path}")
        items = []
        for rec_id, path in found:
            try:
                items.append((rec_id, path.read_text(encoding="utf-8", errors="replace")))
            except OSError as exc:
                raise CliError(f"cannot read {path}: {exc}")
        n = extract_code(
            items, args.model, args.out,
            labels=labels, default_label=args.default_label,
            pretrained=args.pretrained, revision=args.revision,
            batch_size=args.batch_size, max_length=args.max_length,
            token_level=args.token_level, seed=args.seed,
        )
        print(f"{args.model}: {n} code records -> {args.out}")
        return 0

    found = _gather(args.in_path, "image_path", (".png",))
    if not found:
        raise CliError(f"no images under {args.in_path}")
    n, skipped = extract_image(
        found, args.model, args.out,
        labels=labels, default_label=args.default_label,
        pretrained=args.pretrained, batch_size=args.batch_size, seed=args.seed,
    )
    print(f"{args.model}: {n} image records -> {args.out}")
    if skipped:
        print(f"skipped {len(skipped)} undecodable image(s)", file=sys.stderr)
        return 1
    return 0


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return _run(args)
    except (CliError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
