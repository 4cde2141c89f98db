"""bpea convert: source tree -> PNG corpus + JSONL manifest.

Per-file conversions are independent, so --jobs N runs them in a thread
pool (the heavy lifting is external compiler processes). Images and the
manifest are written atomically; manifest rows are sorted by id so repeated
runs produce identical files. sha256 is over the artifact bytes, and
byte_len is what image_to_bytes needs for exact recovery.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from ..errors import GocomaError
from .compile import LANGUAGES, convert_source
from .imaging import bytes_to_image, write_png

_EXTENSIONS = {
    "c": (".c",),
    "cpp": (".cpp", ".cc", ".cxx"),
    "java": (".java",),
    "python": (".py",),
}


def _gather(root: str, language: str) -> list:
    path = Path(root)
    if path.is_file():
        return [path]
    if not path.is_dir():
        raise GocomaError(f"input path not found: {root}")
    exts = _EXTENSIONS[language]
    return sorted(p for p in path.rglob("*") if p.suffix in exts and p.is_file())


def _artifact_id(source: Path, root: Path) -> str:
    rel = source.relative_to(root) if root.is_dir() else Path(source.name)
    return rel.with_suffix("").as_posix().replace("/", "__")


def _convert_one(source: Path, root: Path, out_dir: str, language: str, fallback_only: bool):
    artifact = convert_source(source, language, fallback_only=fallback_only)
    rec_id = _artifact_id(source, root)
    image_path = os.path.join(out_dir, f"{rec_id}.png")
    write_png(bytes_to_image(artifact.data), image_path)
    return {
        "id": rec_id,
        "source_path": str(source),
        "image_path": image_path,
        "origin": artifact.origin,
        "byte_len": len(artifact.data),
        "toolchain_record": artifact.toolchain_record,
        "sha256": hashlib.sha256(artifact.data).hexdigest(),
    }


def _write_manifest(path: str, rows: list) -> None:
    rows = sorted(rows, key=lambda r: r["id"])
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path) or ".", suffix=".tmp")
    with os.fdopen(fd, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")
    os.replace(tmp, path)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bpea")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("convert", help="compile/normalize sources and emit images")
    p.add_argument("--lang", choices=LANGUAGES, required=True)
    p.add_argument("--in", dest="in_path", required=True, help="source dir or file")
    p.add_argument("--out", required=True, help="output directory for PNGs")
    p.add_argument("--manifest", required=True, help="JSONL manifest path")
    p.add_argument("--fallback-only", action="store_true",
                   help="skip compilers, always normalize")
    p.add_argument("--jobs", type=int, default=1)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.jobs < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return 2
    try:
        sources = _gather(args.in_path, args.lang)
    except GocomaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if not sources:
        print(f"error: no {args.lang} sources under {args.in_path}", file=sys.stderr)
        return 2

    os.makedirs(args.out, exist_ok=True)
    root = Path(args.in_path)
    rows, failures = [], 0

    def work(source):
        return _convert_one(source, root, args.out, args.lang, args.fallback_only)

    with ThreadPoolExecutor(max_workers=args.jobs) as pool:
        for source, outcome in zip(sources, pool.map(_try, [work] * len(sources), sources)):
            if isinstance(outcome, Exception):
                failures += 1
                print(f"skipped {source}: {outcome}", file=sys.stderr)
            else:
                rows.append(outcome)

    if not rows:
        print("error: every conversion failed", file=sys.stderr)
        return 2
    _write_manifest(args.manifest, rows)
    print(f"converted {len(rows)}/{len(sources)} file(s) -> {args.manifest}")
    return 0 if failures == 0 else 1


def _try(fn, arg):
    try:
        return fn(arg)
    except GocomaError as exc:
        return exc


if __name__ == "__main__":
    sys.exit(main())
