"""Source-to-artifact drivers plus the normalization fallback.

C/C++ compile to a single object file (compile-only, never linked). Java
compiles to class files; multiple classes are packed into a deterministic
zip (zeroed timestamps, stored entries in lexicographic order). Python uses
py_compile with hash-based pyc invalidation and the bare file name recorded
inside the bytecode, so equal sources give equal bytes regardless of
directory. A missing compiler is an environment error; a failing compile
raises CompilationFailed, which convert_source turns into the fallback:
strip comments, collapse literal strings/chars to the placeholder byte 0x53,
squeeze whitespace runs to single spaces.
"""

from __future__ import annotations

import io
import os
import platform
import py_compile
import re
import shutil
import subprocess
import tempfile
import zipfile
from dataclasses import dataclass
from pathlib import Path

from ..errors import (
    CompilationFailed,
    EmptyArtifactError,
    InvalidInputError,
    ToolchainError,
)

LANGUAGES = ("c", "cpp", "java", "python")
ORIGINS = ("compiled", "fallback-normalized")
_PLACEHOLDER = "S"  # 0x53, stands in for stripped string/char literals


@dataclass(frozen=True)
class BpeaArtifact:
    data: bytes
    origin: str
    source_language: str
    toolchain_record: str = ""

    def __post_init__(self):
        if not isinstance(self.data, (bytes, bytearray)) or len(self.data) == 0:
            raise EmptyArtifactError("artifact byte sequence must be nonempty")
        if self.origin not in ORIGINS:
            raise InvalidInputError(f"origin must be one of {ORIGINS}")
        if self.source_language not in LANGUAGES:
            raise InvalidInputError(f"language must be one of {LANGUAGES}")
        if self.origin == "compiled" and not self.toolchain_record:
            raise InvalidInputError("compiled artifacts need a toolchain_record")


def _require(tool: str) -> str:
    found = shutil.which(tool)
    if found is None:
        raise ToolchainError(f"required compiler {tool!r} not found on PATH")
    return found


def _first_line(text: str) -> str:
    return text.strip().splitlines()[0] if text.strip() else ""


def _tool_version(tool: str, flag: str = "--version") -> str:
    proc = subprocess.run(
        [tool, flag], capture_output=True, text=True, check=False
    )
    return _first_line(proc.stdout) or _first_line(proc.stderr) or tool


def _run(cmd) -> None:
    proc = subprocess.run(cmd, capture_output=True, text=True, check=False)
    if proc.returncode != 0:
        detail = (proc.stderr or proc.stdout).strip()[-800:]
        raise CompilationFailed(f"{cmd[0]} failed: {detail}")


def _record(version: str, flags) -> str:
    return f"{version}; flags: {' '.join(flags) if flags else '(default)'}"


def _compile_cfamily(path, language, extra_flags) -> BpeaArtifact:
    tool = _require("gcc" if language == "c" else "g++")
    with tempfile.TemporaryDirectory() as td:
        obj = os.path.join(td, "out.o")
        _run([tool, "-c", str(path), "-o", obj, *extra_flags])
        data = Path(obj).read_bytes()
    if not data:
        raise CompilationFailed(f"{tool} produced an empty object file")
    record = _record(_tool_version(tool), ["-c", *extra_flags])
    return BpeaArtifact(data, "compiled", language, record)


def _deterministic_zip(entries) -> bytes:
    """entries: {posix name: bytes}; fixed timestamps, sorted, stored."""
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w", zipfile.ZIP_STORED) as zf:
        for name in sorted(entries):
            info = zipfile.ZipInfo(name, date_time=(1980, 1, 1, 0, 0, 0))
            info.external_attr = 0
            zf.writestr(info, entries[name])
    return buf.getvalue()


def _compile_java(path, extra_flags) -> BpeaArtifact:
    tool = _require("javac")
    with tempfile.TemporaryDirectory() as td:
        _run([tool, "-d", td, str(path), *extra_flags])
        classes = sorted(p for p in Path(td).rglob("*.class"))
        if not classes:
            raise CompilationFailed("javac produced no class files")
        if len(classes) == 1:
            data = classes[0].read_bytes()
        else:
            entries = {p.relative_to(td).as_posix(): p.read_bytes() for p in classes}
            data = _deterministic_zip(entries)
    record = _record(_tool_version(tool, "-version"), extra_flags)
    return BpeaArtifact(data, "compiled", "java", record)


def _compile_python(path) -> BpeaArtifact:
    with tempfile.TemporaryDirectory() as td:
        cfile = os.path.join(td, "out.pyc")
        try:
            py_compile.compile(
                str(path),
                cfile=cfile,
                dfile=os.path.basename(str(path)),
                doraise=True,
                invalidation_mode=py_compile.PycInvalidationMode.UNCHECKED_HASH,
            )
        except py_compile.PyCompileError as exc:
            raise CompilationFailed(f"py_compile failed: {exc.msg}") from exc
        data = Path(cfile).read_bytes()
    record = f"python {platform.python_version()} py_compile unchecked-hash"
    return BpeaArtifact(data, "compiled", "python", record)


def compile_source(path, language: str, extra_flags=()) -> BpeaArtifact:
    """Compile one source file; CompilationFailed signals the fallback path."""
    if language not in LANGUAGES:
        raise InvalidInputError(f"language must be one of {LANGUAGES}")
    if not os.path.isfile(str(path)):
        raise InvalidInputError(f"source file not readable: {path}")
    extra_flags = [str(f) for f in extra_flags]
    if language in ("c", "cpp"):
        return _compile_cfamily(path, language, extra_flags)
    if language == "java":
        return _compile_java(path, extra_flags)
    return _compile_python(path)


def _strip_cfamily(text: str) -> str:
    out = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        nxt = text[i + 1] if i + 1 < n else ""
        if ch == "/" and nxt == "/":
            while i < n and text[i] != "\n":
                i += 1
        elif ch == "/" and nxt == "*":
            end = text.find("*/", i + 2)
            i = n if end < 0 else end + 2
            out.append(" ")  # a block comment separates tokens
        elif ch in "\"'":
            out.append(_PLACEHOLDER)
            i += 1
            while i < n:
                if text[i] == "\\":
                    i += 2
                elif text[i] == ch:
                    i += 1
                    break
                else:
                    i += 1
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def _strip_python(text: str) -> str:
    out = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch == "#":
            while i < n and text[i] != "\n":
                i += 1
        elif text.startswith(('"""', "'''"), i):
            quote = text[i : i + 3]
            out.append(_PLACEHOLDER)
            end = text.find(quote, i + 3)
            i = n if end < 0 else end + 3
        elif ch in "\"'":
            out.append(_PLACEHOLDER)
            i += 1
            while i < n:
                if text[i] == "\\":
                    i += 2
                elif text[i] == ch or text[i] == "\n":  # unterminated stops at EOL
                    i += 1
                    break
                else:
                    i += 1
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def normalize_fallback(source_text: str, language: str) -> BpeaArtifact:
    """Comment-free, literal-collapsed, whitespace-squeezed byte rendering."""
    if language not in LANGUAGES:
        raise InvalidInputError(f"language must be one of {LANGUAGES}")
    stripped = (
        _strip_python(source_text)
        if language == "python"
        else _strip_cfamily(source_text)
    )
    collapsed = re.sub(r"\s+", " ", stripped).strip()
    if not collapsed:
        raise EmptyArtifactError("nothing left after normalization")
    return BpeaArtifact(
        collapsed.encode("utf-8"), "fallback-normalized", language
    )


def convert_source(path, language: str, fallback_only: bool = False, extra_flags=()) -> BpeaArtifact:
    """compile_source, or the normalization fallback when compilation fails."""
    if not fallback_only:
        try:
            return compile_source(path, language, extra_flags)
        except CompilationFailed:
            pass
    text = Path(str(path)).read_text(encoding="utf-8", errors="replace")
    return normalize_fallback(text, language)
