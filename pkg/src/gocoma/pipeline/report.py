"""Comparison table over per-fusion results files.

Rows follow the fixed FUSION_MODES order. All inputs must describe the same
dataset (equal dataset digests) and no fusion mode may appear twice;
anything else is a conflict, not something to silently average away.
Accuracy and macro-F1 are percentage points; CV columns show mean +/- std
(population std over the 5 fold values) and stay blank for official splits.
"""

from __future__ import annotations

import json

from ..errors import InvalidInputError
from .experiment import FUSION_MODES


def load_results(paths) -> list:
    out = []
    for path in paths:
        with open(path, "r", encoding="utf-8") as fh:
            out.append(json.load(fh))
    return out


def build_report(results: list) -> tuple:
    """Returns (text, table_dict); both carry the same numbers."""
    if not results:
        raise InvalidInputError("need at least one results dict")

    seen = {}
    digest = results[0].get("dataset_digest")
    for res in results:
        fusion = res.get("fusion")
        if fusion not in FUSION_MODES:
            raise InvalidInputError(f"unknown fusion mode {fusion!r} in results")
        if fusion in seen:
            raise InvalidInputError(
                f"conflicting results: fusion {fusion!r} appears twice"
            )
        if res.get("dataset_digest") != digest:
            raise InvalidInputError(
                "conflicting results: dataset digests differ "
                f"({res.get('dataset_digest')!r} vs {digest!r})"
            )
        seen[fusion] = res

    rows = []
    for fusion in FUSION_MODES:
        if fusion not in seen:
            continue
        res = seen[fusion]
        row = {
            "fusion": fusion,
            "test_accuracy": float(res["test"]["accuracy"]),
            "test_macro_f1": float(res["test"]["macro_f1"]),
            "cv_accuracy_mean": None,
            "cv_accuracy_std": None,
            "cv_macro_f1_mean": None,
            "cv_macro_f1_std": None,
        }
        cv = res.get("cv")
        if cv:
            row["cv_accuracy_mean"] = float(cv["accuracy_mean"])
            row["cv_accuracy_std"] = float(cv["accuracy_std"])
            row["cv_macro_f1_mean"] = float(cv["macro_f1_mean"])
            row["cv_macro_f1_std"] = float(cv["macro_f1_std"])
        rows.append(row)

    table = {
        "dataset_digest": digest,
        "n_classes": results[0].get("n_classes"),
        "rows": rows,
    }
    return _render_text(rows), table


def _cell(mean, std):
    if mean is None:
        return "-"
    return f"{mean:.2f} +/- {std:.2f}"


def _render_text(rows) -> str:
    header = ("method", "test acc", "test macro-F1", "cv acc", "cv macro-F1")
    body = [
        (
            row["fusion"],
            f"{row['test_accuracy']:.2f}",
            f"{row['test_macro_f1']:.2f}",
            _cell(row["cv_accuracy_mean"], row["cv_accuracy_std"]),
            _cell(row["cv_macro_f1_mean"], row["cv_macro_f1_std"]),
        )
        for row in rows
    ]
    widths = [
        max(len(header[i]), *(len(line[i]) for line in body)) if body else len(header[i])
        for i in range(len(header))
    ]
    lines = [
        "  ".join(h.ljust(widths[i]) for i, h in enumerate(header)).rstrip(),
        "  ".join("-" * w for w in widths),
    ]
    for line in body:
        lines.append("  ".join(line[i].ljust(widths[i]) for i in range(len(line))).rstrip())
    return "\n".join(lines) + "\n"
