"""Experiment orchestration: records, manifests, splits, synthesis, runs."""

from .records import EmbeddingRecord, import_jsonl, read_records, write_records
from .manifest import DatasetManifest, ingest, load_dataset
from .splits import SplitSpec, apply_split, make_splits
from .synth import synth_generate, synth_records
from .experiment import FUSION_MODES, run_experiment
from .report import build_report, load_results

__all__ = [
    "DatasetManifest",
    "EmbeddingRecord",
    "FUSION_MODES",
    "SplitSpec",
    "apply_split",
    "build_report",
    "import_jsonl",
    "ingest",
    "load_dataset",
    "load_results",
    "make_splits",
    "read_records",
    "run_experiment",
    "synth_generate",
    "synth_records",
    "write_records",
]
