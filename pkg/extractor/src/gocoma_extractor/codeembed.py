"""Frozen code-model embeddings.

Two loading modes. ``pretrained=True`` pulls the registry checkpoint
from the hub and its tokenizer. ``pretrained=False`` builds a randomly
initialized two-layer model with the same hidden width from a config
plus a byte-level tokenizer, so every downstream shape and file format
is exercised without network access or multi-GB weights; dimensions
match the registry either way because they depend only on hidden width
and pooling, not depth.
"""

from __future__ import annotations

import json
import logging

import numpy as np
import torch

from .records import MODALITY_CODE, write_embeddings
from .registry import ModelSpec, code_spec

logger = logging.getLogger("gocoma_extractor")


class ByteTokenizer:
    """Offline fallback: UTF-8 bytes shifted past pad/bos/eos/unk."""

    pad_id, bos_id, eos_id = 0, 1, 2
    vocab_size = 260

    def __call__(self, texts, max_length: int):
        rows = []
        for text in texts:
            body = text.encode("utf-8")[: max_length - 2]
            rows.append([self.bos_id] + [4 + b for b in body] + [self.eos_id])
        width = max(len(r) for r in rows)
        ids = torch.full((len(rows), width), self.pad_id, dtype=torch.long)
        mask = torch.zeros((len(rows), width), dtype=torch.long)
        for i, row in enumerate(rows):
            ids[i, : len(row)] = torch.tensor(row, dtype=torch.long)
            mask[i, : len(row)] = 1
        return {"input_ids": ids, "attention_mask": mask}


def _small_model(spec: ModelSpec):
    # same hidden width as the real checkpoint, two layers
    if spec.name in ("codebert", "unixcoder"):
        from transformers import RobertaConfig, RobertaModel

        return RobertaModel(
            RobertaConfig(
                hidden_size=768,
                num_hidden_layers=2,
                num_attention_heads=12,
                intermediate_size=1024,
                vocab_size=ByteTokenizer.vocab_size,
                max_position_embeddings=1030,
                type_vocab_size=1,
                pad_token_id=ByteTokenizer.pad_id,
            )
        )
    if spec.name == "codet5p":
        from transformers import T5Config, T5EncoderModel

        return T5EncoderModel(
            T5Config(
                d_model=768,
                num_layers=2,
                num_heads=12,
                d_ff=1024,
                vocab_size=ByteTokenizer.vocab_size,
            )
        )
    if spec.name == "qwen25coder":
        from transformers import Qwen2Config, Qwen2Model

        return Qwen2Model(
            Qwen2Config(
                hidden_size=2048,
                num_hidden_layers=2,
                num_attention_heads=16,
                num_key_value_heads=16,
                intermediate_size=2048,
                vocab_size=ByteTokenizer.vocab_size,
                pad_token_id=ByteTokenizer.pad_id,
            )
        )
    raise KeyError(spec.name)


def load_code_model(name: str, pretrained: bool = True, revision: str = "main", seed: int = 0):
    """Return (tokenizer, model, revision tag); model frozen in eval mode."""
    spec = code_spec(name)
    if pretrained:
        from transformers import AutoModel, AutoTokenizer

        tokenizer = AutoTokenizer.from_pretrained(spec.source, revision=revision)
        if spec.name == "codet5p":
            from transformers import T5EncoderModel

            model = T5EncoderModel.from_pretrained(spec.source, revision=revision)
        else:
            model = AutoModel.from_pretrained(spec.source, revision=revision)
        tag = revision
    else:
        torch.manual_seed(seed)
        tokenizer = ByteTokenizer()
        model = _small_model(spec)
        tag = f"random-init-seed-{seed}"
    model.eval()
    for p in model.parameters():
        p.requires_grad_(False)
    return tokenizer, model, tag


def _pool(hidden: torch.Tensor, mask: torch.Tensor, pooling: str) -> torch.Tensor:
    if pooling == "cls":
        return hidden[:, 0]
    if pooling == "last-token":
        last = mask.sum(dim=1) - 1
        return hidden[torch.arange(hidden.shape[0]), last]
    if pooling == "concat-first-mean-max":
        m = mask.unsqueeze(-1).to(hidden.dtype)
        mean = (hidden * m).sum(dim=1) / m.sum(dim=1).clamp(min=1.0)
        maxed = hidden.masked_fill(m == 0, float("-inf")).max(dim=1).values
        return torch.cat([hidden[:, 0], mean, maxed], dim=-1)
    raise ValueError(f"unknown pooling {pooling!r}")


def _encode(tokenizer, texts, max_length: int):
    if isinstance(tokenizer, ByteTokenizer):
        return tokenizer(texts, max_length)
    return tokenizer(
        list(texts),
        max_length=max_length,
        truncation=True,
        padding=True,
        return_tensors="pt",
    )


def write_sidecar(out_path, spec: ModelSpec, revision: str, pretrained: bool,
                  modality: str, dim: int, **extra) -> None:
    meta = {
        "model_id": spec.source,
        "revision": revision,
        "pooling": spec.pooling,
        "resize_policy": extra.pop("resize_policy", None),
        "dim": dim,
        "pretrained": pretrained,
        "modality": modality,
    }
    meta.update(extra)
    with open(f"{out_path}.meta.json", "w", encoding="utf-8") as fh:
        fh.write(json.dumps(meta, sort_keys=True, indent=2) + "\n")


def extract_code(
    items,
    model_name: str,
    out_path,
    labels: dict | None = None,
    default_label: int = 0,
    pretrained: bool = True,
    revision: str = "main",
    batch_size: int = 8,
    max_length: int = 512,
    token_level: bool = False,
    seed: int = 0,
) -> int:
    """Embed (id, source text) items into an EMBR0001 file plus sidecar.

    Pooled output (T=1) is the default; token_level keeps the per-token
    hidden states (so d is the native hidden width, not the pooled one).
    """
    items = list(items)
    if not items:
        raise ValueError("no code inputs to extract")
    spec = code_spec(model_name)
    tokenizer, model, tag = load_code_model(
        model_name, pretrained=pretrained, revision=revision, seed=seed
    )
    labels = labels or {}

    truncated = 0
    rows = []
    for start in range(0, len(items), batch_size):
        chunk = items[start : start + batch_size]
        enc = _encode(tokenizer, [text for _, text in chunk], max_length)
        ids, mask = enc["input_ids"], enc["attention_mask"]
        with torch.no_grad():
            hidden = model(input_ids=ids, attention_mask=mask).last_hidden_state
        for i, (rec_id, text) in enumerate(chunk):
            n_tok = int(mask[i].sum())
            if len(text.encode("utf-8")) + 2 > max_length:
                truncated += 1
            if token_level:
                vec = hidden[i, :n_tok].numpy()
            else:
                vec = _pool(hidden[i : i + 1], mask[i : i + 1], spec.pooling)[0]
                vec = vec.numpy()[None, :]
                if vec.shape[1] != spec.dim:
                    raise RuntimeError(
                        f"{model_name}: pooled dim {vec.shape[1]} != registry {spec.dim}"
                    )
            label = int(labels.get(rec_id, default_label))
            rows.append((rec_id, label, MODALITY_CODE, np.asarray(vec, np.float32)))

    if truncated:
        logger.warning("truncated %d/%d inputs to max_length=%d", truncated, len(items), max_length)
    n = write_embeddings(out_path, rows)
    write_sidecar(
        out_path, spec, tag, pretrained, "code",
        int(rows[0][3].shape[1]),
        truncation=f"max-length-{max_length}",
        token_level=token_level,
    )
    return n
