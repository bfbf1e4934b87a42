"""Batched embedding export from pretrained encoders to sidecar JSONL.

The sidecar format: a JSON header line carrying model string, dimension,
and granularity, then one record per (pair, side) for sentence granularity
or one per whitespace word for token granularity, each with a vector
serialized at 9 significant digits.  Records follow dataset order, side A
before side B.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

POOLINGS = ("mean", "cls", "encoder_default")
GRANULARITIES = ("sentence", "token")


class ExportError(RuntimeError):
    """Any condition that must abort the export with a nonzero exit."""


def format_float(x: float) -> float:
    """Round to 9 significant digits, the sidecar serialization precision."""
    return float(f"{float(x):.9g}")


@dataclass(frozen=True)
class ExportJob:
    """One export run: which encoder, how to pool, where to write.

    layer indexes the encoder's hidden-state stack: 0 is the input-embedding
    layer output, positive values count transformer layers from there, and
    -1 is the final hidden layer.
    """

    model: str
    dataset: str
    out: str
    pooling: str = "encoder_default"
    granularity: str = "sentence"
    layer: int = -1
    batch_size: int = 8

    def __post_init__(self):
        if self.pooling not in POOLINGS:
            raise ExportError(f"pooling must be one of {POOLINGS}, got {self.pooling!r}")
        if self.granularity not in GRANULARITIES:
            raise ExportError(
                f"granularity must be one of {GRANULARITIES}, got {self.granularity!r}"
            )
        if self.granularity == "token" and self.resolved_pooling != "mean":
            raise ExportError("token granularity merges subwords by mean; use mean pooling")
        if self.batch_size < 1:
            raise ExportError(f"batch size must be >= 1, got {self.batch_size}")

    @property
    def resolved_pooling(self) -> str:
        """encoder_default resolves to the encoder's documented pooling;
        for the supported encoders that is mean pooling."""
        return "mean" if self.pooling == "encoder_default" else self.pooling

    @property
    def header_model(self) -> str:
        return f"{self.model}#pooling={self.resolved_pooling}#layer={self.layer}"


def read_pairs(path: str | Path) -> list[tuple[str, str, str]]:
    """Native TSV: pair_id, text_a, text_b, optional score (ignored here)."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ExportError(f"cannot read dataset {path}: {e}") from e
    pairs = []
    seen: set[str] = set()
    for lineno, line in enumerate(text.splitlines(), start=1):
        cols = line.split("\t")
        if len(cols) not in (3, 4):
            raise ExportError(
                f"{path}:{lineno}: expected 3 or 4 tab-separated columns, got {len(cols)}"
            )
        pair_id, text_a, text_b = cols[0], cols[1], cols[2]
        if not pair_id or not text_a.strip() or not text_b.strip():
            raise ExportError(f"{path}:{lineno}: pair_id and both texts must be non-empty")
        if pair_id in seen:
            raise ExportError(f"{path}:{lineno}: duplicate pair_id {pair_id!r}")
        seen.add(pair_id)
        pairs.append((pair_id, text_a, text_b))
    if not pairs:
        raise ExportError(f"dataset {path} is empty")
    return pairs


def render_lines(header_model: str, granularity: str, records: list[dict]) -> list[str]:
    """Serialize records under one header; every vector must share one dim."""
    if not records:
        raise ExportError("no records to write")
    dim = len(records[0]["vector"])
    lines = [
        json.dumps(
            {"type": "header", "model": header_model, "dim": dim, "granularity": granularity},
            separators=(",", ":"),
        )
    ]
    for rec in records:
        if len(rec["vector"]) != dim:
            raise ExportError(
                f"dimension drift: pair {rec['pair_id']!r} side {rec['side']} "
                f"produced {len(rec['vector'])} values, header dim is {dim}"
            )
        out = {"pair_id": rec["pair_id"], "side": rec["side"]}
        if granularity == "token":
            out["token_index"] = rec["token_index"]
        out["vector"] = [format_float(v) for v in rec["vector"]]
        lines.append(json.dumps(out, separators=(",", ":")))
    return lines


def _hidden_states(model, enc, layer: int) -> np.ndarray:
    out = model(**enc, output_hidden_states=True)
    stack = out.hidden_states
    n = len(stack)
    if not -n <= layer < n:
        raise ExportError(f"layer {layer} outside [{-n}, {n - 1}] for this encoder")
    return stack[layer].cpu().numpy().astype(np.float64)


def export_embeddings(job: ExportJob) -> int:
    """Run the job; returns the number of vector records written."""
    import torch
    from transformers import AutoModel, AutoTokenizer

    try:
        tokenizer = AutoTokenizer.from_pretrained(job.model)
        model = AutoModel.from_pretrained(job.model)
    except Exception as e:
        raise ExportError(f"cannot load encoder {job.model!r}: {e}") from e
    model.eval()

    pairs = read_pairs(job.dataset)
    items = [
        (pair_id, side, text)
        for pair_id, text_a, text_b in pairs
        for side, text in (("A", text_a), ("B", text_b))
    ]

    records: list[dict] = []
    dim: int | None = None
    with torch.no_grad():
        for start in range(0, len(items), job.batch_size):
            batch = items[start : start + job.batch_size]
            if job.granularity == "token":
                words = [text.split() for _, _, text in batch]
                enc = tokenizer(
                    words,
                    is_split_into_words=True,
                    padding=True,
                    truncation=True,
                    return_tensors="pt",
                )
            else:
                enc = tokenizer(
                    [text for _, _, text in batch],
                    padding=True,
                    truncation=True,
                    return_tensors="pt",
                    return_special_tokens_mask=True,
                )
            special = enc.pop("special_tokens_mask", None)
            H = _hidden_states(model, enc, job.layer)
            attention = enc["attention_mask"].cpu().numpy().astype(bool)
            is_special = special.cpu().numpy().astype(bool) if special is not None else None

            for i, (pair_id, side, text) in enumerate(batch):
                if job.granularity == "sentence":
                    if job.resolved_pooling == "cls":
                        vec = H[i, 0]
                    else:
                        keep = attention[i] & ~is_special[i]
                        rows = H[i][keep]
                        if rows.size == 0:
                            raise ExportError(
                                f"pair {pair_id!r} side {side}: no encodable tokens"
                            )
                        vec = rows.mean(axis=0)
                    if dim is None:
                        dim = len(vec)
                    elif len(vec) != dim:
                        raise ExportError(
                            f"dimension drift at pair {pair_id!r} side {side}: "
                            f"{len(vec)} vs {dim}"
                        )
                    records.append({"pair_id": pair_id, "side": side, "vector": vec})
                else:
                    word_ids = enc.word_ids(batch_index=i)
                    n_words = len(text.split())
                    for w in range(n_words):
                        positions = [p for p, wid in enumerate(word_ids) if wid == w]
                        if not positions:
                            raise ExportError(
                                f"pair {pair_id!r} side {side}: word {w} "
                                "dropped by the tokenizer"
                            )
                        vec = H[i][positions].mean(axis=0)
                        if dim is None:
                            dim = len(vec)
                        elif len(vec) != dim:
                            raise ExportError(
                                f"dimension drift at pair {pair_id!r} side {side}: "
                                f"{len(vec)} vs {dim}"
                            )
                        records.append(
                            {
                                "pair_id": pair_id,
                                "side": side,
                                "token_index": w,
                                "vector": vec,
                            }
                        )

    lines = render_lines(job.header_model, job.granularity, records)
    Path(job.out).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return len(records)
