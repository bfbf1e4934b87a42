"""Precomputed-embedding sidecar files: JSONL with a header record.

Header: ``{"type":"header","model":str,"dim":int,"granularity":"sentence"|"token"}``.
Records: ``{"pair_id":str,"side":"A"|"B","vector":[...]}``, plus ``token_index``
for token granularity. Floats are written at 9 significant digits, which
round-trips float32 encoder outputs exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import Dataset, SIDES, TokenAnnotation
from .errors import ConfigError, DataError
from .textstats import ContentFilter
from .wordvec import SentenceEmbedding, cosine, select_annotation_indices

GRANULARITIES = ("sentence", "token")


@dataclass(frozen=True)
class EmbeddingRecord:
    pair_id: str
    side: str
    vector: tuple[float, ...]
    model: str
    token_index: int | None = None


@dataclass
class EmbeddingStore:
    model: str
    dim: int
    granularity: str = "sentence"
    sentence_vectors: dict[tuple[str, str], np.ndarray] = field(default_factory=dict)
    token_vectors: dict[tuple[str, str], dict[int, np.ndarray]] = field(default_factory=dict)

    def __len__(self):
        if self.granularity == "sentence":
            return len(self.sentence_vectors)
        return sum(len(v) for v in self.token_vectors.values())

    def has(self, pair_id: str, side: str) -> bool:
        key = (pair_id, side)
        return key in self.sentence_vectors or key in self.token_vectors

    def vector(self, pair_id: str, side: str) -> np.ndarray:
        """Side vector; for token granularity, the mean over all token vectors."""
        key = (pair_id, side)
        if self.granularity == "sentence":
            if key not in self.sentence_vectors:
                raise DataError(f"store {self.model!r}: no embedding for pair {pair_id!r} side {side}")
            return self.sentence_vectors[key]
        if key not in self.token_vectors:
            raise DataError(f"store {self.model!r}: no embedding for pair {pair_id!r} side {side}")
        toks = self.token_vectors[key]
        return np.mean([toks[i] for i in sorted(toks)], axis=0)

    def missing_for(self, dataset: Dataset) -> list[tuple[str, str]]:
        return [
            (p.pair_id, side)
            for p in dataset
            for side in SIDES
            if not self.has(p.pair_id, side)
        ]


def load_embeddings(path: str | Path) -> EmbeddingStore:
    """Load and validate a sidecar file; duplicates and dim mismatches error."""
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        header_line = fh.readline()
        try:
            header = json.loads(header_line)
        except json.JSONDecodeError:
            raise DataError(f"{path.name}: first line is not valid JSON") from None
        if not isinstance(header, dict) or header.get("type") != "header":
            raise DataError(f"{path.name}: first line must be a header record")
        model = header.get("model")
        dim = header.get("dim")
        granularity = header.get("granularity", "sentence")
        if not isinstance(model, str) or not isinstance(dim, int) or dim <= 0:
            raise DataError(f"{path.name}: header needs a model string and a positive dim")
        if granularity not in GRANULARITIES:
            raise DataError(f"{path.name}: unknown granularity {granularity!r}")
        store = EmbeddingStore(model=model, dim=dim, granularity=granularity)
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError:
                raise DataError(f"{path.name} line {lineno}: invalid JSON") from None
            pair_id = rec.get("pair_id")
            side = rec.get("side")
            vector = rec.get("vector")
            if not isinstance(pair_id, str) or side not in SIDES or not isinstance(vector, list):
                raise DataError(f"{path.name} line {lineno}: record needs pair_id, side, vector")
            if len(vector) != dim:
                raise DataError(
                    f"{path.name} line {lineno}: pair {pair_id!r} side {side} has "
                    f"{len(vector)} values, header dim is {dim}"
                )
            vec = np.array(vector, dtype=np.float64)
            key = (pair_id, side)
            if granularity == "sentence":
                if "token_index" in rec:
                    raise DataError(
                        f"{path.name} line {lineno}: token_index not allowed at sentence granularity"
                    )
                if key in store.sentence_vectors:
                    raise DataError(
                        f"{path.name} line {lineno}: duplicate record for pair {pair_id!r} side {side}"
                    )
                store.sentence_vectors[key] = vec
            else:
                token_index = rec.get("token_index")
                if not isinstance(token_index, int) or token_index < 0:
                    raise DataError(
                        f"{path.name} line {lineno}: token granularity needs token_index >= 0"
                    )
                toks = store.token_vectors.setdefault(key, {})
                if token_index in toks:
                    raise DataError(
                        f"{path.name} line {lineno}: duplicate token {token_index} for "
                        f"pair {pair_id!r} side {side}"
                    )
                toks[token_index] = vec
    return store


def format_float(x: float) -> float:
    """Round to 9 significant decimal digits (idempotent under re-parsing)."""
    return float(f"{x:.9g}")


def write_embeddings(store: EmbeddingStore, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        header = {
            "type": "header",
            "model": store.model,
            "dim": store.dim,
            "granularity": store.granularity,
        }
        fh.write(json.dumps(header, separators=(",", ":")) + "\n")
        if store.granularity == "sentence":
            for (pair_id, side), vec in store.sentence_vectors.items():
                rec = {
                    "pair_id": pair_id,
                    "side": side,
                    "vector": [format_float(v) for v in vec],
                }
                fh.write(json.dumps(rec, separators=(",", ":")) + "\n")
        else:
            for (pair_id, side), toks in store.token_vectors.items():
                for token_index in sorted(toks):
                    rec = {
                        "pair_id": pair_id,
                        "side": side,
                        "token_index": token_index,
                        "vector": [format_float(v) for v in toks[token_index]],
                    }
                    fh.write(json.dumps(rec, separators=(",", ":")) + "\n")


def pair_cosine(store: EmbeddingStore, pair_id: str) -> float:
    """Cosine of the side-A and side-B vectors of one pair."""
    return cosine(store.vector(pair_id, "A"), store.vector(pair_id, "B"))


def mean_token_embedding(
    store: EmbeddingStore,
    pair_id: str,
    side: str,
    selection: str = "all",
    annotations: list[TokenAnnotation] | None = None,
    content_filter: ContentFilter | None = None,
) -> SentenceEmbedding:
    """Mean over a token-granularity store's vectors for the selected tokens.

    Selections other than plain "all" need annotations to know which token
    indices qualify.
    """
    if store.granularity != "token":
        raise ConfigError(f"store {store.model!r} has sentence granularity, not token")
    key = (pair_id, side)
    if key not in store.token_vectors:
        raise DataError(f"store {store.model!r}: no embedding for pair {pair_id!r} side {side}")
    toks = store.token_vectors[key]
    if selection == "all" and annotations is None:
        indices = sorted(toks)
    else:
        if annotations is None:
            raise ConfigError(f"selection {selection!r} on a token store needs annotations")
        indices = select_annotation_indices(annotations, selection, content_filter)
    found = [toks[i] for i in indices if i in toks]
    source = f"{store.model}:{selection}"
    if not found:
        return SentenceEmbedding(np.zeros(store.dim), 0, len(indices), source)
    return SentenceEmbedding(np.mean(found, axis=0), len(found), len(indices), source)
