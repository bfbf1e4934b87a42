"""Static word-vector tables and sentence embeddings composed as token means.

Selection modes mirror the feature variants: all tokens, content words only,
nouns only, or tokens within the top three levels of the dependency tree.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import NOUN_UPOS, OPEN_CLASS_UPOS, TokenAnnotation
from .errors import ConfigError, DataError, NumericalError
from .textstats import ContentFilter, TokenSet, fold, has_word_token

SELECTIONS = ("all", "content", "noun", "tree_top3")


@dataclass
class VectorTable:
    name: str
    dim: int
    entries: dict[str, np.ndarray]
    duplicate_count: int = 0

    def lookup(self, token: str) -> np.ndarray | None:
        return self.entries.get(fold(token))

    def __len__(self):
        return len(self.entries)


def load_vectors(path: str | Path, name: str | None = None) -> VectorTable:
    """Load a whitespace-separated ``token v1 .. vd`` text table.

    Keys are case-folded to match tokenize; later duplicates win, counted.
    """
    path = Path(path)
    entries: dict[str, np.ndarray] = {}
    dim = 0
    duplicates = 0
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                raise DataError(f"{path.name} line {lineno}: empty row")
            token, raw = parts[0], parts[1:]
            if dim == 0:
                if not raw:
                    raise DataError(f"{path.name} line {lineno}: row has no vector values")
                dim = len(raw)
            elif len(raw) != dim:
                raise DataError(
                    f"{path.name} line {lineno}: expected {dim} values, got {len(raw)}"
                )
            try:
                vec = np.array([float(v) for v in raw], dtype=np.float64)
            except ValueError:
                raise DataError(f"{path.name} line {lineno}: non-numeric vector value") from None
            key = fold(token)
            if key in entries:
                duplicates += 1
            entries[key] = vec
    if not entries:
        raise DataError(f"{path.name}: no vector rows")
    return VectorTable(name or path.stem, dim, entries, duplicate_count=duplicates)


@dataclass
class SentenceEmbedding:
    vector: np.ndarray
    covered_tokens: int
    total_tokens: int
    source: str

    @property
    def valid(self) -> bool:
        return self.covered_tokens > 0


def dependency_depths(annotations: list[TokenAnnotation]) -> dict[int, int]:
    """token_index -> hop count from the root; tokens on cycles are omitted."""
    children: dict[int, list[int]] = {}
    root = -1
    for a in annotations:
        if a.head_index == -1:
            root = a.token_index
        else:
            children.setdefault(a.head_index, []).append(a.token_index)
    depths = {root: 0}
    queue = deque([root])
    while queue:
        node = queue.popleft()
        for child in children.get(node, ()):
            if child not in depths:
                depths[child] = depths[node] + 1
                queue.append(child)
    return depths


def select_annotation_indices(
    annotations: list[TokenAnnotation],
    selection: str,
    content_filter: ContentFilter | None = None,
) -> list[int]:
    """Token indices matching a selection mode; punctuation-only surfaces dropped."""
    wordy = [a for a in annotations if has_word_token(a.surface)]
    if selection == "all":
        kept = wordy
    elif selection == "content":
        kept = [a for a in wordy if a.upos in OPEN_CLASS_UPOS]
    elif selection == "noun":
        kept = [a for a in wordy if a.upos in NOUN_UPOS]
    elif selection == "tree_top3":
        depths = dependency_depths(annotations)
        kept = [a for a in wordy if depths.get(a.token_index, 3) <= 2]
    else:
        raise ConfigError(f"unknown selection mode {selection!r}")
    if selection == "content" and content_filter is not None:
        kept = [a for a in kept if not content_filter.is_function_word(a.surface)]
    return [a.token_index for a in kept]


def _candidate_tokens(
    tokens: TokenSet,
    selection: str,
    annotations: list[TokenAnnotation] | None,
    content_filter: ContentFilter | None,
) -> list[str]:
    if selection == "all":
        return list(tokens.tokens)
    if selection == "content":
        if annotations is not None:
            idx = select_annotation_indices(annotations, "content")
            surfaces = {a.token_index: a.surface for a in annotations}
            return [fold(surfaces[i]) for i in idx]
        if content_filter is not None:
            return content_filter.content(tokens.tokens)
        raise ConfigError("selection 'content' needs a ContentFilter or annotations")
    if selection in ("noun", "tree_top3"):
        if annotations is None:
            raise ConfigError(f"selection {selection!r} needs annotations")
        idx = select_annotation_indices(annotations, selection)
        surfaces = {a.token_index: a.surface for a in annotations}
        return [fold(surfaces[i]) for i in idx]
    raise ConfigError(f"unknown selection mode {selection!r}")


def mean_embedding(
    tokens: TokenSet,
    table: VectorTable,
    selection: str = "all",
    annotations: list[TokenAnnotation] | None = None,
    content_filter: ContentFilter | None = None,
) -> SentenceEmbedding:
    """Arithmetic mean of the vectors of selected tokens found in the table.

    Out-of-vocabulary tokens are skipped and counted; an embedding covering
    zero tokens is flagged invalid (zero vector, ``valid`` False).
    """
    candidates = _candidate_tokens(tokens, selection, annotations, content_filter)
    found = [v for v in (table.lookup(t) for t in candidates) if v is not None]
    source = f"{table.name}:{selection}"
    if not found:
        return SentenceEmbedding(np.zeros(table.dim), 0, len(candidates), source)
    return SentenceEmbedding(
        np.mean(found, axis=0), len(found), len(candidates), source
    )


def cosine(v1: np.ndarray, v2: np.ndarray) -> float:
    """dot(v1, v2) / (|v1| |v2|); zero-norm inputs are an error."""
    v1 = np.asarray(v1, dtype=np.float64)
    v2 = np.asarray(v2, dtype=np.float64)
    if v1.shape != v2.shape:
        raise ConfigError(f"cosine: length mismatch {v1.shape} vs {v2.shape}")
    n1 = np.linalg.norm(v1)
    n2 = np.linalg.norm(v2)
    if n1 == 0.0 or n2 == 0.0:
        raise NumericalError("degenerate vector (zero norm)")
    return float(np.dot(v1, v2) / (n1 * n2))
