"""Sentence-pair datasets and their optional token-annotation sidecars.

File formats:
  * native TSV: ``pair_id \\t text_a \\t text_b [\\t score]``, UTF-8, no header.
  * semeval CSV: header ``PairID,Text[,Score]``; the Text field holds both
    sentences joined by the literal two-character sequence backslash-n.
  * annotation TSV: ``pair_id \\t side \\t token_index \\t surface \\t upos
    \\t head_index`` with UD coarse tags and head ``-1`` marking the root.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError, DataError

SIDE_A = "A"
SIDE_B = "B"
SIDES = (SIDE_A, SIDE_B)

# Universal POS coarse tagset.
UPOS_TAGS = frozenset({
    "ADJ", "ADP", "ADV", "AUX", "CCONJ", "DET", "INTJ", "NOUN", "NUM",
    "PART", "PRON", "PROPN", "PUNCT", "SCONJ", "SYM", "VERB", "X",
})

# Open word classes: tokens carrying lexical content.
OPEN_CLASS_UPOS = frozenset({"NOUN", "PROPN", "VERB", "ADJ", "ADV"})
NOUN_UPOS = frozenset({"NOUN", "PROPN"})


@dataclass(frozen=True)
class SentencePair:
    pair_id: str
    text_a: str
    text_b: str
    gold_score: float | None = None

    def __post_init__(self):
        if not self.pair_id:
            raise DataError("pair_id must be non-empty")
        if not self.text_a.strip() or not self.text_b.strip():
            raise DataError(f"pair {self.pair_id!r}: both texts must be non-empty")
        if self.gold_score is not None:
            if not math.isfinite(self.gold_score) or not 0.0 <= self.gold_score <= 1.0:
                raise DataError(
                    f"pair {self.pair_id!r}: gold score {self.gold_score} outside [0, 1]"
                )


@dataclass
class Dataset:
    pairs: list[SentencePair]
    language_tag: str = "eng"
    split_tag: str = ""

    def __post_init__(self):
        seen: set[str] = set()
        for p in self.pairs:
            if p.pair_id in seen:
                raise DataError(f"duplicate pair_id {p.pair_id!r}")
            seen.add(p.pair_id)

    def __iter__(self):
        return iter(self.pairs)

    def __len__(self):
        return len(self.pairs)

    def gold_scores(self) -> dict[str, float]:
        """pair_id -> gold score, for pairs that have one."""
        return {p.pair_id: p.gold_score for p in self.pairs if p.gold_score is not None}


@dataclass(frozen=True)
class TokenAnnotation:
    pair_id: str
    side: str
    token_index: int
    surface: str
    upos: str
    head_index: int


AnnotationMap = dict[tuple[str, str], list[TokenAnnotation]]


def _parse_score(raw: str, lineno: int) -> float:
    try:
        score = float(raw)
    except ValueError:
        raise DataError(f"line {lineno}: cannot parse score {raw!r}") from None
    if not math.isfinite(score) or not 0.0 <= score <= 1.0:
        raise DataError(f"line {lineno}: score {raw!r} outside [0, 1]")
    return score


def _load_native_tsv(path: Path) -> list[SentencePair]:
    pairs = []
    seen: set[str] = set()
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            cols = line.rstrip("\r\n").split("\t")
            if len(cols) not in (3, 4):
                raise DataError(
                    f"line {lineno}: expected 3 or 4 tab-separated columns, got {len(cols)}"
                )
            pair_id, text_a, text_b = cols[0], cols[1], cols[2]
            if pair_id in seen:
                raise DataError(f"line {lineno}: duplicate pair_id {pair_id!r}")
            seen.add(pair_id)
            score = _parse_score(cols[3], lineno) if len(cols) == 4 else None
            try:
                pairs.append(SentencePair(pair_id, text_a, text_b, score))
            except DataError as exc:
                raise DataError(f"line {lineno}: {exc}") from None
    return pairs


def _load_semeval_csv(path: Path) -> list[SentencePair]:
    pairs = []
    seen: set[str] = set()
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or not header or header[0].strip().lower() != "pairid":
            raise DataError("semeval_csv file must start with a PairID,Text[,Score] header")
        for row in reader:
            lineno = reader.line_num
            if not row:
                continue
            if len(row) not in (2, 3):
                raise DataError(f"line {lineno}: expected 2 or 3 CSV columns, got {len(row)}")
            pair_id, text = row[0], row[1]
            if pair_id in seen:
                raise DataError(f"line {lineno}: duplicate pair_id {pair_id!r}")
            seen.add(pair_id)
            if "\\n" not in text:
                raise DataError(
                    f"line {lineno}: Text field lacks the backslash-n sentence separator"
                )
            text_a, text_b = text.split("\\n", 1)
            score = _parse_score(row[2], lineno) if len(row) == 3 else None
            try:
                pairs.append(SentencePair(pair_id, text_a, text_b, score))
            except DataError as exc:
                raise DataError(f"line {lineno}: {exc}") from None
    return pairs


def load_dataset(
    path: str | Path,
    format: str = "native_tsv",
    language_tag: str = "eng",
    split_tag: str = "",
) -> Dataset:
    """Load a sentence-pair dataset; see module docstring for the formats."""
    path = Path(path)
    if format == "native_tsv":
        pairs = _load_native_tsv(path)
    elif format == "semeval_csv":
        pairs = _load_semeval_csv(path)
    else:
        raise ConfigError(f"unknown dataset format {format!r}")
    return Dataset(pairs, language_tag=language_tag, split_tag=split_tag)


def write_dataset(dataset: Dataset, path: str | Path) -> None:
    """Write in native TSV; reloading yields an equal dataset."""
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        for p in dataset:
            for text in (p.text_a, p.text_b):
                if "\t" in text or "\n" in text:
                    raise DataError(
                        f"pair {p.pair_id!r}: text contains tab or newline, not writable as TSV"
                    )
            cols = [p.pair_id, p.text_a, p.text_b]
            if p.gold_score is not None:
                cols.append(repr(p.gold_score))
            fh.write("\t".join(cols) + "\n")


def _check_sentence(key: tuple[str, str], anns: list[TokenAnnotation]) -> list[TokenAnnotation]:
    pair_id, side = key
    where = f"pair {pair_id!r} side {side}"
    anns = sorted(anns, key=lambda a: a.token_index)
    n = len(anns)
    indices = [a.token_index for a in anns]
    if indices != list(range(n)):
        raise DataError(f"{where}: token_index values must be 0..{n - 1} with no gaps")
    roots = [a.token_index for a in anns if a.head_index == -1]
    if not roots:
        raise DataError(f"{where}: no root (no token with head_index -1)")
    if len(roots) > 1:
        raise DataError(f"{where}: multiple roots at token_index {roots}")
    for a in anns:
        if a.head_index != -1 and not 0 <= a.head_index < n:
            raise DataError(f"{where}: head_index {a.head_index} out of range")
        if a.head_index == a.token_index:
            raise DataError(f"{where}: token {a.token_index} is its own head")
    return anns


def load_annotations(path: str | Path) -> AnnotationMap:
    """Load the per-token annotation sidecar, validated per sentence."""
    grouped: AnnotationMap = {}
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            cols = line.rstrip("\r\n").split("\t")
            if len(cols) != 6:
                raise DataError(f"line {lineno}: expected 6 columns, got {len(cols)}")
            pair_id, side, tok_idx, surface, upos, head_idx = cols
            if side not in SIDES:
                raise DataError(f"line {lineno}: side must be A or B, got {side!r}")
            if upos not in UPOS_TAGS:
                raise DataError(f"line {lineno}: unknown UPOS tag {upos!r}")
            try:
                token_index = int(tok_idx)
                head_index = int(head_idx)
            except ValueError:
                raise DataError(f"line {lineno}: token_index/head_index must be integers") from None
            if token_index < 0:
                raise DataError(f"line {lineno}: token_index must be >= 0")
            grouped.setdefault((pair_id, side), []).append(
                TokenAnnotation(pair_id, side, token_index, surface, upos, head_index)
            )
    return {key: _check_sentence(key, anns) for key, anns in grouped.items()}
