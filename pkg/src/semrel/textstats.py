"""Surface-level statistical features for sentence pairs.

Three ratios, all in [0, 1]: a normalized character-level edit distance,
word overlap over unique token types, and the same overlap restricted to
content words (closed-class function words filtered out).
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable

from .corpus import OPEN_CLASS_UPOS, SentencePair, TokenAnnotation
from .errors import ConfigError, NumericalError

# Word-ish segments: letters/digits/marks (underscore excluded), allowing
# internal apostrophes so contractions stay single tokens.
_WORD_RE = re.compile(r"[^\W_]+(?:['’][^\W_]+)*", re.UNICODE)


def fold(text: str) -> str:
    """Case-fold and NFC-normalize; the one normalization used everywhere."""
    return unicodedata.normalize("NFC", text.casefold())


@dataclass(frozen=True)
class TokenSet:
    tokens: tuple[str, ...]
    types: frozenset[str]

    def __len__(self):
        return len(self.tokens)


def tokenize(text: str) -> TokenSet:
    """Segment into folded word tokens, dropping punctuation-only runs."""
    tokens = tuple(_WORD_RE.findall(fold(text)))
    return TokenSet(tokens, frozenset(tokens))


def levenshtein(s1: str, s2: str) -> int:
    """Minimum insert/delete/substitute count over NFC scalar values."""
    a = unicodedata.normalize("NFC", s1)
    b = unicodedata.normalize("NFC", s2)
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i] + [0] * len(b)
        for j, cb in enumerate(b, start=1):
            cur[j] = min(
                prev[j] + 1,
                cur[j - 1] + 1,
                prev[j - 1] + (ca != cb),
            )
        prev = cur
    return prev[-1]


def char_distance_ratio(pair: SentencePair) -> float:
    """(len1 + len2 - dist) / (len1 + len2) on the folded raw texts.

    Lengths count Unicode scalar values including whitespace.
    """
    a = fold(pair.text_a)
    b = fold(pair.text_b)
    total = len(a) + len(b)
    if total == 0:
        raise NumericalError(f"pair {pair.pair_id!r}: undefined ratio (both texts empty)")
    return (total - levenshtein(a, b)) / total


def word_overlap_ratio(a: TokenSet, b: TokenSet) -> float:
    """|types(a) & types(b)| / |types(a) | types(b)|."""
    union = a.types | b.types
    if not union:
        raise NumericalError("undefined ratio (no tokens on either side)")
    return len(a.types & b.types) / len(union)


class ContentFilter:
    """Closed-class function-word lexicon used to keep content words only."""

    def __init__(self, function_words: Iterable[str], name: str = "custom"):
        self.name = name
        self._words = frozenset(fold(w) for w in function_words)

    def __len__(self):
        return len(self._words)

    def is_function_word(self, token: str) -> bool:
        return fold(token) in self._words

    def content(self, tokens: Iterable[str]) -> list[str]:
        return [t for t in tokens if fold(t) not in self._words]

    def filter_token_set(self, ts: TokenSet) -> TokenSet:
        kept = tuple(self.content(ts.tokens))
        return TokenSet(kept, frozenset(kept))

    @classmethod
    def from_file(cls, path: str | Path) -> "ContentFilter":
        """One token per line, UTF-8; '#' starts a comment line."""
        words = []
        with Path(path).open(encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line and not line.startswith("#"):
                    words.append(line)
        return cls(words, name=Path(path).stem)

    @classmethod
    def for_language(cls, language_tag: str) -> "ContentFilter":
        """Built-in list for a language tag (eng, esp, hin)."""
        res = resources.files("semrel").joinpath(f"data/function_words/{language_tag}.txt")
        if not res.is_file():
            available = sorted(
                p.name.removesuffix(".txt")
                for p in resources.files("semrel").joinpath("data/function_words").iterdir()
            )
            raise ConfigError(
                f"no built-in function-word list for {language_tag!r}; available: {available}"
            )
        words = [
            line.strip()
            for line in res.read_text(encoding="utf-8").splitlines()
            if line.strip() and not line.startswith("#")
        ]
        return cls(words, name=language_tag)


def content_overlap_with_fallback(
    a: TokenSet, b: TokenSet, filter: ContentFilter
) -> tuple[float, bool]:
    """Overlap of content tokens; falls back to the unfiltered ratio (flagged)
    when filtering empties both sides."""
    fa = filter.filter_token_set(a)
    fb = filter.filter_token_set(b)
    if not (fa.types | fb.types):
        return word_overlap_ratio(a, b), True
    return word_overlap_ratio(fa, fb), False


def content_overlap_ratio(a: TokenSet, b: TokenSet, filter: ContentFilter) -> float:
    return content_overlap_with_fallback(a, b, filter)[0]


def content_tokens_from_annotations(annotations: list[TokenAnnotation]) -> TokenSet:
    """POS-based content selection: open-class tokens, folded, punctuation dropped."""
    kept = tuple(
        fold(a.surface)
        for a in annotations
        if a.upos in OPEN_CLASS_UPOS and _WORD_RE.search(fold(a.surface))
    )
    return TokenSet(kept, frozenset(kept))


@dataclass(frozen=True)
class StatFeatures:
    char_distance_ratio: float
    word_overlap_ratio: float
    content_overlap_ratio: float
    content_fallback: bool = False


def stat_features(pair: SentencePair, filter: ContentFilter) -> StatFeatures:
    """All three ratios for one pair; content_fallback marks the degenerate case."""
    a = tokenize(pair.text_a)
    b = tokenize(pair.text_b)
    content, fell_back = content_overlap_with_fallback(a, b, filter)
    return StatFeatures(
        char_distance_ratio=char_distance_ratio(pair),
        word_overlap_ratio=word_overlap_ratio(a, b),
        content_overlap_ratio=content,
        content_fallback=fell_back,
    )


def has_word_token(text: str) -> bool:
    """True when tokenize(text) would yield at least one token."""
    return _WORD_RE.search(fold(text)) is not None
