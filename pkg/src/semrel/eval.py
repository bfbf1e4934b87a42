"""Spearman rank correlation and evaluation reports.

Spearman is the Pearson correlation of average-tie fractional ranks; reports
carry per-system and per-feature correlations plus any degeneracy warnings,
and render as text or JSON.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import Dataset
from .errors import ConfigError, DataError, NumericalError


def average_ranks(values) -> np.ndarray:
    """1-based fractional ranks; tied values share the average of their ranks."""
    a = np.asarray(values, dtype=np.float64)
    n = a.shape[0]
    order = np.argsort(a, kind="mergesort")
    ranks = np.empty(n, dtype=np.float64)
    sorted_vals = a[order]
    i = 0
    while i < n:
        j = i
        while j + 1 < n and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman(x, y) -> float:
    """Spearman's r with average-rank tie handling."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ConfigError(f"spearman: shape mismatch {x.shape} vs {y.shape}")
    if x.shape[0] < 2:
        raise NumericalError("spearman needs at least 2 observations")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise NumericalError("spearman: non-finite values")
    rx = average_ranks(x)
    ry = average_ranks(y)
    dx = rx - rx.mean()
    dy = ry - ry.mean()
    denom = np.sqrt(np.dot(dx, dx) * np.dot(dy, dy))
    if denom == 0.0:
        raise NumericalError("undefined correlation (constant input)")
    return float(np.dot(dx, dy) / denom)


@dataclass
class ScoreEntry:
    name: str
    spearman: float
    n: int


@dataclass
class EvalReport:
    dataset: str
    systems: list[ScoreEntry] = field(default_factory=list)
    features: list[ScoreEntry] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def n_pairs(self) -> int:
        return self.systems[0].n if self.systems else 0

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "systems": [
                {"name": s.name, "spearman": s.spearman, "n": s.n} for s in self.systems
            ],
            "features": [
                {"name": f.name, "spearman": f.spearman} for f in self.features
            ],
            "warnings": list(self.warnings),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def save_json(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    def render_text(self) -> str:
        lines = [f"dataset: {self.dataset}"]
        if self.systems:
            lines.append("systems:")
            for s in self.systems:
                lines.append(f"  {s.name:<24s} spearman={s.spearman:+.4f}  n={s.n}")
        if self.features:
            lines.append("features:")
            for f in self.features:
                lines.append(f"  {f.name:<24s} spearman={f.spearman:+.4f}")
        if self.warnings:
            lines.append("warnings:")
            for w in self.warnings:
                lines.append(f"  - {w}")
        return "\n".join(lines) + "\n"


def evaluate(
    dataset: Dataset,
    predictions: dict[str, float],
    system_name: str = "system",
) -> EvalReport:
    """Spearman of predictions against gold over all gold-scored pairs."""
    warnings: list[str] = []
    gold_pairs = [p for p in dataset if p.gold_score is not None]
    skipped = len(dataset) - len(gold_pairs)
    if skipped:
        warnings.append(f"{skipped} pair(s) without gold score skipped")
    missing = [p.pair_id for p in gold_pairs if p.pair_id not in predictions]
    if missing:
        shown = ", ".join(missing[:10]) + ("..." if len(missing) > 10 else "")
        raise DataError(f"missing predictions for {len(missing)} pair(s): {shown}")
    gold = [p.gold_score for p in gold_pairs]
    pred = [predictions[p.pair_id] for p in gold_pairs]
    if len(gold) < 2:
        raise DataError(f"need at least 2 gold-scored pairs to evaluate, got {len(gold)}")
    tag = dataset.language_tag + (f"/{dataset.split_tag}" if dataset.split_tag else "")
    report = EvalReport(dataset=tag, warnings=warnings)
    report.systems.append(ScoreEntry(system_name, spearman(pred, gold), len(gold)))
    return report
