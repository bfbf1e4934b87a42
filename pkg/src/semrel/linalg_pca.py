"""Full-rank PCA used as an unsupervised coordinate change for embeddings.

Fit is mean-centered SVD of the data matrix; no whitening, no dimension
reduction by default (k = min(d, n)). Component signs are fixed so each
axis's largest-magnitude coordinate is positive, keeping persisted models
byte-stable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, NumericalError


def _round12(x: float) -> float:
    return float(f"{x:.12g}")


@dataclass
class PcaModel:
    mean: np.ndarray                 # (d,)
    components: np.ndarray           # (k, d), orthonormal rows
    explained_variance: np.ndarray   # (k,), non-increasing, ddof=1

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    @property
    def k(self) -> int:
        return self.components.shape[0]

    def transform(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=np.float64)
        if v.shape != (self.dim,):
            raise ConfigError(f"transform: expected length {self.dim}, got {v.shape}")
        return self.components @ (v - self.mean)

    def transform_many(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.dim:
            raise ConfigError(f"transform_many: expected (*, {self.dim}), got {X.shape}")
        return (X - self.mean) @ self.components.T

    def to_dict(self) -> dict:
        return {
            "mean": [_round12(v) for v in self.mean],
            "components": [[_round12(v) for v in row] for row in self.components],
            "explained_variance": [_round12(v) for v in self.explained_variance],
        }

    def save(self, path: str | Path) -> None:
        with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
            json.dump(self.to_dict(), fh)
            fh.write("\n")

    @classmethod
    def from_dict(cls, d: dict) -> "PcaModel":
        try:
            model = cls(
                mean=np.array(d["mean"], dtype=np.float64),
                components=np.array(d["components"], dtype=np.float64),
                explained_variance=np.array(d["explained_variance"], dtype=np.float64),
            )
        except (KeyError, TypeError, ValueError):
            raise ConfigError("invalid PCA model JSON") from None
        if model.components.ndim != 2 or model.components.shape[1] != model.dim:
            raise ConfigError("PCA model: components shape does not match mean length")
        return model

    @classmethod
    def load(cls, path: str | Path) -> "PcaModel":
        try:
            d = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read PCA model {path}: {e}") from None
        return cls.from_dict(d)


def fit_pca(vectors, k: int | None = None) -> PcaModel:
    """Fit mean-centered PCA by SVD; deterministic via the sign convention.

    k defaults to min(d, n): a pure rotation of the centered space.
    """
    X = np.asarray(vectors, dtype=np.float64)
    if X.ndim != 2:
        raise ConfigError(f"fit_pca: expected a 2-D array of vectors, got shape {X.shape}")
    n, d = X.shape
    if n < 2:
        raise NumericalError(f"fit_pca needs at least 2 vectors, got {n}")
    if not np.all(np.isfinite(X)):
        raise NumericalError("fit_pca: non-finite input values")
    max_k = min(d, n)
    if k is None:
        k = max_k
    elif not 1 <= k <= max_k:
        raise ConfigError(f"k={k} outside [1, min(d={d}, n={n})]")
    mean = X.mean(axis=0)
    _, s, vt = np.linalg.svd(X - mean, full_matrices=False)
    components = vt[:k].copy()
    explained = (s[:k] ** 2) / (n - 1)
    for row in components:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1.0
    return PcaModel(mean=mean, components=components, explained_variance=explained)
