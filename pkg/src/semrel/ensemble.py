"""Feature assembly and score combination for sentence pairs.

A FeatureManifest names an ordered set of pair features (edit-distance ratio,
word/content overlap, mean-vector cosines, precomputed-embedding cosines,
optionally rotated by a fitted PCA).  Features are combined either by an
epsilon-SVR with RBF kernel trained on gold scores (supervised) or by the
plain arithmetic mean of the positively oriented values (unsupervised).

The SVR dual is solved by a pairwise coordinate (SMO-style) method on the
2n-variable box problem; it is deterministic and order-independent within
the stated tolerance.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import Dataset, SentencePair, SIDE_A, AnnotationMap
from .embedstore import EmbeddingStore, mean_token_embedding
from .errors import ConfigError, DataError, NumericalError
from .eval import spearman
from .linalg_pca import PcaModel, fit_pca
from .textstats import (
    ContentFilter,
    char_distance_ratio,
    content_overlap_with_fallback,
    tokenize,
    word_overlap_ratio,
)
from .wordvec import VectorTable, cosine, mean_embedding

KINDS = (
    "stat_char_ratio",
    "stat_word_overlap",
    "stat_content_overlap",
    "wordvec_cosine",
    "embed_cosine",
)
COSINE_KINDS = frozenset({"wordvec_cosine", "embed_cosine"})

MODE_SUPERVISED = "supervised_svr"
MODE_UNSUPERVISED = "unsupervised_mean"
MODES = (MODE_SUPERVISED, MODE_UNSUPERVISED)

DEFAULT_SEED = 42

# Solver acceptance bound on the KKT violation; fit_svr iterates to a much
# tighter default tolerance so retrained models agree run to run.
KKT_LIMIT = 1e-3


@dataclass(frozen=True)
class FeatureSpec:
    """One feature column: what to compute and from which resource."""

    name: str
    kind: str
    source: str | None = None
    selection: str = "all"
    pca: bool = False

    def __post_init__(self):
        if not self.name:
            raise ConfigError("feature name must be non-empty")
        if self.kind not in KINDS:
            raise ConfigError(f"feature {self.name!r}: unknown kind {self.kind!r}")
        if self.kind in COSINE_KINDS:
            if not self.source:
                raise ConfigError(f"feature {self.name!r}: kind {self.kind} needs a source name")
        else:
            if self.source is not None:
                raise ConfigError(f"feature {self.name!r}: kind {self.kind} takes no source")
            if self.pca:
                raise ConfigError(f"feature {self.name!r}: pca applies to cosine kinds only")
            if self.selection != "all":
                raise ConfigError(f"feature {self.name!r}: selection applies to cosine kinds only")

    def to_dict(self) -> dict:
        d = {"name": self.name, "kind": self.kind}
        if self.source is not None:
            d["source"] = self.source
        if self.selection != "all":
            d["selection"] = self.selection
        if self.pca:
            d["pca"] = True
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureSpec":
        if not isinstance(d, dict) or "name" not in d or "kind" not in d:
            raise ConfigError(f"invalid feature spec: {d!r}")
        extra = set(d) - {"name", "kind", "source", "selection", "pca"}
        if extra:
            raise ConfigError(f"feature spec has unknown keys: {sorted(extra)}")
        return cls(
            name=d["name"],
            kind=d["kind"],
            source=d.get("source"),
            selection=d.get("selection", "all"),
            pca=bool(d.get("pca", False)),
        )


@dataclass
class FeatureManifest:
    """Ordered feature layout; order defines the feature-vector columns."""

    entries: tuple[FeatureSpec, ...]

    def __post_init__(self):
        self.entries = tuple(self.entries)
        if not self.entries:
            raise ConfigError("manifest has no features")
        names = [e.name for e in self.entries]
        dupes = {n for n in names if names.count(n) > 1}
        if dupes:
            raise ConfigError(f"duplicate feature names: {sorted(dupes)}")

    @property
    def names(self) -> list[str]:
        return [e.name for e in self.entries]

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def to_dict(self) -> dict:
        return {"features": [e.to_dict() for e in self.entries]}

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureManifest":
        if not isinstance(d, dict) or not isinstance(d.get("features"), list):
            raise ConfigError("manifest must be an object with a 'features' list")
        return cls(tuple(FeatureSpec.from_dict(e) for e in d["features"]))

    @classmethod
    def load(cls, path: str | Path) -> "FeatureManifest":
        try:
            d = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read manifest {path}: {e}") from e
        return cls.from_dict(d)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")


PRESETS: dict[str, FeatureManifest] = {
    "supervised-eng": FeatureManifest((
        FeatureSpec("mpnet_cos", "embed_cosine", source="mpnet"),
        FeatureSpec("jina_cos", "embed_cosine", source="jina"),
        FeatureSpec("t5_cos", "embed_cosine", source="t5"),
        FeatureSpec("glove_content_cos", "wordvec_cosine", source="glove", selection="content"),
        FeatureSpec("content_overlap", "stat_content_overlap"),
        FeatureSpec("char_ratio", "stat_char_ratio"),
    )),
    "unsup-eng": FeatureManifest((
        FeatureSpec("multi_qa_pca_cos", "embed_cosine", source="multi_qa", pca=True),
        FeatureSpec("e5_pca_cos", "embed_cosine", source="e5", pca=True),
        FeatureSpec("glove_content_pca_cos", "wordvec_cosine", source="glove",
                    selection="content", pca=True),
        FeatureSpec("content_overlap", "stat_content_overlap"),
    )),
    "unsup-esp": FeatureManifest((
        FeatureSpec("multi_qa_cos", "embed_cosine", source="multi_qa"),
        FeatureSpec("mbert_first_cos", "embed_cosine", source="mbert_first"),
        FeatureSpec("mbert_last_cos", "embed_cosine", source="mbert_last"),
        FeatureSpec("word_overlap", "stat_word_overlap"),
    )),
    "unsup-hin": FeatureManifest((
        FeatureSpec("multi_qa_cos", "embed_cosine", source="multi_qa"),
        FeatureSpec("mbert_first_cos", "embed_cosine", source="mbert_first"),
        FeatureSpec("mbert_last_cos", "embed_cosine", source="mbert_last"),
        FeatureSpec("word_overlap", "stat_word_overlap"),
    )),
}

PRESET_MODES = {
    "supervised-eng": MODE_SUPERVISED,
    "unsup-eng": MODE_UNSUPERVISED,
    "unsup-esp": MODE_UNSUPERVISED,
    "unsup-hin": MODE_UNSUPERVISED,
}


@dataclass
class FeatureVector:
    """One pair's values aligned to a manifest, plus degeneracy markers."""

    pair_id: str
    values: np.ndarray
    flags: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if not np.all(np.isfinite(self.values)):
            raise NumericalError(f"pair {self.pair_id!r}: non-finite feature value")


@dataclass
class FeatureContext:
    """Resources a manifest resolves against."""

    tables: dict[str, VectorTable] = field(default_factory=dict)
    stores: dict[str, EmbeddingStore] = field(default_factory=dict)
    pca_models: dict[str, PcaModel] = field(default_factory=dict)
    content_filter: ContentFilter | None = None
    annotations: AnnotationMap | None = None


def _raw_side_vector(pair, side, spec, context):
    """Unrotated side vector for a cosine feature, or (None, flag) if the
    selected tokens have no vector coverage."""
    text = pair.text_a if side == SIDE_A else pair.text_b
    ann = context.annotations.get((pair.pair_id, side)) if context.annotations else None
    if spec.kind == "wordvec_cosine":
        table = context.tables.get(spec.source)
        if table is None:
            raise ConfigError(f"feature {spec.name!r}: vector table {spec.source!r} not loaded")
        emb = mean_embedding(tokenize(text), table, spec.selection, ann, context.content_filter)
        if not emb.valid:
            return None, "no_vector_coverage"
        return emb.vector, None
    if spec.kind == "embed_cosine":
        store = context.stores.get(spec.source)
        if store is None:
            raise ConfigError(f"feature {spec.name!r}: embedding store {spec.source!r} not loaded")
        try:
            if store.granularity == "sentence":
                if spec.selection != "all":
                    raise ConfigError(
                        f"feature {spec.name!r}: selection {spec.selection!r} "
                        "needs a token-granularity store"
                    )
                return store.vector(pair.pair_id, side), None
            emb = mean_token_embedding(
                store, pair.pair_id, side, spec.selection, ann, context.content_filter
            )
        except DataError as e:
            raise DataError(f"feature {spec.name!r}: {e}") from e
        if not emb.valid:
            return None, "no_vector_coverage"
        return emb.vector, None
    raise ConfigError(f"feature {spec.name!r}: kind {spec.kind!r} has no side vector")


def _side_vector(pair, side, spec, context):
    vec, bad = _raw_side_vector(pair, side, spec, context)
    if vec is None:
        return None, bad
    if spec.pca:
        model = context.pca_models.get(spec.name)
        if model is None:
            raise ConfigError(f"feature {spec.name!r}: no PCA model fitted or loaded")
        vec = model.transform(vec)
    return vec, None


def assemble_features(
    pair: SentencePair, manifest: FeatureManifest, context: FeatureContext
) -> FeatureVector:
    """Compute one pair's feature vector.

    Degenerate cases (no word tokens, no vector coverage, zero-norm vector)
    yield value 0.0 with a per-feature flag instead of failing the pair;
    missing resources or missing stored embeddings raise.
    """
    ts_a = tokenize(pair.text_a)
    ts_b = tokenize(pair.text_b)
    values: list[float] = []
    flags: dict[str, str] = {}
    for spec in manifest:
        if spec.kind == "stat_char_ratio":
            value = char_distance_ratio(pair)
        elif spec.kind == "stat_word_overlap":
            try:
                value = word_overlap_ratio(ts_a, ts_b)
            except NumericalError:
                value, flags[spec.name] = 0.0, "no_word_tokens"
        elif spec.kind == "stat_content_overlap":
            if context.content_filter is None:
                raise ConfigError(f"feature {spec.name!r} needs a function-word list")
            try:
                value, fell_back = content_overlap_with_fallback(
                    ts_a, ts_b, context.content_filter
                )
                if fell_back:
                    flags[spec.name] = "content_fallback"
            except NumericalError:
                value, flags[spec.name] = 0.0, "no_word_tokens"
        else:
            va, bad_a = _side_vector(pair, "A", spec, context)
            vb, bad_b = _side_vector(pair, "B", spec, context)
            if va is None or vb is None:
                value, flags[spec.name] = 0.0, (bad_a or bad_b)
            else:
                try:
                    value = cosine(va, vb)
                except NumericalError:
                    value, flags[spec.name] = 0.0, "degenerate_vector"
        values.append(float(value))
    return FeatureVector(pair.pair_id, np.asarray(values), flags)


def fit_feature_pcas(
    dataset: Dataset,
    manifest: FeatureManifest,
    context: FeatureContext,
    k: int | None = None,
) -> tuple[dict[str, PcaModel], list[str]]:
    """Fit a PCA per pca-flagged feature on the pooled side vectors of the
    dataset (both sides of every pair).  Features already present in
    context.pca_models are left alone."""
    models: dict[str, PcaModel] = {}
    warnings: list[str] = []
    for spec in manifest:
        if not spec.pca or spec.name in context.pca_models:
            continue
        pool = []
        skipped = 0
        for pair in dataset:
            for side in ("A", "B"):
                vec, _ = _raw_side_vector(pair, side, spec, context)
                if vec is None:
                    skipped += 1
                else:
                    pool.append(vec)
        if len(pool) < 2:
            raise NumericalError(
                f"feature {spec.name!r}: fewer than 2 covered sentences to fit PCA"
            )
        models[spec.name] = fit_pca(np.asarray(pool), k=k)
        if skipped:
            warnings.append(
                f"feature {spec.name}: {skipped} sentence(s) without coverage skipped in PCA fit"
            )
    return models, warnings


def extract_features(
    dataset: Dataset, manifest: FeatureManifest, context: FeatureContext
) -> tuple[list[FeatureVector], list[str]]:
    """Feature vectors for every pair, in dataset order, plus warnings.

    PCA models for pca-flagged features are fitted on this dataset when not
    already provided in the context (the fitted models are stored back into
    the context).
    """
    warnings: list[str] = []
    if any(spec.pca for spec in manifest):
        models, pca_warnings = fit_feature_pcas(dataset, manifest, context)
        context.pca_models.update(models)
        warnings.extend(pca_warnings)
    fvs = [assemble_features(pair, manifest, context) for pair in dataset]
    counts: dict[tuple[str, str], int] = {}
    for fv in fvs:
        for name, marker in fv.flags.items():
            counts[(name, marker)] = counts.get((name, marker), 0) + 1
    for (name, marker), c in sorted(counts.items()):
        warnings.append(f"feature {name}: {marker} on {c} pair(s)")
    return fvs, warnings


def as_matrix(X) -> np.ndarray:
    """Stack FeatureVectors (or any row iterable) into an n x d float matrix."""
    if isinstance(X, np.ndarray):
        rows = X
    else:
        rows = [fv.values if isinstance(fv, FeatureVector) else fv for fv in X]
    M = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    return M


def features_tsv(names: list[str], fvs: list[FeatureVector]) -> str:
    """TSV text: header pair_id + feature names, one row per pair."""
    lines = ["pair_id\t" + "\t".join(names)]
    for fv in fvs:
        if len(fv.values) != len(names):
            raise ConfigError(
                f"pair {fv.pair_id!r}: {len(fv.values)} values for {len(names)} features"
            )
        lines.append(fv.pair_id + "\t" + "\t".join(f"{v:.12g}" for v in fv.values))
    return "\n".join(lines) + "\n"


def write_features(path: str | Path, names: list[str], fvs: list[FeatureVector]) -> None:
    Path(path).write_text(features_tsv(names, fvs), encoding="utf-8")


def load_features(path: str | Path) -> tuple[list[str], list[FeatureVector]]:
    """Read a feature TSV back into (names, vectors)."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read features {path}: {e}") from e
    lines = text.splitlines()
    if not lines:
        raise DataError(f"{path}: empty feature file")
    header = lines[0].split("\t")
    if header[:1] != ["pair_id"] or len(header) < 2:
        raise DataError(f"{path}:1: header must be pair_id followed by feature names")
    names = header[1:]
    fvs = []
    for ln, line in enumerate(lines[1:], start=2):
        cols = line.split("\t")
        if len(cols) != len(header):
            raise DataError(f"{path}:{ln}: expected {len(header)} columns, got {len(cols)}")
        try:
            values = [float(c) for c in cols[1:]]
        except ValueError as e:
            raise DataError(f"{path}:{ln}: {e}") from e
        fvs.append(FeatureVector(cols[0], np.asarray(values)))
    return names, fvs


# ---------------------------------------------------------------------------
# epsilon-SVR with RBF kernel


def rbf_kernel(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    """exp(-gamma * ||a - b||^2) for every row pair."""
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    B = np.atleast_2d(np.asarray(B, dtype=np.float64))
    sq = (
        np.sum(A * A, axis=1)[:, None]
        + np.sum(B * B, axis=1)[None, :]
        - 2.0 * (A @ B.T)
    )
    return np.exp(-gamma * np.maximum(sq, 0.0))


@dataclass
class FeatureScaler:
    """Per-column z-score parameters fitted on the training matrix."""

    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray, names: list[str] | None = None) -> "FeatureScaler":
        X = as_matrix(X)
        mean = X.mean(axis=0)
        std = X.std(axis=0)
        bad = np.flatnonzero(std <= 1e-12 * np.maximum(1.0, np.abs(mean)))
        if bad.size:
            label = ", ".join(
                names[i] if names and i < len(names) else f"column {i}" for i in bad
            )
            raise NumericalError(f"constant feature column(s): {label}")
        return cls(mean, std)

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (as_matrix(X) - self.mean) / self.std

    def to_dict(self) -> dict:
        return {"mean": [float(v) for v in self.mean], "std": [float(v) for v in self.std]}

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureScaler":
        return cls(np.asarray(d["mean"], dtype=np.float64), np.asarray(d["std"], dtype=np.float64))


@dataclass
class SvrModel:
    """Fitted epsilon-SVR: RBF kernel over z-scored features."""

    C: float
    epsilon: float
    gamma: float
    support_vectors: np.ndarray
    dual_coefs: np.ndarray
    bias: float
    scaler: FeatureScaler
    kkt_violation: float = 0.0
    iterations: int = 0
    dual_objective: float = 0.0

    def predict(self, X) -> np.ndarray:
        """Decision values (unclamped) for raw, unscaled feature rows."""
        Xs = self.scaler.transform(X)
        K = rbf_kernel(self.support_vectors, Xs, self.gamma)
        return self.dual_coefs @ K + self.bias

    def to_dict(self) -> dict:
        return {
            "C": float(self.C),
            "epsilon": float(self.epsilon),
            "gamma": float(self.gamma),
            "bias": float(self.bias),
            "dual_coefs": [float(v) for v in self.dual_coefs],
            "support_vectors": [[float(v) for v in row] for row in self.support_vectors],
            "scaler": self.scaler.to_dict(),
            "kkt_violation": float(self.kkt_violation),
            "iterations": int(self.iterations),
            "dual_objective": float(self.dual_objective),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SvrModel":
        try:
            return cls(
                C=float(d["C"]),
                epsilon=float(d["epsilon"]),
                gamma=float(d["gamma"]),
                support_vectors=np.asarray(d["support_vectors"], dtype=np.float64),
                dual_coefs=np.asarray(d["dual_coefs"], dtype=np.float64),
                bias=float(d["bias"]),
                scaler=FeatureScaler.from_dict(d["scaler"]),
                kkt_violation=float(d.get("kkt_violation", 0.0)),
                iterations=int(d.get("iterations", 0)),
                dual_objective=float(d.get("dual_objective", 0.0)),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"invalid SVR model data: {e}") from e


def fit_svr(
    X,
    y,
    C: float = 1.0,
    epsilon: float = 0.1,
    gamma: float | None = None,
    tol: float = 1e-8,
    max_iter: int | None = None,
) -> SvrModel:
    """Fit epsilon-SVR on z-scored features.

    Solves the box-constrained dual (variables alpha, alpha* in [0, C],
    sum(alpha - alpha*) = 0) by repeatedly updating the maximal-violating
    pair.  gamma defaults to 1 / (n_features * var(scaled X)).
    """
    X = as_matrix(X)
    y = np.asarray(y, dtype=np.float64)
    n, d = X.shape
    if y.shape != (n,):
        raise ConfigError(f"fit_svr: {n} rows but {y.shape} targets")
    if n < 2:
        raise ConfigError(f"fit_svr needs at least 2 samples, got {n}")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise NumericalError("fit_svr: non-finite inputs")
    if C <= 0 or epsilon < 0:
        raise ConfigError(f"fit_svr: need C > 0 and epsilon >= 0, got C={C} epsilon={epsilon}")

    scaler = FeatureScaler.fit(X)
    Xs = scaler.transform(X)
    if gamma is None:
        var = float(Xs.var())
        gamma = 1.0 / (d * var) if var > 0 else 1.0 / d
    if gamma <= 0:
        raise ConfigError(f"fit_svr: gamma must be > 0, got {gamma}")
    if max_iter is None:
        max_iter = max(20000, 300 * n)

    K = rbf_kernel(Xs, Xs, gamma)
    alpha = np.zeros(2 * n)
    u = np.zeros(n)
    it = 0
    while True:
        # ng = -sign * gradient of the dual; the bias sits between the
        # largest ng over I_up and the smallest over I_low at optimality.
        ng = np.concatenate([y - u - epsilon, y - u + epsilon])
        up = np.concatenate([alpha[:n] < C, alpha[n:] > 0.0])
        low = np.concatenate([alpha[:n] > 0.0, alpha[n:] < C])
        i = int(np.argmax(np.where(up, ng, -np.inf)))
        j = int(np.argmin(np.where(low, ng, np.inf)))
        m, M = ng[i], ng[j]
        violation = m - M
        if violation < tol or it >= max_iter:
            break
        bi, bj = i % n, j % n
        quad = K[bi, bi] + K[bj, bj] - 2.0 * K[bi, bj]
        if quad <= 1e-12:
            quad = 1e-12
        step = violation / quad
        cap_i = (C - alpha[i]) if i < n else alpha[i]
        cap_j = alpha[j] if j < n else (C - alpha[j])
        step = min(step, cap_i, cap_j)
        if step <= 1e-16:
            break
        alpha[i] += step if i < n else -step
        alpha[j] -= step if j < n else -step
        u += step * (K[bi] - K[bj])
        it += 1

    if violation >= KKT_LIMIT:
        raise NumericalError(
            f"SVR solver did not converge: KKT violation {violation:.3e} "
            f"after {it} iterations"
        )
    bias = (m + M) / 2.0
    beta = alpha[:n] - alpha[n:]
    dual_objective = 0.5 * float(beta @ (K @ beta)) + epsilon * float(alpha.sum()) - float(y @ beta)
    nz = np.flatnonzero(beta != 0.0)
    return SvrModel(
        C=float(C),
        epsilon=float(epsilon),
        gamma=float(gamma),
        support_vectors=Xs[nz].copy(),
        dual_coefs=beta[nz].copy(),
        bias=float(bias),
        scaler=scaler,
        kkt_violation=float(max(violation, 0.0)),
        iterations=it,
        dual_objective=dual_objective,
    )


@dataclass
class EnsembleModel:
    """A manifest plus the rule that turns its feature vector into a score."""

    manifest: FeatureManifest
    mode: str
    svr: SvrModel | None = None
    preset: str | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"unknown ensemble mode {self.mode!r}")
        if (self.mode == MODE_SUPERVISED) != (self.svr is not None):
            raise ConfigError(f"mode {self.mode} and SVR presence disagree")

    def _check(self, fv: FeatureVector) -> None:
        if len(fv.values) != len(self.manifest):
            raise ConfigError(
                f"pair {fv.pair_id!r}: {len(fv.values)} values for "
                f"{len(self.manifest)}-feature manifest"
            )

    def predict_raw(self, fv: FeatureVector) -> float:
        """Unclamped score; for the supervised mode this is the SVR decision
        value, useful when downstream ranking must avoid boundary ties."""
        self._check(fv)
        if self.mode == MODE_SUPERVISED:
            return float(self.svr.predict(fv.values[None, :])[0])
        vals = fv.values.copy()
        for idx, spec in enumerate(self.manifest):
            if spec.kind in COSINE_KINDS:
                vals[idx] = min(1.0, max(0.0, vals[idx]))
        return float(vals.mean())

    def predict(self, fv: FeatureVector) -> float:
        """Score clamped to [0, 1]."""
        return min(1.0, max(0.0, self.predict_raw(fv)))

    def predict_many(self, fvs: list[FeatureVector], clamp: bool = True) -> np.ndarray:
        if self.mode == MODE_SUPERVISED and fvs:
            for fv in fvs:
                self._check(fv)
            out = self.svr.predict(as_matrix(fvs))
        else:
            out = np.asarray([self.predict_raw(fv) for fv in fvs])
        return np.clip(out, 0.0, 1.0) if clamp else out

    def to_dict(self) -> dict:
        return {
            "format": "semrel-ensemble",
            "mode": self.mode,
            "preset": self.preset,
            "manifest": self.manifest.to_dict(),
            "svr": self.svr.to_dict() if self.svr is not None else None,
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")

    @classmethod
    def from_dict(cls, d: dict) -> "EnsembleModel":
        if not isinstance(d, dict) or d.get("format") != "semrel-ensemble":
            raise ConfigError("not an ensemble model bundle")
        svr = SvrModel.from_dict(d["svr"]) if d.get("svr") is not None else None
        return cls(
            manifest=FeatureManifest.from_dict(d.get("manifest", {})),
            mode=d.get("mode", ""),
            svr=svr,
            preset=d.get("preset"),
        )

    @classmethod
    def load(cls, path: str | Path) -> "EnsembleModel":
        try:
            d = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read model {path}: {e}") from e
        return cls.from_dict(d)


def tune_svr(
    X,
    y,
    grid: dict,
    folds: int = 5,
    seed: int = DEFAULT_SEED,
) -> tuple[float, float, float | None]:
    """Grid search maximizing k-fold cross-validated Spearman.

    Ties go to smaller C, then larger epsilon, then smaller gamma (a None
    gamma, meaning the data-derived default, sorts last).  Folds are cut from
    one seeded shuffle shared by all candidates.
    """
    X = as_matrix(X)
    y = np.asarray(y, dtype=np.float64)
    n = X.shape[0]
    unknown = set(grid) - {"C", "epsilon", "gamma"}
    if unknown:
        raise ConfigError(f"grid has unknown parameters: {sorted(unknown)}")
    Cs = sorted(float(v) for v in grid.get("C", [1.0]))
    epsilons = sorted((float(v) for v in grid.get("epsilon", [0.1])), reverse=True)
    gammas = sorted(
        (None if v is None else float(v) for v in grid.get("gamma", [None])),
        key=lambda g: (g is None, 0.0 if g is None else g),
    )
    if not (Cs and epsilons and gammas):
        raise ConfigError("empty hyperparameter grid")
    if folds < 2:
        raise ConfigError(f"need at least 2 folds, got {folds}")
    if folds > n:
        raise ConfigError(f"{folds} folds but only {n} samples")

    parts = np.array_split(np.random.default_rng(seed).permutation(n), folds)
    best = None
    best_score = -np.inf
    for C, epsilon, gamma in itertools.product(Cs, epsilons, gammas):
        scores = []
        for f in range(folds):
            val = parts[f]
            train = np.concatenate([parts[g] for g in range(folds) if g != f])
            try:
                model = fit_svr(X[train], y[train], C=C, epsilon=epsilon, gamma=gamma)
                scores.append(spearman(model.predict(X[val]), y[val]))
            except NumericalError:
                scores.append(-1.0)
        score = float(np.mean(scores))
        if score > best_score:
            best_score = score
            best = (C, epsilon, gamma)
    return best
