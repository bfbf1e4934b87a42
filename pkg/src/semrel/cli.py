"""Command-line interface.

Subcommands:
  features   dump the feature matrix of a dataset as TSV
  train      fit a supervised SVR ensemble on gold scores
  predict    score a dataset with a trained model or an unsupervised preset
  eval       Spearman of a predictions file (and optional feature TSV) vs gold
  fit-pca    fit a PCA on the pooled sentence vectors of one resource

Exit codes: 0 success, 2 usage or configuration error, 3 data error,
4 numerical failure.  Status and warnings go to stderr; data goes to the
requested files or stdout.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .corpus import Dataset, load_annotations, load_dataset
from .embedstore import load_embeddings
from .ensemble import (
    DEFAULT_SEED,
    MODE_SUPERVISED,
    MODE_UNSUPERVISED,
    EnsembleModel,
    FeatureContext,
    FeatureManifest,
    FeatureSpec,
    PRESET_MODES,
    PRESETS,
    as_matrix,
    extract_features,
    features_tsv,
    fit_feature_pcas,
    fit_svr,
    load_features,
    tune_svr,
)
from .errors import ConfigError, DataError, NumericalError
from .eval import ScoreEntry, evaluate, spearman
from .linalg_pca import PcaModel
from .textstats import ContentFilter
from .wordvec import load_vectors


def say(msg: str) -> None:
    print(msg, file=sys.stderr)


def _require_file(path: str, what: str) -> None:
    if not Path(path).is_file():
        raise ConfigError(f"{what}: file not found: {path}")


def _kv_pairs(items: list[str] | None, flag: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for item in items or []:
        name, sep, path = item.partition("=")
        if not sep or not name or not path:
            raise ConfigError(f"{flag} expects NAME=PATH, got {item!r}")
        if name in out:
            raise ConfigError(f"{flag}: duplicate name {name!r}")
        out[name] = path
    return out


def parse_grid(spec: str) -> dict:
    """'C=0.1,1,10;epsilon=0.1,0.01;gamma=auto,0.1' -> candidate dict."""
    grid: dict = {}
    for part in spec.split(";"):
        part = part.strip()
        if not part:
            continue
        key, sep, vals = part.partition("=")
        key = key.strip()
        if not sep or key not in ("C", "epsilon", "gamma"):
            raise ConfigError(
                f"bad grid component {part!r} (expected C=..., epsilon=... or gamma=...)"
            )
        if key in grid:
            raise ConfigError(f"grid parameter {key} given twice")
        items = []
        for tok in vals.split(","):
            tok = tok.strip()
            if key == "gamma" and tok == "auto":
                items.append(None)
                continue
            try:
                items.append(float(tok))
            except ValueError:
                raise ConfigError(f"grid {key}: cannot parse {tok!r}") from None
        if not items:
            raise ConfigError(f"grid {key}: no values")
        grid[key] = items
    if not grid:
        raise ConfigError("empty hyperparameter grid")
    return grid


def _load_dataset(args) -> Dataset:
    _require_file(args.dataset, "dataset")
    dataset = load_dataset(
        args.dataset,
        format=args.format,
        language_tag=args.language,
        split_tag=Path(args.dataset).stem,
    )
    if len(dataset) == 0:
        raise ConfigError(f"dataset {args.dataset} is empty")
    return dataset


def _resolve_manifest(args) -> tuple[FeatureManifest, str | None]:
    preset = getattr(args, "preset", None)
    manifest_path = getattr(args, "manifest", None)
    if preset and manifest_path:
        raise ConfigError("give either --preset or --manifest, not both")
    if preset:
        if preset not in PRESETS:
            raise ConfigError(
                f"unknown preset {preset!r} (available: {', '.join(sorted(PRESETS))})"
            )
        return PRESETS[preset], preset
    if manifest_path:
        _require_file(manifest_path, "manifest")
        return FeatureManifest.load(manifest_path), None
    raise ConfigError("a feature set is required: --preset NAME or --manifest FILE")


def _build_context(args, manifest: FeatureManifest) -> FeatureContext:
    vec_paths = _kv_pairs(getattr(args, "vectors", None), "--vectors")
    store_paths = _kv_pairs(getattr(args, "embeddings", None), "--embeddings")
    pca_paths = _kv_pairs(getattr(args, "pca_in", None), "--pca-in")

    # Resolve every manifest reference before loading anything.
    for spec in manifest:
        if spec.kind == "wordvec_cosine" and spec.source not in vec_paths:
            raise ConfigError(
                f"feature {spec.name!r}: vector table {spec.source!r} not provided "
                f"(use --vectors {spec.source}=PATH)"
            )
        if spec.kind == "embed_cosine" and spec.source not in store_paths:
            raise ConfigError(
                f"feature {spec.name!r}: embedding store {spec.source!r} not provided "
                f"(use --embeddings {spec.source}=PATH)"
            )
    for path, what in (
        [(p, f"vector table {n!r}") for n, p in vec_paths.items()]
        + [(p, f"embedding store {n!r}") for n, p in store_paths.items()]
        + [(p, f"PCA model {n!r}") for n, p in pca_paths.items()]
    ):
        _require_file(path, what)
    if getattr(args, "annotations", None):
        _require_file(args.annotations, "annotations")
    if getattr(args, "function_words", None):
        _require_file(args.function_words, "function-word list")

    content_filter = None
    if getattr(args, "function_words", None):
        content_filter = ContentFilter.from_file(args.function_words)
    else:
        strict = any(s.kind == "stat_content_overlap" for s in manifest)
        if strict or any(s.selection == "content" for s in manifest):
            try:
                content_filter = ContentFilter.for_language(args.language)
            except ConfigError:
                # Content selection can still run from annotations alone.
                if strict:
                    raise

    annotations = None
    if getattr(args, "annotations", None):
        annotations = load_annotations(args.annotations)

    return FeatureContext(
        tables={n: load_vectors(p, name=n) for n, p in vec_paths.items()},
        stores={n: load_embeddings(p) for n, p in store_paths.items()},
        pca_models={n: PcaModel.load(p) for n, p in pca_paths.items()},
        content_filter=content_filter,
        annotations=annotations,
    )


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
        say(f"wrote {out}")
    else:
        sys.stdout.write(text)


def _warn_all(warnings: list[str]) -> None:
    for w in warnings:
        say(f"warning: {w}")


def cmd_features(args) -> int:
    manifest, _ = _resolve_manifest(args)
    dataset = _load_dataset(args)
    context = _build_context(args, manifest)
    fvs, warnings = extract_features(dataset, manifest, context)
    _warn_all(warnings)
    _emit(features_tsv(manifest.names, fvs), args.out)
    say(f"{len(fvs)} pair(s), {len(manifest)} feature(s)")
    return 0


def cmd_train(args) -> int:
    manifest, preset = _resolve_manifest(args)
    dataset = _load_dataset(args)
    missing = [p.pair_id for p in dataset if p.gold_score is None]
    if missing:
        shown = ", ".join(missing[:5]) + ("..." if len(missing) > 5 else "")
        raise ConfigError(
            f"training needs a gold score on every pair; {len(missing)} lack one: {shown}"
        )
    context = _build_context(args, manifest)
    fvs, warnings = extract_features(dataset, manifest, context)
    _warn_all(warnings)
    X = as_matrix(fvs)
    y = np.asarray([p.gold_score for p in dataset])
    if args.grid:
        grid = parse_grid(args.grid)
        C, epsilon, gamma = tune_svr(X, y, grid, folds=args.folds, seed=args.seed)
        say(
            f"selected C={C:g} epsilon={epsilon:g} "
            f"gamma={'auto' if gamma is None else format(gamma, 'g')}"
        )
    else:
        C, epsilon, gamma = 1.0, 0.1, None
    svr = fit_svr(X, y, C=C, epsilon=epsilon, gamma=gamma)
    model = EnsembleModel(manifest=manifest, mode=MODE_SUPERVISED, svr=svr, preset=preset)
    model.save(args.model_out)
    say(
        f"trained on {len(fvs)} pair(s): {len(svr.dual_coefs)} support vector(s), "
        f"KKT violation {svr.kkt_violation:.2e} after {svr.iterations} iteration(s)"
    )
    say(f"wrote {args.model_out}")
    return 0


def cmd_predict(args) -> int:
    dataset = _load_dataset(args)
    if args.model_in:
        if args.preset or args.manifest:
            raise ConfigError("give either --model-in or a feature set, not both")
        _require_file(args.model_in, "model")
        model = EnsembleModel.load(args.model_in)
    else:
        manifest, preset = _resolve_manifest(args)
        if preset and PRESET_MODES[preset] == MODE_SUPERVISED:
            raise ConfigError(
                f"preset {preset!r} is supervised; train a model first and pass --model-in"
            )
        model = EnsembleModel(manifest=manifest, mode=MODE_UNSUPERVISED, preset=preset)
    context = _build_context(args, model.manifest)
    fvs, warnings = extract_features(dataset, model.manifest, context)
    _warn_all(warnings)
    scores = model.predict_many(fvs)
    lines = [f"{fv.pair_id}\t{score:.12g}" for fv, score in zip(fvs, scores)]
    _emit("\n".join(lines) + "\n", args.out)
    say(f"scored {len(fvs)} pair(s)")
    return 0


def _load_predictions(path: str) -> dict[str, float]:
    _require_file(path, "predictions")
    preds: dict[str, float] = {}
    for ln, line in enumerate(
        Path(path).read_text(encoding="utf-8").splitlines(), start=1
    ):
        cols = line.split("\t")
        if len(cols) != 2:
            raise DataError(f"{path}:{ln}: expected pair_id<TAB>score, got {len(cols)} column(s)")
        if cols[0] in preds:
            raise DataError(f"{path}:{ln}: duplicate pair_id {cols[0]!r}")
        try:
            preds[cols[0]] = float(cols[1])
        except ValueError:
            raise DataError(f"{path}:{ln}: cannot parse score {cols[1]!r}") from None
    if not preds:
        raise DataError(f"{path}: no predictions")
    return preds


def cmd_eval(args) -> int:
    dataset = _load_dataset(args)
    predictions = _load_predictions(args.predictions)
    report = evaluate(dataset, predictions, system_name=Path(args.predictions).stem)
    if args.features:
        _require_file(args.features, "features")
        names, fvs = load_features(args.features)
        by_id = {fv.pair_id: fv.values for fv in fvs}
        gold_pairs = [p for p in dataset if p.gold_score is not None]
        absent = [p.pair_id for p in gold_pairs if p.pair_id not in by_id]
        if absent:
            shown = ", ".join(absent[:10]) + ("..." if len(absent) > 10 else "")
            raise DataError(f"feature file lacks {len(absent)} pair(s): {shown}")
        gold = [p.gold_score for p in gold_pairs]
        for col, name in enumerate(names):
            vals = [by_id[p.pair_id][col] for p in gold_pairs]
            try:
                report.features.append(ScoreEntry(name, spearman(vals, gold), len(gold)))
            except NumericalError as e:
                report.warnings.append(f"feature {name}: {e}")
    _emit(report.render_text(), args.out)
    if args.report_json:
        report.save_json(args.report_json)
        say(f"wrote {args.report_json}")
    return 0


def cmd_fit_pca(args) -> int:
    dataset = _load_dataset(args)
    vec_paths = _kv_pairs(args.vectors, "--vectors")
    store_paths = _kv_pairs(args.embeddings, "--embeddings")
    if len(vec_paths) + len(store_paths) != 1:
        raise ConfigError("fit-pca takes exactly one --vectors or --embeddings source")
    if vec_paths:
        (name,) = vec_paths
        spec = FeatureSpec(name, "wordvec_cosine", source=name,
                           selection=args.selection, pca=True)
    else:
        (name,) = store_paths
        spec = FeatureSpec(name, "embed_cosine", source=name,
                           selection=args.selection, pca=True)
    manifest = FeatureManifest((spec,))
    context = _build_context(args, manifest)
    models, warnings = fit_feature_pcas(dataset, manifest, context, k=args.components)
    _warn_all(warnings)
    model = models[name]
    model.save(args.pca_out)
    say(f"fitted PCA for {name!r}: {model.k} component(s) of dimension {model.dim}")
    say(f"wrote {args.pca_out}")
    return 0


def _add_dataset_args(sp) -> None:
    sp.add_argument("--dataset", required=True, help="sentence-pair file")
    sp.add_argument(
        "--format",
        choices=("native_tsv", "semeval_csv"),
        default="native_tsv",
        help="dataset file format (default native_tsv)",
    )
    sp.add_argument(
        "--language",
        default="eng",
        help="language tag; picks the packaged function-word list (default eng)",
    )


def _add_manifest_args(sp) -> None:
    sp.add_argument("--preset", help="named feature set: " + ", ".join(sorted(PRESETS)))
    sp.add_argument("--manifest", help="JSON feature manifest file")


def _add_resource_args(sp) -> None:
    sp.add_argument(
        "--vectors",
        action="append",
        metavar="NAME=PATH",
        help="word-vector table (repeatable)",
    )
    sp.add_argument(
        "--embeddings",
        action="append",
        metavar="NAME=PATH",
        help="embedding sidecar JSONL (repeatable)",
    )
    sp.add_argument(
        "--pca-in",
        action="append",
        metavar="FEATURE=PATH",
        help="fitted PCA model for a pca-flagged feature (repeatable)",
    )
    sp.add_argument("--annotations", help="token annotation TSV")
    sp.add_argument("--function-words", help="function-word list file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="semrel",
        description="Estimate semantic relatedness of sentence pairs "
        "from statistical and embedding features.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("features", help="dump the feature matrix as TSV")
    _add_dataset_args(sp)
    _add_manifest_args(sp)
    _add_resource_args(sp)
    sp.add_argument("--out", help="output TSV (default stdout)")
    sp.set_defaults(func=cmd_features)

    sp = sub.add_parser("train", help="fit a supervised SVR ensemble")
    _add_dataset_args(sp)
    _add_manifest_args(sp)
    _add_resource_args(sp)
    sp.add_argument("--model-out", required=True, help="where to write the model bundle")
    sp.add_argument("--grid", help="hyperparameter grid, e.g. 'C=0.1,1,10;epsilon=0.1,0.01'")
    sp.add_argument("--folds", type=int, default=5, help="cross-validation folds (default 5)")
    sp.add_argument("--seed", type=int, default=DEFAULT_SEED,
                    help=f"shuffle seed (default {DEFAULT_SEED})")
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("predict", help="score a dataset")
    _add_dataset_args(sp)
    _add_manifest_args(sp)
    _add_resource_args(sp)
    sp.add_argument("--model-in", help="trained model bundle")
    sp.add_argument("--out", help="predictions TSV (default stdout)")
    sp.set_defaults(func=cmd_predict)

    sp = sub.add_parser("eval", help="score predictions against gold")
    _add_dataset_args(sp)
    sp.add_argument("--predictions", required=True, help="predictions TSV")
    sp.add_argument("--features", help="feature TSV for per-feature correlations")
    sp.add_argument("--out", help="text report file (default stdout)")
    sp.add_argument("--report-json", help="machine-readable report file")
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("fit-pca", help="fit a PCA on pooled sentence vectors")
    _add_dataset_args(sp)
    _add_resource_args(sp)
    sp.add_argument(
        "--selection",
        choices=("all", "content", "noun", "tree_top3"),
        default="all",
        help="token subset pooled per sentence (default all)",
    )
    sp.add_argument("--components", type=int, help="number of components (default full rank)")
    sp.add_argument("--pca-out", required=True, help="where to write the PCA model")
    sp.set_defaults(func=cmd_fit_pca)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        say(f"error: {e}")
        return 2
    except DataError as e:
        say(f"error: {e}")
        return 3
    except NumericalError as e:
        say(f"error: {e}")
        return 4


if __name__ == "__main__":
    sys.exit(main())
