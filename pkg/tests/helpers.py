"""Shared fixture builders and a subprocess CLI runner."""

import json
import subprocess
import sys
from pathlib import Path

import numpy as np


def run_cli(*args, cwd=None):
    """Run the installed CLI in a subprocess; returns CompletedProcess."""
    return subprocess.run(
        [sys.executable, "-m", "semrel", *map(str, args)],
        capture_output=True,
        text=True,
        cwd=cwd,
    )


def write_dataset_tsv(path, rows) -> Path:
    """rows: (pair_id, text_a, text_b[, score]) tuples."""
    lines = []
    for row in rows:
        lines.append("\t".join(str(c) for c in row))
    path = Path(path)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def write_sidecar(path, model, dim, vectors, granularity="sentence") -> Path:
    """vectors: {(pair_id, side): vector} or {(pair_id, side): {index: vector}}."""
    lines = [
        json.dumps(
            {"type": "header", "model": model, "dim": dim, "granularity": granularity},
            separators=(",", ":"),
        )
    ]
    for (pair_id, side), vec in vectors.items():
        if granularity == "token":
            for idx in sorted(vec):
                lines.append(
                    json.dumps(
                        {
                            "pair_id": pair_id,
                            "side": side,
                            "token_index": idx,
                            "vector": [float(v) for v in vec[idx]],
                        },
                        separators=(",", ":"),
                    )
                )
        else:
            lines.append(
                json.dumps(
                    {"pair_id": pair_id, "side": side, "vector": [float(v) for v in vec]},
                    separators=(",", ":"),
                )
            )
    path = Path(path)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def write_vector_table(path, entries) -> Path:
    """entries: {token: vector}; whitespace text format."""
    lines = []
    for token, vec in entries.items():
        lines.append(token + " " + " ".join(f"{float(v):.9g}" for v in vec))
    path = Path(path)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def write_annotations_tsv(path, rows) -> Path:
    """rows: (pair_id, side, token_index, surface, upos, head_index)."""
    lines = ["\t".join(str(c) for c in row) for row in rows]
    path = Path(path)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def random_unit(rng, dim):
    v = rng.normal(size=dim)
    return v / np.linalg.norm(v)
