"""Export transformer embeddings into the sidecar JSONL format."""

from .exporter import (
    ExportError,
    ExportJob,
    export_embeddings,
    format_float,
    read_pairs,
    render_lines,
)

__version__ = "0.1.0"

__all__ = [
    "ExportError",
    "ExportJob",
    "export_embeddings",
    "format_float",
    "read_pairs",
    "render_lines",
]
