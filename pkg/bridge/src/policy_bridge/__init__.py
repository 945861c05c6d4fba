"""Standalone exporter: npz MLP-actor dumps -> policy checkpoint JSON."""

from .export import (
    SourceFormatError,
    UnsupportedArchitectureError,
    export,
    read_source,
    render_checkpoint,
)

__version__ = "0.1.0"
