"""Visual neural-network studio core.

Networks live as an abstract adjacency-list DAG, compile through pluggable
kernels (ONNX bidirectional, framework source export), and every edit is
checkpointed for undo/redo and session restore.
"""
from . import binder, catalog, errors, session, telemetry
from .graph import Diagnostic, Graph, structurally_equal
from .shape import BATCH, Shape
from .weights import TensorValue

__version__ = "0.1.0"

__all__ = [
    "BATCH",
    "Diagnostic",
    "Graph",
    "Shape",
    "TensorValue",
    "binder",
    "catalog",
    "errors",
    "session",
    "structurally_equal",
    "telemetry",
    "__version__",
]
