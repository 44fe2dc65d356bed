"""Error taxonomy shared by the core engine and the HTTP API.

Every error carries a stable machine ``code`` so the API layer can map
exceptions to wire responses without string matching.
"""
from __future__ import annotations


class SketchError(Exception):
    """Base class; ``code`` is the stable machine-readable identifier."""

    code = "error"

    def __init__(self, message: str = "", **details):
        super().__init__(message or self.__class__.__name__)
        self.message = message or self.__class__.__name__
        self.details = details


# --- layer catalog ---------------------------------------------------------

class UnknownLayerType(SketchError):
    code = "unknown_layer_type"


class InvalidParams(SketchError):
    code = "invalid_params"

    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations), violations=list(violations))
        self.violations = list(violations)


# --- graph mutations -------------------------------------------------------

class UnknownNode(SketchError):
    code = "unknown_node"


class SelfLoop(SketchError):
    code = "self_loop"


class DuplicateEdge(SketchError):
    code = "duplicate_edge"


class WouldCreateCycle(SketchError):
    code = "would_create_cycle"


class UnknownEdge(SketchError):
    code = "unknown_edge"


class NotAChain(SketchError):
    code = "not_a_chain"


class AlreadyGrouped(SketchError):
    code = "already_grouped"


class UnknownGroup(SketchError):
    code = "unknown_group"


class CycleDetected(SketchError):
    # Defensive: unreachable while connect() enforces acyclicity.
    code = "cycle_detected"


# --- shape inference -------------------------------------------------------

class ShapeMismatch(SketchError):
    code = "shape_mismatch"

    def __init__(self, message: str, node_id: str | None = None):
        super().__init__(message, node_id=node_id)
        self.node_id = node_id


class MultipleSources(SketchError):
    code = "multiple_sources"


class MissingInputShape(SketchError):
    code = "missing_input_shape"


# --- binder / kernels ------------------------------------------------------

class DuplicateKernel(SketchError):
    code = "duplicate_kernel"


class UnknownKernel(SketchError):
    code = "unknown_kernel"


class ValidationFailed(SketchError):
    code = "validation_failed"

    def __init__(self, diagnostics):
        super().__init__(
            "graph failed validation: " + "; ".join(d.message for d in diagnostics),
            diagnostics=[d.to_json() for d in diagnostics],
        )
        self.diagnostics = list(diagnostics)


class UnsupportedLayer(SketchError):
    code = "unsupported_layer"

    def __init__(self, kernel_id: str, type_name: str):
        super().__init__(
            f"kernel {kernel_id!r} cannot compile layer type {type_name!r}",
            kernel=kernel_id, type_name=type_name,
        )


class UnsupportedOpset(SketchError):
    code = "unsupported_opset"


class ImportNotSupported(SketchError):
    code = "import_not_supported"


class MalformedArtifact(SketchError):
    code = "malformed_artifact"


class UnsupportedOperator(SketchError):
    code = "unsupported_operator"

    def __init__(self, op_type: str, reason: str = ""):
        msg = f"unsupported operator {op_type!r}"
        if reason:
            msg += f": {reason}"
        super().__init__(msg, op_type=op_type)
        self.op_type = op_type


# --- project / session persistence ----------------------------------------

class MalformedProject(SketchError):
    code = "malformed_project"

    def __init__(self, version: str, reason: str):
        super().__init__(f"malformed project (version {version}): {reason}",
                         version=version, reason=reason)
        self.version = version
        self.reason = reason


class UnsupportedProjectVersion(SketchError):
    code = "unsupported_project_version"
