"""Compile-stage registry: routes export/import/text requests to kernels.

A kernel is a pluggable compile target; it declares its capabilities in a
KernelDescriptor and provides the low-level conversion logic. The registry
owns dispatch, pre-export validation, and lazy weight materialization.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Protocol

from .. import telemetry
from ..errors import (
    DuplicateKernel,
    ImportNotSupported,
    UnknownKernel,
    ValidationFailed,
)
from ..graph import Diagnostic, Graph
from ..shape import Shape
from ..weights import TensorValue


@dataclass(frozen=True)
class KernelDescriptor:
    kernel_id: str
    capabilities: dict  # {"export": bool, "import": bool}
    artifact_extension: str

    def to_json(self) -> dict:
        return {
            "kernelId": self.kernel_id,
            "capabilities": dict(self.capabilities),
            "artifactExtension": self.artifact_extension,
        }


@dataclass
class CompileResult:
    artifact_bytes: bytes
    text_repr: str
    diagnostics: list[Diagnostic]
    input_shape: Optional[Shape]
    # Secondary file written next to the artifact (pytorch-src weight sidecar).
    sidecar_bytes: Optional[bytes] = None


class KernelImpl(Protocol):
    def export(self, graph: Graph, opset: Optional[int]) -> CompileResult: ...
    def import_model(self, data: bytes) -> Graph: ...
    def to_text(self, graph: Graph) -> str: ...


class KernelRegistry:
    """Holds registered kernels; kernels are stateless after registration."""

    def __init__(self):
        self._kernels: dict[str, tuple[KernelDescriptor, KernelImpl]] = {}

    def register_kernel(self, descriptor: KernelDescriptor, implementation) -> None:
        if descriptor.kernel_id in self._kernels:
            raise DuplicateKernel(f"kernel {descriptor.kernel_id!r} already registered")
        self._kernels[descriptor.kernel_id] = (descriptor, implementation)
        telemetry.emit("kernel.register", payload={"kernel": descriptor.kernel_id})

    def list_kernels(self) -> list[KernelDescriptor]:
        return [desc for desc, _ in self._kernels.values()]

    def _lookup(self, kernel_id: str) -> tuple[KernelDescriptor, KernelImpl]:
        entry = self._kernels.get(kernel_id)
        if entry is None:
            raise UnknownKernel(f"unknown kernel {kernel_id!r}")
        return entry

    def export_model(self, graph: Graph, kernel_id: str,
                     options: Optional[dict] = None) -> CompileResult:
        """Compile the graph with a kernel; deterministic for equal
        (graph, seed, opset)."""
        desc, impl = self._lookup(kernel_id)
        if not desc.capabilities.get("export"):
            raise UnknownKernel(f"kernel {kernel_id!r} has no export capability")
        diagnostics = graph.validate()
        sources = [i for i, n in graph.nodes.items() if not n.prior]
        if not diagnostics and (
            not sources or graph.nodes[sources[0]].layer_type != "Input"
        ):
            diagnostics = diagnostics + [Diagnostic(
                "no_input_source", "export needs the graph source to be an Input node")]
        if diagnostics:
            raise ValidationFailed(diagnostics)
        result = impl.export(graph, (options or {}).get("opset"))
        telemetry.emit("binder.export", payload={
            "kernel": kernel_id,
            "nodes": str(len(graph.nodes)),
            "bytes": str(len(result.artifact_bytes)),
        })
        return result

    def import_model(self, kernel_id: str, artifact_bytes: bytes) -> Graph:
        """Recover a graph from a kernel artifact; aborts with no partial
        graph on any unsupported content."""
        desc, impl = self._lookup(kernel_id)
        if not desc.capabilities.get("import"):
            telemetry.emit("import.fail", level="error", payload={
                "kernel": kernel_id, "reason": "import not supported"})
            raise ImportNotSupported(f"kernel {kernel_id!r} cannot import models")
        try:
            graph = impl.import_model(artifact_bytes)
        except Exception as exc:
            telemetry.emit("import.fail", level="error",
                           payload={"kernel": kernel_id, "reason": str(exc)},
                           with_stack=True)
            raise
        telemetry.emit("binder.import", payload={
            "kernel": kernel_id, "nodes": str(len(graph.nodes))})
        return graph

    def to_text(self, graph: Graph, kernel_id: str) -> str:
        _, impl = self._lookup(kernel_id)
        return impl.to_text(graph)


def materialized_weights(graph: Graph) -> dict[str, dict[str, TensorValue]]:
    """Per-node weight tensors, generating any missing ones deterministically.

    Export-time helper: the live graph is never mutated (export is a read)."""
    from .. import catalog
    from ..weights import materialize

    out: dict[str, dict[str, TensorValue]] = {}
    for node_id, node in graph.nodes.items():
        roles = catalog.get_spec(node.layer_type).weight_roles(node.params)
        tensors = {}
        for role, dims in roles:
            existing = node.weights.get(role)
            if existing is not None and existing.dims == tuple(dims):
                tensors[role] = existing
            else:
                tensors[role] = materialize(graph.seed, node_id, role, tuple(dims))
        out[node_id] = tensors
    return out


def default_registry() -> KernelRegistry:
    """A registry with the built-in kernels ("onnx", "pytorch-src")."""
    from .onnx_kernel import ONNX_DESCRIPTOR, OnnxKernel
    from .pytorch_kernel import PYTORCH_DESCRIPTOR, PytorchSourceKernel

    registry = KernelRegistry()
    registry.register_kernel(ONNX_DESCRIPTOR, OnnxKernel())
    registry.register_kernel(PYTORCH_DESCRIPTOR, PytorchSourceKernel())
    return registry
