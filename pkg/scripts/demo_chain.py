"""Build the classic conv/bn/relu/pool/conv canvas in code, compile it with
both kernels, and save the project — a quick smoke run without the editor.

Usage: python scripts/demo_chain.py [output-dir]
"""
from __future__ import annotations

import sys
from pathlib import Path

from sketch.binder import default_registry
from sketch.graph import Graph
from sketch.session import save_project


def build() -> Graph:
    g = Graph(seed=7)
    layers = [
        ("Input", {"shape": [1, 28, 28]}),
        ("Conv2d", {"in_channels": 1, "out_channels": 8,
                    "kernel_size": [5, 5], "padding": [2, 2]}),
        ("BatchNorm2d", {"num_features": 8}),
        ("ReLU", None),
        ("MaxPool2d", None),
        ("Conv2d", {"in_channels": 8, "out_channels": 16,
                    "kernel_size": [3, 3], "padding": [1, 1]}),
    ]
    prev = None
    for idx, (layer_type, params) in enumerate(layers):
        nid = g.add_node(layer_type, params, (80 + idx * 170, 90))
        if prev is not None:
            g.connect(prev, nid)
        prev = nid
    return g


def main() -> int:
    out_dir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("demo-out")
    out_dir.mkdir(parents=True, exist_ok=True)
    g = build()

    print("diagnostics:", g.validate() or "clean")
    shapes = g.infer_shapes()
    for node_id in g.topo_sort():
        node = g.nodes[node_id]
        print(f"  {node_id:>4} {node.layer_type:<14} -> {shapes[node_id]}")

    registry = default_registry()
    for kernel_id in ("onnx", "pytorch-src"):
        result = registry.export_model(g, kernel_id)
        ext = next(d.artifact_extension for d in registry.list_kernels()
                   if d.kernel_id == kernel_id)
        target = out_dir / f"demo.{ext}"
        target.write_bytes(result.artifact_bytes)
        if result.sidecar_bytes is not None:
            target.with_suffix(".weights").write_bytes(result.sidecar_bytes)
        print(f"[{kernel_id}] wrote {target} ({len(result.artifact_bytes)} bytes)")

    save_project(g, out_dir / "demo.sketch")
    print(f"project saved to {out_dir / 'demo.sketch'}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
