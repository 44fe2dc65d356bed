"""Export-only kernel emitting framework-native source text.

The artifact is a readable module definition; weights travel in a sibling
sidecar file (the project weight format) with state-dict entry names, and the
generated file documents a self-contained loader for it.
"""
from __future__ import annotations

from typing import Optional

from ..errors import ImportNotSupported
from ..graph import Graph, Node
from ..shape import BATCH, Shape
from . import CompileResult, KernelDescriptor, materialized_weights

KERNEL_ID = "pytorch-src"

PYTORCH_DESCRIPTOR = KernelDescriptor(
    kernel_id=KERNEL_ID,
    capabilities={"export": True, "import": False},
    artifact_extension="py",
)

# graph weight role -> torch parameter/buffer name
ROLE_TO_PARAM = {
    "weight": "weight",
    "bias": "bias",
    "scale": "weight",
    "running_mean": "running_mean",
    "running_var": "running_var",
}

_FUNCTIONAL = {
    "Sub": "torch.sub({0}, {1})",
    "Mul": "torch.mul({0}, {1})",
    "Abs": "torch.abs({0})",
    "ReduceMean": "torch.mean({0})",
    "ReduceSum": "torch.sum({0})",
}

_LOADER_SNIPPET = '''\
# The sibling ".weights" sidecar holds this model's tensors. Load them with:
#
#     import struct, torch
#
#     def load_sidecar(path):
#         with open(path, "rb") as fh:
#             data = fh.read()
#         assert data[:4] == b"SKWT"
#         (count,) = struct.unpack_from("<I", data, 8)
#         offset, state = 12, {}
#         for _ in range(count):
#             (name_len,) = struct.unpack_from("<H", data, offset); offset += 2
#             name = data[offset:offset + name_len].decode("utf-8"); offset += name_len
#             dtype, ndim = struct.unpack_from("<BB", data, offset); offset += 2
#             dims = struct.unpack_from(f"<{ndim}I", data, offset); offset += 4 * ndim
#             n = 4
#             for d in dims:
#                 n *= d
#             values = torch.frombuffer(bytearray(data[offset:offset + n]),
#                                       dtype=torch.float32).reshape(dims).clone()
#             offset += n
#             state[name] = values
#         return state
#
#     model = SketchModel()
#     model.load_state_dict(load_sidecar("<artifact>.weights"), strict=False)
#     model.eval()
'''


def _attr_name(node: Node) -> str:
    return f"{node.layer_type.lower()}_{node.id}"


def _pair(values: list) -> str:
    return f"({values[0]}, {values[1]})"


def _ctor(node: Node) -> Optional[str]:
    p = node.params
    t = node.layer_type
    if t == "Conv2d":
        return (f"nn.Conv2d({p['in_channels']}, {p['out_channels']}, "
                f"kernel_size={_pair(p['kernel_size'])}, stride={_pair(p['stride'])}, "
                f"padding={_pair(p['padding'])}, bias={p['bias']})")
    if t == "Linear":
        return f"nn.Linear({p['in_features']}, {p['out_features']}, bias={p['bias']})"
    if t == "MaxPool2d":
        return (f"nn.MaxPool2d(kernel_size={_pair(p['kernel_size'])}, "
                f"stride={_pair(p['stride'])}, padding={_pair(p['padding'])})")
    if t == "AvgPool2d":
        return (f"nn.AvgPool2d(kernel_size={_pair(p['kernel_size'])}, "
                f"stride={_pair(p['stride'])}, padding={_pair(p['padding'])})")
    if t == "ReLU":
        return "nn.ReLU()"
    if t == "Sigmoid":
        return "nn.Sigmoid()"
    if t == "Tanh":
        return "nn.Tanh()"
    if t == "BatchNorm2d":
        return (f"nn.BatchNorm2d({p['num_features']}, eps={p['eps']!r}, "
                f"momentum={p['momentum']!r})")
    if t == "Dropout":
        return f"nn.Dropout(p={p['p']!r})"
    if t == "Identity":
        return "nn.Identity()"
    if t == "Flatten":
        return f"nn.Flatten(start_dim={p['start_dim']})"
    if t == "MSELoss":
        return f"nn.MSELoss(reduction={p['reduction']!r})"
    if t == "L1Loss":
        return f"nn.L1Loss(reduction={p['reduction']!r})"
    return None  # functional ops and Input


def generate_source(graph: Graph) -> str:
    order = graph.topo_sort()
    nodes = [graph.nodes[i] for i in order]

    ctor_lines = []
    for node in nodes:
        ctor = _ctor(node)
        if ctor is not None:
            ctor_lines.append(f"        self.{_attr_name(node)} = {ctor}")
    if not ctor_lines:
        ctor_lines.append("        pass")

    var = {node.id: _attr_name(node) for node in nodes}
    forward_args = [var[n.id] for n in nodes if not n.prior]
    body = []
    returns = None
    for node in nodes:
        if not node.prior:
            returns = var[node.id]
            continue
        args = [var[p] for p in node.prior]
        if node.layer_type in _FUNCTIONAL:
            expr = _FUNCTIONAL[node.layer_type].format(*args)
        else:
            expr = f"self.{_attr_name(node)}({', '.join(args)})"
        body.append(f"        {var[node.id]} = {expr}")
        returns = var[node.id]
    sinks = [var[n.id] for n in nodes if not n.next]
    if sinks:
        returns = sinks[0]
    body.append(f"        return {returns}" if returns else "        return None")

    lines = [
        '"""Model module generated from a sketch canvas."""',
        "import torch",
        "import torch.nn as nn",
        "",
        "",
        "class SketchModel(nn.Module):",
        "    def __init__(self):",
        "        super().__init__()",
        *ctor_lines,
        "",
        f"    def forward(self{''.join(', ' + a for a in forward_args)}):",
        *body,
        "",
        "",
        _LOADER_SNIPPET,
    ]
    return "\n".join(lines)


class PytorchSourceKernel:
    def export(self, graph: Graph, opset: Optional[int]) -> CompileResult:
        del opset  # meaningless for source text
        source = generate_source(graph)
        weights = materialized_weights(graph)

        entries = []
        for node_id in graph.topo_sort():
            node = graph.nodes[node_id]
            for role, tv in weights.get(node_id, {}).items():
                entries.append((f"{_attr_name(node)}.{ROLE_TO_PARAM[role]}", tv))
        from ..sidecar import write_sidecar
        sidecar = write_sidecar(entries)

        input_shape = None
        for node in graph.nodes.values():
            if node.layer_type == "Input":
                input_shape = Shape((BATCH, *node.params["shape"]))
                break
        return CompileResult(
            artifact_bytes=source.encode("utf-8"),
            text_repr=source,
            diagnostics=[],
            input_shape=input_shape,
            sidecar_bytes=sidecar,
        )

    def to_text(self, graph: Graph) -> str:
        return generate_source(graph)

    def import_model(self, data: bytes) -> Graph:
        raise ImportNotSupported("pytorch-src artifacts cannot be imported")
