"""Bidirectional ONNX kernel: graph -> ModelProto bytes and back.

Targets opset 13, IR version 7. Canvas layout and grouping ride along in
model metadata so a round trip restores the sketch, not just the math.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from typing import Optional

from .. import catalog
from ..errors import MalformedArtifact, UnsupportedLayer, UnsupportedOperator, UnsupportedOpset
from ..graph import Graph
from ..shape import BATCH, Shape
from ..weights import TensorValue
from . import CompileResult, KernelDescriptor, materialized_weights
from . import onnx_proto as op

KERNEL_ID = "onnx"
DEFAULT_OPSET = 13
MIN_OPSET, MAX_OPSET = 13, 17  # same emission is valid across this range
IR_VERSION = 7
BATCH_DIM = "batch"

POSITIONS_KEY = "sketch.positions"
GROUPS_KEY = "sketch.groups"
SEED_KEY = "sketch.seed"

ONNX_DESCRIPTOR = KernelDescriptor(
    kernel_id=KERNEL_ID,
    capabilities={"export": True, "import": True},
    artifact_extension="onnx",
)

# layer type -> ONNX op_type for the 1:1 part of the table
DIRECT_EXPORT = {
    "Conv2d": "Conv",
    "Linear": "Gemm",
    "MaxPool2d": "MaxPool",
    "AvgPool2d": "AveragePool",
    "ReLU": "Relu",
    "Sigmoid": "Sigmoid",
    "Tanh": "Tanh",
    "BatchNorm2d": "BatchNormalization",
    "Dropout": "Dropout",
    "Identity": "Identity",
    "Flatten": "Flatten",
    "Sub": "Sub",
    "Mul": "Mul",
    "Abs": "Abs",
    "ReduceMean": "ReduceMean",
    "ReduceSum": "ReduceSum",
}


@dataclass
class LoweredOp:
    name: str
    op_type: str
    inputs: list[str]
    output: str
    attrs: list = field(default_factory=list)       # AttributeProto, emission order
    output_dims: Optional[tuple] = None             # ints and "batch", or None


@dataclass
class Plan:
    input_name: str
    input_dims: tuple
    ops: list[LoweredOp]
    initializers: list[tuple[str, TensorValue]]
    output_name: str
    output_dims: Optional[tuple]
    input_shape: Shape


def _node_name(node) -> str:
    return f"{node.layer_type}_{node.id}"


def _wire_dims(shape: Optional[Shape]) -> Optional[tuple]:
    if shape is None:
        return None
    return tuple(BATCH_DIM if d == BATCH else d for d in shape.dims)


def _scalar_tensor(value: float) -> TensorValue:
    return TensorValue(role="ratio", dtype="float32", dims=(),
                       data=struct.pack("<f", value))


def _lower(graph: Graph, weights: Optional[dict]) -> Plan:
    """Shared lowering for export and text rendering.

    ``weights`` is the per-node materialized tensor map, or None when only
    structure is needed; shapes are best-effort (None when inference fails).
    """
    order = graph.topo_sort()
    try:
        shapes = graph.infer_shapes()
    except Exception:
        shapes = {}

    source = next((i for i in order if not graph.nodes[i].prior), None)
    input_node = graph.nodes[source] if source is not None else None
    out_value = {i: _node_name(graph.nodes[i]) + "_out" for i in order}

    ops: list[LoweredOp] = []
    initializers: list[tuple[str, TensorValue]] = []

    for node_id in order:
        node = graph.nodes[node_id]
        if node_id == source and node.layer_type == "Input":
            continue
        name = _node_name(node)
        inputs = [out_value[p] for p in node.prior]
        dims = _wire_dims(shapes.get(node_id))
        tensors = (weights or {}).get(node_id, {})

        def init_name(role: str) -> str:
            return f"{name}.{role}"

        def add_init(role: str) -> str:
            tv = tensors.get(role)
            if tv is None:
                # text rendering without materialization
                return init_name(role)
            initializers.append((init_name(role), tv))
            return init_name(role)

        t = node.layer_type
        if t == "Conv2d":
            attrs = [
                op.attr_ints("dilations", [1, 1]),
                op.attr_int("group", 1),
                op.attr_ints("kernel_shape", node.params["kernel_size"]),
                op.attr_ints("pads", [node.params["padding"][0],
                                      node.params["padding"][1],
                                      node.params["padding"][0],
                                      node.params["padding"][1]]),
                op.attr_ints("strides", node.params["stride"]),
            ]
            ins = inputs + [add_init("weight")]
            if node.params["bias"]:
                ins.append(add_init("bias"))
            ops.append(LoweredOp(name, "Conv", ins, out_value[node_id], attrs, dims))
        elif t == "Linear":
            attrs = [
                op.attr_float("alpha", 1.0),
                op.attr_float("beta", 1.0),
                op.attr_int("transB", 1),
            ]
            ins = inputs + [add_init("weight")]
            if node.params["bias"]:
                ins.append(add_init("bias"))
            ops.append(LoweredOp(name, "Gemm", ins, out_value[node_id], attrs, dims))
        elif t in ("MaxPool2d", "AvgPool2d"):
            attrs = []
            if t == "AvgPool2d":
                # match the framework default of counting padded cells
                attrs.append(op.attr_int("count_include_pad", 1))
            attrs += [
                op.attr_ints("kernel_shape", node.params["kernel_size"]),
                op.attr_ints("pads", [node.params["padding"][0],
                                      node.params["padding"][1],
                                      node.params["padding"][0],
                                      node.params["padding"][1]]),
                op.attr_ints("strides", node.params["stride"]),
            ]
            ops.append(LoweredOp(name, DIRECT_EXPORT[t], inputs,
                                 out_value[node_id], attrs, dims))
        elif t == "BatchNorm2d":
            attrs = [
                op.attr_float("epsilon", node.params["eps"]),
                op.attr_float("momentum", node.params["momentum"]),
            ]
            ins = inputs + [add_init("scale"), add_init("bias"),
                            add_init("running_mean"), add_init("running_var")]
            ops.append(LoweredOp(name, "BatchNormalization", ins,
                                 out_value[node_id], attrs, dims))
        elif t == "Dropout":
            ratio_name = f"{name}.ratio"
            initializers.append((ratio_name, _scalar_tensor(node.params["p"])))
            ops.append(LoweredOp(name, "Dropout", inputs + [ratio_name],
                                 out_value[node_id], [], dims))
        elif t == "Flatten":
            attrs = [op.attr_int("axis", node.params["start_dim"])]
            ops.append(LoweredOp(name, "Flatten", inputs, out_value[node_id],
                                 attrs, dims))
        elif t in ("ReLU", "Sigmoid", "Tanh", "Identity", "Sub", "Mul", "Abs"):
            ops.append(LoweredOp(name, DIRECT_EXPORT[t], inputs,
                                 out_value[node_id], [], dims))
        elif t in ("ReduceMean", "ReduceSum"):
            attrs = [op.attr_int("keepdims", 0)]
            ops.append(LoweredOp(name, DIRECT_EXPORT[t], inputs,
                                 out_value[node_id], attrs, dims))
        elif t in ("MSELoss", "L1Loss"):
            # composite: Sub -> (Mul | Abs) -> ReduceMean/ReduceSum
            pred_dims = _wire_dims(shapes.get(node.prior[0])) if node.prior else None
            diff = f"{name}_diff"
            ops.append(LoweredOp(f"{name}_sub", "Sub", inputs, diff,
                                 [], pred_dims))
            if t == "MSELoss":
                mid = f"{name}_sq"
                ops.append(LoweredOp(f"{name}_mul", "Mul", [diff, diff], mid,
                                     [], pred_dims))
            else:
                mid = f"{name}_abs"
                ops.append(LoweredOp(f"{name}_abs", "Abs", [diff], mid,
                                     [], pred_dims))
            reduce_op = "ReduceMean" if node.params["reduction"] == "mean" else "ReduceSum"
            ops.append(LoweredOp(f"{name}_reduce", reduce_op, [mid],
                                 out_value[node_id], [op.attr_int("keepdims", 0)],
                                 ()))
        else:
            raise UnsupportedLayer(KERNEL_ID, t)

    if input_node is not None and input_node.layer_type == "Input":
        input_name = out_value[input_node.id]
        input_dims = (BATCH_DIM, *input_node.params["shape"])
        input_shape = Shape((BATCH, *input_node.params["shape"]))
    else:
        input_name, input_dims, input_shape = "input", (), None

    if order:
        sink = next(i for i in order if not graph.nodes[i].next)
        output_name = out_value[sink]
        if graph.nodes[sink].layer_type in catalog.LOSS_TYPES:
            output_dims = ()  # the reduce emits a rank-0 scalar
        else:
            output_dims = _wire_dims(shapes.get(sink))
    else:
        output_name, output_dims = "", None

    return Plan(input_name, input_dims, ops, initializers,
                output_name, output_dims, input_shape)


def _positions_metadata(graph: Graph) -> str:
    return json.dumps(
        {i: [graph.nodes[i].position[0], graph.nodes[i].position[1]]
         for i in sorted(graph.nodes, key=lambda x: int(x[1:]))},
        sort_keys=True, separators=(",", ":"))


def _groups_metadata(graph: Graph) -> str:
    return json.dumps(
        [{"name": g.name, "members": list(g.members)}
         for g in sorted(graph.groups.values(), key=lambda g: int(g.id[1:]))],
        separators=(",", ":"))


class OnnxKernel:
    def export(self, graph: Graph, opset: Optional[int]) -> CompileResult:
        opset = DEFAULT_OPSET if opset is None else int(opset)
        if not MIN_OPSET <= opset <= MAX_OPSET:
            raise UnsupportedOpset(
                f"onnx kernel supports opsets {MIN_OPSET}..{MAX_OPSET}, got {opset}")
        weights = materialized_weights(graph)
        plan = _lower(graph, weights)

        model = op.ModelProto()
        model.ir_version = IR_VERSION
        model.producer_name = "sketch"
        model.producer_version = "0.1.0"
        opset_id = model.opset_import.add()
        opset_id.domain = ""
        opset_id.version = opset

        g = model.graph
        g.name = "main"
        g.input.append(op.tensor_value_info(plan.input_name, plan.input_dims))
        for lowered in plan.ops:
            n = g.node.add()
            n.name = lowered.name
            n.op_type = lowered.op_type
            n.input.extend(lowered.inputs)
            n.output.append(lowered.output)
            for a in lowered.attrs:
                n.attribute.append(a)
            if lowered.output != plan.output_name and lowered.output_dims is not None:
                g.value_info.append(
                    op.tensor_value_info(lowered.output, lowered.output_dims))
        for name, tv in plan.initializers:
            t = g.initializer.add()
            t.name = name
            t.data_type = op.FLOAT
            t.dims.extend(tv.dims)
            t.raw_data = tv.data
        out_dims = plan.output_dims if plan.output_dims is not None else plan.input_dims
        g.output.append(op.tensor_value_info(plan.output_name or plan.input_name,
                                             out_dims))

        for key, value in (
            (POSITIONS_KEY, _positions_metadata(graph)),
            (GROUPS_KEY, _groups_metadata(graph)),
            (SEED_KEY, str(graph.seed)),
        ):
            entry = model.metadata_props.add()
            entry.key = key
            entry.value = value

        artifact = model.SerializeToString(deterministic=True)
        return CompileResult(
            artifact_bytes=artifact,
            text_repr=_render_text(plan, opset),
            diagnostics=[],
            input_shape=plan.input_shape,
        )

    def to_text(self, graph: Graph) -> str:
        return _render_text(_lower(graph, None), DEFAULT_OPSET)

    def import_model(self, data: bytes) -> Graph:
        return _import(data)


def _render_text(plan: Plan, opset: int) -> str:
    lines = [
        f"# kernel onnx, opset {opset}, ir {IR_VERSION}",
        f"# input {plan.input_name} {_dims_str(plan.input_dims)}"
        if plan.input_shape is not None else "# input -",
        f"# compute nodes: {len(plan.ops)}",
    ]
    for lowered in plan.ops:
        attrs = " ".join(_attr_str(a) for a in lowered.attrs)
        attrs = f" {attrs}" if attrs else ""
        lines.append(
            f"{lowered.name}: {lowered.op_type}({', '.join(lowered.inputs)})"
            f"{attrs} -> {lowered.output} {_dims_str(lowered.output_dims)}")
    return "\n".join(lines) + "\n"


def _dims_str(dims: Optional[tuple]) -> str:
    if dims is None:
        return "[?]"
    return "[" + ",".join("B" if d == BATCH_DIM else str(d) for d in dims) + "]"


def _attr_str(a) -> str:
    if a.type == op.ATTR_INT:
        return f"{a.name}={a.i}"
    if a.type == op.ATTR_FLOAT:
        return f"{a.name}={a.f:g}"
    if a.type == op.ATTR_INTS:
        return f"{a.name}=[{','.join(str(v) for v in a.ints)}]"
    return a.name


# --- import ------------------------------------------------------------------


def _tensor_value(t) -> Optional[TensorValue]:
    """TensorProto -> TensorValue; None when the element type is not float32."""
    if t.data_type != op.FLOAT:
        return None
    dims = tuple(int(d) for d in t.dims)
    if t.raw_data:
        data = bytes(t.raw_data)
    else:
        data = struct.pack(f"<{len(t.float_data)}f", *t.float_data)
    return TensorValue(role="", dtype="float32", dims=dims, data=data)


def _attr_map(node) -> dict:
    return {a.name: a for a in node.attribute}


def _require_ints(attrs: dict, name: str, default: Optional[list], op_type: str) -> list:
    a = attrs.get(name)
    if a is None:
        if default is None:
            raise UnsupportedOperator(op_type, f"missing attribute {name}")
        return list(default)
    return [int(v) for v in a.ints]


def _symmetric_pads(pads: list, op_type: str) -> list:
    if len(pads) != 4 or pads[0] != pads[2] or pads[1] != pads[3]:
        raise UnsupportedOperator(op_type, f"asymmetric pads {pads}")
    return [pads[0], pads[1]]


def _check_attrs(node, allowed: set) -> None:
    for a in node.attribute:
        if a.name not in allowed:
            raise UnsupportedOperator(node.op_type, f"attribute {a.name} unsupported")


def _import(data: bytes) -> Graph:
    model = op.ModelProto()
    try:
        model.ParseFromString(data)
    except Exception as exc:
        raise MalformedArtifact(f"not a valid model protobuf: {exc}") from None
    if not model.HasField("graph"):
        raise MalformedArtifact("model has no graph")
    g = model.graph

    initializers: dict[str, TensorValue] = {}
    raw_initializers: dict[str, object] = {}
    for t in g.initializer:
        raw_initializers[t.name] = t
        tv = _tensor_value(t)
        if tv is not None:
            initializers[t.name] = tv

    real_inputs = [vi for vi in g.input if vi.name not in raw_initializers]
    if len(real_inputs) != 1:
        raise MalformedArtifact(
            f"expected exactly one graph input, found {len(real_inputs)}")
    if len(g.output) != 1:
        raise MalformedArtifact(
            f"expected exactly one graph output, found {len(g.output)}")

    metadata = {e.key: e.value for e in model.metadata_props}
    positions = _parse_positions(metadata.get(POSITIONS_KEY))
    seed = _parse_seed(metadata.get(SEED_KEY))

    graph = Graph(seed=seed)

    # pass 1: create nodes
    input_vi = real_inputs[0]
    input_old_id = _old_id(input_vi.name.removesuffix("_out"))
    producer: dict[str, str] = {}  # value name -> sketch node id
    slot = 0

    def place(old_id: Optional[str]) -> tuple[float, float]:
        nonlocal slot
        if old_id is not None and old_id in positions:
            return tuple(positions[old_id])
        pos = (120.0 + 200.0 * (slot % 6), 100.0 + 140.0 * (slot // 6))
        slot += 1
        return pos

    old_to_new: dict[str, str] = {}
    input_shape = _input_shape_dims(input_vi)
    node_id = graph.add_node("Input", {"shape": input_shape}, place(input_old_id))
    producer[input_vi.name] = node_id
    if input_old_id is not None:
        old_to_new[input_old_id] = node_id

    edges: list[tuple[str, str]] = []  # (value name, consumer sketch id)

    for n in g.node:
        layer_type, params, weight_inputs = _map_operator(n, initializers)
        old_id = _old_id(n.name)
        new_id = graph.add_node(layer_type, params, place(old_id))
        if old_id is not None:
            old_to_new[old_id] = new_id
        node = graph.nodes[new_id]
        for role, value_name in weight_inputs:
            tv = initializers[value_name]
            node.weights[role] = TensorValue(role, tv.dtype, tv.dims, tv.data)
        arity = catalog.get_spec(layer_type).arity_in
        activations = list(n.input)[:arity]
        if len(set(activations)) != len(activations):
            # e.g. Mul(x, x): parallel edges are not representable on the canvas
            raise UnsupportedOperator(
                n.op_type, "an operand is consumed twice; parallel edges are "
                "not representable")
        for value_name in activations:
            edges.append((value_name, new_id))
        if len(n.output) != 1:
            raise UnsupportedOperator(n.op_type, "multiple outputs")
        producer[n.output[0]] = new_id

    # pass 2: connect
    for value_name, consumer in edges:
        src = producer.get(value_name)
        if src is None:
            raise MalformedArtifact(f"value {value_name!r} has no producer")
        graph.connect(src, consumer)

    _restore_groups(graph, metadata.get(GROUPS_KEY), old_to_new)
    return graph


def _map_operator(n, initializers: dict) -> tuple[str, dict, list[tuple[str, str]]]:
    """ONNX node -> (layer type, params, [(role, initializer name)]).

    Rejects any attribute configuration the inverse table cannot represent,
    so imports stay unambiguous."""
    op_type = n.op_type
    attrs = _attr_map(n)

    def weight(idx: int, role: str) -> tuple[str, str]:
        name = n.input[idx]
        if name not in initializers:
            raise UnsupportedOperator(
                op_type, f"input {name!r} must be a float32 initializer")
        return (role, name)

    if op_type == "Conv":
        _check_attrs(n, {"dilations", "group", "kernel_shape", "pads", "strides",
                         "auto_pad"})
        if "auto_pad" in attrs and attrs["auto_pad"].s not in (b"", b"NOTSET"):
            raise UnsupportedOperator(op_type, "auto_pad")
        if "group" in attrs and attrs["group"].i != 1:
            raise UnsupportedOperator(op_type, "grouped convolution")
        dil = _require_ints(attrs, "dilations", [1, 1], op_type)
        if any(d != 1 for d in dil):
            raise UnsupportedOperator(op_type, "dilation != 1")
        if len(n.input) not in (2, 3):
            raise UnsupportedOperator(op_type, "expected 2 or 3 inputs")
        w = initializers.get(n.input[1])
        if w is None or len(w.dims) != 4:
            raise UnsupportedOperator(op_type, "weight must be a 4-d float32 initializer")
        kernel = _require_ints(attrs, "kernel_shape", list(w.dims[2:]), op_type)
        if tuple(kernel) != w.dims[2:]:
            raise UnsupportedOperator(op_type, "kernel_shape and weight dims disagree")
        params = {
            "in_channels": w.dims[1],
            "out_channels": w.dims[0],
            "kernel_size": kernel,
            "stride": _require_ints(attrs, "strides", [1, 1], op_type),
            "padding": _symmetric_pads(
                _require_ints(attrs, "pads", [0, 0, 0, 0], op_type), op_type),
            "bias": len(n.input) == 3,
        }
        weights = [weight(1, "weight")] + ([weight(2, "bias")] if len(n.input) == 3 else [])
        return "Conv2d", params, weights

    if op_type == "Gemm":
        _check_attrs(n, {"alpha", "beta", "transA", "transB"})
        if attrs.get("transB") is None or attrs["transB"].i != 1:
            raise UnsupportedOperator(op_type, "requires transB=1")
        if "transA" in attrs and attrs["transA"].i != 0:
            raise UnsupportedOperator(op_type, "transA unsupported")
        for name in ("alpha", "beta"):
            if name in attrs and abs(attrs[name].f - 1.0) > 1e-9:
                raise UnsupportedOperator(op_type, f"{name} != 1")
        w = initializers.get(n.input[1]) if len(n.input) >= 2 else None
        if w is None or len(w.dims) != 2:
            raise UnsupportedOperator(op_type, "weight must be a 2-d float32 initializer")
        params = {
            "in_features": w.dims[1],
            "out_features": w.dims[0],
            "bias": len(n.input) == 3,
        }
        weights = [weight(1, "weight")] + ([weight(2, "bias")] if len(n.input) == 3 else [])
        return "Linear", params, weights

    if op_type in ("MaxPool", "AveragePool"):
        allowed = {"kernel_shape", "pads", "strides", "ceil_mode", "auto_pad",
                   "storage_order", "dilations", "count_include_pad"}
        _check_attrs(n, allowed)
        if "auto_pad" in attrs and attrs["auto_pad"].s not in (b"", b"NOTSET"):
            raise UnsupportedOperator(op_type, "auto_pad")
        for flag in ("ceil_mode", "storage_order"):
            if flag in attrs and attrs[flag].i != 0:
                raise UnsupportedOperator(op_type, flag)
        if "dilations" in attrs and any(d != 1 for d in attrs["dilations"].ints):
            raise UnsupportedOperator(op_type, "dilation != 1")
        kernel = _require_ints(attrs, "kernel_shape", None, op_type)
        pads = _symmetric_pads(
            _require_ints(attrs, "pads", [0, 0, 0, 0], op_type), op_type)
        if op_type == "AveragePool":
            include = attrs.get("count_include_pad")
            if (include is None or include.i != 1) and any(p != 0 for p in pads):
                raise UnsupportedOperator(op_type, "count_include_pad=0 with padding")
        params = {
            "kernel_size": kernel,
            "stride": _require_ints(attrs, "strides", [1, 1], op_type),
            "padding": pads,
        }
        return ("MaxPool2d" if op_type == "MaxPool" else "AvgPool2d"), params, []

    if op_type == "BatchNormalization":
        _check_attrs(n, {"epsilon", "momentum", "spatial"})
        if "spatial" in attrs and attrs["spatial"].i != 1:
            raise UnsupportedOperator(op_type, "non-spatial mode")
        if len(n.input) != 5:
            raise UnsupportedOperator(op_type, "expected 5 inputs")
        scale = initializers.get(n.input[1])
        if scale is None or len(scale.dims) != 1:
            raise UnsupportedOperator(op_type, "scale must be a 1-d float32 initializer")
        params = {
            "num_features": scale.dims[0],
            "eps": attrs["epsilon"].f if "epsilon" in attrs else 1e-5,
            "momentum": attrs["momentum"].f if "momentum" in attrs else 0.9,
        }
        weights = [weight(1, "scale"), weight(2, "bias"),
                   weight(3, "running_mean"), weight(4, "running_var")]
        return "BatchNorm2d", params, weights

    if op_type == "Dropout":
        _check_attrs(n, {"ratio", "seed"})
        if len(n.input) > 2:
            raise UnsupportedOperator(op_type, "training_mode input")
        p = 0.5
        if "ratio" in attrs:  # pre-opset-12 form
            p = attrs["ratio"].f
        elif len(n.input) == 2:
            ratio = initializers.get(n.input[1])
            if ratio is None or ratio.dims not in ((), (1,)):
                raise UnsupportedOperator(op_type, "ratio must be a scalar initializer")
            p = struct.unpack("<f", ratio.data[:4])[0]
        return "Dropout", {"p": p}, []

    if op_type == "Flatten":
        _check_attrs(n, {"axis"})
        axis = attrs["axis"].i if "axis" in attrs else 1
        if axis != 1:
            raise UnsupportedOperator(op_type, f"axis {axis} (only 1 supported)")
        return "Flatten", {"start_dim": 1}, []

    if op_type in ("Relu", "Sigmoid", "Tanh", "Identity", "Sub", "Mul", "Abs"):
        _check_attrs(n, set())
        name = {"Relu": "ReLU"}.get(op_type, op_type)
        return name, {}, []

    if op_type in ("ReduceMean", "ReduceSum"):
        _check_attrs(n, {"keepdims", "axes", "noop_with_empty_axes"})
        if "axes" in attrs and list(attrs["axes"].ints):
            raise UnsupportedOperator(op_type, "partial reduction (axes)")
        if len(n.input) > 1:
            raise UnsupportedOperator(op_type, "axes input")
        if "noop_with_empty_axes" in attrs and attrs["noop_with_empty_axes"].i != 0:
            raise UnsupportedOperator(op_type, "noop_with_empty_axes")
        if "keepdims" not in attrs or attrs["keepdims"].i != 0:
            raise UnsupportedOperator(op_type, "requires keepdims=0")
        return op_type, {}, []

    raise UnsupportedOperator(op_type)


def _old_id(name: str) -> Optional[str]:
    if not name:
        return None
    tail = name.rsplit("_", 1)[-1]
    if tail.startswith("n") and tail[1:].isdigit():
        return tail
    return None


def _input_shape_dims(vi) -> list[int]:
    tt = vi.type.tensor_type
    if tt.elem_type != op.FLOAT:
        raise UnsupportedOperator("graph input", "only float32 inputs supported")
    dims = []
    for i, d in enumerate(tt.shape.dim):
        which = d.WhichOneof("value")
        if i == 0:
            continue  # leading dim is the batch, symbolic or not
        if which != "dim_value" or d.dim_value < 1:
            raise UnsupportedOperator(
                "graph input", "non-leading dims must be concrete and positive")
        dims.append(int(d.dim_value))
    if not dims:
        raise UnsupportedOperator("graph input", "input must have rank >= 2")
    return dims


def _parse_positions(raw: Optional[str]) -> dict:
    if not raw:
        return {}
    try:
        doc = json.loads(raw)
        return {k: [float(v[0]), float(v[1])] for k, v in doc.items()}
    except Exception:
        return {}


def _parse_seed(raw: Optional[str]) -> int:
    try:
        return int(raw) if raw else 0
    except ValueError:
        return 0


def _restore_groups(graph: Graph, raw: Optional[str], old_to_new: dict) -> None:
    if not raw:
        return
    try:
        entries = json.loads(raw)
    except Exception:
        return
    for entry in entries:
        try:
            members = [old_to_new[m] for m in entry["members"]]
            graph.group_nodes(members, entry.get("name", "group"))
        except Exception:
            continue  # stale metadata never blocks an import
