"""ONNX model protobuf messages, built at import time from runtime descriptors.

Field numbers and wire types follow the public ONNX schema exactly, so the
bytes produced here are ordinary ONNX files that any ONNX tool can read, and
files produced by other tools parse here. Only the message subset this kernel
needs is declared; unknown fields in foreign models are preserved by the
protobuf runtime and ignored.
"""
from __future__ import annotations

from google.protobuf import descriptor_pb2, descriptor_pool, message_factory

_F = descriptor_pb2.FieldDescriptorProto

# TensorProto.DataType values
FLOAT = 1

# AttributeProto.AttributeType values
ATTR_FLOAT = 1
ATTR_INT = 2
ATTR_STRING = 3
ATTR_FLOATS = 6
ATTR_INTS = 7
ATTR_STRINGS = 8


def _message(fdp, name):
    m = fdp.message_type.add()
    m.name = name
    return m


def _field(msg, name, number, ftype, label=_F.LABEL_OPTIONAL,
           type_name=None, oneof=None, packed=None):
    f = msg.field.add()
    f.name = name
    f.number = number
    f.type = ftype
    f.label = label
    if type_name is not None:
        f.type_name = type_name
    if oneof is not None:
        f.oneof_index = oneof
    if packed is not None:
        f.options.packed = packed


def _build_file() -> descriptor_pb2.FileDescriptorProto:
    fdp = descriptor_pb2.FileDescriptorProto()
    fdp.name = "sketch/onnx.proto"
    fdp.package = "onnx"
    fdp.syntax = "proto3"

    att = _message(fdp, "AttributeProto")
    _field(att, "name", 1, _F.TYPE_STRING)
    _field(att, "f", 2, _F.TYPE_FLOAT)
    _field(att, "i", 3, _F.TYPE_INT64)
    _field(att, "s", 4, _F.TYPE_BYTES)
    _field(att, "t", 5, _F.TYPE_MESSAGE, type_name=".onnx.TensorProto")
    _field(att, "floats", 7, _F.TYPE_FLOAT, _F.LABEL_REPEATED, packed=True)
    _field(att, "ints", 8, _F.TYPE_INT64, _F.LABEL_REPEATED, packed=True)
    _field(att, "strings", 9, _F.TYPE_BYTES, _F.LABEL_REPEATED)
    _field(att, "type", 20, _F.TYPE_INT32)

    vi = _message(fdp, "ValueInfoProto")
    _field(vi, "name", 1, _F.TYPE_STRING)
    _field(vi, "type", 2, _F.TYPE_MESSAGE, type_name=".onnx.TypeProto")
    _field(vi, "doc_string", 3, _F.TYPE_STRING)

    node = _message(fdp, "NodeProto")
    _field(node, "input", 1, _F.TYPE_STRING, _F.LABEL_REPEATED)
    _field(node, "output", 2, _F.TYPE_STRING, _F.LABEL_REPEATED)
    _field(node, "name", 3, _F.TYPE_STRING)
    _field(node, "op_type", 4, _F.TYPE_STRING)
    _field(node, "attribute", 5, _F.TYPE_MESSAGE, _F.LABEL_REPEATED,
           type_name=".onnx.AttributeProto")
    _field(node, "doc_string", 6, _F.TYPE_STRING)
    _field(node, "domain", 7, _F.TYPE_STRING)

    sse = _message(fdp, "StringStringEntryProto")
    _field(sse, "key", 1, _F.TYPE_STRING)
    _field(sse, "value", 2, _F.TYPE_STRING)

    tensor = _message(fdp, "TensorProto")
    _field(tensor, "dims", 1, _F.TYPE_INT64, _F.LABEL_REPEATED, packed=True)
    _field(tensor, "data_type", 2, _F.TYPE_INT32)
    _field(tensor, "float_data", 4, _F.TYPE_FLOAT, _F.LABEL_REPEATED, packed=True)
    _field(tensor, "int32_data", 5, _F.TYPE_INT32, _F.LABEL_REPEATED, packed=True)
    _field(tensor, "int64_data", 7, _F.TYPE_INT64, _F.LABEL_REPEATED, packed=True)
    _field(tensor, "name", 8, _F.TYPE_STRING)
    _field(tensor, "raw_data", 9, _F.TYPE_BYTES)
    _field(tensor, "double_data", 10, _F.TYPE_DOUBLE, _F.LABEL_REPEATED, packed=True)

    shp = _message(fdp, "TensorShapeProto")
    dim = shp.nested_type.add()
    dim.name = "Dimension"
    dim.oneof_decl.add().name = "value"
    _field(dim, "dim_value", 1, _F.TYPE_INT64, oneof=0)
    _field(dim, "dim_param", 2, _F.TYPE_STRING, oneof=0)
    _field(dim, "denotation", 3, _F.TYPE_STRING)
    _field(shp, "dim", 1, _F.TYPE_MESSAGE, _F.LABEL_REPEATED,
           type_name=".onnx.TensorShapeProto.Dimension")

    tp = _message(fdp, "TypeProto")
    tt = tp.nested_type.add()
    tt.name = "Tensor"
    _field(tt, "elem_type", 1, _F.TYPE_INT32)
    _field(tt, "shape", 2, _F.TYPE_MESSAGE, type_name=".onnx.TensorShapeProto")
    tp.oneof_decl.add().name = "value"
    _field(tp, "tensor_type", 1, _F.TYPE_MESSAGE,
           type_name=".onnx.TypeProto.Tensor", oneof=0)
    _field(tp, "denotation", 6, _F.TYPE_STRING)

    osi = _message(fdp, "OperatorSetIdProto")
    _field(osi, "domain", 1, _F.TYPE_STRING)
    _field(osi, "version", 2, _F.TYPE_INT64)

    graph = _message(fdp, "GraphProto")
    _field(graph, "node", 1, _F.TYPE_MESSAGE, _F.LABEL_REPEATED,
           type_name=".onnx.NodeProto")
    _field(graph, "name", 2, _F.TYPE_STRING)
    _field(graph, "initializer", 5, _F.TYPE_MESSAGE, _F.LABEL_REPEATED,
           type_name=".onnx.TensorProto")
    _field(graph, "doc_string", 10, _F.TYPE_STRING)
    _field(graph, "input", 11, _F.TYPE_MESSAGE, _F.LABEL_REPEATED,
           type_name=".onnx.ValueInfoProto")
    _field(graph, "output", 12, _F.TYPE_MESSAGE, _F.LABEL_REPEATED,
           type_name=".onnx.ValueInfoProto")
    _field(graph, "value_info", 13, _F.TYPE_MESSAGE, _F.LABEL_REPEATED,
           type_name=".onnx.ValueInfoProto")

    model = _message(fdp, "ModelProto")
    _field(model, "ir_version", 1, _F.TYPE_INT64)
    _field(model, "producer_name", 2, _F.TYPE_STRING)
    _field(model, "producer_version", 3, _F.TYPE_STRING)
    _field(model, "domain", 4, _F.TYPE_STRING)
    _field(model, "model_version", 5, _F.TYPE_INT64)
    _field(model, "doc_string", 6, _F.TYPE_STRING)
    _field(model, "graph", 7, _F.TYPE_MESSAGE, type_name=".onnx.GraphProto")
    _field(model, "opset_import", 8, _F.TYPE_MESSAGE, _F.LABEL_REPEATED,
           type_name=".onnx.OperatorSetIdProto")
    _field(model, "metadata_props", 14, _F.TYPE_MESSAGE, _F.LABEL_REPEATED,
           type_name=".onnx.StringStringEntryProto")

    return fdp


_POOL = descriptor_pool.DescriptorPool()
_POOL.Add(_build_file())


def _cls(name: str):
    return message_factory.GetMessageClass(_POOL.FindMessageTypeByName("onnx." + name))


AttributeProto = _cls("AttributeProto")
ValueInfoProto = _cls("ValueInfoProto")
NodeProto = _cls("NodeProto")
StringStringEntryProto = _cls("StringStringEntryProto")
TensorProto = _cls("TensorProto")
TensorShapeProto = _cls("TensorShapeProto")
TypeProto = _cls("TypeProto")
OperatorSetIdProto = _cls("OperatorSetIdProto")
GraphProto = _cls("GraphProto")
ModelProto = _cls("ModelProto")


def attr_int(name: str, value: int):
    a = AttributeProto()
    a.name = name
    a.type = ATTR_INT
    a.i = value
    return a


def attr_float(name: str, value: float):
    a = AttributeProto()
    a.name = name
    a.type = ATTR_FLOAT
    a.f = value
    return a


def attr_ints(name: str, values):
    a = AttributeProto()
    a.name = name
    a.type = ATTR_INTS
    a.ints.extend(values)
    return a


def tensor_value_info(name: str, dims) -> "ValueInfoProto":
    """Float tensor ValueInfo; string dims become symbolic dim_params."""
    vi = ValueInfoProto()
    vi.name = name
    vi.type.tensor_type.elem_type = FLOAT
    shape = vi.type.tensor_type.shape
    shape.SetInParent()
    for d in dims:
        dim = shape.dim.add()
        if isinstance(d, str):
            dim.dim_param = d
        else:
            dim.dim_value = d
    return vi
