"""Built-in layer catalog: parameter schemas, port arities, weight roles,
and per-type output shape rules.

The catalog is compiled-in and immutable after import; the UI toolbox and the
compile kernels are both driven from this single table.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Callable, Optional

from .errors import InvalidParams, ShapeMismatch, UnknownLayerType
from .shape import BATCH, Shape


def _f32(value: float) -> float:
    # Float params live in the artifact's float32 domain; canonicalizing here
    # keeps export -> import an exact identity.
    return struct.unpack("<f", struct.pack("<f", value))[0]


@dataclass(frozen=True)
class ParamSpec:
    name: str
    kind: str                      # "int" | "int-list" | "float" | "bool" | "enum"
    default: object
    min: Optional[float] = None    # numeric lower bound (inclusive)
    max: Optional[float] = None    # numeric upper bound
    max_exclusive: bool = False
    length: Optional[int] = None   # int-list: required length, None = variable
    choices: Optional[tuple] = None  # enum values
    doc: str = ""

    def constraint_text(self) -> str:
        if self.kind == "enum":
            return "one of " + ", ".join(self.choices)
        parts = []
        if self.min is not None:
            parts.append(f">= {self.min:g}")
        if self.max is not None:
            parts.append(("< " if self.max_exclusive else "<= ") + f"{self.max:g}")
        if self.kind == "int-list":
            n = "any" if self.length is None else str(self.length)
            parts.append(f"length {n}")
        return ", ".join(parts)


@dataclass(frozen=True)
class LayerSpec:
    type_name: str
    arity_in: int
    arity_out: int
    param_schema: tuple[ParamSpec, ...] = ()
    # (role name, dims as a function of validated params); order is fixed
    weight_roles_fn: Callable[[dict], list[tuple[str, tuple[int, ...]]]] = lambda p: []
    shape_rule: Callable[[dict, list[Shape]], Shape] = None
    # cross-parameter constraints, returns violation strings
    cross_check: Callable[[dict], list[str]] = lambda p: []
    doc: str = ""

    def defaults(self) -> dict:
        return {ps.name: _copy_value(ps.default) for ps in self.param_schema}

    def weight_roles(self, params: dict) -> list[tuple[str, tuple[int, ...]]]:
        return self.weight_roles_fn(params)


def _copy_value(v):
    return list(v) if isinstance(v, list) else v


# --- parameter validation ----------------------------------------------------

def _check_param(ps: ParamSpec, value) -> list[str]:
    name = ps.name
    if ps.kind == "int":
        if not isinstance(value, int) or isinstance(value, bool):
            return [f"{name} must be an integer"]
        if ps.min is not None and value < ps.min:
            return [f"{name} must be >= {ps.min:g}"]
        if ps.max is not None and value > ps.max:
            return [f"{name} must be <= {ps.max:g}"]
    elif ps.kind == "int-list":
        if not isinstance(value, list) or not all(
            isinstance(v, int) and not isinstance(v, bool) for v in value
        ):
            return [f"{name} must be a list of integers"]
        if ps.length is not None and len(value) != ps.length:
            return [f"{name} must have exactly {ps.length} entries"]
        if ps.length is None and len(value) < 1:
            return [f"{name} must not be empty"]
        if ps.min is not None and any(v < ps.min for v in value):
            return [f"{name} dims must be >= {ps.min:g}"]
    elif ps.kind == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            return [f"{name} must be a number"]
        v = _f32(float(value))  # constraints apply to the canonical float32 value
        if ps.min is not None and v < ps.min:
            return [f"{name} must be >= {ps.min:g}"]
        if ps.max is not None:
            if ps.max_exclusive and v >= ps.max:
                return [f"{name} must be < {ps.max:g}"]
            if not ps.max_exclusive and v > ps.max:
                return [f"{name} must be <= {ps.max:g}"]
    elif ps.kind == "bool":
        if not isinstance(value, bool):
            return [f"{name} must be a boolean"]
    elif ps.kind == "enum":
        if value not in ps.choices:
            return [f"{name} must be one of {', '.join(ps.choices)}"]
    return []


def validate_params(type_name: str, params: dict) -> list[str]:
    """Return all schema violations for the given partial param map.

    Empty list iff every present key is schema-typed and constraint-clean and
    there are no unknown keys. Missing keys are fine (defaults apply)."""
    spec = get_spec(type_name)
    schema = {ps.name: ps for ps in spec.param_schema}
    violations = []
    for key, value in params.items():
        ps = schema.get(key)
        if ps is None:
            violations.append(f"unknown parameter {key!r}")
            continue
        violations.extend(_check_param(ps, value))
    if not violations:
        merged = spec.defaults()
        merged.update(params)
        violations.extend(spec.cross_check(merged))
    return violations


def resolve_params(type_name: str, params: Optional[dict]) -> dict:
    """Merge ``params`` over the catalog defaults, raising on violations."""
    spec = get_spec(type_name)
    violations = validate_params(type_name, params or {})
    if violations:
        raise InvalidParams(violations)
    merged = spec.defaults()
    for key, value in (params or {}).items():
        ps = next(p for p in spec.param_schema if p.name == key)
        if ps.kind == "float":
            value = float(value)
        elif ps.kind == "int-list":
            value = list(value)
        merged[key] = value
    for ps in spec.param_schema:
        if ps.kind == "float":
            merged[ps.name] = _f32(merged[ps.name])
    return merged


# --- shape rules --------------------------------------------------------------

def _spatial_out(size: int, kernel: int, stride: int, pad: int, what: str) -> int:
    out = (size + 2 * pad - kernel) // stride + 1
    if out < 1:
        raise ShapeMismatch(
            f"{what}: window {kernel} (stride {stride}, padding {pad}) "
            f"does not fit input extent {size}"
        )
    return out


def _require_rank(shape: Shape, rank: int, type_name: str) -> None:
    if shape.rank != rank:
        raise ShapeMismatch(f"{type_name} expects a rank-{rank} input, got {shape}")


def _input_rule(params, input_shapes):
    return Shape((BATCH, *params["shape"]))


def _conv2d_rule(params, input_shapes):
    (s,) = input_shapes
    _require_rank(s, 4, "Conv2d")
    if s.dims[1] != params["in_channels"]:
        raise ShapeMismatch(
            f"Conv2d expects {params['in_channels']} input channels, got {s.dims[1]}"
        )
    kh, kw = params["kernel_size"]
    sh, sw = params["stride"]
    ph, pw = params["padding"]
    h = _spatial_out(s.dims[2], kh, sh, ph, "Conv2d height")
    w = _spatial_out(s.dims[3], kw, sw, pw, "Conv2d width")
    return Shape((s.dims[0], params["out_channels"], h, w))


def _pool_rule(type_name):
    def rule(params, input_shapes):
        (s,) = input_shapes
        _require_rank(s, 4, type_name)
        kh, kw = params["kernel_size"]
        sh, sw = params["stride"]
        ph, pw = params["padding"]
        h = _spatial_out(s.dims[2], kh, sh, ph, f"{type_name} height")
        w = _spatial_out(s.dims[3], kw, sw, pw, f"{type_name} width")
        return Shape((s.dims[0], s.dims[1], h, w))
    return rule


def _linear_rule(params, input_shapes):
    (s,) = input_shapes
    if s.rank < 2:
        raise ShapeMismatch(f"Linear expects a rank >= 2 input, got {s}")
    if s.dims[-1] != params["in_features"]:
        raise ShapeMismatch(
            f"Linear expects {params['in_features']} input features, got {s.dims[-1]}"
        )
    return Shape(s.dims[:-1] + (params["out_features"],))


def _flatten_rule(params, input_shapes):
    (s,) = input_shapes
    if s.rank < 2:
        raise ShapeMismatch(f"Flatten expects a rank >= 2 input, got {s}")
    flat = 1
    for d in s.dims[1:]:
        flat *= d
    return Shape((s.dims[0], flat))


def _batchnorm_rule(params, input_shapes):
    (s,) = input_shapes
    _require_rank(s, 4, "BatchNorm2d")
    if s.dims[1] != params["num_features"]:
        raise ShapeMismatch(
            f"BatchNorm2d expects {params['num_features']} channels, got {s.dims[1]}"
        )
    return s


def _elementwise_rule(params, input_shapes):
    (s,) = input_shapes
    return s


def _loss_rule(type_name):
    def rule(params, input_shapes):
        pred, target = input_shapes
        if pred.dims != target.dims:
            raise ShapeMismatch(
                f"{type_name} expects matching prediction/target shapes, "
                f"got {pred} and {target}"
            )
        return Shape((1,))
    return rule


def _binary_rule(type_name):
    def rule(params, input_shapes):
        a, b = input_shapes
        if a.dims != b.dims:
            raise ShapeMismatch(
                f"{type_name} expects matching operand shapes, got {a} and {b}"
            )
        return a
    return rule


def _reduce_all_rule(params, input_shapes):
    (s,) = input_shapes
    return Shape(())


# --- constraint helpers --------------------------------------------------------

def _pool_cross_check(params: dict) -> list[str]:
    # Framework rule: pooling padding must not exceed half the window, else
    # a window can land entirely in padding.
    out = []
    for axis in range(2):
        if params["padding"][axis] > params["kernel_size"][axis] // 2:
            out.append("padding must be at most half of kernel_size")
            break
    return out


def _int_list(name, default, length=2, min_=1, doc=""):
    return ParamSpec(name, "int-list", default, min=min_, length=length, doc=doc)


# --- the table -----------------------------------------------------------------

def _build_catalog() -> dict[str, LayerSpec]:
    specs = [
        LayerSpec(
            "Input", 0, 1,
            (ParamSpec("shape", "int-list", [1, 28, 28], min=1, length=None,
                       doc="channels-first tensor shape, batch excluded"),),
            shape_rule=_input_rule,
            doc="Graph input source; produces (B, *shape).",
        ),
        LayerSpec(
            "Conv2d", 1, 1,
            (
                ParamSpec("in_channels", "int", 1, min=1),
                ParamSpec("out_channels", "int", 1, min=1),
                _int_list("kernel_size", [3, 3]),
                _int_list("stride", [1, 1]),
                _int_list("padding", [0, 0], min_=0),
                ParamSpec("bias", "bool", True),
            ),
            weight_roles_fn=lambda p: (
                [("weight", (p["out_channels"], p["in_channels"],
                             p["kernel_size"][0], p["kernel_size"][1]))]
                + ([("bias", (p["out_channels"],))] if p["bias"] else [])
            ),
            shape_rule=_conv2d_rule,
        ),
        LayerSpec(
            "Linear", 1, 1,
            (
                ParamSpec("in_features", "int", 1, min=1),
                ParamSpec("out_features", "int", 1, min=1),
                ParamSpec("bias", "bool", True),
            ),
            weight_roles_fn=lambda p: (
                [("weight", (p["out_features"], p["in_features"]))]
                + ([("bias", (p["out_features"],))] if p["bias"] else [])
            ),
            shape_rule=_linear_rule,
        ),
        LayerSpec(
            "MaxPool2d", 1, 1,
            (
                _int_list("kernel_size", [2, 2]),
                _int_list("stride", [2, 2]),
                _int_list("padding", [0, 0], min_=0),
            ),
            shape_rule=_pool_rule("MaxPool2d"),
            cross_check=_pool_cross_check,
        ),
        LayerSpec(
            "AvgPool2d", 1, 1,
            (
                _int_list("kernel_size", [2, 2]),
                _int_list("stride", [2, 2]),
                _int_list("padding", [0, 0], min_=0),
            ),
            shape_rule=_pool_rule("AvgPool2d"),
            cross_check=_pool_cross_check,
        ),
        LayerSpec("ReLU", 1, 1, shape_rule=_elementwise_rule),
        LayerSpec("Sigmoid", 1, 1, shape_rule=_elementwise_rule),
        LayerSpec("Tanh", 1, 1, shape_rule=_elementwise_rule),
        LayerSpec(
            "BatchNorm2d", 1, 1,
            (
                ParamSpec("num_features", "int", 1, min=1),
                ParamSpec("eps", "float", 1e-5, min=0.0),
                ParamSpec("momentum", "float", 0.1, min=0.0, max=1.0),
            ),
            weight_roles_fn=lambda p: [
                ("scale", (p["num_features"],)),
                ("bias", (p["num_features"],)),
                ("running_mean", (p["num_features"],)),
                ("running_var", (p["num_features"],)),
            ],
            shape_rule=_batchnorm_rule,
        ),
        LayerSpec(
            "Dropout", 1, 1,
            (ParamSpec("p", "float", 0.5, min=0.0, max=1.0, max_exclusive=True),),
            shape_rule=_elementwise_rule,
        ),
        LayerSpec("Identity", 1, 1, shape_rule=_elementwise_rule),
        LayerSpec(
            "Flatten", 1, 1,
            # ONNX Flatten always produces a 2-D result; with a symbolic batch
            # dim only start_dim == 1 is expressible, so v1 pins it.
            (ParamSpec("start_dim", "int", 1, min=1, max=1),),
            shape_rule=_flatten_rule,
        ),
        LayerSpec(
            "MSELoss", 2, 1,
            (ParamSpec("reduction", "enum", "mean", choices=("mean", "sum")),),
            shape_rule=_loss_rule("MSELoss"),
        ),
        LayerSpec(
            "L1Loss", 2, 1,
            (ParamSpec("reduction", "enum", "mean", choices=("mean", "sum")),),
            shape_rule=_loss_rule("L1Loss"),
        ),
        # Primitive arithmetic ops. Loss nodes compile down to these, and
        # models containing them import as-is instead of being pattern-matched
        # back into loss nodes.
        LayerSpec("Sub", 2, 1, shape_rule=_binary_rule("Sub")),
        LayerSpec("Mul", 2, 1, shape_rule=_binary_rule("Mul")),
        LayerSpec("Abs", 1, 1, shape_rule=_elementwise_rule),
        LayerSpec("ReduceMean", 1, 1, shape_rule=_reduce_all_rule),
        LayerSpec("ReduceSum", 1, 1, shape_rule=_reduce_all_rule),
    ]
    return {s.type_name: s for s in specs}


_CATALOG: dict[str, LayerSpec] = _build_catalog()

LOSS_TYPES = frozenset({"MSELoss", "L1Loss"})


def get_spec(type_name: str) -> LayerSpec:
    spec = _CATALOG.get(type_name)
    if spec is None:
        raise UnknownLayerType(f"unknown layer type {type_name!r}")
    return spec


def type_names() -> list[str]:
    return list(_CATALOG)


def infer_output_shape(type_name: str, params: dict, input_shapes: list[Shape]) -> Shape:
    """Apply the catalog shape rule; raises ShapeMismatch with a readable reason."""
    spec = get_spec(type_name)
    if len(input_shapes) != spec.arity_in:
        raise ShapeMismatch(
            f"{type_name} takes {spec.arity_in} input(s), got {len(input_shapes)}"
        )
    return spec.shape_rule(params, list(input_shapes))


def catalog_document() -> list[dict]:
    """Machine-readable catalog for the toolbox UI (GET /api/catalog)."""
    doc = []
    for spec in _CATALOG.values():
        entry = {
            "type": spec.type_name,
            "arityIn": spec.arity_in,
            "arityOut": spec.arity_out,
            "params": [
                {
                    "name": ps.name,
                    "kind": ps.kind,
                    "default": _copy_value(ps.default),
                    "constraint": ps.constraint_text(),
                    **({"choices": list(ps.choices)} if ps.choices else {}),
                }
                for ps in spec.param_schema
            ],
            "weightRoles": [r for r, _ in spec.weight_roles(spec.defaults())],
        }
        doc.append(entry)
    return doc
