"""Abstract network graph: adjacency-list DAG of layer nodes.

This is the single source of truth for one canvas. All structural mutations
live here and give strong exception safety: a call that raises leaves the
graph exactly as it was.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Callable, Optional

from . import catalog
from .errors import (
    AlreadyGrouped,
    CycleDetected,
    DuplicateEdge,
    MissingInputShape,
    MultipleSources,
    NotAChain,
    SelfLoop,
    ShapeMismatch,
    UnknownEdge,
    UnknownGroup,
    UnknownNode,
    WouldCreateCycle,
)
from .shape import Shape
from .weights import TensorValue, content_hash

DOCUMENT_FORMAT = "sketch-project"
DOCUMENT_VERSION = "1.0"


@dataclass
class Node:
    id: str
    layer_type: str
    params: dict
    position: tuple[float, float]
    prior: list[str] = field(default_factory=list)
    next: list[str] = field(default_factory=list)
    group: Optional[str] = None
    weights: dict[str, TensorValue] = field(default_factory=dict)


@dataclass
class Group:
    id: str
    name: str
    members: list[str]


@dataclass(frozen=True)
class Diagnostic:
    """A pre-compile finding; diagnostics are data, not exceptions."""

    kind: str
    message: str
    node_id: Optional[str] = None

    def to_json(self) -> dict:
        out = {"kind": self.kind, "message": self.message}
        if self.node_id is not None:
            out["nodeId"] = self.node_id
        return out


def _alloc_index(node_id: str) -> int:
    return int(node_id[1:])


class Graph:
    """Adjacency-list DAG; nodes own ordered prior/next lists.

    Ids are allocated from a monotone per-graph counter and never reused,
    so checkpoints and undo keep stable references.
    """

    def __init__(self, seed: int = 0):
        self.nodes: dict[str, Node] = {}
        self.groups: dict[str, Group] = {}
        self.seed = seed
        self._counter = 0
        # Observer for structural side effects (e.g. group dissolution).
        self.on_event: Optional[Callable[[str, dict], None]] = None

    # --- id allocation ------------------------------------------------------

    def _next_id(self, prefix: str) -> str:
        self._counter += 1
        return f"{prefix}{self._counter}"

    # --- mutations ----------------------------------------------------------

    def add_node(self, layer_type: str, params: Optional[dict] = None,
                 position: tuple[float, float] = (0.0, 0.0)) -> str:
        resolved = catalog.resolve_params(layer_type, params)
        node_id = self._next_id("n")
        self.nodes[node_id] = Node(
            id=node_id,
            layer_type=layer_type,
            params=resolved,
            position=(float(position[0]), float(position[1])),
        )
        return node_id

    def remove_node(self, node_id: str) -> None:
        node = self._node(node_id)
        for src in list(node.prior):
            self.nodes[src].next.remove(node_id)
        for dst in list(node.next):
            self.nodes[dst].prior.remove(node_id)
        if node.group is not None:
            group = self.groups[node.group]
            group.members.remove(node_id)
            del self.nodes[node_id]
            if len(group.members) < 2 or not self._is_chain(group.members):
                self._dissolve(group, reason=f"member {node_id} removed")
        else:
            del self.nodes[node_id]

    def connect(self, src: str, dst: str) -> None:
        a, b = self._node(src), self._node(dst)
        if src == dst:
            raise SelfLoop(f"cannot connect {src} to itself")
        if dst in a.next:
            raise DuplicateEdge(f"edge {src} -> {dst} already exists")
        if self._reaches(dst, src):
            raise WouldCreateCycle(f"edge {src} -> {dst} would close a cycle")
        a.next.append(dst)
        b.prior.append(src)
        # A fresh edge between two members of one group is never the chain
        # edge (that would be a duplicate), so the chain is broken.
        if a.group is not None and a.group == b.group:
            self._dissolve(self.groups[a.group],
                           reason=f"extra edge {src} -> {dst} inside group")

    def disconnect(self, src: str, dst: str) -> None:
        a, b = self._node(src), self._node(dst)
        if dst not in a.next:
            raise UnknownEdge(f"no edge {src} -> {dst}")
        a.next.remove(dst)
        b.prior.remove(src)
        if a.group is not None and a.group == b.group:
            self._dissolve(self.groups[a.group],
                           reason=f"edge {src} -> {dst} removed inside group")

    def update_node(self, node_id: str, params: Optional[dict] = None,
                    position: Optional[tuple[float, float]] = None) -> None:
        node = self._node(node_id)
        if params:
            merged = dict(node.params)
            merged.update(params)
            node.params = catalog.resolve_params(node.layer_type, merged)
            self._drop_stale_weights(node)
        if position is not None:
            node.position = (float(position[0]), float(position[1]))

    def group_nodes(self, ids: list[str], name: str) -> str:
        if len(ids) < 2 or len(set(ids)) != len(ids):
            raise NotAChain("a group needs at least two distinct members")
        for i in ids:
            self._node(i)
        for i in ids:
            if self.nodes[i].group is not None:
                raise AlreadyGrouped(f"node {i} already belongs to a group")
        if not self._is_chain(ids):
            raise NotAChain("members must form a simple chain in the given order")
        gid = self._next_id("g")
        self.groups[gid] = Group(id=gid, name=name, members=list(ids))
        for i in ids:
            self.nodes[i].group = gid
        return gid

    def ungroup(self, gid: str) -> None:
        group = self.groups.get(gid)
        if group is None:
            raise UnknownGroup(f"unknown group {gid}")
        for i in group.members:
            self.nodes[i].group = None
        del self.groups[gid]

    # --- read-only queries ----------------------------------------------------

    def topo_sort(self) -> list[str]:
        """Topological order; ties broken by ascending allocation order."""
        indeg = {i: len(n.prior) for i, n in self.nodes.items()}
        ready = [(_alloc_index(i), i) for i, d in indeg.items() if d == 0]
        heapq.heapify(ready)
        order = []
        while ready:
            _, node_id = heapq.heappop(ready)
            order.append(node_id)
            for dst in self.nodes[node_id].next:
                indeg[dst] -= 1
                if indeg[dst] == 0:
                    heapq.heappush(ready, (_alloc_index(dst), dst))
        if len(order) != len(self.nodes):
            raise CycleDetected("graph contains a cycle")
        return order

    def infer_shapes(self, input_shape: Optional[Shape] = None) -> dict[str, Shape]:
        """Output shape per reachable node, walking in topological order.

        The graph needs exactly one source node. An Input source defines its
        own shape; any other source type takes ``input_shape``.
        """
        sources = [i for i in self.topo_sort() if not self.nodes[i].prior]
        if len(sources) > 1:
            raise MultipleSources(f"graph has {len(sources)} source nodes")
        shapes: dict[str, Shape] = {}
        for node_id in self.topo_sort():
            node = self.nodes[node_id]
            if not node.prior:
                if node.layer_type == "Input":
                    seed_shape = catalog.infer_output_shape("Input", node.params, [])
                elif input_shape is not None:
                    seed_shape = input_shape
                else:
                    raise MissingInputShape(
                        f"source node {node_id} ({node.layer_type}) needs an "
                        "explicit input shape"
                    )
                shapes[node_id] = seed_shape
                continue
            if any(p not in shapes for p in node.prior):
                continue  # unreachable from the source
            inputs = [shapes[p] for p in node.prior]
            try:
                shapes[node_id] = catalog.infer_output_shape(
                    node.layer_type, node.params, inputs)
            except ShapeMismatch as exc:
                raise ShapeMismatch(str(exc), node_id=node_id) from None
        return shapes

    def validate(self, input_shape: Optional[Shape] = None) -> list[Diagnostic]:
        """Pre-compile diagnostics; an empty list means compilable."""
        out: list[Diagnostic] = []
        if not self.nodes:
            return [Diagnostic("no_source", "graph is empty: no Input source")]
        order = self.topo_sort()
        sources = [i for i in order if not self.nodes[i].prior]
        sinks = [i for i in order if not self.nodes[i].next]
        if len(sources) > 1:
            for i in sources:
                out.append(Diagnostic("multiple_sources",
                                      f"node {i} is one of {len(sources)} sources", i))
        for node_id in order:
            node = self.nodes[node_id]
            arity = catalog.get_spec(node.layer_type).arity_in
            if len(node.prior) != arity and not (
                len(node.prior) == 0 and len(sources) == 1 and node_id == sources[0]
            ):
                out.append(Diagnostic(
                    "arity_mismatch",
                    f"{node.layer_type} node {node_id} has {len(node.prior)} "
                    f"incoming edges, needs {arity}", node_id))
        if len(sinks) > 1:
            for i in sinks:
                out.append(Diagnostic("multiple_sinks",
                                      f"node {i} is one of {len(sinks)} sinks", i))
        if out:
            return out
        try:
            self.infer_shapes(input_shape)
        except ShapeMismatch as exc:
            out.append(Diagnostic("shape_mismatch", exc.message, exc.node_id))
        except MissingInputShape as exc:
            out.append(Diagnostic("missing_input_shape", exc.message))
        except MultipleSources as exc:  # covered above, defensive
            out.append(Diagnostic("multiple_sources", exc.message))
        return out

    # --- helpers ---------------------------------------------------------------

    def _node(self, node_id: str) -> Node:
        node = self.nodes.get(node_id)
        if node is None:
            raise UnknownNode(f"unknown node {node_id}")
        return node

    def _reaches(self, start: str, target: str) -> bool:
        stack, seen = [start], set()
        while stack:
            cur = stack.pop()
            if cur == target:
                return True
            if cur in seen:
                continue
            seen.add(cur)
            stack.extend(self.nodes[cur].next)
        return False

    def _is_chain(self, ids: list[str]) -> bool:
        members = set(ids)
        for a, b in zip(ids, ids[1:]):
            if b not in self.nodes[a].next:
                return False
        chain_edges = set(zip(ids, ids[1:]))
        for i in ids:
            for dst in self.nodes[i].next:
                if dst in members and (i, dst) not in chain_edges:
                    return False
        return True

    def _dissolve(self, group: Group, reason: str) -> None:
        for i in group.members:
            self.nodes[i].group = None
        del self.groups[group.id]
        self._emit("graph.group_dissolved",
                   {"group": group.id, "name": group.name, "reason": reason})

    def _drop_stale_weights(self, node: Node) -> None:
        roles = dict(catalog.get_spec(node.layer_type).weight_roles(node.params))
        for role in list(node.weights):
            if role not in roles or node.weights[role].dims != roles[role]:
                del node.weights[role]

    def _emit(self, kind: str, payload: dict) -> None:
        if self.on_event is not None:
            self.on_event(kind, payload)

    # --- serialization -----------------------------------------------------------

    def to_document(self) -> tuple[dict, dict[str, TensorValue]]:
        """Serialize to the project document plus the referenced tensor pool.

        Node order is allocation order; the document is the canonical snapshot
        used by checkpoints and project files.
        """
        pool: dict[str, TensorValue] = {}
        nodes = []
        for node_id in sorted(self.nodes, key=_alloc_index):
            node = self.nodes[node_id]
            refs = {}
            for role in node.weights:
                tv = node.weights[role]
                h = content_hash(tv)
                pool[h] = tv
                refs[role] = h
            nodes.append({
                "id": node.id,
                "type": node.layer_type,
                "params": {k: (list(v) if isinstance(v, list) else v)
                           for k, v in node.params.items()},
                "position": [node.position[0], node.position[1]],
                "prior": list(node.prior),
                "next": list(node.next),
                "group": node.group,
                "weight_refs": refs,
            })
        groups = [
            {"id": g.id, "name": g.name, "members": list(g.members)}
            for g in sorted(self.groups.values(), key=lambda g: _alloc_index(g.id))
        ]
        doc = {
            "format": DOCUMENT_FORMAT,
            "version": DOCUMENT_VERSION,
            "seed": self.seed,
            "id_counter": self._counter,
            "nodes": nodes,
            "groups": groups,
        }
        return doc, pool

    @classmethod
    def from_document(cls, doc: dict, pool: dict[str, TensorValue]) -> "Graph":
        """Rebuild a graph from its document; raises ValueError on a document
        that breaks graph invariants."""
        g = cls(seed=int(doc["seed"]))
        g._counter = int(doc["id_counter"])
        for entry in doc["nodes"]:
            params = catalog.resolve_params(entry["type"], entry["params"])
            node = Node(
                id=entry["id"],
                layer_type=entry["type"],
                params=params,
                position=(float(entry["position"][0]), float(entry["position"][1])),
                prior=list(entry["prior"]),
                next=list(entry["next"]),
                group=entry.get("group"),
            )
            for role, ref in entry.get("weight_refs", {}).items():
                tv = pool.get(ref)
                if tv is None:
                    raise ValueError(f"missing weight tensor {ref} for node {node.id}")
                node.weights[role] = TensorValue(role, tv.dtype, tv.dims, tv.data)
            if node.id in g.nodes:
                raise ValueError(f"duplicate node id {node.id}")
            g.nodes[node.id] = node
        for entry in doc.get("groups", []):
            g.groups[entry["id"]] = Group(
                id=entry["id"], name=entry["name"], members=list(entry["members"]))
        g._check_links()
        g.topo_sort()  # raises CycleDetected on a cyclic document
        return g

    def _check_links(self) -> None:
        for node in self.nodes.values():
            for other in node.prior:
                if other not in self.nodes or node.id not in self.nodes[other].next:
                    raise ValueError(f"asymmetric edge {other} -> {node.id}")
            for other in node.next:
                if other not in self.nodes or node.id not in self.nodes[other].prior:
                    raise ValueError(f"asymmetric edge {node.id} -> {other}")
            if node.group is not None and node.group not in self.groups:
                raise ValueError(f"node {node.id} references unknown group")
        for group in self.groups.values():
            for i in group.members:
                if i not in self.nodes or self.nodes[i].group != group.id:
                    raise ValueError(f"group {group.id} has inconsistent member {i}")

    def clone(self) -> "Graph":
        doc, pool = self.to_document()
        g = Graph.from_document(doc, pool)
        g.on_event = self.on_event
        return g


def structurally_equal(a: Graph, b: Graph) -> bool:
    """Snapshot equality: same document, including weights by content."""
    doc_a, _ = a.to_document()
    doc_b, _ = b.to_document()
    return doc_a == doc_b
