"""Property tests: graph invariants hold after arbitrary mutation sequences."""
from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sketch.errors import SketchError
from sketch.graph import Graph, structurally_equal

from corpus import random_graph

OPS = ("add", "remove", "connect", "disconnect", "update", "group", "ungroup")

LAYER_POOL = ("ReLU", "Conv2d", "Identity", "Dropout", "Linear")

op_strategy = st.tuples(
    st.sampled_from(OPS),
    st.integers(min_value=0, max_value=10 ** 6),
    st.integers(min_value=0, max_value=10 ** 6),
    st.integers(min_value=0, max_value=10 ** 6),
)


def apply_op(g: Graph, op: str, a: int, b: int, c: int) -> None:
    """Interpret one fuzzed op against the current graph; core rejections are
    expected and must leave the graph untouched."""
    ids = list(g.nodes)
    doc_before, _ = g.to_document()
    try:
        if op == "add" or not ids:
            g.add_node(LAYER_POOL[a % len(LAYER_POOL)], None, (b % 500, c % 500))
        elif op == "remove":
            g.remove_node(ids[a % len(ids)])
        elif op == "connect":
            g.connect(ids[a % len(ids)], ids[b % len(ids)])
        elif op == "disconnect":
            g.disconnect(ids[a % len(ids)], ids[b % len(ids)])
        elif op == "update":
            g.update_node(ids[a % len(ids)], None, (b % 500, c % 500))
        elif op == "group":
            start = ids[a % len(ids)]
            members = [start]
            while len(members) < 2 + (c % 3):
                nxt = g.nodes[members[-1]].next
                if not nxt:
                    break
                members.append(nxt[b % len(nxt)])
            g.group_nodes(members, f"grp{a % 7}")
        elif op == "ungroup":
            gids = list(g.groups)
            if gids:
                g.ungroup(gids[a % len(gids)])
    except SketchError:
        doc_after, _ = g.to_document()
        assert doc_after == doc_before, f"failed {op} mutated the graph"


def check_invariants(g: Graph) -> None:
    for node_id, node in g.nodes.items():
        assert node_id not in node.prior and node_id not in node.next
        assert len(set(node.prior)) == len(node.prior)
        assert len(set(node.next)) == len(node.next)
        for other in node.next:
            assert node_id in g.nodes[other].prior
        for other in node.prior:
            assert node_id in g.nodes[other].next
    order = g.topo_sort()  # raises if cyclic
    position = {nid: i for i, nid in enumerate(order)}
    for node_id, node in g.nodes.items():
        for other in node.next:
            assert position[node_id] < position[other]
    for group in g.groups.values():
        assert len(group.members) >= 2
        assert g._is_chain(group.members)
        for member in group.members:
            assert g.nodes[member].group == group.id


@settings(max_examples=200, deadline=None)
@given(st.lists(op_strategy, max_size=60))
def test_invariants_hold_after_any_mutation_sequence(ops):
    g = Graph()
    for op, a, b, c in ops:
        apply_op(g, op, a, b, c)
    check_invariants(g)


@settings(max_examples=100, deadline=None)
@given(st.integers(min_value=0, max_value=10 ** 9))
def test_remove_of_added_node_restores_structure(seed):
    g = random_graph(random.Random(seed), max_nodes=8)
    doc_before, _ = g.to_document()
    nid = g.add_node("ReLU", None, (1, 2))
    g.remove_node(nid)
    doc_after, _ = g.to_document()
    doc_before["id_counter"] = doc_after["id_counter"]  # ids are never reused
    assert doc_before == doc_after


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=0, max_value=10 ** 9))
def test_topo_sort_is_valid_and_deterministic(seed):
    g = random_graph(random.Random(seed), max_nodes=15)
    order = g.topo_sort()
    assert sorted(order) == sorted(g.nodes)
    position = {nid: i for i, nid in enumerate(order)}
    for node_id, node in g.nodes.items():
        for other in node.next:
            assert position[node_id] < position[other]
    assert g.topo_sort() == order
    assert g.clone().topo_sort() == order


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=0, max_value=10 ** 9))
def test_document_round_trip_preserves_structure(seed):
    g = random_graph(random.Random(seed), max_nodes=12)
    doc, pool = g.to_document()
    assert structurally_equal(g, Graph.from_document(doc, pool))
