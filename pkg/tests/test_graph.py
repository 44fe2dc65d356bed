import pytest

from sketch.errors import (
    AlreadyGrouped,
    DuplicateEdge,
    InvalidParams,
    MissingInputShape,
    MultipleSources,
    NotAChain,
    SelfLoop,
    UnknownEdge,
    UnknownGroup,
    UnknownLayerType,
    UnknownNode,
    WouldCreateCycle,
)
from sketch.graph import Graph, structurally_equal
from sketch.shape import BATCH, Shape
from sketch.weights import materialize


def B(*tail):
    return Shape((BATCH, *tail))


def chain(*types, g=None):
    g = g or Graph()
    ids = [g.add_node(t) for t in types]
    for a, b in zip(ids, ids[1:]):
        g.connect(a, b)
    return g, ids


def snapshot(g):
    doc, _ = g.to_document()
    return doc


class TestAddNode:
    def test_defaults_from_catalog(self):
        g = Graph()
        nid = g.add_node("Conv2d", None, (100, 80))
        node = g.nodes[nid]
        assert node.params == {"in_channels": 1, "out_channels": 1,
                               "kernel_size": [3, 3], "stride": [1, 1],
                               "padding": [0, 0], "bias": True}
        assert node.position == (100.0, 80.0)
        assert node.prior == [] and node.next == []
        assert node.group is None

    def test_ids_never_reused(self):
        g = Graph()
        seen = set()
        for _ in range(5):
            nid = g.add_node("ReLU")
            assert nid not in seen
            seen.add(nid)
            g.remove_node(nid)

    def test_id_format(self):
        g = Graph()
        assert g.add_node("ReLU") == "n1"
        assert g.add_node("ReLU") == "n2"

    def test_unknown_layer_type(self):
        g = Graph()
        before = snapshot(g)
        with pytest.raises(UnknownLayerType):
            g.add_node("Conv3x3")
        assert snapshot(g) == before

    def test_invalid_params_atomic(self):
        g = Graph()
        before = snapshot(g)
        with pytest.raises(InvalidParams):
            g.add_node("Conv2d", {"stride": [0, 1]})
        assert snapshot(g) == before


class TestRemoveNode:
    def test_incident_edges_removed(self):
        g, (a, b, c) = chain("ReLU", "ReLU", "ReLU")
        g.remove_node(b)
        assert g.nodes[a].next == []
        assert g.nodes[c].prior == []
        assert b not in g.nodes

    def test_two_member_group_dissolves(self):
        g, (a, b) = chain("ReLU", "ReLU")
        gid = g.group_nodes([a, b], "pair")
        g.remove_node(b)
        assert gid not in g.groups
        assert g.nodes[a].group is None

    def test_endpoint_removal_keeps_group(self):
        g, (a, b, c) = chain("ReLU", "ReLU", "ReLU")
        gid = g.group_nodes([a, b, c], "trio")
        g.remove_node(a)
        assert g.groups[gid].members == [b, c]

    def test_middle_removal_dissolves_group(self):
        g, (a, b, c) = chain("ReLU", "ReLU", "ReLU")
        gid = g.group_nodes([a, b, c], "trio")
        g.remove_node(b)
        assert gid not in g.groups
        assert g.nodes[a].group is None and g.nodes[c].group is None

    def test_unknown(self):
        g = Graph()
        with pytest.raises(UnknownNode):
            g.remove_node("n99")


class TestConnect:
    def test_two_cycle_rejected(self):
        g, (a, b) = chain("ReLU", "ReLU")
        before = snapshot(g)
        with pytest.raises(WouldCreateCycle):
            g.connect(b, a)
        assert snapshot(g) == before

    def test_longer_cycle_rejected(self):
        g, (a, _b, c) = chain("ReLU", "ReLU", "ReLU")
        with pytest.raises(WouldCreateCycle):
            g.connect(c, a)

    def test_duplicate_edge(self):
        g, (a, b) = chain("ReLU", "ReLU")
        with pytest.raises(DuplicateEdge):
            g.connect(a, b)

    def test_self_loop(self):
        g = Graph()
        a = g.add_node("ReLU")
        with pytest.raises(SelfLoop):
            g.connect(a, a)

    def test_unknown_node(self):
        g = Graph()
        a = g.add_node("ReLU")
        with pytest.raises(UnknownNode):
            g.connect(a, "n9")

    def test_edge_symmetry(self):
        g, (a, b) = chain("ReLU", "ReLU")
        assert g.nodes[a].next == [b]
        assert g.nodes[b].prior == [a]

    def test_connect_inside_group_dissolves_it(self):
        g, (a, b, c) = chain("ReLU", "ReLU", "ReLU")
        gid = g.group_nodes([a, b, c], "trio")
        events = []
        g.on_event = lambda kind, payload: events.append(kind)
        g.connect(a, c)  # extra edge among members breaks the chain
        assert gid not in g.groups
        assert events == ["graph.group_dissolved"]


class TestDisconnect:
    def test_inverse_of_connect(self):
        g, (a, b) = chain("ReLU", "ReLU")
        before = snapshot(g)
        g.connect(a, g.add_node("ReLU"))
        g.disconnect(a, "n3")
        g.remove_node("n3")
        after = snapshot(g)
        before["id_counter"] = after["id_counter"]  # ids are never reused
        assert before == after

    def test_unknown_edge(self):
        g = Graph()
        a, b = g.add_node("ReLU"), g.add_node("ReLU")
        with pytest.raises(UnknownEdge):
            g.disconnect(a, b)

    def test_survivor_order_preserved(self):
        g = Graph()
        a, b, c = (g.add_node("ReLU") for _ in range(3))
        g.connect(a, b)
        g.connect(a, c)
        g.disconnect(a, b)
        assert g.nodes[a].next == [c]

    def test_disconnect_inside_group_dissolves_it(self):
        g, (a, b) = chain("ReLU", "ReLU")
        gid = g.group_nodes([a, b], "pair")
        events = []
        g.on_event = lambda kind, payload: events.append((kind, payload))
        g.disconnect(a, b)
        assert gid not in g.groups
        assert events and events[0][0] == "graph.group_dissolved"


class TestUpdateNode:
    def test_param_change_drops_stale_weight(self):
        g = Graph(seed=3)
        nid = g.add_node("Conv2d", {"kernel_size": [3, 3]})
        node = g.nodes[nid]
        node.weights["weight"] = materialize(g.seed, nid, "weight", (1, 1, 3, 3))
        node.weights["bias"] = materialize(g.seed, nid, "bias", (1,))
        g.update_node(nid, {"kernel_size": [5, 5]})
        assert "weight" not in node.weights
        assert "bias" in node.weights  # bias shape unaffected

    def test_bias_toggle_drops_bias_tensor(self):
        g = Graph()
        nid = g.add_node("Conv2d")
        g.nodes[nid].weights["bias"] = materialize(0, nid, "bias", (1,))
        g.update_node(nid, {"bias": False})
        assert g.nodes[nid].weights == {}

    def test_empty_update_is_identity(self):
        g = Graph()
        nid = g.add_node("Conv2d")
        before = snapshot(g)
        g.update_node(nid, {}, None)
        assert snapshot(g) == before

    def test_invalid_params_atomic(self):
        g = Graph()
        nid = g.add_node("Conv2d")
        before = snapshot(g)
        with pytest.raises(InvalidParams):
            g.update_node(nid, {"stride": [0, 1]})
        assert snapshot(g) == before

    def test_position_update(self):
        g = Graph()
        nid = g.add_node("ReLU", None, (1, 2))
        g.update_node(nid, None, (30, 40))
        assert g.nodes[nid].position == (30.0, 40.0)

    def test_partial_merge(self):
        g = Graph()
        nid = g.add_node("Conv2d", {"out_channels": 4})
        g.update_node(nid, {"in_channels": 2})
        assert g.nodes[nid].params["out_channels"] == 4
        assert g.nodes[nid].params["in_channels"] == 2


class TestGroups:
    def test_group_chain(self):
        g, (a, b, c) = chain("ReLU", "ReLU", "ReLU")
        gid = g.group_nodes([a, b, c], "block")
        assert g.groups[gid].members == [a, b, c]
        assert all(g.nodes[i].group == gid for i in (a, b, c))

    def test_not_a_chain_without_edge(self):
        g = Graph()
        a, b, c = (g.add_node("ReLU") for _ in range(3))
        g.connect(a, b)
        g.connect(a, c)
        with pytest.raises(NotAChain):
            g.group_nodes([b, c], "x")

    def test_single_member_rejected(self):
        g = Graph()
        a = g.add_node("ReLU")
        with pytest.raises(NotAChain):
            g.group_nodes([a], "x")

    def test_extra_edge_among_members_rejected(self):
        g, (a, b, c) = chain("ReLU", "ReLU", "ReLU")
        g.connect(a, c)
        with pytest.raises(NotAChain):
            g.group_nodes([a, b, c], "x")

    def test_already_grouped(self):
        g, (a, b, c, d) = chain("ReLU", "ReLU", "ReLU", "ReLU")
        g.group_nodes([a, b], "one")
        with pytest.raises(AlreadyGrouped):
            g.group_nodes([b, c], "two")
        g.group_nodes([c, d], "three")  # disjoint is fine

    def test_ungroup_restores_graph(self):
        g, (a, b) = chain("ReLU", "ReLU")
        before = snapshot(g)
        gid = g.group_nodes([a, b], "pair")
        g.ungroup(gid)
        after = snapshot(g)
        before["id_counter"] = after["id_counter"]
        assert before == after

    def test_ungroup_unknown(self):
        g = Graph()
        with pytest.raises(UnknownGroup):
            g.ungroup("g1")

    def test_ungroup_keeps_positions(self):
        g = Graph()
        a = g.add_node("ReLU", None, (5, 6))
        b = g.add_node("ReLU", None, (7, 8))
        g.connect(a, b)
        gid = g.group_nodes([a, b], "pair")
        g.ungroup(gid)
        assert g.nodes[a].position == (5.0, 6.0)
        assert g.nodes[b].position == (7.0, 8.0)


class TestTopoSort:
    def test_chain(self):
        g, ids = chain("ReLU", "ReLU", "ReLU")
        assert g.topo_sort() == ids

    def test_diamond_tie_break_by_allocation(self):
        g = Graph()
        a, b, c, d = (g.add_node("ReLU") for _ in range(4))
        g.connect(a, b)
        g.connect(a, c)
        g.connect(b, d)
        g.connect(c, d)
        assert g.topo_sort() == [a, b, c, d]

    def test_empty(self):
        assert Graph().topo_sort() == []

    def test_deterministic(self):
        import random
        rng = random.Random(11)
        g = Graph()
        ids = [g.add_node("ReLU") for _ in range(12)]
        for _ in range(20):
            a, b = rng.sample(ids, 2)
            try:
                g.connect(a, b)
            except Exception:
                pass
        assert g.topo_sort() == g.topo_sort()


class TestValidate:
    def test_valid_chain_with_explicit_input_shape(self):
        g, (a, b) = chain("Conv2d", "ReLU")
        assert g.validate(B(1, 8, 8)) == []

    def test_arity_mismatch_on_two_incoming(self):
        g = Graph()
        i = g.add_node("Input")
        x = g.add_node("ReLU")
        y = g.add_node("ReLU")
        conv = g.add_node("Conv2d")
        g.connect(i, x)
        g.connect(i, y)
        g.connect(x, conv)
        g.connect(y, conv)
        diags = g.validate()
        assert any(d.kind == "arity_mismatch" and d.node_id == conv for d in diags)

    def test_linear_shape_mismatch_diagnostic(self):
        # feeding (B, 20) into Linear(in_features=10) cannot match
        g = Graph()
        i = g.add_node("Input", {"shape": [20]})
        lin = g.add_node("Linear", {"in_features": 10})
        g.connect(i, lin)
        diags = g.validate()
        assert [d.kind for d in diags] == ["shape_mismatch"]
        assert diags[0].node_id == lin

    def test_empty_graph_reports_no_source(self):
        assert [d.kind for d in Graph().validate()] == ["no_source"]

    def test_multiple_sinks_reported(self):
        g = Graph()
        i = g.add_node("Input")
        a = g.add_node("ReLU")
        b = g.add_node("ReLU")
        g.connect(i, a)
        g.connect(i, b)
        diags = g.validate()
        assert sum(d.kind == "multiple_sinks" for d in diags) == 2

    def test_multiple_sources_reported(self):
        g = Graph()
        g.add_node("Input")
        g.add_node("Input")
        diags = g.validate()
        assert any(d.kind == "multiple_sources" for d in diags)

    def test_missing_input_shape(self):
        g, _ = chain("Conv2d", "ReLU")
        diags = g.validate()
        assert [d.kind for d in diags] == ["missing_input_shape"]


class TestInferShapes:
    def test_chain_shapes(self):
        g = Graph()
        i = g.add_node("Input", {"shape": [1, 28, 28]})
        c = g.add_node("Conv2d", {"in_channels": 1, "out_channels": 8,
                                  "kernel_size": [5, 5], "padding": [2, 2]})
        g.connect(i, c)
        shapes = g.infer_shapes()
        assert shapes[i] == B(1, 28, 28)
        assert shapes[c] == B(8, 28, 28)

    def test_explicit_input_shape_for_non_input_source(self):
        g, (a, _) = chain("ReLU", "ReLU")
        shapes = g.infer_shapes(B(7, 5))
        assert shapes[a] == B(7, 5)

    def test_missing_input_shape_raises(self):
        g, _ = chain("ReLU", "ReLU")
        with pytest.raises(MissingInputShape):
            g.infer_shapes()

    def test_multiple_sources_raise(self):
        g = Graph()
        g.add_node("Input")
        g.add_node("Input")
        with pytest.raises(MultipleSources):
            g.infer_shapes()

    def test_loss_diamond(self):
        g = Graph()
        i = g.add_node("Input", {"shape": [10]})
        pred = g.add_node("Identity")
        target = g.add_node("Tanh")
        loss = g.add_node("MSELoss")
        g.connect(i, pred)
        g.connect(i, target)
        g.connect(pred, loss)
        g.connect(target, loss)
        shapes = g.infer_shapes()
        assert shapes[loss] == Shape((1,))


class TestSerialization:
    def test_document_round_trip(self):
        g = Graph(seed=99)
        i = g.add_node("Input", {"shape": [2, 6, 6]}, (10, 20))
        c = g.add_node("Conv2d", {"in_channels": 2}, (30, 40))
        g.connect(i, c)
        g.nodes[c].weights["weight"] = materialize(99, c, "weight", (1, 2, 3, 3))
        g.group_nodes([i, c], "all")
        doc, pool = g.to_document()
        g2 = Graph.from_document(doc, pool)
        assert structurally_equal(g, g2)

    def test_from_document_rejects_asymmetric_edges(self):
        g, _ = chain("ReLU", "ReLU")
        doc, pool = g.to_document()
        doc["nodes"][0]["next"] = []
        with pytest.raises(ValueError):
            Graph.from_document(doc, pool)

    def test_clone_isolated(self):
        g, (a, _) = chain("ReLU", "ReLU")
        g2 = g.clone()
        g2.add_node("Tanh")
        assert len(g.nodes) == 2 and len(g2.nodes) == 3
