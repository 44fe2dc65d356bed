import base64
import json
import threading

import pytest
from fastapi.testclient import TestClient

from sketch.binder import default_registry
from sketch.graph import Graph
from sketch.server import create_app
from sketch.session import save_project

from corpus import canonical_form


@pytest.fixture()
def studio(tmp_path):
    app = create_app(root=tmp_path / "root", state_dir=tmp_path / "state",
                     restore_previous=False)
    (tmp_path / "root").mkdir(exist_ok=True)
    with TestClient(app) as client:
        yield client, tmp_path / "root"


def new_canvas(client, **body):
    res = client.post("/api/canvas", json=body)
    assert res.status_code == 200, res.text
    return res.json()["canvasId"]


def mutate(client, canvas_id, op, **fields):
    return client.post(f"/api/canvas/{canvas_id}/mutate",
                       json={"op": op, **fields})


def build_chain(client, canvas_id):
    specs = [
        ("Input", {"shape": [1, 28, 28]}),
        ("Conv2d", {"in_channels": 1, "out_channels": 8,
                    "kernel_size": [5, 5], "padding": [2, 2]}),
        ("BatchNorm2d", {"num_features": 8}),
        ("ReLU", None),
        ("MaxPool2d", None),
        ("Conv2d", {"in_channels": 8, "out_channels": 16,
                    "kernel_size": [3, 3], "padding": [1, 1]}),
    ]
    ids = []
    for i, (layer, params) in enumerate(specs):
        body = {"type": layer, "position": [100 + 150 * i, 80]}
        if params:
            body["params"] = params
        res = mutate(client, canvas_id, "node.add", **body)
        assert res.status_code == 200
        ids.append(res.json()["nodeId"])
    for a, b in zip(ids, ids[1:]):
        assert mutate(client, canvas_id, "edge.connect",
                      src=a, dst=b).status_code == 200
    return ids


class TestCanvasLifecycle:
    def test_create_and_mutate(self, studio):
        client, _ = studio
        canvas_id = new_canvas(client)
        res = mutate(client, canvas_id, "node.add", type="ReLU",
                     position=[10, 20])
        assert res.status_code == 200
        body = res.json()
        assert body["nodeId"] == "n1"
        assert body["revision"] == 1

    def test_unknown_canvas_404(self, studio):
        client, _ = studio
        res = mutate(client, "c999", "node.add", type="ReLU")
        assert res.status_code == 404
        assert res.json()["code"] == "unknown_canvas"

    def test_unknown_layer_409_and_graph_unchanged(self, studio):
        client, _ = studio
        canvas_id = new_canvas(client)
        before = client.get(f"/api/canvas/{canvas_id}/graph").json()
        res = mutate(client, canvas_id, "node.add", type="Bogus")
        assert res.status_code == 409
        assert res.json()["code"] == "unknown_layer_type"
        after = client.get(f"/api/canvas/{canvas_id}/graph").json()
        assert before == after

    def test_cycle_rejected_with_code(self, studio):
        client, _ = studio
        canvas_id = new_canvas(client)
        a = mutate(client, canvas_id, "node.add", type="ReLU").json()["nodeId"]
        b = mutate(client, canvas_id, "node.add", type="ReLU").json()["nodeId"]
        assert mutate(client, canvas_id, "edge.connect",
                      src=a, dst=b).status_code == 200
        res = mutate(client, canvas_id, "edge.connect", src=b, dst=a)
        assert res.status_code == 409
        assert res.json()["code"] == "would_create_cycle"

    def test_malformed_body_400(self, studio):
        client, _ = studio
        canvas_id = new_canvas(client)
        res = mutate(client, canvas_id, "node.add")  # missing type
        assert res.status_code == 400
        assert res.json()["code"] == "bad_request"
        res = client.post(f"/api/canvas/{canvas_id}/mutate",
                          json={"op": "nonsense"})
        assert res.status_code == 400
        res = client.post(f"/api/canvas/{canvas_id}/mutate",
                          content=b"not json",
                          headers={"content-type": "application/json"})
        assert res.status_code == 400

    def test_group_mutations(self, studio):
        client, _ = studio
        canvas_id = new_canvas(client)
        ids = [mutate(client, canvas_id, "node.add", type="ReLU").json()["nodeId"]
               for _ in range(3)]
        for a, b in zip(ids, ids[1:]):
            mutate(client, canvas_id, "edge.connect", src=a, dst=b)
        res = mutate(client, canvas_id, "group.create", nodeIds=ids, name="blk")
        assert res.status_code == 200
        gid = res.json()["groupId"]
        doc = client.get(f"/api/canvas/{canvas_id}/graph").json()["graph"]
        assert doc["groups"][0]["id"] == gid
        res = mutate(client, canvas_id, "group.dissolve", groupId=gid)
        assert res.status_code == 200

    def test_node_update_and_remove(self, studio):
        client, _ = studio
        canvas_id = new_canvas(client)
        nid = mutate(client, canvas_id, "node.add", type="Conv2d").json()["nodeId"]
        res = mutate(client, canvas_id, "node.update", nodeId=nid,
                     params={"kernel_size": [5, 5]})
        assert res.status_code == 200
        res = mutate(client, canvas_id, "node.update", nodeId=nid,
                     params={"stride": [0, 1]})
        assert res.status_code == 409
        assert res.json()["code"] == "invalid_params"
        assert mutate(client, canvas_id, "node.remove",
                      nodeId=nid).status_code == 200


class TestHistoryEndpoints:
    def test_undo_empty_history_noop(self, studio):
        client, _ = studio
        canvas_id = new_canvas(client)
        res = client.post(f"/api/canvas/{canvas_id}/undo")
        assert res.status_code == 200
        assert res.json() == {"revision": 0, "noop": True}

    def test_undo_then_redo(self, studio):
        client, _ = studio
        canvas_id = new_canvas(client)
        mutate(client, canvas_id, "node.add", type="ReLU")
        before = client.get(f"/api/canvas/{canvas_id}/graph").json()["graph"]
        undo = client.post(f"/api/canvas/{canvas_id}/undo").json()
        assert undo["revision"] == 0
        empty = client.get(f"/api/canvas/{canvas_id}/graph").json()["graph"]
        assert empty["nodes"] == []
        redo = client.post(f"/api/canvas/{canvas_id}/redo").json()
        assert redo["revision"] == 1
        after = client.get(f"/api/canvas/{canvas_id}/graph").json()["graph"]
        assert after == before

    def test_revisions_strictly_increase(self, studio):
        client, _ = studio
        canvas_id = new_canvas(client)
        revisions = [mutate(client, canvas_id, "node.add",
                            type="ReLU").json()["revision"]
                     for _ in range(5)]
        assert revisions == [1, 2, 3, 4, 5]

    def test_long_poll_wakes_on_mutation(self, studio):
        client, _ = studio
        canvas_id = new_canvas(client)
        results = {}

        def wait():
            results["poll"] = client.get(
                f"/api/canvas/{canvas_id}/revision",
                params={"after": 0, "timeout": 10}).json()

        t = threading.Thread(target=wait)
        t.start()
        mutate(client, canvas_id, "node.add", type="ReLU")
        t.join(timeout=10)
        assert not t.is_alive()
        assert results["poll"]["revision"] >= 1


class TestCompileAndArtifacts:
    def test_compile_chain(self, studio):
        client, root = studio
        canvas_id = new_canvas(client, name="demo")
        build_chain(client, canvas_id)
        res = client.post(f"/api/canvas/{canvas_id}/compile",
                          json={"kernel": "onnx"})
        assert res.status_code == 200, res.text
        body = res.json()
        assert body["artifactPath"].endswith("demo.onnx")
        compute_lines = [l for l in body["text"].splitlines()
                         if not l.startswith("#")]
        assert len(compute_lines) == 5
        assert (root / "demo.onnx").is_file()

        again = client.post(f"/api/canvas/{canvas_id}/compile",
                            json={"kernel": "onnx"})
        assert again.status_code == 200
        assert (root / "demo.onnx").read_bytes()  # still present, deterministic

    def test_recompile_identical_bytes_on_disk(self, studio):
        client, root = studio
        canvas_id = new_canvas(client, name="stable")
        build_chain(client, canvas_id)
        client.post(f"/api/canvas/{canvas_id}/compile", json={"kernel": "onnx"})
        first = (root / "stable.onnx").read_bytes()
        client.post(f"/api/canvas/{canvas_id}/compile", json={"kernel": "onnx"})
        assert (root / "stable.onnx").read_bytes() == first

    def test_compile_empty_canvas_409(self, studio):
        client, _ = studio
        canvas_id = new_canvas(client)
        res = client.post(f"/api/canvas/{canvas_id}/compile",
                          json={"kernel": "onnx"})
        assert res.status_code == 409
        body = res.json()
        assert body["code"] == "validation_failed"
        assert body["details"]["diagnostics"]

    def test_compile_pytorch_writes_sidecar(self, studio):
        client, root = studio
        canvas_id = new_canvas(client, name="torchy")
        build_chain(client, canvas_id)
        res = client.post(f"/api/canvas/{canvas_id}/compile",
                          json={"kernel": "pytorch-src"})
        assert res.status_code == 200
        assert (root / "torchy.py").is_file()
        assert (root / "torchy.weights").is_file()

    def test_artifact_download_and_confinement(self, studio):
        client, root = studio
        canvas_id = new_canvas(client, name="dl")
        build_chain(client, canvas_id)
        client.post(f"/api/canvas/{canvas_id}/compile", json={"kernel": "onnx"})
        res = client.get("/api/artifacts/dl.onnx")
        assert res.status_code == 200
        assert res.content == (root / "dl.onnx").read_bytes()
        # encoded traversal reaches the route parameter undecoded by the router
        res = client.get("/api/artifacts/..%2Fsecret.txt")
        assert res.status_code == 403
        assert res.json()["code"] == "path_escape"
        res = client.get("/api/artifacts/%2Fetc%2Fpasswd")
        assert res.status_code == 403


class TestImportEndpoint:
    def _export_bytes(self, client, canvas_id):
        client_res = client.post(f"/api/canvas/{canvas_id}/compile",
                                 json={"kernel": "onnx"})
        assert client_res.status_code == 200
        return client_res

    def test_import_round_trip_via_path(self, studio):
        client, root = studio
        canvas_id = new_canvas(client, name="orig")
        build_chain(client, canvas_id)
        self._export_bytes(client, canvas_id)
        res = client.post("/api/import", json={"kernel": "onnx",
                                               "path": "orig.onnx"})
        assert res.status_code == 200
        new_id = res.json()["canvasId"]
        assert new_id != canvas_id
        a = client.get(f"/api/canvas/{canvas_id}/graph").json()["graph"]
        b = client.get(f"/api/canvas/{new_id}/graph").json()["graph"]
        assert [n["type"] for n in a["nodes"]] == [n["type"] for n in b["nodes"]]
        assert [n["params"] for n in a["nodes"]] == [n["params"] for n in b["nodes"]]

    def test_import_via_base64(self, studio):
        client, root = studio
        canvas_id = new_canvas(client, name="orig2")
        build_chain(client, canvas_id)
        self._export_bytes(client, canvas_id)
        data = base64.b64encode((root / "orig2.onnx").read_bytes()).decode()
        res = client.post("/api/import", json={"kernel": "onnx", "data": data})
        assert res.status_code == 200

    def test_import_wrong_kernel(self, studio):
        client, _ = studio
        res = client.post("/api/import", json={"kernel": "pytorch-src",
                                               "data": base64.b64encode(b"x").decode()})
        assert res.status_code == 409
        assert res.json()["code"] == "import_not_supported"

    def test_import_truncated(self, studio):
        client, root = studio
        canvas_id = new_canvas(client, name="orig3")
        build_chain(client, canvas_id)
        self._export_bytes(client, canvas_id)
        truncated = (root / "orig3.onnx").read_bytes()[:33]
        res = client.post("/api/import", json={
            "kernel": "onnx",
            "data": base64.b64encode(truncated).decode()})
        assert res.status_code == 409
        assert res.json()["code"] == "malformed_artifact"

    def test_import_updates_tabs(self, studio):
        client, _ = studio
        canvas_id = new_canvas(client, name="tabbed")
        build_chain(client, canvas_id)
        self._export_bytes(client, canvas_id)
        client.post("/api/import", json={"kernel": "onnx", "path": "tabbed.onnx"})
        tabs = client.get("/api/canvas").json()["canvases"]
        assert len(tabs) == 2


class TestReadOnlySurfaces:
    def test_catalog_conv_entry(self, studio):
        client, _ = studio
        res = client.get("/api/catalog")
        assert res.status_code == 200
        conv = next(e for e in res.json()["layers"] if e["type"] == "Conv2d")
        assert [p["name"] for p in conv["params"]] == [
            "in_channels", "out_channels", "kernel_size", "stride",
            "padding", "bias"]

    def test_kernels_listing(self, studio):
        client, _ = studio
        body = client.get("/api/kernels").json()
        ids = [k["kernelId"] for k in body["kernels"]]
        assert ids == ["onnx", "pytorch-src"]
        onnx_desc = body["kernels"][0]
        assert onnx_desc["capabilities"] == {"export": True, "import": True}

    def test_fs_listing_sorted_dirs_first(self, studio):
        client, root = studio
        (root / "zdir").mkdir()
        (root / "adir").mkdir()
        (root / "bfile.txt").write_text("x")
        res = client.get("/api/fs", params={"path": "."})
        assert res.status_code == 200
        entries = res.json()["entries"]
        kinds = [(e["kind"], e["name"]) for e in entries]
        assert kinds == [("dir", "adir"), ("dir", "zdir"), ("file", "bfile.txt")]

    def test_fs_escape_403(self, studio):
        client, _ = studio
        res = client.get("/api/fs", params={"path": "../.."})
        assert res.status_code == 403
        assert res.json()["code"] == "path_escape"

    def test_fs_missing_404(self, studio):
        client, _ = studio
        assert client.get("/api/fs", params={"path": "ghost"}).status_code == 404

    def test_index_without_bundle(self, studio):
        client, _ = studio
        res = client.get("/")
        assert res.status_code == 200
        assert "sketch" in res.text


class TestSaveAndReopen:
    def test_save_then_reopen(self, studio):
        client, root = studio
        canvas_id = new_canvas(client, name="persist")
        build_chain(client, canvas_id)
        res = client.post(f"/api/canvas/{canvas_id}/save", json={})
        assert res.status_code == 200
        assert (root / "persist.sketch").is_file()
        assert (root / "persist.weights").is_file()

        reopened = client.post("/api/canvas",
                               json={"path": "persist.sketch"})
        assert reopened.status_code == 200
        other = reopened.json()["canvasId"]
        a = client.get(f"/api/canvas/{canvas_id}/graph").json()["graph"]
        b = client.get(f"/api/canvas/{other}/graph").json()["graph"]
        assert a["nodes"] == b["nodes"]

    def test_open_missing_project(self, studio):
        client, _ = studio
        res = client.post("/api/canvas", json={"path": "absent.sketch"})
        assert res.status_code == 409
        assert res.json()["code"] == "io_error"

    def test_session_file_tracks_tabs(self, studio, tmp_path):
        client, _ = studio
        new_canvas(client, name="tab1")
        new_canvas(client, name="tab2")
        session_doc = json.loads((tmp_path / "state" / "session.json").read_text())
        assert len(session_doc["open_tabs"]) == 2

    def test_graph_replace_endpoint(self, studio):
        client, _ = studio
        canvas_id = new_canvas(client)
        g = Graph()
        g.add_node("ReLU")
        doc, _ = g.to_document()
        res = client.post(f"/api/canvas/{canvas_id}/graph", json={"graph": doc})
        assert res.status_code == 200
        fetched = client.get(f"/api/canvas/{canvas_id}/graph").json()["graph"]
        assert fetched["nodes"][0]["type"] == "ReLU"
        res = client.post(f"/api/canvas/{canvas_id}/graph",
                          json={"graph": {"bad": True}})
        assert res.status_code == 400


class TestServerRestore:
    def test_restart_restores_tabs_and_drops_missing(self, tmp_path):
        root = tmp_path / "root"
        root.mkdir()
        state = tmp_path / "state"
        save_project(Graph(), root / "alpha.sketch")
        save_project(Graph(), root / "beta.sketch")

        app1 = create_app(root=root, state_dir=state, restore_previous=False)
        with TestClient(app1) as client:
            client.post("/api/canvas", json={"path": "alpha.sketch"})
            client.post("/api/canvas", json={"path": "beta.sketch"})

        app2 = create_app(root=root, state_dir=state, restore_previous=True)
        with TestClient(app2) as client:
            tabs = client.get("/api/canvas").json()["canvases"]
            assert sorted(t["name"] for t in tabs) == ["alpha", "beta"]

        (root / "beta.sketch").unlink()
        app3 = create_app(root=root, state_dir=state, restore_previous=True)
        with TestClient(app3) as client:
            tabs = client.get("/api/canvas").json()["canvases"]
            assert [t["name"] for t in tabs] == ["alpha"]
