"""HTTP/JSON facade over the engine: canvas mutation, compile, import,
undo/redo, filesystem browsing, and static hosting of the editor bundle.

One logical writer per canvas; distinct canvases run fully parallel.
"""
from __future__ import annotations

import base64
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from fastapi import Body, FastAPI, Query, Request
from fastapi.responses import FileResponse, HTMLResponse, JSONResponse
from fastapi.staticfiles import StaticFiles

from . import binder, catalog, session, telemetry
from .errors import SketchError
from .graph import Graph
from .session import CanvasHistory, SessionState

LONG_POLL_CAP = 30.0


class ApiProblem(Exception):
    def __init__(self, status: int, code: str, message: str,
                 details: Optional[dict] = None):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
        self.details = details


@dataclass
class Canvas:
    id: str
    name: str
    path: Optional[Path]
    graph: Graph
    history: CanvasHistory
    lock: threading.RLock = field(default_factory=threading.RLock)
    cond: threading.Condition = field(default_factory=threading.Condition)


class Studio:
    """All server-side state: open canvases plus the persisted session."""

    def __init__(self, root: Path, state_dir: Path,
                 registry: Optional[binder.KernelRegistry] = None,
                 restore_previous: bool = True):
        self.root = root.resolve()
        self.state_dir = Path(state_dir)
        self.registry = registry or binder.default_registry()
        self.canvases: dict[str, Canvas] = {}
        self.active_tab = 0
        self._lock = threading.Lock()
        self._counter = 0
        if restore_previous:
            self._restore_tabs()

    # --- canvas management -------------------------------------------------

    def _new_id(self) -> str:
        with self._lock:
            self._counter += 1
            return f"c{self._counter}"

    def _watch(self, graph: Graph) -> Graph:
        graph.on_event = lambda kind, payload: telemetry.emit(kind, payload=payload)
        return graph

    def create_canvas(self, graph: Graph, name: str, path: Optional[Path]) -> Canvas:
        canvas = Canvas(
            id=self._new_id(),
            name=name,
            path=path,
            graph=self._watch(graph),
            history=CanvasHistory(graph),
        )
        with self._lock:
            self.canvases[canvas.id] = canvas
            self.active_tab = len(self.canvases) - 1
        self.persist_session()
        return canvas

    def get_canvas(self, canvas_id: str) -> Canvas:
        canvas = self.canvases.get(canvas_id)
        if canvas is None:
            raise ApiProblem(404, "unknown_canvas", f"no canvas {canvas_id!r}")
        return canvas

    def untitled_name(self) -> str:
        taken = {c.name for c in self.canvases.values()}
        i = 1
        while f"untitled-{i}" in taken:
            i += 1
        return f"untitled-{i}"

    # --- session persistence -------------------------------------------------

    def session_path(self) -> Path:
        return self.state_dir / session.SESSION_FILE

    def persist_session(self) -> None:
        state = SessionState(
            cwd=str(self.root),
            open_tabs=[
                (c.id, str(c.path if c.path else self.root / f"{c.name}.sketch"))
                for c in self.canvases.values()
            ],
            active_tab=self.active_tab,
        )
        session.save_session(state, self.session_path())

    def _restore_tabs(self) -> None:
        state = session.restore_session(self.session_path())
        for _, project_path in state.open_tabs:
            try:
                graph = session.open_project(project_path)
            except Exception as exc:
                telemetry.emit("session.tab_dropped", level="warn", payload={
                    "path": project_path, "reason": str(exc)})
                continue
            path = Path(project_path)
            self.create_canvas(graph, path.stem, path)
        self.active_tab = min(state.active_tab, max(len(self.canvases) - 1, 0))

    # --- path confinement ------------------------------------------------------

    def resolve_under_root(self, raw: str) -> Path:
        candidate = Path(raw)
        if not candidate.is_absolute():
            candidate = self.root / candidate
        resolved = candidate.resolve()
        if resolved != self.root and self.root not in resolved.parents:
            raise ApiProblem(403, "path_escape",
                             f"path {raw!r} escapes the project root")
        return resolved


def _require(body: dict, key: str, kind, what: str):
    value = body.get(key)
    if not isinstance(value, kind) or (kind is int and isinstance(value, bool)):
        raise ApiProblem(400, "bad_request", f"field {key!r} must be {what}")
    return value


def _optional_position(body: dict, key: str = "position"):
    value = body.get(key)
    if value is None:
        return None
    if (not isinstance(value, (list, tuple)) or len(value) != 2
            or not all(isinstance(v, (int, float)) and not isinstance(v, bool)
                       for v in value)):
        raise ApiProblem(400, "bad_request", "position must be [x, y]")
    return (float(value[0]), float(value[1]))


def create_app(root: Path | str = ".", state_dir: Optional[Path] = None,
               registry: Optional[binder.KernelRegistry] = None,
               restore_previous: bool = True,
               ui_dir: Optional[Path] = None) -> FastAPI:
    state_dir = Path(state_dir) if state_dir else telemetry.default_state_dir()
    telemetry.configure(state_dir=state_dir)
    studio = Studio(Path(root), state_dir, registry=registry,
                    restore_previous=restore_previous)

    app = FastAPI(title="sketch", openapi_url=None)
    app.state.studio = studio

    @app.exception_handler(ApiProblem)
    async def _api_problem(_req: Request, exc: ApiProblem):
        doc = {"code": exc.code, "message": exc.message}
        if exc.details:
            doc["details"] = exc.details
        return JSONResponse(doc, status_code=exc.status)

    from fastapi.exceptions import RequestValidationError

    @app.exception_handler(RequestValidationError)
    async def _bad_body(_req: Request, exc: RequestValidationError):
        return JSONResponse({"code": "bad_request", "message": str(exc.errors())},
                            status_code=400)

    @app.exception_handler(SketchError)
    async def _sketch_error(_req: Request, exc: SketchError):
        return JSONResponse(
            {"code": exc.code, "message": exc.message,
             **({"details": exc.details} if exc.details else {})},
            status_code=409)

    # --- canvases ---------------------------------------------------------------

    @app.post("/api/canvas")
    def create_canvas(body: dict = Body(default={})):
        raw_path = body.get("path")
        if raw_path is not None:
            path = studio.resolve_under_root(str(raw_path))
            try:
                graph = session.open_project(path)
            except OSError as exc:
                raise ApiProblem(409, "io_error", str(exc))
            canvas = studio.create_canvas(graph, path.stem, path)
        else:
            seed = body.get("seed", 0)
            if not isinstance(seed, int) or isinstance(seed, bool):
                raise ApiProblem(400, "bad_request", "seed must be an integer")
            name = str(body.get("name") or studio.untitled_name())
            canvas = studio.create_canvas(Graph(seed=seed), name, None)
        return {"canvasId": canvas.id, "name": canvas.name,
                "path": str(canvas.path) if canvas.path else None,
                "revision": canvas.history.revision}

    @app.get("/api/canvas")
    def list_canvases():
        return {
            "canvases": [
                {"canvasId": c.id, "name": c.name,
                 "path": str(c.path) if c.path else None,
                 "revision": c.history.revision}
                for c in studio.canvases.values()
            ],
            "activeTab": studio.active_tab,
        }

    @app.get("/api/canvas/{canvas_id}/graph")
    def get_graph(canvas_id: str):
        canvas = studio.get_canvas(canvas_id)
        with canvas.lock:
            doc, _ = canvas.graph.to_document()
            return {
                "revision": canvas.history.revision,
                "graph": doc,
                "diagnostics": [d.to_json() for d in canvas.graph.validate()],
            }

    @app.post("/api/canvas/{canvas_id}/graph")
    def replace_graph(canvas_id: str, body: dict = Body(...)):
        canvas = studio.get_canvas(canvas_id)
        doc = _require(body, "graph", dict, "a graph document")
        with canvas.lock:
            try:
                graph = Graph.from_document(doc, canvas.history._pool)
            except (KeyError, ValueError, TypeError) as exc:
                raise ApiProblem(400, "bad_request", f"bad graph document: {exc}")
            canvas.graph = studio._watch(graph)
            cp = canvas.history.record("graph.replace", canvas.graph)
            diagnostics = [d.to_json() for d in canvas.graph.validate()]
        _notify(canvas)
        return {"revision": cp.checkpoint_id, "diagnostics": diagnostics}

    # --- mutations ---------------------------------------------------------------

    @app.post("/api/canvas/{canvas_id}/mutate")
    def mutate(canvas_id: str, body: dict = Body(...)):
        canvas = studio.get_canvas(canvas_id)
        op = body.get("op")
        if op not in _MUTATIONS:
            raise ApiProblem(400, "bad_request", f"unknown mutation op {op!r}")
        with canvas.lock:
            label, extras = _MUTATIONS[op](canvas.graph, body)
            cp = canvas.history.record(label, canvas.graph)
            diagnostics = [d.to_json() for d in canvas.graph.validate()]
        telemetry.emit("canvas.mutate", payload={"canvas": canvas.id, "op": op})
        _notify(canvas)
        return {"revision": cp.checkpoint_id, "diagnostics": diagnostics, **extras}

    @app.post("/api/canvas/{canvas_id}/undo")
    def undo(canvas_id: str):
        return _step(studio.get_canvas(canvas_id), "undo")

    @app.post("/api/canvas/{canvas_id}/redo")
    def redo(canvas_id: str):
        return _step(studio.get_canvas(canvas_id), "redo")

    def _step(canvas: Canvas, direction: str):
        with canvas.lock:
            graph = getattr(canvas.history, direction)()
            if graph is None:
                return {"revision": canvas.history.revision, "noop": True}
            canvas.graph = studio._watch(graph)
            revision = canvas.history.revision
        telemetry.emit(f"canvas.{direction}", payload={"canvas": canvas.id})
        _notify(canvas)
        return {"revision": revision}

    def _notify(canvas: Canvas) -> None:
        with canvas.cond:
            canvas.cond.notify_all()

    @app.get("/api/canvas/{canvas_id}/revision")
    def poll_revision(canvas_id: str, after: int = Query(default=-1),
                      timeout: float = Query(default=25.0)):
        canvas = studio.get_canvas(canvas_id)
        deadline = time.monotonic() + min(max(timeout, 0.0), LONG_POLL_CAP)
        while True:
            with canvas.lock:
                revision = canvas.history.revision
            if revision > after or time.monotonic() >= deadline:
                return {"revision": revision}
            with canvas.cond:
                canvas.cond.wait(timeout=min(0.5, deadline - time.monotonic()))

    # --- compile / import -----------------------------------------------------------

    @app.post("/api/canvas/{canvas_id}/compile")
    def compile_canvas(canvas_id: str, body: dict = Body(default={})):
        canvas = studio.get_canvas(canvas_id)
        kernel_id = str(body.get("kernel", "onnx"))
        options = {}
        if "opset" in body:
            opset = body["opset"]
            if not isinstance(opset, int) or isinstance(opset, bool):
                raise ApiProblem(400, "bad_request", "opset must be an integer")
            options["opset"] = opset
        with canvas.lock:
            result = studio.registry.export_model(canvas.graph, kernel_id, options)
            descriptor = next(d for d in studio.registry.list_kernels()
                              if d.kernel_id == kernel_id)
            project_dir = canvas.path.parent if canvas.path else studio.root
            artifact_path = project_dir / f"{canvas.name}.{descriptor.artifact_extension}"
            session._atomic_write(artifact_path, result.artifact_bytes)
            if result.sidecar_bytes is not None:
                session._atomic_write(artifact_path.with_suffix(".weights"),
                                      result.sidecar_bytes)
        telemetry.emit("canvas.compile", payload={
            "canvas": canvas.id, "kernel": kernel_id,
            "nodes": str(len(canvas.graph.nodes))})
        try:
            rel = str(artifact_path.relative_to(studio.root))
        except ValueError:
            rel = str(artifact_path)
        return {"artifactPath": rel, "text": result.text_repr,
                "diagnostics": [d.to_json() for d in result.diagnostics]}

    @app.post("/api/import")
    def import_model(body: dict = Body(...)):
        kernel_id = str(body.get("kernel", "onnx"))
        if "path" in body:
            path = studio.resolve_under_root(str(body["path"]))
            try:
                data = path.read_bytes()
            except OSError as exc:
                raise ApiProblem(409, "io_error", str(exc))
            name = path.stem
        elif "data" in body:
            try:
                data = base64.b64decode(str(body["data"]), validate=True)
            except Exception:
                raise ApiProblem(400, "bad_request", "data must be base64")
            name = str(body.get("name") or studio.untitled_name())
        else:
            raise ApiProblem(400, "bad_request", "need either path or data")
        graph = studio.registry.import_model(kernel_id, data)
        canvas = studio.create_canvas(graph, name, None)
        return {"canvasId": canvas.id, "name": canvas.name,
                "revision": canvas.history.revision}

    @app.post("/api/canvas/{canvas_id}/save")
    def save_canvas(canvas_id: str, body: dict = Body(default={})):
        canvas = studio.get_canvas(canvas_id)
        if "path" in body:
            path = studio.resolve_under_root(str(body["path"]))
        elif canvas.path is not None:
            path = canvas.path
        else:
            path = studio.root / f"{canvas.name}.sketch"
        with canvas.lock:
            try:
                session.save_project(canvas.graph, path)
            except OSError as exc:
                raise ApiProblem(409, "io_error", str(exc))
            canvas.path = path
            canvas.name = path.stem
        studio.persist_session()
        return {"path": str(path)}

    # --- read-only surfaces -------------------------------------------------------------

    @app.get("/api/catalog")
    def get_catalog():
        return {"layers": catalog.catalog_document()}

    @app.get("/api/kernels")
    def get_kernels():
        return {"kernels": [d.to_json() for d in studio.registry.list_kernels()]}

    @app.get("/api/fs")
    def fs_list(path: str = Query(default=".")):
        resolved = studio.resolve_under_root(path)
        if not resolved.exists():
            raise ApiProblem(404, "not_found", f"no such path {path!r}")
        if not resolved.is_dir():
            raise ApiProblem(400, "bad_request", f"{path!r} is not a directory")
        entries = []
        for child in resolved.iterdir():
            entries.append({
                "name": child.name,
                "kind": "dir" if child.is_dir() else "file",
                **({"size": child.stat().st_size} if child.is_file() else {}),
            })
        entries.sort(key=lambda e: (e["kind"] != "dir", e["name"]))
        return {"path": str(resolved.relative_to(studio.root)) or ".",
                "entries": entries}

    @app.get("/api/artifacts/{name:path}")
    def get_artifact(name: str):
        resolved = studio.resolve_under_root(name)
        if not resolved.is_file():
            raise ApiProblem(404, "not_found", f"no artifact {name!r}")
        return FileResponse(resolved)

    # --- static editor bundle ----------------------------------------------------------

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")
    else:
        @app.get("/", response_class=HTMLResponse)
        def index():
            return ("<html><body><h1>sketch</h1>"
                    "<p>No editor bundle found; the JSON API lives under "
                    "<code>/api</code>.</p></body></html>")

    return app


# --- mutation dispatch table ----------------------------------------------------


def _op_node_add(graph: Graph, body: dict):
    layer_type = _require(body, "type", str, "a layer type name")
    params = body.get("params")
    if params is not None and not isinstance(params, dict):
        raise ApiProblem(400, "bad_request", "params must be an object")
    position = _optional_position(body) or (0.0, 0.0)
    node_id = graph.add_node(layer_type, params, position)
    return f"node.add {node_id} {layer_type}", {"nodeId": node_id}


def _op_node_remove(graph: Graph, body: dict):
    node_id = _require(body, "nodeId", str, "a node id")
    graph.remove_node(node_id)
    return f"node.remove {node_id}", {}


def _op_node_update(graph: Graph, body: dict):
    node_id = _require(body, "nodeId", str, "a node id")
    params = body.get("params")
    if params is not None and not isinstance(params, dict):
        raise ApiProblem(400, "bad_request", "params must be an object")
    position = _optional_position(body)
    graph.update_node(node_id, params, position)
    if not params and position is not None:
        return f"node.move {node_id}", {}
    return f"node.update {node_id}", {}


def _op_edge_connect(graph: Graph, body: dict):
    src = _require(body, "src", str, "a node id")
    dst = _require(body, "dst", str, "a node id")
    graph.connect(src, dst)
    return f"edge.connect {src} {dst}", {}


def _op_edge_disconnect(graph: Graph, body: dict):
    src = _require(body, "src", str, "a node id")
    dst = _require(body, "dst", str, "a node id")
    graph.disconnect(src, dst)
    return f"edge.disconnect {src} {dst}", {}


def _op_group_create(graph: Graph, body: dict):
    ids = _require(body, "nodeIds", list, "a list of node ids")
    if not all(isinstance(i, str) for i in ids):
        raise ApiProblem(400, "bad_request", "nodeIds must be strings")
    name = str(body.get("name", "group"))
    gid = graph.group_nodes(list(ids), name)
    return f"group.create {gid}", {"groupId": gid}


def _op_group_dissolve(graph: Graph, body: dict):
    gid = _require(body, "groupId", str, "a group id")
    graph.ungroup(gid)
    return f"group.dissolve {gid}", {}


_MUTATIONS = {
    "node.add": _op_node_add,
    "node.remove": _op_node_remove,
    "node.update": _op_node_update,
    "edge.connect": _op_edge_connect,
    "edge.disconnect": _op_edge_disconnect,
    "group.create": _op_group_create,
    "group.dissolve": _op_group_dissolve,
}
