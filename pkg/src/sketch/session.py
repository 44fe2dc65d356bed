"""State management: per-canvas checkpoint history (undo/redo), project
persistence, and cross-restart session restore.

Checkpoints are full graph snapshots; weight tensors are deduplicated in a
content-addressed pool so snapshots stay cheap.
"""
from __future__ import annotations

import json
import os
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import telemetry
from .errors import MalformedProject, UnsupportedProjectVersion
from .graph import DOCUMENT_FORMAT, DOCUMENT_VERSION, Graph
from .sidecar import read_sidecar, write_sidecar
from .weights import TensorValue, content_hash

SESSION_VERSION = "1.0"
SESSION_FILE = "session.json"


@dataclass
class Checkpoint:
    checkpoint_id: int
    timestamp: int                # UTC milliseconds
    mutation_label: str
    snapshot: dict                # full graph document


class CanvasHistory:
    """Linear checkpoint log with a cursor; index 0 is the opening snapshot."""

    def __init__(self, graph: Graph, label: str = "open"):
        self._pool: dict[str, TensorValue] = {}
        self.checkpoints: list[Checkpoint] = []
        self.cursor = 0
        self._next_id = 0
        self.checkpoints.append(self._snapshot(label, graph))

    def _snapshot(self, label: str, graph: Graph) -> Checkpoint:
        doc, pool = graph.to_document()
        self._pool.update(pool)
        cp = Checkpoint(
            checkpoint_id=self._next_id,
            timestamp=int(time.time() * 1000),
            mutation_label=label,
            snapshot=doc,
        )
        self._next_id += 1
        return cp

    @property
    def revision(self) -> int:
        return self.checkpoints[self.cursor].checkpoint_id

    def record(self, mutation_label: str, graph: Graph) -> Checkpoint:
        """Append a snapshot, discarding any redo tail past the cursor.

        Consecutive position-only drags of one node coalesce into a single
        checkpoint so a long drag undoes in one step."""
        at_tip = self.cursor == len(self.checkpoints) - 1
        if (at_tip and mutation_label.startswith("node.move ")
                and self.checkpoints[self.cursor].mutation_label == mutation_label
                and self.cursor > 0):
            doc, pool = graph.to_document()
            self._pool.update(pool)
            cp = self.checkpoints[self.cursor]
            cp.snapshot = doc
            cp.timestamp = int(time.time() * 1000)
            return cp
        del self.checkpoints[self.cursor + 1:]
        cp = self._snapshot(mutation_label, graph)
        self.checkpoints.append(cp)
        self.cursor = len(self.checkpoints) - 1
        return cp

    def undo(self) -> Optional[Graph]:
        """Step back one checkpoint; None signals there is nothing to undo."""
        if self.cursor == 0:
            return None
        self.cursor -= 1
        return self.current_graph()

    def redo(self) -> Optional[Graph]:
        if self.cursor == len(self.checkpoints) - 1:
            return None
        self.cursor += 1
        return self.current_graph()

    def current_graph(self) -> Graph:
        return Graph.from_document(self.checkpoints[self.cursor].snapshot, self._pool)


# --- project files -------------------------------------------------------------


def _atomic_write(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=str(path.parent), prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def serialize_project(graph: Graph, weight_file: str) -> bytes:
    doc, _ = graph.to_document()
    doc = {
        "format": doc["format"],
        "version": doc["version"],
        "seed": doc["seed"],
        "id_counter": doc["id_counter"],
        "nodes": doc["nodes"],
        "groups": doc["groups"],
        "weight_file": weight_file,
    }
    return (json.dumps(doc, indent=2, ensure_ascii=False) + "\n").encode("utf-8")


def save_project(graph: Graph, path: str | Path) -> None:
    """Write ``<name>.sketch`` plus its ``<name>.weights`` sidecar atomically."""
    path = Path(path)
    weight_name = path.stem + ".weights"
    _, pool = graph.to_document()
    entries = sorted(pool.items())
    _atomic_write(path.with_name(weight_name), write_sidecar(entries))
    _atomic_write(path, serialize_project(graph, weight_name))
    telemetry.emit("project.save", payload={
        "path": str(path), "nodes": str(len(graph.nodes))})


def open_project(path: str | Path) -> Graph:
    path = Path(path)
    raw = path.read_text(encoding="utf-8")
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise MalformedProject("?", f"not valid JSON: {exc}") from None
    if not isinstance(doc, dict) or doc.get("format") != DOCUMENT_FORMAT:
        raise MalformedProject(str(doc.get("version", "?")), "not a sketch project file")
    version = str(doc.get("version", "?"))
    if version != DOCUMENT_VERSION:
        raise UnsupportedProjectVersion(
            f"project version {version} not supported (expected {DOCUMENT_VERSION})")

    pool: dict[str, TensorValue] = {}
    refs_exist = any(entry.get("weight_refs") for entry in doc.get("nodes", []))
    weight_file = doc.get("weight_file")
    if weight_file:
        sidecar_path = path.with_name(weight_file)
        if sidecar_path.exists():
            try:
                entries = read_sidecar(sidecar_path.read_bytes())
            except ValueError as exc:
                raise MalformedProject(version, f"bad weight sidecar: {exc}") from None
            for name, tv in entries:
                if content_hash(tv) != name:
                    raise MalformedProject(
                        version, f"weight entry {name!r} fails its content hash")
                pool[name] = tv
        elif refs_exist:
            raise MalformedProject(version, f"weight sidecar {weight_file!r} missing")

    try:
        graph = Graph.from_document(doc, pool)
    except Exception as exc:
        raise MalformedProject(version, str(exc)) from None
    telemetry.emit("project.open", payload={
        "path": str(path), "nodes": str(len(graph.nodes))})
    return graph


# --- editor session --------------------------------------------------------------


@dataclass
class SessionState:
    version: str = SESSION_VERSION
    cwd: str = ""
    open_tabs: list[tuple[str, str]] = field(default_factory=list)  # (canvas, path)
    active_tab: int = 0
    viewports: dict[str, dict] = field(default_factory=dict)  # canvas -> {pan, zoom}

    def to_json(self) -> dict:
        return {
            "version": self.version,
            "cwd": self.cwd,
            "open_tabs": [[c, p] for c, p in self.open_tabs],
            "active_tab": self.active_tab,
            "viewports": self.viewports,
        }

    @classmethod
    def default(cls) -> "SessionState":
        return cls(cwd=os.getcwd())


def save_session(state: SessionState, path: str | Path) -> None:
    payload = (json.dumps(state.to_json(), indent=2) + "\n").encode("utf-8")
    _atomic_write(Path(path), payload)


def restore_session(path: str | Path) -> SessionState:
    """Load the previous session; tabs whose project file vanished are dropped
    with a logged warning. A corrupt or missing file yields the default."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
        state = SessionState(
            version=str(doc["version"]),
            cwd=str(doc["cwd"]),
            open_tabs=[(str(c), str(p)) for c, p in doc["open_tabs"]],
            active_tab=int(doc["active_tab"]),
            viewports={str(k): dict(v) for k, v in doc.get("viewports", {}).items()},
        )
    except FileNotFoundError:
        return SessionState.default()
    except Exception as exc:
        telemetry.emit("session.corrupt", level="warn",
                       payload={"path": str(path), "reason": str(exc)})
        return SessionState.default()

    kept = []
    for canvas_id, project_path in state.open_tabs:
        if Path(project_path).exists():
            kept.append((canvas_id, project_path))
        else:
            telemetry.emit("session.tab_dropped", level="warn", payload={
                "canvas": canvas_id, "path": project_path,
                "reason": "project file missing"})
    state.open_tabs = kept
    if state.open_tabs:
        state.active_tab = min(state.active_tab, len(state.open_tabs) - 1)
    else:
        state.active_tab = 0
    telemetry.emit("session.restore", payload={
        "tabs": str(len(state.open_tabs)), "path": str(path)})
    return state
