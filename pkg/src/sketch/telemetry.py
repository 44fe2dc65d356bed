"""Structured JSON-lines event log for debugging and maintenance.

Events are appended to ``sketch.log`` in the state directory, one JSON object
per line, size-rotated at 10 MiB keeping 3 files. Logging never raises into
the caller; failures degrade to stderr.
"""
from __future__ import annotations

import json
import os
import queue
import sys
import threading
import time
import traceback
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

_LEVELS = {"info": 0, "warn": 1, "error": 2}
_MAX_PAYLOAD_VALUE = 4096
MAX_LOG_BYTES = 10 * 1024 * 1024
KEEP_FILES = 3


def default_state_dir() -> Path:
    env = os.environ.get("SKETCH_STATE_DIR")
    if env:
        return Path(env)
    if sys.platform == "win32":
        base = Path(os.environ.get("LOCALAPPDATA", Path.home() / "AppData" / "Local"))
    else:
        base = Path(os.environ.get("XDG_STATE_HOME", Path.home() / ".local" / "state"))
    return base / "sketch"


@dataclass
class LogEvent:
    timestamp: int                  # UTC milliseconds
    level: str                      # info | warn | error
    kind: str                       # dot-separated lowercase, e.g. "project.open"
    payload: dict[str, str] = field(default_factory=dict)
    stack: Optional[str] = None

    def to_json_line(self) -> str:
        doc = {
            "timestamp": self.timestamp,
            "level": self.level,
            "kind": self.kind,
            "payload": {k: v[:_MAX_PAYLOAD_VALUE] for k, v in self.payload.items()},
        }
        if self.stack is not None:
            doc["stack"] = self.stack
        return json.dumps(doc, ensure_ascii=False)


class EventLog:
    """Queue-fed single-writer log; append is safe from any thread."""

    def __init__(self, state_dir: Path, level: str = "info",
                 max_bytes: int = MAX_LOG_BYTES, keep: int = KEEP_FILES):
        self.state_dir = Path(state_dir)
        self.threshold = _LEVELS.get(level, 0)
        self.max_bytes = max_bytes
        self.keep = keep
        self.path = self.state_dir / "sketch.log"
        self._queue: queue.Queue = queue.Queue()
        self._worker = threading.Thread(target=self._drain, daemon=True,
                                        name="sketch-log")
        self._worker.start()

    def log(self, event: LogEvent) -> None:
        if _LEVELS.get(event.level, 0) < self.threshold:
            return
        try:
            self._queue.put(event)
        except Exception:  # pragma: no cover - queue.put does not realistically fail
            print(event.to_json_line(), file=sys.stderr)

    def emit(self, kind: str, level: str = "info",
             payload: Optional[dict] = None, with_stack: bool = False) -> None:
        stack = traceback.format_exc() if with_stack else None
        if stack == "NoneType: None\n":
            stack = "".join(traceback.format_stack()[:-1])
        self.log(LogEvent(
            timestamp=int(time.time() * 1000),
            level=level,
            kind=kind,
            payload={k: str(v) for k, v in (payload or {}).items()},
            stack=stack,
        ))

    def flush(self) -> None:
        self._queue.join()

    def close(self) -> None:
        self._queue.join()

    # --- writer thread -----------------------------------------------------

    def _drain(self) -> None:
        while True:
            event = self._queue.get()
            try:
                self._write(event)
            except Exception as exc:
                print(f"sketch.log write failed: {exc}", file=sys.stderr)
                try:
                    print(event.to_json_line(), file=sys.stderr)
                except Exception:
                    pass
            finally:
                self._queue.task_done()

    def _write(self, event: LogEvent) -> None:
        self.state_dir.mkdir(parents=True, exist_ok=True)
        if self.path.exists() and self.path.stat().st_size >= self.max_bytes:
            self._rotate()
        with open(self.path, "a", encoding="utf-8") as fh:
            fh.write(event.to_json_line() + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    def _rotate(self) -> None:
        oldest = self.path.with_name(f"{self.path.name}.{self.keep - 1}")
        if oldest.exists():
            oldest.unlink()
        for i in range(self.keep - 2, 0, -1):
            src = self.path.with_name(f"{self.path.name}.{i}")
            if src.exists():
                os.replace(src, self.path.with_name(f"{self.path.name}.{i + 1}"))
        os.replace(self.path, self.path.with_name(f"{self.path.name}.1"))


_default: Optional[EventLog] = None
_default_lock = threading.Lock()


def configure(state_dir: Optional[Path] = None, level: Optional[str] = None) -> EventLog:
    """(Re)configure the process-wide log; returns the active instance."""
    global _default
    with _default_lock:
        if _default is not None:
            _default.close()
        _default = EventLog(
            state_dir or default_state_dir(),
            level or os.environ.get("SKETCH_LOG_LEVEL", "info"),
        )
        return _default


def get_log() -> EventLog:
    global _default
    with _default_lock:
        if _default is None:
            _default = EventLog(
                default_state_dir(),
                os.environ.get("SKETCH_LOG_LEVEL", "info"),
            )
        return _default


def emit(kind: str, level: str = "info", payload: Optional[dict] = None,
         with_stack: bool = False) -> None:
    """Fire-and-forget event on the process-wide log; never raises."""
    try:
        get_log().emit(kind, level=level, payload=payload, with_stack=with_stack)
    except Exception as exc:  # pragma: no cover - last-resort guard
        print(f"telemetry failed: {exc}", file=sys.stderr)
