import json

from sketch.telemetry import EventLog, LogEvent


def read_lines(path):
    return [json.loads(line) for line in path.read_text().splitlines()]


def test_events_append_in_order(tmp_path):
    log = EventLog(tmp_path)
    log.emit("canvas.compile", payload={"kernel": "onnx", "nodes": 5})
    log.emit("project.open", payload={"path": "/x"})
    log.close()
    lines = read_lines(tmp_path / "sketch.log")
    assert [l["kind"] for l in lines] == ["canvas.compile", "project.open"]
    assert lines[0]["payload"] == {"kernel": "onnx", "nodes": "5"}
    assert lines[0]["level"] == "info"


def test_error_event_carries_stack(tmp_path):
    log = EventLog(tmp_path)
    try:
        raise RuntimeError("boom")
    except RuntimeError:
        log.emit("import.fail", level="error",
                 payload={"reason": "boom"}, with_stack=True)
    log.close()
    (line,) = read_lines(tmp_path / "sketch.log")
    assert line["level"] == "error"
    assert "RuntimeError: boom" in line["stack"]


def test_level_threshold_filters(tmp_path):
    log = EventLog(tmp_path, level="error")
    log.emit("chatter", level="info")
    log.emit("trouble", level="error")
    log.close()
    lines = read_lines(tmp_path / "sketch.log")
    assert [l["kind"] for l in lines] == ["trouble"]


def test_payload_values_truncated(tmp_path):
    log = EventLog(tmp_path)
    log.emit("big.event", payload={"blob": "x" * 10000})
    log.close()
    (line,) = read_lines(tmp_path / "sketch.log")
    assert len(line["payload"]["blob"]) == 4096


def test_rotation_keeps_three_files(tmp_path):
    log = EventLog(tmp_path, max_bytes=300, keep=3)
    for i in range(60):
        log.emit("spam.event", payload={"i": i})
    log.close()
    files = sorted(p.name for p in tmp_path.glob("sketch.log*"))
    assert "sketch.log" in files
    assert len(files) <= 3
    # every surviving file still parses as json-lines
    for p in tmp_path.glob("sketch.log*"):
        for line in p.read_text().splitlines():
            json.loads(line)


def test_logging_failure_never_raises(tmp_path):
    blocker = tmp_path / "blocked"
    blocker.write_text("a file where the log dir should be")
    log = EventLog(blocker)  # state dir is a file: writes must fail quietly
    log.emit("doomed.event")
    log.close()


def test_timestamps_are_milliseconds(tmp_path):
    import time
    log = EventLog(tmp_path)
    before = int(time.time() * 1000)
    log.emit("tick")
    log.close()
    (line,) = read_lines(tmp_path / "sketch.log")
    assert before - 1000 <= line["timestamp"] <= before + 10_000


def test_event_line_shape():
    event = LogEvent(timestamp=1, level="warn", kind="a.b", payload={"k": "v"})
    doc = json.loads(event.to_json_line())
    assert doc == {"timestamp": 1, "level": "warn", "kind": "a.b",
                   "payload": {"k": "v"}}
