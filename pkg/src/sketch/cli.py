"""Command line entry points: serve the editor API, headless compile, import."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import binder, session, telemetry
from .errors import SketchError, ValidationFailed


def _cmd_serve(args) -> int:
    import uvicorn

    from .server import create_app

    ui_dir = Path(args.ui) if args.ui else _find_ui_dir(Path(args.root))
    app = create_app(
        root=Path(args.root),
        state_dir=Path(args.state_dir) if args.state_dir else None,
        ui_dir=ui_dir,
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level=args.log_level)
    return 0


def _find_ui_dir(root: Path):
    for candidate in (root / "frontend" / "dist", Path.cwd() / "frontend" / "dist"):
        if (candidate / "index.html").is_file():
            return candidate
    return None


def _cmd_compile(args) -> int:
    registry = binder.default_registry()
    project = Path(args.project)
    graph = session.open_project(project)
    try:
        result = registry.export_model(graph, args.kernel,
                                       {"opset": args.opset} if args.opset else {})
    except ValidationFailed as exc:
        print("validation failed:", file=sys.stderr)
        for diag in exc.diagnostics:
            print(f"  [{diag.kind}] {diag.message}", file=sys.stderr)
        return 1
    descriptor = next(d for d in registry.list_kernels() if d.kernel_id == args.kernel)
    out = Path(args.output) if args.output else project.with_suffix(
        "." + descriptor.artifact_extension)
    out.write_bytes(result.artifact_bytes)
    if result.sidecar_bytes is not None:
        out.with_suffix(".weights").write_bytes(result.sidecar_bytes)
    print(result.text_repr)
    print(f"wrote {out}", file=sys.stderr)
    return 0


def _cmd_import(args) -> int:
    registry = binder.default_registry()
    data = Path(args.model).read_bytes()
    graph = registry.import_model(args.kernel, data)
    session.save_project(graph, Path(args.output))
    print(f"imported {len(graph.nodes)} nodes -> {args.output}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sketch",
                                     description="visual network studio tools")
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the editor server")
    serve.add_argument("--port", type=int, default=8470)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--root", default=".", help="project root directory")
    serve.add_argument("--state-dir", default=None)
    serve.add_argument("--log-level", default="info")
    serve.add_argument("--ui", default=None, help="editor bundle directory")
    serve.set_defaults(func=_cmd_serve)

    compile_ = sub.add_parser("compile", help="headless compile of a project file")
    compile_.add_argument("project")
    compile_.add_argument("--kernel", default="onnx")
    compile_.add_argument("--opset", type=int, default=None)
    compile_.add_argument("-o", "--output", default=None)
    compile_.set_defaults(func=_cmd_compile)

    import_ = sub.add_parser("import", help="import a model into a project file")
    import_.add_argument("model")
    import_.add_argument("--kernel", default="onnx")
    import_.add_argument("-o", "--output", required=True)
    import_.set_defaults(func=_cmd_import)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SketchError as exc:
        print(f"error [{exc.code}]: {exc.message}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error [io_error]: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
