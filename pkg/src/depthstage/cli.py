"""Command-line interface.

    depthstage [--fixtures DIR | --remote CONFIG] [--seed N] COMMAND ...

Commands: ingest, pipeline, extract, render, validate-program, serve.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .document import (SceneDocument, anchor_to_json, canonical_json,
                       decode_document, encode_document)
from .errors import BindError, EngineError
from .orchestrator import run_pipeline, scene_id_for
from .render import RenderSettings, export_png, render_document
from .scene import load_scene, save_scene
from .services import ServiceBundle
from .vpdsl import check_program, interpret_program


def _services(args) -> ServiceBundle:
    if args.fixtures:
        return ServiceBundle.for_fixtures(Path(args.fixtures))
    if args.remote:
        config = json.loads(Path(args.remote).read_text())
        return ServiceBundle.from_remote_config(config)
    raise SystemExit("either --fixtures DIR or --remote CONFIG is required")


def _cmd_ingest(args) -> int:
    from .orchestrator import ingest_image
    data = Path(args.image).read_bytes()
    scene = ingest_image(data, _services(args))
    save_scene(scene, Path(args.output))
    print(f"scene {scene_id_for(data)} -> {args.output}")
    return 0


def _cmd_pipeline(args) -> int:
    data = Path(args.image).read_bytes()
    doc, report = run_pipeline(data, _services(args), seed=args.seed)
    payload = encode_document(doc)
    Path(args.output).write_text(canonical_json(payload))
    if args.report:
        Path(args.report).write_text(json.dumps(report.to_json(), indent=2))
    if args.scene_out:
        save_scene(doc.scene, Path(args.scene_out))
    print(f"{report.programs_succeeded}/{report.programs_generated} programs "
          f"-> {len(doc.anchors)} anchors")
    return 0


def _cmd_extract(args) -> int:
    scene = load_scene(Path(args.scene_dir))
    text = Path(args.program).read_text()
    prog, diags = check_program(text)
    if prog is None:
        for d in diags:
            print(json.dumps(d.to_json()), file=sys.stderr)
        return 1
    result = interpret_program(prog, scene, _services(args), seed=args.seed)
    from .vpdsl import ProgramDiagnostic
    if isinstance(result, ProgramDiagnostic):
        print(json.dumps(result.to_json()), file=sys.stderr)
        return 1
    out = json.dumps(anchor_to_json(result), indent=2)
    if args.output:
        Path(args.output).write_text(out)
    else:
        print(out)
    return 0


def _cmd_render(args) -> int:
    scene = load_scene(Path(args.scene_dir))
    data = json.loads(Path(args.document).read_text())
    doc = decode_document(data, scene)
    raster = render_document(doc, RenderSettings(supersample=args.supersample))
    Path(args.output).write_bytes(export_png(raster))
    print(f"rendered {raster.shape[1]}x{raster.shape[0]} -> {args.output}")
    return 0


def _cmd_validate_program(args) -> int:
    text = Path(args.file).read_text()
    _, diags = check_program(text)
    for d in diags:
        print(json.dumps(d.to_json()))
    return 0 if not diags else 1


def _cmd_serve(args) -> int:
    import socket

    import uvicorn

    from .api import ServeConfig, create_app

    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.bind((args.host, args.port))
    except OSError as e:
        raise BindError(f"cannot bind {args.host}:{args.port}: {e}") from e
    finally:
        probe.close()

    app = create_app(ServeConfig(store_dir=Path(args.store),
                                 services=_services(args)))
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="depthstage")
    parser.add_argument("--fixtures", metavar="DIR",
                        help="replay recorded model responses from DIR")
    parser.add_argument("--remote", metavar="CONFIG",
                        help="remote endpoint config JSON")
    parser.add_argument("--seed", type=int, default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="image -> scene container")
    p.add_argument("image")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("pipeline", help="full image -> anchors pipeline")
    p.add_argument("image")
    p.add_argument("-o", "--output", required=True, help="document JSON path")
    p.add_argument("--report", help="write the pipeline report JSON here")
    p.add_argument("--scene-out", help="also save the scene container here")
    p.set_defaults(func=_cmd_pipeline)

    p = sub.add_parser("extract", help="run one program file against a scene")
    p.add_argument("scene_dir")
    p.add_argument("program")
    p.add_argument("-o", "--output")
    p.set_defaults(func=_cmd_extract)

    p = sub.add_parser("render", help="composite a document over its scene")
    p.add_argument("scene_dir")
    p.add_argument("document")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--supersample", type=int, default=1)
    p.set_defaults(func=_cmd_render)

    p = sub.add_parser("validate-program",
                       help="exit 0 iff the program has no diagnostics")
    p.add_argument("file")
    p.set_defaults(func=_cmd_validate_program)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8600)
    p.add_argument("--store", default="store")
    p.set_defaults(func=_cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except EngineError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
