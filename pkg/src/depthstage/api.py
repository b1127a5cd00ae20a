"""HTTP service exposing the pipeline, the document store, and rendering.

Scenes are persisted as container directories under ``<store>/scenes/<id>/``
(plus the untouched upload bytes, so pipeline reruns hash identically);
documents live as canonical JSON under ``<store>/documents/``.  Document
mutation is serialized per document id; scenes are immutable once ingested.
"""

from __future__ import annotations

import base64
import json
import threading
from collections import defaultdict
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
from fastapi import Body, FastAPI, HTTPException, Query, Request, Response

from .anchors import apply_constrained_edit
from .document import (DocumentStore, SceneDocument, anchor_from_json,
                       anchor_to_json, decode_document, decode_raster_png,
                       encode_document, layer_to_json, new_layer)
from .errors import EngineError, UnknownParam
from .orchestrator import run_pipeline, scene_id_for
from .render import RenderSettings, export_png, render_document
from .scene import load_scene, save_scene
from .services import ServiceBundle


@dataclass
class ServeConfig:
    store_dir: Path
    services: ServiceBundle


_LAYER_FIELDS = {"repeat": lambda v: (int(v[0]), int(v[1])),
                 "gap": lambda v: (float(v[0]), float(v[1])),
                 "mirror": bool, "content_rotation": float,
                 "visible": bool, "double_sided": bool}


def load_placeholder() -> np.ndarray:
    data = resources.files("depthstage").joinpath(
        "assets/lorem_ipsum.png").read_bytes()
    return decode_raster_png(data)


class _State:
    def __init__(self, config: ServeConfig):
        self.config = config
        self.scenes_dir = Path(config.store_dir) / "scenes"
        self.scenes_dir.mkdir(parents=True, exist_ok=True)
        self.store = DocumentStore(Path(config.store_dir) / "documents")
        self.locks: dict[str, threading.Lock] = defaultdict(threading.Lock)
        self.global_lock = threading.Lock()

    def scene_dir(self, scene_id: str) -> Path:
        d = self.scenes_dir / scene_id
        if not d.exists():
            raise HTTPException(404, f"unknown scene {scene_id}")
        return d

    def load_document(self, doc_id: str) -> SceneDocument:
        try:
            data = self.store.load(doc_id)
        except KeyError:
            raise HTTPException(404, f"unknown document {doc_id}")
        scene = load_scene(self.scene_dir(data["scene_id"]))
        return decode_document(data, scene)

    def save_document(self, doc_id: str, doc: SceneDocument) -> None:
        self.store.save(doc_id, encode_document(doc))


def create_app(config: ServeConfig) -> FastAPI:
    app = FastAPI(title="depthstage")
    state = _State(config)
    app.state.engine = state

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.post("/scenes", status_code=201)
    async def create_scene(request: Request):
        form = await request.form()
        upload = form.get("image")
        if upload is None:
            raise HTTPException(422, "multipart field 'image' is required")
        data = await upload.read()
        try:
            from .orchestrator import ingest_image
            scene = ingest_image(data, config.services)
        except EngineError as e:
            raise HTTPException(422, str(e))
        scene_id = scene_id_for(data)
        d = state.scenes_dir / scene_id
        save_scene(scene, d)
        (d / "source.bin").write_bytes(data)
        return {"scene_id": scene_id}

    @app.get("/scenes/{scene_id}")
    def get_scene(scene_id: str):
        d = state.scene_dir(scene_id)
        camera = json.loads((d / "camera.json").read_text())
        anchors = _scene_anchors(d)
        return {"scene_id": scene_id, "camera": camera,
                "anchor_count": len(anchors)}

    def _scene_anchors(d: Path) -> list[dict]:
        p = d / "anchors.json"
        return json.loads(p.read_text()) if p.exists() else []

    @app.post("/scenes/{scene_id}/pipeline")
    def run_scene_pipeline(scene_id: str, seed: int = Query(0)):
        d = state.scene_dir(scene_id)
        data = (d / "source.bin").read_bytes()
        try:
            doc, report = run_pipeline(data, config.services, seed=seed)
        except EngineError as e:
            raise HTTPException(502, str(e))
        (d / "anchors.json").write_text(json.dumps(
            [anchor_to_json(a) for a in doc.anchors]))
        (d / "provenance.json").write_text(json.dumps(doc.provenance))
        return report.to_json()

    @app.get("/scenes/{scene_id}/anchors")
    def get_anchors(scene_id: str):
        return _scene_anchors(state.scene_dir(scene_id))

    @app.post("/documents", status_code=201)
    def create_document(payload: dict = Body(...)):
        scene_id = payload.get("scene_id")
        if not scene_id:
            raise HTTPException(422, "scene_id is required")
        d = state.scene_dir(scene_id)
        scene = load_scene(d)
        prov_path = d / "provenance.json"
        doc = SceneDocument(
            scene=scene, scene_id=scene_id,
            anchors=[anchor_from_json(a) for a in _scene_anchors(d)],
            provenance=json.loads(prov_path.read_text())
            if prov_path.exists() else {})
        with state.global_lock:
            doc_id = state.store.new_id()
            state.save_document(doc_id, doc)
        return {"document_id": doc_id}

    @app.get("/documents/{doc_id}")
    def get_document(doc_id: str):
        return encode_document(state.load_document(doc_id))

    @app.patch("/documents/{doc_id}")
    def patch_document(doc_id: str, payload: dict = Body(...)):
        with state.locks[doc_id]:
            doc = state.load_document(doc_id)
            for upd in payload.get("layers", []):
                _update_layer(doc, upd["id"], upd)
            for lid in payload.get("remove_layers", []):
                doc.layers = [l for l in doc.layers if l.id != lid]
            state.save_document(doc_id, doc)
            return encode_document(doc)

    def _update_layer(doc: SceneDocument, lid: str, upd: dict) -> None:
        from dataclasses import replace
        for i, layer in enumerate(doc.layers):
            if layer.id == lid:
                kwargs = {}
                for key, conv in _LAYER_FIELDS.items():
                    if key in upd:
                        kwargs[key] = conv(upd[key])
                if "content_png_b64" in upd:
                    kwargs["content"] = decode_raster_png(
                        base64.b64decode(upd["content_png_b64"]))
                doc.layers[i] = replace(layer, **kwargs)
                return
        raise HTTPException(404, f"unknown layer {lid}")

    @app.post("/documents/{doc_id}/layers", status_code=201)
    def add_layer(doc_id: str, payload: dict = Body(...)):
        anchor_id = payload.get("anchor_id")
        if not anchor_id:
            raise HTTPException(422, "anchor_id is required")
        if "content_png_b64" in payload:
            content = decode_raster_png(
                base64.b64decode(payload["content_png_b64"]))
        else:
            if payload.get("text_asset", "lorem_ipsum") != "lorem_ipsum":
                raise HTTPException(422, "unknown text asset")
            content = load_placeholder()
        kwargs = {k: conv(payload[k]) for k, conv in _LAYER_FIELDS.items()
                  if k in payload}
        with state.locks[doc_id]:
            doc = state.load_document(doc_id)
            try:
                layer = new_layer(doc, anchor_id, content, **kwargs)
            except KeyError:
                raise HTTPException(404, f"unknown anchor {anchor_id}")
            doc.layers.append(layer)
            state.save_document(doc_id, doc)
            return {"layer_id": layer.id, "layer": layer_to_json(layer)}

    @app.patch("/documents/{doc_id}/layers/{lid}")
    def patch_layer(doc_id: str, lid: str, payload: dict = Body(...)):
        with state.locks[doc_id]:
            doc = state.load_document(doc_id)
            layer = next((l for l in doc.layers if l.id == lid), None)
            if layer is None:
                raise HTTPException(404, f"unknown layer {lid}")
            if "param" in payload:
                anchor = doc.anchor_by_id(layer.anchor_id)
                try:
                    anchor = apply_constrained_edit(
                        anchor, (payload["param"], float(payload["delta"])))
                except UnknownParam as e:
                    raise HTTPException(422, str(e))
                doc.replace_anchor(anchor)
            else:
                _update_layer(doc, lid, payload)
            state.save_document(doc_id, doc)
            return encode_document(doc)

    @app.get("/documents/{doc_id}/render")
    def render(doc_id: str, supersample: int = Query(1)):
        doc = state.load_document(doc_id)
        raster = render_document(doc, RenderSettings(supersample=supersample))
        return Response(content=export_png(raster), media_type="image/png")

    return app
