"""Scene documents: the anchor/layer aggregate, its JSON schema, and the
on-disk store.

The JSON schema is the contract shared with the editor UI.  Geometry is
serialized as ``{"kind": "plane|cylinder|sphere", "params": {...}}`` with
field names matching the geometry dataclasses; layer rasters travel as
base64 PNG.  Floats survive the round trip bit-for-bit (JSON uses repr).
"""

from __future__ import annotations

import base64
import io
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .anchors import (ContentLayer, CylindricalParams, ParametricAnchor,
                      PlanarParams, SphericalParams)
from .geomfit import Cylinder, Plane, Sphere
from .scene import DepthScene


@dataclass(eq=False)
class SceneDocument:
    scene: DepthScene
    scene_id: str
    anchors: list[ParametricAnchor] = field(default_factory=list)
    layers: list[ContentLayer] = field(default_factory=list)
    provenance: dict[str, dict[str, str]] = field(default_factory=dict)

    def anchor_by_id(self, anchor_id: str) -> ParametricAnchor:
        for a in self.anchors:
            if a.id == anchor_id:
                return a
        raise KeyError(anchor_id)

    def replace_anchor(self, anchor: ParametricAnchor) -> None:
        for i, a in enumerate(self.anchors):
            if a.id == anchor.id:
                self.anchors[i] = anchor
                return
        raise KeyError(anchor.id)

    def validate(self) -> list[str]:
        issues = []
        ids = [a.id for a in self.anchors]
        if len(set(ids)) != len(ids):
            issues.append("duplicate anchor ids")
        for layer in self.layers:
            if layer.anchor_id not in ids:
                issues.append(f"layer {layer.id} references missing anchor "
                              f"{layer.anchor_id}")
        return issues


def _vec(a: np.ndarray) -> list[float]:
    return [float(x) for x in a]


def geometry_to_json(g: Plane | Cylinder | Sphere) -> dict:
    if isinstance(g, Plane):
        return {"kind": "plane", "params": {
            "normal": _vec(g.normal), "d": float(g.d),
            "centroid": _vec(g.centroid), "primary_dir": _vec(g.primary_dir),
            "extent": [float(g.extent[0]), float(g.extent[1])]}}
    if isinstance(g, Cylinder):
        return {"kind": "cylinder", "params": {
            "axis_point": _vec(g.axis_point), "axis_dir": _vec(g.axis_dir),
            "radius": float(g.radius), "half_height": float(g.half_height)}}
    if isinstance(g, Sphere):
        return {"kind": "sphere", "params": {
            "center": _vec(g.center), "radius": float(g.radius)}}
    raise TypeError(type(g).__name__)


def geometry_from_json(data: dict) -> Plane | Cylinder | Sphere:
    p = data["params"]
    if data["kind"] == "plane":
        return Plane(normal=np.array(p["normal"]), d=float(p["d"]),
                     centroid=np.array(p["centroid"]),
                     primary_dir=np.array(p["primary_dir"]),
                     extent=(float(p["extent"][0]), float(p["extent"][1])))
    if data["kind"] == "cylinder":
        return Cylinder(axis_point=np.array(p["axis_point"]),
                        axis_dir=np.array(p["axis_dir"]),
                        radius=float(p["radius"]),
                        half_height=float(p["half_height"]))
    if data["kind"] == "sphere":
        return Sphere(center=np.array(p["center"]), radius=float(p["radius"]))
    raise ValueError(f"unknown geometry kind {data['kind']!r}")


def _params_to_json(params) -> dict:
    if isinstance(params, PlanarParams):
        return {"offset": params.offset, "uv_center": list(params.uv_center),
                "uv_scale": list(params.uv_scale), "rotation": params.rotation,
                "size": list(params.size)}
    if isinstance(params, CylindricalParams):
        return {"radius_scale": params.radius_scale,
                "height_offset": params.height_offset,
                "angular_offset": params.angular_offset,
                "band_height": params.band_height, "arc_span": params.arc_span}
    return {"radius_scale": params.radius_scale,
            "latitude_center": params.latitude_center,
            "longitude_center": params.longitude_center,
            "band_extent": params.band_extent}


def _params_from_json(kind: str, data: dict):
    if kind == "Planar":
        return PlanarParams(offset=data["offset"],
                            uv_center=tuple(data["uv_center"]),
                            uv_scale=tuple(data["uv_scale"]),
                            rotation=data["rotation"], size=tuple(data["size"]))
    if kind == "Cylindrical":
        return CylindricalParams(**data)
    return SphericalParams(**data)


def anchor_to_json(a: ParametricAnchor) -> dict:
    return {"id": a.id, "kind": a.kind, "geometry": geometry_to_json(a.geometry),
            "rationale": a.rationale, "free_params": _params_to_json(a.free_params)}


def anchor_from_json(data: dict) -> ParametricAnchor:
    return ParametricAnchor(
        id=data["id"], kind=data["kind"],
        geometry=geometry_from_json(data["geometry"]),
        rationale=data.get("rationale", ""),
        free_params=_params_from_json(data["kind"], data["free_params"]))


def encode_raster_png(raster: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(raster, "RGBA").save(buf, format="PNG")
    return buf.getvalue()


def decode_raster_png(data: bytes) -> np.ndarray:
    return np.asarray(Image.open(io.BytesIO(data)).convert("RGBA"))


def layer_to_json(layer: ContentLayer) -> dict:
    return {"id": layer.id, "anchor_id": layer.anchor_id,
            "content_png_b64": base64.b64encode(
                encode_raster_png(layer.content)).decode("ascii"),
            "repeat": list(layer.repeat), "gap": list(layer.gap),
            "mirror": layer.mirror, "content_rotation": layer.content_rotation,
            "visible": layer.visible, "double_sided": layer.double_sided}


def layer_from_json(data: dict) -> ContentLayer:
    return ContentLayer(
        id=data["id"], anchor_id=data["anchor_id"],
        content=decode_raster_png(base64.b64decode(data["content_png_b64"])),
        repeat=tuple(data["repeat"]), gap=tuple(data["gap"]),
        mirror=data["mirror"], content_rotation=data["content_rotation"],
        visible=data["visible"], double_sided=data["double_sided"])


def encode_document(doc: SceneDocument) -> dict:
    return {"scene_id": doc.scene_id,
            "anchors": [anchor_to_json(a) for a in doc.anchors],
            "layers": [layer_to_json(l) for l in doc.layers],
            "provenance": doc.provenance}


def decode_document(data: dict, scene: DepthScene) -> SceneDocument:
    return SceneDocument(
        scene=scene, scene_id=data["scene_id"],
        anchors=[anchor_from_json(a) for a in data["anchors"]],
        layers=[layer_from_json(l) for l in data["layers"]],
        provenance={k: dict(v) for k, v in data.get("provenance", {}).items()})


def canonical_json(data: dict) -> str:
    """One stable byte representation per document (used for determinism
    comparisons and the on-disk store)."""
    return json.dumps(data, sort_keys=True, separators=(",", ":"))


def documents_equal(a: SceneDocument, b: SceneDocument) -> bool:
    return canonical_json(encode_document(a)) == canonical_json(encode_document(b))


class DocumentStore:
    """One JSON file per document id, written atomically (tmp + rename)."""

    def __init__(self, root: Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def path(self, doc_id: str) -> Path:
        return self.root / f"{doc_id}.json"

    def save(self, doc_id: str, payload: dict) -> None:
        tmp = self.root / f".{doc_id}.tmp"
        tmp.write_text(canonical_json(payload))
        os.replace(tmp, self.path(doc_id))

    def load(self, doc_id: str) -> dict:
        p = self.path(doc_id)
        if not p.exists():
            raise KeyError(doc_id)
        return json.loads(p.read_text())

    def ids(self) -> list[str]:
        return sorted(p.stem for p in self.root.glob("*.json"))

    def new_id(self) -> str:
        existing = set(self.ids())
        i = len(existing)
        while f"d{i:04d}" in existing:
            i += 1
        return f"d{i:04d}"


def new_layer(doc: SceneDocument, anchor_id: str, content: np.ndarray,
              **kwargs) -> ContentLayer:
    """Create a layer bound to an existing anchor, with the kind-appropriate
    double-sided default and the next free layer id."""
    from .anchors import default_double_sided
    anchor = doc.anchor_by_id(anchor_id)
    used = {l.id for l in doc.layers}
    i = len(used)
    while f"l{i}" in used:
        i += 1
    kwargs.setdefault("double_sided", default_double_sided(anchor.kind))
    return ContentLayer(id=f"l{i}", anchor_id=anchor_id, content=content, **kwargs)
