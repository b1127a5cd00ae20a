"""Parametric anchors: fitted primitives plus constrained free parameters,
surface meshes for rendering, and tiled layer textures.

The fitted geometry inside an anchor is immutable; edits only move the
anchor's free parameters, so a plane can slide along its normal but never
tilt, a cylinder band can grow but its axis never moves, and so on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import UnknownParam
from .geomfit import Cylinder, Plane, Sphere

TWO_PI = 2.0 * math.pi
MIN_SCALE = 1e-3

# camera-space frame used to parametrize spheres: image-up is -y
_SPHERE_UP = np.array([0.0, -1.0, 0.0])
_SPHERE_E1 = np.array([1.0, 0.0, 0.0])
_SPHERE_E2 = np.cross(_SPHERE_UP, _SPHERE_E1)


@dataclass(frozen=True)
class PlanarParams:
    offset: float = 0.0                       # along the plane normal
    uv_center: tuple[float, float] = (0.0, 0.0)  # in-plane units
    uv_scale: tuple[float, float] = (1.0, 1.0)
    rotation: float = 0.0                     # radians about the normal
    size: tuple[float, float] = (1.0, 1.0)    # surface half-extents


@dataclass(frozen=True)
class CylindricalParams:
    radius_scale: float = 1.0
    height_offset: float = 0.0
    angular_offset: float = 0.0   # UV seam angle; rotating it spins content
    band_height: float = 1.0
    arc_span: float = TWO_PI


@dataclass(frozen=True)
class SphericalParams:
    radius_scale: float = 1.0
    latitude_center: float = 0.0
    longitude_center: float = 0.0
    band_extent: float = math.pi / 6  # latitudinal half-extent


AnchorParams = PlanarParams | CylindricalParams | SphericalParams


@dataclass(frozen=True, eq=False)
class ParametricAnchor:
    id: str
    kind: str  # "Planar" | "Cylindrical" | "Spherical"
    geometry: Plane | Cylinder | Sphere
    rationale: str
    free_params: AnchorParams


@dataclass(frozen=True, eq=False)
class ContentLayer:
    id: str
    anchor_id: str
    content: np.ndarray  # (h, w, 4) uint8 RGBA, nonempty
    repeat: tuple[int, int] = (1, 1)
    gap: tuple[float, float] = (0.0, 0.0)
    mirror: bool = False
    content_rotation: float = 0.0
    visible: bool = True
    double_sided: bool = True


@dataclass(frozen=True, eq=False)
class SurfaceMesh:
    vertices: np.ndarray   # (M, 3)
    uvs: np.ndarray        # (M, 2) in [0,1]^2
    triangles: np.ndarray  # (K, 3) int


def make_anchor(anchor_id: str, geometry: Plane | Cylinder | Sphere,
                rationale: str = "") -> ParametricAnchor:
    """Wrap a fitted primitive with placeholder parameters that hug it."""
    if isinstance(geometry, Plane):
        kind = "Planar"
        params: AnchorParams = PlanarParams(
            size=(max(geometry.extent[0], MIN_SCALE),
                  max(geometry.extent[1], MIN_SCALE)))
    elif isinstance(geometry, Cylinder):
        kind = "Cylindrical"
        params = CylindricalParams(
            band_height=max(2.0 * geometry.half_height, MIN_SCALE))
    elif isinstance(geometry, Sphere):
        kind = "Spherical"
        params = SphericalParams()
    else:
        raise TypeError(f"unsupported geometry {type(geometry).__name__}")
    return ParametricAnchor(id=anchor_id, kind=kind, geometry=geometry,
                            rationale=rationale, free_params=params)


def default_double_sided(kind: str) -> bool:
    """Planes render both faces; cylinder/sphere backs are culled."""
    return kind == "Planar"


# clamp rules keeping every parameter inside its invariant bounds
_CLAMPS = {
    ("Planar", "uv_scale"): lambda v: max(v, MIN_SCALE),
    ("Planar", "size"): lambda v: max(v, MIN_SCALE),
    ("Cylindrical", "radius_scale"): lambda v: max(v, MIN_SCALE),
    ("Cylindrical", "band_height"): lambda v: max(v, MIN_SCALE),
    ("Cylindrical", "arc_span"): lambda v: min(max(v, MIN_SCALE), TWO_PI),
    ("Spherical", "radius_scale"): lambda v: max(v, MIN_SCALE),
    ("Spherical", "band_extent"): lambda v: min(max(v, MIN_SCALE), math.pi / 2),
    ("Spherical", "latitude_center"): lambda v: min(max(v, -math.pi / 2), math.pi / 2),
}

_COMPONENTS = {"u": 0, "v": 1, "w": 0, "h": 1}


def apply_constrained_edit(anchor: ParametricAnchor,
                           edit: tuple[str, float]) -> ParametricAnchor:
    """Add ``delta`` to one free parameter (clamped); geometry is untouched.

    Tuple-valued parameters accept a component suffix (``size.w``,
    ``uv_center.v``); the bare name applies the delta to every component.
    """
    name, delta = edit
    base, _, comp = name.partition(".")
    params = anchor.free_params
    if not hasattr(params, base):
        raise UnknownParam(f"{anchor.kind} anchor has no parameter {name!r}")
    clamp = _CLAMPS.get((anchor.kind, base), lambda v: v)
    value = getattr(params, base)
    if isinstance(value, tuple):
        if comp:
            if comp not in _COMPONENTS or _COMPONENTS[comp] >= len(value):
                raise UnknownParam(f"no component {comp!r} on {base}")
            i = _COMPONENTS[comp]
            value = tuple(clamp(v + delta) if j == i else v
                          for j, v in enumerate(value))
        else:
            value = tuple(clamp(v + delta) for v in value)
    else:
        if comp:
            raise UnknownParam(f"{base} is scalar; no component {comp!r}")
        value = clamp(value + delta)
    return replace(anchor, free_params=replace(params, **{base: value}))


def _grid_triangles(nt: int) -> np.ndarray:
    tris = []
    stride = nt + 1
    for j in range(nt):
        for i in range(nt):
            a = j * stride + i
            tris.append((a, a + 1, a + stride + 1))
            tris.append((a, a + stride + 1, a + stride))
    return np.array(tris, dtype=np.int64)


def build_surface_mesh(anchor: ParametricAnchor, tessellation: int) -> SurfaceMesh:
    """Tessellate the anchor's content band as a regular (s, t) grid with
    UVs spanning exactly [0,1]^2; t increases along the surface's up/axis."""
    if tessellation < 1:
        raise ValueError("tessellation must be >= 1")
    ss = np.linspace(0.0, 1.0, tessellation + 1)
    tt = np.linspace(0.0, 1.0, tessellation + 1)
    sg, tg = np.meshgrid(ss, tt)
    sg, tg = sg.ravel(), tg.ravel()
    g, p = anchor.geometry, anchor.free_params

    if anchor.kind == "Planar":
        theta = p.rotation
        e1 = math.cos(theta) * g.primary_dir + math.sin(theta) * g.secondary_dir
        e2 = np.cross(g.normal, e1)
        center = (g.centroid + p.offset * g.normal
                  + p.uv_center[0] * e1 + p.uv_center[1] * e2)
        verts = (center
                 + np.outer((2 * sg - 1) * p.size[0], e1)
                 + np.outer((2 * tg - 1) * p.size[1], e2))
    elif anchor.kind == "Cylindrical":
        from .geomfit import _orthobasis  # deterministic frame around the axis
        b1, b2 = _orthobasis(g.axis_dir)
        ang = p.angular_offset + sg * p.arc_span
        h = p.height_offset + (tg - 0.5) * p.band_height
        r = g.radius * p.radius_scale
        verts = (g.axis_point
                 + r * (np.outer(np.cos(ang), b1) + np.outer(np.sin(ang), b2))
                 + np.outer(h, g.axis_dir))
    elif anchor.kind == "Spherical":
        lon = p.longitude_center + sg * TWO_PI
        lat = p.latitude_center + (2 * tg - 1) * p.band_extent
        r = g.radius * p.radius_scale
        verts = (g.center
                 + r * (np.outer(np.cos(lat) * np.cos(lon), _SPHERE_E1)
                        + np.outer(np.cos(lat) * np.sin(lon), _SPHERE_E2)
                        + np.outer(np.sin(lat), _SPHERE_UP)))
    else:
        raise ValueError(f"unknown anchor kind {anchor.kind!r}")

    return SurfaceMesh(vertices=verts, uvs=np.column_stack((sg, tg)),
                       triangles=_grid_triangles(tessellation))


def content_uv_transform(anchor: ParametricAnchor,
                         uv: np.ndarray) -> np.ndarray:
    """Mesh UV -> texture UV.  Planar content scales about the band center
    via uv_scale; cylindrical/spherical placement is purely geometric."""
    if anchor.kind == "Planar":
        su, sv = anchor.free_params.uv_scale
        out = np.empty_like(uv)
        out[..., 0] = (uv[..., 0] - 0.5) / su + 0.5
        out[..., 1] = (uv[..., 1] - 0.5) / sv + 0.5
        return out
    return uv


def _rotate_tile(tile: np.ndarray, angle: float) -> np.ndarray:
    """Nearest-neighbor rotation about the tile center, transparent fill."""
    h, w = tile.shape[:2]
    ys, xs = np.mgrid[0:h, 0:w]
    dx = xs + 0.5 - w / 2.0
    dy = ys + 0.5 - h / 2.0
    ca, sa = math.cos(angle), math.sin(angle)
    sx = np.floor(ca * dx + sa * dy + w / 2.0).astype(np.int64)
    sy = np.floor(-sa * dx + ca * dy + h / 2.0).astype(np.int64)
    ok = (sx >= 0) & (sx < w) & (sy >= 0) & (sy < h)
    out = np.zeros_like(tile)
    out[ys[ok], xs[ok]] = tile[sy[ok], sx[ok]]
    return out


def compose_layer_texture(layer: ContentLayer) -> np.ndarray:
    """Tile the layer content repeat-u x repeat-v across the UV square.

    Per tile, in order: rotate about the tile center (transparent fill),
    mirror horizontally on odd tile columns, then crop a transparent margin
    (``gap`` is the fraction of each tile split between both sides).
    """
    content = layer.content
    if content.size == 0:
        raise ValueError("empty layer content")
    h, w = content.shape[:2]
    nu, nv = layer.repeat
    if nu < 1 or nv < 1:
        raise ValueError(f"repeat must be >= 1, got {layer.repeat}")
    gu, gv = layer.gap

    base = content
    if layer.content_rotation != 0.0:
        base = _rotate_tile(base, layer.content_rotation)
    mirrored = base[:, ::-1] if layer.mirror else base

    if gu > 0 or gv > 0:
        xs = np.arange(w) + 0.5
        ys = np.arange(h) + 0.5
        keep_x = (xs >= gu * w / 2.0) & (xs <= w * (1 - gu / 2.0))
        keep_y = (ys >= gv * h / 2.0) & (ys <= h * (1 - gv / 2.0))
        margin = ~(keep_y[:, None] & keep_x[None, :])

        def crop(t: np.ndarray) -> np.ndarray:
            t = t.copy()
            t[margin] = 0
            return t

        base, mirrored = crop(base), crop(mirrored)

    out = np.zeros((nv * h, nu * w, 4), dtype=np.uint8)
    for j in range(nv):
        for i in range(nu):
            tile = mirrored if (layer.mirror and i % 2 == 1) else base
            out[j * h:(j + 1) * h, i * w:(i + 1) * w] = tile
    return out
