"""Software compositor: projects anchor surfaces through the pinhole camera
and blends them over the input image with per-pixel depth-test occlusion
against the reconstructed depth field.

The scene itself is never drawn; initializing the depth buffer from the
scene's depth map gives the same occlusion as rasterizing an invisible
scene mesh, in one pass.  Rasterization is half-space triangle fill with
perspective-correct UV interpolation; blending is straight-alpha source
over (carried premultiplied internally), with depth writes only for
fragments at alpha >= 0.5.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np
from PIL import Image

from .anchors import build_surface_mesh, compose_layer_texture, content_uv_transform
from .document import SceneDocument
from .errors import BehindCamera
from .geomfit import Cylinder, Plane, Sphere
from .scene import PinholeCamera

DEPTH_EPSILON_REL = 1e-3
CURVED_TESSELLATION = 48


@dataclass(frozen=True)
class RenderSettings:
    depth_epsilon_rel: float = DEPTH_EPSILON_REL
    supersample: int = 1
    background: tuple[int, int, int, int] | np.ndarray | None = None

    def __post_init__(self):
        if not (0.0 <= self.depth_epsilon_rel <= 0.1):
            raise ValueError("depth_epsilon_rel must be in [0, 0.1]")
        if self.supersample < 1:
            raise ValueError("supersample must be >= 1")


def project_point(camera: PinholeCamera,
                  p: tuple[float, float, float]) -> tuple[float, float, float]:
    """Forward pinhole map: u = cx + fx*x/z, v = cy + fy*y/z."""
    x, y, z = float(p[0]), float(p[1]), float(p[2])
    if z <= 0:
        raise BehindCamera(f"z = {z}")
    return (camera.cx + camera.fx * x / z, camera.cy + camera.fy * y / z, z)


def project_points(camera: PinholeCamera, pts: np.ndarray) -> np.ndarray:
    """Vectorized projection to (u, v, z); raises if any point is behind."""
    pts = np.asarray(pts, dtype=np.float64)
    z = pts[:, 2]
    if (z <= 0).any():
        raise BehindCamera("point(s) with z <= 0")
    return np.column_stack((camera.cx + camera.fx * pts[:, 0] / z,
                            camera.cy + camera.fy * pts[:, 1] / z, z))


def premultiply(raster: np.ndarray) -> np.ndarray:
    """uint8 straight RGBA -> float64 premultiplied RGBA in [0, 1]."""
    f = raster.astype(np.float64) / 255.0
    out = f.copy()
    out[..., :3] *= f[..., 3:4]
    return out


def sample_texture(tex_p: np.ndarray, uv: np.ndarray) -> np.ndarray:
    """Bilinear sample of a premultiplied float texture with a transparent
    border; ``uv`` is (N, 2) in texture space, v=1 at the top row."""
    h, w = tex_p.shape[:2]
    x = uv[:, 0] * w - 0.5
    y = (1.0 - uv[:, 1]) * h - 0.5
    x0 = np.floor(x).astype(np.int64)
    y0 = np.floor(y).astype(np.int64)
    fx = x - x0
    fy = y - y0
    out = np.zeros((uv.shape[0], 4))
    for dy, dx, wgt in ((0, 0, (1 - fx) * (1 - fy)), (0, 1, fx * (1 - fy)),
                        (1, 0, (1 - fx) * fy), (1, 1, fx * fy)):
        xx, yy = x0 + dx, y0 + dy
        ok = (xx >= 0) & (xx < w) & (yy >= 0) & (yy < h)
        if ok.any():
            out[ok] += wgt[ok, None] * tex_p[yy[ok], xx[ok]]
    return out


def _edge(ax, ay, bx, by, px, py):
    return (bx - ax) * (py - ay) - (by - ay) * (px - ax)


def _top_left(ax, ay, bx, by) -> bool:
    # CCW in y-down screen space: top edges run leftward, left edges upward
    return (ay == by and bx < ax) or (by < ay)


def _clip_near(tri_pts: np.ndarray, tri_uv: np.ndarray,
               znear: float) -> list[tuple[np.ndarray, np.ndarray]]:
    """Sutherland-Hodgman clip against z >= znear.  UVs interpolate linearly
    along 3D edges, which is exact for the affine per-triangle UV maps the
    meshes carry.  Returns 0..2 (points, uvs) triangles."""
    z = tri_pts[:, 2]
    if (z >= znear).all():
        return [(tri_pts, tri_uv)]
    poly = []
    for i in range(3):
        j = (i + 1) % 3
        cur_in = z[i] >= znear
        if cur_in:
            poly.append((tri_pts[i], tri_uv[i]))
        if cur_in != (z[j] >= znear):
            t = (znear - z[i]) / (z[j] - z[i])
            poly.append((tri_pts[i] + t * (tri_pts[j] - tri_pts[i]),
                         tri_uv[i] + t * (tri_uv[j] - tri_uv[i])))
    if len(poly) < 3:
        return []
    out = []
    for k in range(1, len(poly) - 1):
        out.append((np.stack((poly[0][0], poly[k][0], poly[k + 1][0])),
                    np.stack((poly[0][1], poly[k][1], poly[k + 1][1]))))
    return out


def _raster_triangle(color_p: np.ndarray, depth: np.ndarray,
                     touched: np.ndarray, camera: PinholeCamera,
                     tri_pts: np.ndarray, tri_uv: np.ndarray,
                     tex_p: np.ndarray, eps: float) -> None:
    """Rasterize one textured triangle into the premultiplied framebuffer."""
    z = tri_pts[:, 2]
    if (z <= 0).any():
        return
    proj = project_points(camera, tri_pts)
    (x0, y0, _), (x1, y1, _), (x2, y2, _) = proj
    area = _edge(x0, y0, x1, y1, x2, y2)
    if area == 0:
        return
    if area < 0:  # normalize to CCW so the fill rule is uniform
        x1, y1, x2, y2 = x2, y2, x1, y1
        tri_uv = tri_uv[[0, 2, 1]]
        z = z[[0, 2, 1]]
        area = -area

    h, w = depth.shape
    ix0 = max(0, int(math.ceil(min(x0, x1, x2))))
    ix1 = min(w - 1, int(math.floor(max(x0, x1, x2))))
    iy0 = max(0, int(math.ceil(min(y0, y1, y2))))
    iy1 = min(h - 1, int(math.floor(max(y0, y1, y2))))
    if ix0 > ix1 or iy0 > iy1:
        return

    ys, xs = np.mgrid[iy0:iy1 + 1, ix0:ix1 + 1]
    xs = xs.astype(np.float64)
    ys = ys.astype(np.float64)
    w0 = _edge(x1, y1, x2, y2, xs, ys)
    w1 = _edge(x2, y2, x0, y0, xs, ys)
    w2 = _edge(x0, y0, x1, y1, xs, ys)
    inside = ((w0 > 0) | ((w0 == 0) & _top_left(x1, y1, x2, y2))) \
        & ((w1 > 0) | ((w1 == 0) & _top_left(x2, y2, x0, y0))) \
        & ((w2 > 0) | ((w2 == 0) & _top_left(x0, y0, x1, y1)))
    if not inside.any():
        return

    b0 = w0[inside] / area
    b1 = w1[inside] / area
    b2 = w2[inside] / area
    iz = b0 / z[0] + b1 / z[1] + b2 / z[2]
    zf = 1.0 / iz
    uv = np.column_stack((
        (b0 * tri_uv[0, 0] / z[0] + b1 * tri_uv[1, 0] / z[1]
         + b2 * tri_uv[2, 0] / z[2]) * zf,
        (b0 * tri_uv[0, 1] / z[0] + b1 * tri_uv[1, 1] / z[1]
         + b2 * tri_uv[2, 1] / z[2]) * zf))

    py, px = ys[inside].astype(np.int64), xs[inside].astype(np.int64)
    passes = zf < depth[py, px] * (1.0 + eps)
    if not passes.any():
        return
    py, px, zf, uv = py[passes], px[passes], zf[passes], uv[passes]

    src = sample_texture(tex_p, uv)
    a = src[:, 3]
    lit = a > 0
    if lit.any():
        py_l, px_l = py[lit], px[lit]
        color_p[py_l, px_l] = src[lit] + color_p[py_l, px_l] * (1 - a[lit, None])
        touched[py_l, px_l] = True
    opaque = a >= 0.5
    if opaque.any():
        depth[py[opaque], px[opaque]] = zf[opaque]


def _outward(anchor, m: np.ndarray) -> np.ndarray:
    g = anchor.geometry
    if isinstance(g, Plane):
        return g.normal
    if isinstance(g, Cylinder):
        rel = m - g.axis_point
        return rel - (rel @ g.axis_dir) * g.axis_dir
    if isinstance(g, Sphere):
        return m - g.center
    raise TypeError(type(g).__name__)


def _scaled_camera(camera: PinholeCamera, n: int) -> PinholeCamera:
    if n == 1:
        return camera
    return PinholeCamera(fx=camera.fx * n, fy=camera.fy * n,
                         cx=camera.cx * n + (n - 1) / 2.0,
                         cy=camera.cy * n + (n - 1) / 2.0,
                         width=camera.width * n, height=camera.height * n)


def render_document(doc: SceneDocument,
                    settings: RenderSettings = RenderSettings()) -> np.ndarray:
    """Composite every visible layer over the scene; returns (H, W, 4) uint8.

    An empty document reproduces the background byte-for-byte.
    """
    scene = doc.scene
    n = settings.supersample
    if settings.background is None:
        bg = scene.image
    elif isinstance(settings.background, np.ndarray):
        bg = settings.background
    else:
        bg = np.empty_like(scene.image)
        bg[:] = np.asarray(settings.background, dtype=np.uint8)

    color_p = premultiply(np.repeat(np.repeat(bg, n, axis=0), n, axis=1))
    depth = np.repeat(np.repeat(scene.depth.astype(np.float64), n, axis=0),
                      n, axis=1)
    depth[np.repeat(np.repeat(~scene.validity, n, axis=0), n, axis=1)] = np.inf
    depth[~(depth > 0)] = np.inf  # defensively never occlude on bad depth
    touched = np.zeros(depth.shape, dtype=bool)
    camera = _scaled_camera(scene.camera, n)

    finite = depth[np.isfinite(depth)]
    znear = 1e-6 * (float(np.median(finite)) if finite.size else 1.0)

    for layer in doc.layers:
        if not layer.visible:
            continue
        anchor = doc.anchor_by_id(layer.anchor_id)
        mesh = build_surface_mesh(
            anchor, 1 if anchor.kind == "Planar" else CURVED_TESSELLATION)
        tex_p = premultiply(compose_layer_texture(layer))
        uvs = content_uv_transform(anchor, mesh.uvs)
        for tri in mesh.triangles:
            tp = mesh.vertices[tri]
            if not layer.double_sided:
                m = tp.mean(axis=0)
                if _outward(anchor, m) @ m > 0:  # faces away from the camera
                    continue
            for cp, cuv in _clip_near(tp, uvs[tri], znear):
                _raster_triangle(color_p, depth, touched, camera, cp, cuv,
                                 tex_p, settings.depth_epsilon_rel)

    if n > 1:
        hh, ww = color_p.shape[0] // n, color_p.shape[1] // n
        color_p = color_p.reshape(hh, n, ww, n, 4).mean(axis=(1, 3))
        touched = touched.reshape(hh, n, ww, n).any(axis=(1, 3))

    # unpremultiply and quantize (round half up)
    a = color_p[..., 3:4]
    rgb = np.divide(color_p[..., :3], a, out=np.zeros_like(color_p[..., :3]),
                    where=a > 0)
    out = np.floor(np.clip(np.concatenate((rgb, a), axis=2), 0.0, 1.0)
                   * 255.0 + 0.5).astype(np.uint8)
    # pixels no fragment ever blended into keep their exact background bytes
    out[~touched] = bg[~touched]
    return out


def export_png(raster: np.ndarray) -> bytes:
    """Deterministic 8-bit RGBA PNG bytes for a raster."""
    buf = io.BytesIO()
    Image.fromarray(np.ascontiguousarray(raster), "RGBA").save(buf, format="PNG")
    return buf.getvalue()


def decode_png(data: bytes) -> np.ndarray:
    return np.asarray(Image.open(io.BytesIO(data)).convert("RGBA"))
