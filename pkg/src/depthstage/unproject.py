"""Depth-pixel unprojection, mask selection, and 2D->3D landmark casting."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import AllLandmarksInvalid, EmptySelection, NonpositiveDepth
from .scene import DepthScene, PinholeCamera

log = logging.getLogger(__name__)

# Fixed landmark name vocabulary.  Detectors may emit more names; these are
# the ones the frame derivations rely on.
SKELETON_REQUIRED = ("left_shoulder", "right_shoulder", "left_hip", "right_hip")
FACE_REQUIRED = ("left_eye", "right_eye", "nose_tip")
LANDMARK_VOCABULARY = (
    "left_shoulder", "right_shoulder", "left_hip", "right_hip",
    "left_eye", "right_eye", "nose_tip", "left_ear", "right_ear", "chin",
    "left_elbow", "right_elbow", "left_wrist", "right_wrist",
    "left_knee", "right_knee", "left_ankle", "right_ankle",
)


@dataclass(frozen=True)
class Landmark2D:
    name: str
    u: float
    v: float


@dataclass(frozen=True, eq=False)
class Landmark3D:
    name: str
    position: np.ndarray  # (3,) float64, camera space


@dataclass(frozen=True, eq=False)
class Mask:
    bitmap: np.ndarray  # (H, W) bool
    prompt: str


@dataclass(frozen=True, eq=False)
class PointCloud:
    points: np.ndarray                 # (N, 3) float64, all z > 0
    source_pixels: np.ndarray | None = None  # (N, 2) int (u, v)

    def __len__(self) -> int:
        return self.points.shape[0]


def unproject_pixel(camera: PinholeCamera, u: float, v: float,
                    depth: float) -> tuple[float, float, float]:
    """Invert the pinhole map: x = (u-cx)*d/fx, y = (v-cy)*d/fy, z = d."""
    if depth <= 0:
        raise NonpositiveDepth(f"depth {depth} at ({u}, {v})")
    return ((u - camera.cx) * depth / camera.fx,
            (v - camera.cy) * depth / camera.fy,
            depth)


def unproject_pixels(camera: PinholeCamera, us: np.ndarray, vs: np.ndarray,
                     depths: np.ndarray) -> np.ndarray:
    """Vectorized unprojection; returns (N, 3) float64."""
    us = np.asarray(us, dtype=np.float64)
    vs = np.asarray(vs, dtype=np.float64)
    d = np.asarray(depths, dtype=np.float64)
    return np.column_stack(((us - camera.cx) * d / camera.fx,
                            (vs - camera.cy) * d / camera.fy,
                            d))


def _valid_depth(scene: DepthScene) -> np.ndarray:
    return scene.validity & np.isfinite(scene.depth) & (scene.depth > 0)


def mask_to_pointcloud(scene: DepthScene, mask: Mask) -> PointCloud:
    """Unproject exactly the valid-depth pixels selected by the mask."""
    if mask.bitmap.shape != scene.depth.shape:
        raise ValueError(f"mask dims {mask.bitmap.shape} do not match scene "
                         f"{scene.depth.shape}")
    select = mask.bitmap & _valid_depth(scene)
    vs, us = np.nonzero(select)
    if us.size == 0:
        raise EmptySelection(f"mask {mask.prompt!r} selects no valid-depth pixels")
    pts = unproject_pixels(scene.camera, us, vs, scene.depth[vs, us])
    return PointCloud(points=pts, source_pixels=np.column_stack((us, vs)))


def _sample_depth(scene: DepthScene, u: float, v: float) -> float | None:
    """Bilinear depth at a subpixel location, renormalizing over valid
    neighbors; falls back to the nearest valid pixel in the 3x3 window.
    Returns None when that window holds no valid depth."""
    h, w = scene.depth.shape
    valid = _valid_depth(scene)

    u0, v0 = int(np.floor(u)), int(np.floor(v))
    fu, fv = u - u0, v - v0
    total, acc = 0.0, 0.0
    for dv, dui, wgt in ((0, 0, (1 - fu) * (1 - fv)), (0, 1, fu * (1 - fv)),
                         (1, 0, (1 - fu) * fv), (1, 1, fu * fv)):
        uu, vv = u0 + dui, v0 + dv
        if 0 <= uu < w and 0 <= vv < h and valid[vv, uu] and wgt > 0:
            total += wgt
            acc += wgt * float(scene.depth[vv, uu])
    if total > 0:
        return acc / total

    # 3x3 fallback around the nearest pixel
    uc, vc = int(round(u)), int(round(v))
    best: tuple[float, int, int] | None = None
    for vv in range(max(0, vc - 1), min(h, vc + 2)):
        for uu in range(max(0, uc - 1), min(w, uc + 2)):
            if valid[vv, uu]:
                d2 = (uu - u) ** 2 + (vv - v) ** 2
                if best is None or (d2, vv, uu) < best:
                    best = (d2, vv, uu)
    if best is None:
        return None
    return float(scene.depth[best[1], best[2]])


def cast_landmarks(scene: DepthScene, lms: list[Landmark2D]) -> list[Landmark3D]:
    """Cast 2D landmarks into 3D by sampling the depth field.

    Landmarks whose 3x3 neighborhood holds no valid depth are dropped (and
    logged); raises AllLandmarksInvalid when nothing survives.
    """
    for lm in lms:
        if not (0 <= lm.u < scene.width and 0 <= lm.v < scene.height):
            raise ValueError(f"landmark {lm.name} at ({lm.u}, {lm.v}) outside "
                             f"{scene.width}x{scene.height}")
    out: list[Landmark3D] = []
    dropped: list[str] = []
    for lm in lms:
        d = _sample_depth(scene, lm.u, lm.v)
        if d is None:
            dropped.append(lm.name)
            continue
        out.append(Landmark3D(lm.name, np.array(
            unproject_pixel(scene.camera, lm.u, lm.v, d))))
    if dropped:
        log.warning("dropped landmarks with no valid depth: %s", ", ".join(dropped))
    if not out:
        raise AllLandmarksInvalid(f"all {len(lms)} landmarks fell on invalid depth")
    return out
