"""Reconstruction-space scene model and container file IO.

Conventions used everywhere downstream:

* camera space: +x right (increasing u), +y down (increasing v), +z forward;
  image "up" is therefore -y.
* depth is the view-space z-distance along the optical axis, in arbitrary
  (affine-invariant) units; tolerances that touch depth are always relative.
* pixel centers sit at integer (u, v) coordinates.

The on-disk scene container is a directory holding ``image.png`` (8-bit RGBA),
a depth field, and ``camera.json``.  Depth is either the bit-exact ``.dsd``
format (magic ``DSDM``, little-endian u32 width/height, then width*height
little-endian float32 row-major top-to-bottom, NaN = invalid) or a 16-bit
grayscale ``depth.png`` combined with ``scale``/``offset`` in ``camera.json``
(depth = pixel * scale + offset).
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import DecodeError

DSD_MAGIC = b"DSDM"
DEFAULT_VFOV_DEG = 55.0


@dataclass(frozen=True)
class PinholeCamera:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    @classmethod
    def default_for(cls, width: int, height: int) -> "PinholeCamera":
        """Camera used when intrinsics are absent: 55 deg vertical FOV,
        principal point at the image center, square pixels."""
        fy = (height / 2.0) / math.tan(math.radians(DEFAULT_VFOV_DEG) / 2.0)
        return cls(fx=fy, fy=fy, cx=(width - 1) / 2.0, cy=(height - 1) / 2.0,
                   width=width, height=height)

    def to_json(self) -> dict:
        return {"fx": self.fx, "fy": self.fy, "cx": self.cx, "cy": self.cy,
                "width": self.width, "height": self.height}

    @classmethod
    def from_json(cls, data: dict) -> "PinholeCamera":
        return cls(fx=float(data["fx"]), fy=float(data["fy"]),
                   cx=float(data["cx"]), cy=float(data["cy"]),
                   width=int(data["width"]), height=int(data["height"]))


@dataclass(frozen=True, eq=False)
class DepthScene:
    """An image, its depth field, the camera, and the valid-depth mask."""

    image: np.ndarray     # (H, W, 4) uint8 RGBA
    depth: np.ndarray     # (H, W) float32, z-distance, unit-free
    camera: PinholeCamera
    validity: np.ndarray  # (H, W) bool

    @property
    def width(self) -> int:
        return self.image.shape[1]

    @property
    def height(self) -> int:
        return self.image.shape[0]


@dataclass
class ValidationReport:
    issues: list[str]

    @property
    def ok(self) -> bool:
        return not self.issues


def validate_scene(scene: DepthScene) -> ValidationReport:
    """Check every scene invariant; returns a report, never raises."""
    issues: list[str] = []
    img, dep, val, cam = scene.image, scene.depth, scene.validity, scene.camera

    if img.ndim != 3 or img.shape[2] != 4 or img.dtype != np.uint8:
        issues.append(f"image must be (H, W, 4) uint8, got {img.shape} {img.dtype}")
    if dep.shape != img.shape[:2]:
        issues.append(f"dimension mismatch: depth {dep.shape} vs image {img.shape[:2]}")
    if val.shape != img.shape[:2]:
        issues.append(f"dimension mismatch: validity {val.shape} vs image {img.shape[:2]}")
    if cam.fx <= 0 or cam.fy <= 0:
        issues.append(f"nonpositive focal length fx={cam.fx} fy={cam.fy}")
    if not (0 <= cam.cx < cam.width):
        issues.append(f"principal point cx={cam.cx} outside [0, {cam.width})")
    if not (0 <= cam.cy < cam.height):
        issues.append(f"principal point cy={cam.cy} outside [0, {cam.height})")
    if (cam.width, cam.height) != (img.shape[1], img.shape[0]):
        issues.append(f"camera dims {cam.width}x{cam.height} vs image "
                      f"{img.shape[1]}x{img.shape[0]}")

    if dep.shape == val.shape:
        bad = val & ~(np.isfinite(dep) & (dep > 0))
        if bad.any():
            vs, us = np.nonzero(bad)
            spots = ", ".join(f"({u},{v})" for u, v in zip(us[:5], vs[:5]))
            issues.append(f"nonpositive depth at {spots}"
                          + (f" and {bad.sum() - 5} more" if bad.sum() > 5 else ""))
    return ValidationReport(issues)


def write_dsd(path: Path, depth: np.ndarray) -> None:
    arr = np.ascontiguousarray(depth, dtype="<f4")
    h, w = arr.shape
    Path(path).write_bytes(DSD_MAGIC + struct.pack("<II", w, h) + arr.tobytes())


def decode_dsd(raw: bytes, origin: str = "<bytes>") -> np.ndarray:
    if raw[:4] != DSD_MAGIC:
        raise DecodeError(f"{origin}: bad magic {raw[:4]!r}")
    w, h = struct.unpack("<II", raw[4:12])
    if len(raw) != 12 + 4 * w * h:
        raise DecodeError(f"{origin}: expected {12 + 4 * w * h} bytes, "
                          f"got {len(raw)}")
    return np.frombuffer(raw, dtype="<f4", offset=12).reshape(h, w).copy()


def read_dsd(path: Path) -> np.ndarray:
    return decode_dsd(Path(path).read_bytes(), str(path))


def save_scene(scene: DepthScene, dirpath: Path) -> None:
    """Write the scene container (image.png, depth.dsd, camera.json)."""
    dirpath = Path(dirpath)
    dirpath.mkdir(parents=True, exist_ok=True)
    Image.fromarray(scene.image, "RGBA").save(dirpath / "image.png")
    dep = scene.depth.astype(np.float32).copy()
    dep[~scene.validity] = np.nan
    write_dsd(dirpath / "depth.dsd", dep)
    (dirpath / "camera.json").write_text(json.dumps(scene.camera.to_json(), indent=2))


def load_scene(dirpath: Path) -> DepthScene:
    """Load a scene container, filling in the default camera when absent."""
    dirpath = Path(dirpath)
    img_path = dirpath / "image.png"
    if not img_path.exists():
        raise DecodeError(f"no image.png in {dirpath}")
    image = np.asarray(Image.open(img_path).convert("RGBA"))
    h, w = image.shape[:2]

    meta: dict = {}
    cam_path = dirpath / "camera.json"
    if cam_path.exists():
        meta = json.loads(cam_path.read_text())
    if all(k in meta for k in ("fx", "fy", "cx", "cy", "width", "height")):
        camera = PinholeCamera.from_json(meta)
    else:
        camera = PinholeCamera.default_for(w, h)

    dsd_path = dirpath / "depth.dsd"
    png_path = dirpath / "depth.png"
    if dsd_path.exists():
        depth = read_dsd(dsd_path)
        validity = ~np.isnan(depth)
    elif png_path.exists():
        raw = np.asarray(Image.open(png_path))
        if raw.dtype not in (np.uint16, np.int32):
            raise DecodeError(f"{png_path}: expected 16-bit grayscale, got {raw.dtype}")
        scale = float(meta.get("scale", 1.0))
        offset = float(meta.get("offset", 0.0))
        depth = (raw.astype(np.float64) * scale + offset).astype(np.float32)
        validity = depth > 0  # the PNG route has no NaN encoding
    else:
        raise DecodeError(f"no depth.dsd or depth.png in {dirpath}")

    return DepthScene(image=image, depth=depth, camera=camera, validity=validity)
