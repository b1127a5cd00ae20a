"""Regenerate the bundled test fixtures (synthetic scenes with analytic
depth, recorded masks, landmarks, and program suggestions).

    python scripts/make_fixtures.py

Two scenes are produced:

* ``train``  — a standing cylinder on a ground plane; 3 programs, all good.
* ``figure`` — a person-like torso+head with skeleton/face landmarks;
  4 programs of which one is deliberately malformed (plane-terminal), the
  mixed-failure case.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import numpy as np
from PIL import Image

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from depthstage.render import project_point  # noqa: E402
from depthstage.scene import PinholeCamera, write_dsd  # noqa: E402
from depthstage.services import mask_sha256, prompt_sha256  # noqa: E402

W, H = 96, 72
CAMERA = PinholeCamera.default_for(W, H)
INF = np.full((H, W), np.inf)


def ray_dirs() -> tuple[np.ndarray, np.ndarray]:
    us, vs = np.meshgrid(np.arange(W, dtype=np.float64),
                         np.arange(H, dtype=np.float64))
    return (us - CAMERA.cx) / CAMERA.fx, (vs - CAMERA.cy) / CAMERA.fy


def z_ground(dy: np.ndarray, plane_y: float, z_far: float) -> np.ndarray:
    z = np.where(dy > 1e-9, plane_y / np.maximum(dy, 1e-9), np.inf)
    return np.where((z > 0) & (z <= z_far), z, np.inf)


def z_vertical_cylinder(dx, dy, cx0, cz0, a, b, y0, y1) -> np.ndarray:
    """Elliptic vertical cylinder |(x-cx0)/a, (z-cz0)/b| = 1, y in [y0, y1]."""
    A = (dx / a) ** 2 + (1.0 / b) ** 2
    B = -2.0 * (dx * cx0 / a ** 2 + cz0 / b ** 2)
    C = (cx0 / a) ** 2 + (cz0 / b) ** 2 - 1.0
    disc = B * B - 4 * A * C
    ok = disc >= 0
    z = np.where(ok, (-B - np.sqrt(np.abs(disc))) / (2 * A), np.inf)
    y = z * dy
    return np.where(ok & (z > 0) & (y >= y0) & (y <= y1), z, np.inf)


def z_sphere(dx, dy, c, r) -> np.ndarray:
    cx0, cy0, cz0 = c
    dd = dx * dx + dy * dy + 1.0
    dc = dx * cx0 + dy * cy0 + cz0
    disc = dc * dc - dd * (cx0 ** 2 + cy0 ** 2 + cz0 ** 2 - r * r)
    ok = disc >= 0
    t = np.where(ok, (dc - np.sqrt(np.abs(disc))) / dd, np.inf)
    return np.where(ok & (t > 0), t, np.inf)


def write_scene(out: Path, depth: np.ndarray, labels: np.ndarray,
                colors: dict[int, tuple[int, int, int]],
                masks: dict[str, np.ndarray],
                programs: list[dict], manifest: dict,
                landmarks: dict[str, dict] | None = None) -> None:
    out.mkdir(parents=True, exist_ok=True)
    image = np.zeros((H, W, 4), dtype=np.uint8)
    image[..., 3] = 255
    for label, rgb in colors.items():
        image[labels == label] = (*rgb, 255)
    # speckle so bilinear texture tests see non-flat background
    ys, xs = np.mgrid[0:H, 0:W]
    tint = ((xs * 7 + ys * 13) % 23).astype(np.int16) - 11
    for ch in range(3):
        image[..., ch] = np.clip(image[..., ch].astype(np.int16) + tint,
                                 0, 255).astype(np.uint8)

    Image.fromarray(image, "RGBA").save(out / "image.png")
    write_dsd(out / "depth.dsd", depth.astype(np.float32))
    (out / "camera.json").write_text(json.dumps(CAMERA.to_json(), indent=2))
    (out / "programs.json").write_text(json.dumps(programs, indent=2))
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2))

    mask_dir = out / "masks"
    mask_dir.mkdir(exist_ok=True)
    mask_hashes = {}
    for prompt, bitmap in masks.items():
        Image.fromarray((bitmap * 255).astype(np.uint8), "L").save(
            mask_dir / f"{prompt_sha256(prompt)}.png")
        mask_hashes[prompt] = mask_sha256(bitmap)

    if landmarks:
        lm_dir = out / "landmarks"
        lm_dir.mkdir(exist_ok=True)
        for prompt, payload in landmarks.items():
            (lm_dir / f"{mask_hashes[prompt]}.json").write_text(
                json.dumps(payload, indent=2))
    print(f"wrote {out} ({len(programs)} programs, {len(masks)} masks)")


def make_train() -> None:
    dx, dy = ray_dirs()
    wall = np.full((H, W), 14.0)
    ground = z_ground(dy, 1.2, 14.0)
    cyl = z_vertical_cylinder(dx, dy, 0.0, 6.0, 0.7, 0.7, -1.2, 1.2)
    depth = np.minimum(np.minimum(wall, ground), cyl)
    labels = np.zeros((H, W), dtype=np.int8)
    labels[(ground < wall) & (ground <= cyl)] = 1
    labels[(cyl < wall) & (cyl < ground)] = 2
    depth[:3, :3] = np.nan  # recorded invalid patch

    masks = {"the train": labels == 2, "the ground": labels == 1}
    programs = [
        {"text": 'MASK_0=Text2Mask(prompt = "the train")\n'
                 'POINTCLOUD_0=Mask2Pointcloud(mask = MASK_0)\n'
                 'CYLINDER_0=Pointcloud2Cylinder(Pointcloud = POINTCLOUD_0, direction = NULL)\n'
                 'CYLINDRICAL_0=Cylindrical(cylinder = CYLINDER_0)',
         "rationale": "wrap content around the elongated central object"},
        {"text": 'MASK_0=Text2Mask(prompt = "the ground")\n'
                 'POINTCLOUD_0=Mask2Pointcloud(mask = MASK_0)\n'
                 'PLANE_0=Pointcloud2Plane(Pointcloud = POINTCLOUD_0)\n'
                 'PLANAR_0=Planar(plane = PLANE_0)',
         "rationale": "lay content flat on the ground surface"},
        {"text": 'MASK_0=Text2Mask(prompt = "the ground")\n'
                 'POINTCLOUD_0=Mask2Pointcloud(mask = MASK_0)\n'
                 'PLANE_0=Pointcloud2Plane(Pointcloud = POINTCLOUD_0)\n'
                 'PLANAR_0=Planar(plane = PLANE_0.extruded)',
         "rationale": "stand content upright along the ground direction"},
    ]
    manifest = {"anchor_count": 3, "kinds": ["Cylindrical", "Planar", "Planar"]}
    write_scene(ROOT / "fixtures/train", depth, labels,
                {0: (198, 200, 206), 1: (92, 140, 84), 2: (172, 62, 54)},
                masks, programs, manifest)


def make_figure() -> None:
    dx, dy = ray_dirs()
    wall = np.full((H, W), 16.0)
    ground = z_ground(dy, 1.2, 16.0)
    torso = z_vertical_cylinder(dx, dy, 0.3, 7.0, 0.45, 0.35, -0.78, 1.2)
    head_c = (0.3, -1.0, 7.0)
    head = z_sphere(dx, dy, head_c, 0.35)
    depth = np.minimum.reduce([wall, ground, torso, head])
    labels = np.zeros((H, W), dtype=np.int8)
    labels[(ground < wall) & (ground <= torso) & (ground <= head)] = 1
    labels[(torso < wall) & (torso < ground) & (torso <= head)] = 2
    labels[(head < wall) & (head < ground) & (head < torso)] = 3
    depth[:3, :3] = np.nan

    figure_mask = (labels == 2) | (labels == 3)
    masks = {"the human figure": figure_mask,
             "the head": labels == 3,
             "the ground": labels == 1,
             "the empty corner": (labels == 0) & (np.mgrid[0:H, 0:W][1] > W - 12)}

    def on_torso_front(x: float, y: float) -> tuple[float, float, float]:
        rel = (x - 0.3) / 0.45
        z = 7.0 - 0.35 * np.sqrt(max(0.0, 1.0 - rel * rel))
        return (x, y, z)

    def on_head_front(rx: float, ry: float) -> tuple[float, float, float]:
        rem = 0.35 ** 2 - rx ** 2 - ry ** 2
        return (head_c[0] + rx, head_c[1] + ry, head_c[2] - np.sqrt(max(rem, 0.0)))

    # person faces the camera: their left side appears on image right (+x)
    pts3 = {
        "left_shoulder": on_torso_front(0.3 + 0.33, -0.55),
        "right_shoulder": on_torso_front(0.3 - 0.33, -0.55),
        "left_hip": on_torso_front(0.3 + 0.24, 0.25),
        "right_hip": on_torso_front(0.3 - 0.24, 0.25),
        "left_eye": on_head_front(0.12, -0.08),
        "right_eye": on_head_front(-0.12, -0.08),
        "nose_tip": on_head_front(0.0, 0.05),
        "chin": on_head_front(0.0, 0.28),
        "left_ear": on_head_front(0.2, -0.02),
        "right_ear": on_head_front(-0.2, -0.02),
    }
    pts2 = {}
    for name, p in pts3.items():
        u, v, _ = project_point(CAMERA, p)
        pts2[name] = {"name": name, "u": round(u, 3), "v": round(v, 3)}
    skeleton_names = ("left_shoulder", "right_shoulder", "left_hip",
                      "right_hip", "left_eye", "right_eye", "nose_tip")
    face_names = ("left_eye", "right_eye", "nose_tip", "chin",
                  "left_ear", "right_ear")
    landmarks = {
        "the human figure": {
            "skeleton": [pts2[n] for n in skeleton_names],
            "face": [pts2[n] for n in face_names]},
        "the empty corner": {"skeleton": [], "face": []},
    }

    programs = [
        {"text": 'MASK_0=Text2Mask(prompt = "the human figure")\n'
                 'SKELETON_0=SkeletonExtraction(mask = MASK_0)\n'
                 'PLANAR_0=Planar(plane = SKELETON_0.median)',
         "rationale": "align content with the figure's facing direction"},
        {"text": 'MASK_0=Text2Mask(prompt = "the human figure")\n'
                 'POINTCLOUD_0=Mask2Pointcloud(mask = MASK_0)\n'
                 'CYLINDER_0=Pointcloud2Cylinder(Pointcloud = POINTCLOUD_0, direction = NULL)\n'
                 'CYLINDRICAL_0=Cylindrical(cylinder = CYLINDER_0)',
         "rationale": "ring of content around the figure"},
        {"text": 'MASK_0=Text2Mask(prompt = "the head")\n'
                 'POINTCLOUD_0=Mask2Pointcloud(mask = MASK_0)\n'
                 'SPHERE_0=Pointcloud2Sphere(Pointcloud = POINTCLOUD_0)\n'
                 'SPHERICAL_0=Spherical(sphere = SPHERE_0)',
         "rationale": "orbit content around the head"},
        # deliberately malformed: ends on a plane, not an anchor constructor
        {"text": 'MASK_0=Text2Mask(prompt = "the ground")\n'
                 'POINTCLOUD_0=Mask2Pointcloud(mask = MASK_0)\n'
                 'PLANE_0=Pointcloud2Plane(Pointcloud = POINTCLOUD_0)',
         "rationale": "ground alignment (malformed on purpose)"},
    ]
    manifest = {"anchor_count": 3, "kinds": ["Planar", "Cylindrical", "Spherical"]}
    write_scene(ROOT / "fixtures/figure", depth, labels,
                {0: (188, 190, 200), 1: (96, 134, 88), 2: (60, 84, 150),
                 3: (214, 176, 148)},
                masks, programs, manifest, landmarks)


if __name__ == "__main__":
    make_train()
    make_figure()
