"""External-model clients: depth, segmentation, landmarks, and program
generation.  Each runs either against a recorded fixture directory or a
remote endpoint; the pipeline only ever sees the common client interface.

Fixture layout (one directory per scene)::

    <name>/image.png            # the input image
    <name>/depth.dsd            # recorded depth field
    <name>/camera.json          # intrinsics
    <name>/programs.json        # [{"text": ..., "rationale": ...}]
    <name>/masks/<sha256-of-prompt>.png        # binary mask per prompt
    <name>/landmarks/<sha256-of-mask>.json     # {"skeleton": [...], "face": [...]}
    <name>/manifest.json        # expected anchor count + kinds

A fixture root may be a single scene directory or a directory of them;
scenes are matched by the SHA-256 of their decoded RGBA pixels, so lookups
are independent of PNG encoder details.  The mask hash is canonical:
sha256(u32le width || u32le height || row-major 0/1 bytes).
"""

from __future__ import annotations

import hashlib
import io
import json
import os
import struct
from dataclasses import dataclass
from pathlib import Path

import httpx
import numpy as np
from PIL import Image

from .errors import (DecodeError, DepthServiceError, FixtureMissing,
                     LandmarkServiceError, ProgramServiceError,
                     SegmentServiceError)
from .scene import DepthScene, PinholeCamera, decode_dsd, read_dsd
from .unproject import Landmark2D, Mask

DEPTH_TIMEOUT = 60.0
SEGMENT_TIMEOUT = 30.0
LANDMARK_TIMEOUT = 30.0
PROGRAM_TIMEOUT = 120.0


def rgba_sha256(image: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(image).tobytes()).hexdigest()


def prompt_sha256(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


def mask_sha256(bitmap: np.ndarray) -> str:
    h, w = bitmap.shape
    payload = struct.pack("<II", w, h) + bitmap.astype(np.uint8).tobytes()
    return hashlib.sha256(payload).hexdigest()


def decode_image(data: bytes) -> np.ndarray:
    try:
        return np.asarray(Image.open(io.BytesIO(data)).convert("RGBA"))
    except Exception as e:
        raise DecodeError(f"cannot decode image: {e}") from e


@dataclass(frozen=True)
class ProgramSuggestion:
    text: str
    rationale: str


# ------------------------------------------------------------------ fixtures


class FixtureIndex:
    """Resolves scenes to their fixture directory by decoded-pixel hash."""

    def __init__(self, root: Path):
        self.root = Path(root)
        if not self.root.exists():
            raise FixtureMissing(f"fixture root {self.root} does not exist")
        self._by_hash: dict[str, Path] = {}
        candidates = [self.root] if (self.root / "image.png").exists() \
            else sorted(p for p in self.root.iterdir() if p.is_dir())
        for d in candidates:
            img = d / "image.png"
            if img.exists():
                self._by_hash[rgba_sha256(decode_image(img.read_bytes()))] = d

    def dir_for_pixels(self, image: np.ndarray) -> Path:
        key = rgba_sha256(image)
        if key not in self._by_hash:
            raise FixtureMissing(f"no fixture under {self.root} matches the "
                                 "input image")
        return self._by_hash[key]

    def scene_dirs(self) -> list[Path]:
        return sorted(self._by_hash.values())


class FixtureDepthClient:
    def __init__(self, index: FixtureIndex):
        self.index = index

    def estimate(self, image: np.ndarray) -> tuple[np.ndarray, PinholeCamera]:
        d = self.index.dir_for_pixels(image)
        depth = read_dsd(d / "depth.dsd")
        camera = PinholeCamera.from_json(json.loads((d / "camera.json").read_text()))
        return depth, camera


class FixtureSegmentClient:
    def __init__(self, index: FixtureIndex):
        self.index = index

    def get_mask(self, scene: DepthScene, prompt: str) -> Mask:
        d = self.index.dir_for_pixels(scene.image)
        path = d / "masks" / f"{prompt_sha256(prompt)}.png"
        if not path.exists():
            raise FixtureMissing(f"no recorded mask for prompt {prompt!r}")
        bitmap = np.asarray(Image.open(path).convert("L")) > 127
        return Mask(bitmap=bitmap, prompt=prompt)


class FixtureLandmarkClient:
    def __init__(self, index: FixtureIndex):
        self.index = index

    def get_landmarks(self, scene: DepthScene, mask: Mask,
                      kind: str) -> list[Landmark2D]:
        d = self.index.dir_for_pixels(scene.image)
        path = d / "landmarks" / f"{mask_sha256(mask.bitmap)}.json"
        if not path.exists():
            raise FixtureMissing(f"no recorded landmarks for mask of "
                                 f"{mask.prompt!r}")
        data = json.loads(path.read_text())
        return [Landmark2D(e["name"], float(e["u"]), float(e["v"]))
                for e in data.get(kind, [])]


class FixtureProgramClient:
    def __init__(self, index: FixtureIndex):
        self.index = index

    def get_programs(self, scene: DepthScene) -> list[ProgramSuggestion]:
        d = self.index.dir_for_pixels(scene.image)
        path = d / "programs.json"
        if not path.exists():
            raise FixtureMissing(f"no programs.json in {d}")
        return [ProgramSuggestion(e["text"], e.get("rationale", ""))
                for e in json.loads(path.read_text())]


# -------------------------------------------------------------------- remote


@dataclass(frozen=True)
class RemoteEndpoint:
    url: str
    timeout: float
    auth_env: str | None = None  # env var NAME; tokens never live in config

    def headers(self) -> dict[str, str]:
        if self.auth_env and os.environ.get(self.auth_env):
            return {"Authorization": f"Bearer {os.environ[self.auth_env]}"}
        return {}


def _post_json(endpoint: RemoteEndpoint, payload: dict, error_cls,
               transport=None) -> dict:
    try:
        with httpx.Client(timeout=endpoint.timeout, transport=transport) as client:
            resp = client.post(endpoint.url, json=payload,
                               headers=endpoint.headers())
            resp.raise_for_status()
            return resp.json()
    except httpx.HTTPError as e:
        raise error_cls(f"{endpoint.url}: {e}") from e


class RemoteDepthClient:
    def __init__(self, endpoint: RemoteEndpoint, transport=None):
        self.endpoint = endpoint
        self.transport = transport

    def estimate(self, image: np.ndarray) -> tuple[np.ndarray, PinholeCamera]:
        import base64
        buf = io.BytesIO()
        Image.fromarray(image, "RGBA").save(buf, format="PNG")
        data = _post_json(self.endpoint,
                          {"image_png_b64": base64.b64encode(buf.getvalue()).decode()},
                          DepthServiceError, self.transport)
        depth = decode_dsd(base64.b64decode(data["depth_dsd_b64"]),
                           self.endpoint.url)
        camera = PinholeCamera.from_json(data["camera"]) if "camera" in data \
            else PinholeCamera.default_for(image.shape[1], image.shape[0])
        return depth, camera


class RemoteSegmentClient:
    def __init__(self, endpoint: RemoteEndpoint, transport=None):
        self.endpoint = endpoint
        self.transport = transport

    def get_mask(self, scene: DepthScene, prompt: str) -> Mask:
        import base64
        data = _post_json(self.endpoint,
                          {"prompt": prompt,
                           "image_sha256": rgba_sha256(scene.image)},
                          SegmentServiceError, self.transport)
        bitmap = np.asarray(Image.open(io.BytesIO(
            base64.b64decode(data["mask_png_b64"]))).convert("L")) > 127
        return Mask(bitmap=bitmap, prompt=prompt)


class RemoteLandmarkClient:
    def __init__(self, endpoint: RemoteEndpoint, transport=None):
        self.endpoint = endpoint
        self.transport = transport

    def get_landmarks(self, scene: DepthScene, mask: Mask,
                      kind: str) -> list[Landmark2D]:
        data = _post_json(self.endpoint,
                          {"kind": kind, "mask_sha256": mask_sha256(mask.bitmap)},
                          LandmarkServiceError, self.transport)
        return [Landmark2D(e["name"], float(e["u"]), float(e["v"]))
                for e in data.get("landmarks", [])]


class RemoteProgramClient:
    def __init__(self, endpoint: RemoteEndpoint, transport=None):
        self.endpoint = endpoint
        self.transport = transport

    def get_programs(self, scene: DepthScene) -> list[ProgramSuggestion]:
        from .orchestrator import build_vlm_prompt
        data = _post_json(self.endpoint, {"prompt": build_vlm_prompt()},
                          ProgramServiceError, self.transport)
        return [ProgramSuggestion(e["text"], e.get("rationale", ""))
                for e in data.get("programs", [])]


# -------------------------------------------------------------------- bundle


@dataclass
class ServiceBundle:
    depth_client: object
    segment_client: object
    landmark_client: object
    program_client: object

    @classmethod
    def for_fixtures(cls, root: Path) -> "ServiceBundle":
        index = FixtureIndex(root)
        return cls(depth_client=FixtureDepthClient(index),
                   segment_client=FixtureSegmentClient(index),
                   landmark_client=FixtureLandmarkClient(index),
                   program_client=FixtureProgramClient(index))

    @classmethod
    def from_remote_config(cls, config: dict, transport=None) -> "ServiceBundle":
        def ep(key: str, default_timeout: float) -> RemoteEndpoint:
            entry = config[key]
            return RemoteEndpoint(url=entry["url"],
                                  timeout=float(entry.get("timeout",
                                                          default_timeout)),
                                  auth_env=entry.get("auth_env"))

        return cls(
            depth_client=RemoteDepthClient(ep("depth", DEPTH_TIMEOUT), transport),
            segment_client=RemoteSegmentClient(ep("segment", SEGMENT_TIMEOUT),
                                               transport),
            landmark_client=RemoteLandmarkClient(ep("landmarks",
                                                    LANDMARK_TIMEOUT), transport),
            program_client=RemoteProgramClient(ep("programs", PROGRAM_TIMEOUT),
                                               transport))


class CachingSegmentClient:
    """Serves prefetched masks; falls through to the inner client on miss."""

    def __init__(self, inner, cache: dict[str, Mask | Exception]):
        self.inner = inner
        self.cache = cache

    def get_mask(self, scene: DepthScene, prompt: str) -> Mask:
        hit = self.cache.get(prompt)
        if isinstance(hit, Exception):
            raise hit
        if hit is not None:
            return hit
        return self.inner.get_mask(scene, prompt)
