"""End-to-end pipeline: ingest an image, obtain suggested extraction
programs, interpret each one, and aggregate the resulting anchors into a
scene document with per-stage timing and per-program diagnostics.

A failing program never blocks the others; its diagnostics land in the
report and the pipeline still succeeds with whatever anchors it got.
"""

from __future__ import annotations

import hashlib
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .corpus import CORPUS
from .document import SceneDocument
from .errors import DepthServiceError, EngineError
from .scene import DepthScene, validate_scene
from .services import CachingSegmentClient, ServiceBundle, decode_image
from .unproject import Mask
from .vpdsl import (ParametricAnchor, ProgramDiagnostic, StringLit,
                    check_program, interpret_program)

INTERPRET_WORKERS = 4

PROMPT_HEADER = (
    "You are given an input image. Write one or more extraction programs, "
    "each a short sequence of cells that segments a region, lifts it to 3D, "
    "fits a primitive, and ends with a parametric anchor constructor "
    "(Planar, Cylindrical, or Spherical). Follow the exact syntax of the "
    "examples below. For each program, add a one-line rationale.\n")


def build_vlm_prompt() -> str:
    """Assemble the program-generation prompt: header plus every bundled
    corpus example exactly once."""
    parts = [PROMPT_HEADER]
    for i, ex in enumerate(CORPUS, start=1):
        parts.append(f"\nExample {i}: {ex.label}\n{ex.program}\n")
    return "".join(parts)


@dataclass
class PipelineReport:
    stage_seconds: dict[str, float] = field(default_factory=dict)
    programs_generated: int = 0
    programs_succeeded: int = 0
    diagnostics: list[dict] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"stage_seconds": self.stage_seconds,
                "programs_generated": self.programs_generated,
                "programs_succeeded": self.programs_succeeded,
                "diagnostics": self.diagnostics}


def scene_id_for(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()[:12]


def ingest_image(data: bytes, services: ServiceBundle) -> DepthScene:
    """Decode the image, invoke the depth client, assemble and validate."""
    image = decode_image(data)
    depth, camera = services.depth_client.estimate(image)
    scene = DepthScene(image=image, depth=depth, camera=camera,
                       validity=~np.isnan(depth))
    report = validate_scene(scene)
    if not report.ok:
        raise DepthServiceError("depth service returned an invalid scene: "
                                + "; ".join(report.issues))
    return scene


def generate_programs(scene: DepthScene, services: ServiceBundle):
    """Raw program texts plus rationales, unvalidated (validation is the
    interpreter pipeline's job)."""
    return services.program_client.get_programs(scene)


def _prompt_literals(prog) -> list[str]:
    out = []
    for st in prog.statements:
        if st.cell.lower() == "text2mask":
            for arg in st.args:
                if arg.name.lower() == "prompt" and isinstance(arg.value,
                                                               StringLit):
                    out.append(arg.value.text)
    return out


def run_pipeline(data: bytes, services: ServiceBundle,
                 seed: int = 0) -> tuple[SceneDocument, PipelineReport]:
    """ingest -> generate programs -> parse/typecheck -> prefetch masks ->
    interpret each program (bounded worker pool, seeds seed+index)."""
    report = PipelineReport()

    t0 = time.perf_counter()
    scene = ingest_image(data, services)
    report.stage_seconds["depth"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    suggestions = generate_programs(scene, services)
    report.stage_seconds["program_generation"] = time.perf_counter() - t0
    report.programs_generated = len(suggestions)

    checked = []
    for i, sug in enumerate(suggestions):
        prog, diags = check_program(sug.text)
        for d in diags:
            report.diagnostics.append({"program": i, **d.to_json()})
        checked.append((i, sug, prog))

    # Text2Mask prompts are string literals, so masking replays as its own
    # stage; interpretation then hits the cache only.
    t0 = time.perf_counter()
    cache: dict[str, Mask | Exception] = {}
    for _, _, prog in checked:
        if prog is None:
            continue
        for prompt in _prompt_literals(prog):
            if prompt not in cache:
                try:
                    cache[prompt] = services.segment_client.get_mask(scene,
                                                                     prompt)
                except EngineError as e:
                    cache[prompt] = e
    report.stage_seconds["masking"] = time.perf_counter() - t0

    exec_services = ServiceBundle(
        depth_client=services.depth_client,
        segment_client=CachingSegmentClient(services.segment_client, cache),
        landmark_client=services.landmark_client,
        program_client=services.program_client)

    t0 = time.perf_counter()
    runnable = [(i, sug, prog) for i, sug, prog in checked if prog is not None]
    with ThreadPoolExecutor(max_workers=INTERPRET_WORKERS) as pool:
        results = list(pool.map(
            lambda item: interpret_program(item[2], scene, exec_services,
                                           seed=seed + item[0]),
            runnable))
    report.stage_seconds["extraction"] = time.perf_counter() - t0

    doc = SceneDocument(scene=scene, scene_id=scene_id_for(data))
    used_ids: set[str] = set()
    for (i, sug, _), result in zip(runnable, results):
        if isinstance(result, ProgramDiagnostic):
            report.diagnostics.append({"program": i, **result.to_json()})
            continue
        anchor: ParametricAnchor = result
        anchor_id = anchor.id
        if anchor_id in used_ids:
            anchor_id = f"{anchor.id}_p{i}"
        used_ids.add(anchor_id)
        anchor = replace(anchor, id=anchor_id, rationale=sug.rationale)
        doc.anchors.append(anchor)
        doc.provenance[anchor_id] = {"program": sug.text,
                                     "rationale": sug.rationale}
        report.programs_succeeded += 1
    return doc, report
