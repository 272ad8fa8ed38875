"""Render orchestration: frames -> rigs -> render sets -> dataset files."""

import json
import logging
import time
from contextlib import nullcontext
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from multiprocessing import Pool
from multiprocessing.pool import Pool as WorkerPool
from typing import Any

from tqdm import tqdm

from src.config import get_config
from src.dataset.annotation import FrameGroundTruth, build_render_set_record, load_sequence
from src.dataset.writer import DatasetIndex, DatasetWriteError, write_render_set
from src.geometry.fisheye import CameraModelError
from src.geometry.rig import make_multi_rig
from src.pipeline.config import ConfigError, PipelineConfig, load_pipeline_config
from src.pipeline.scenes import build_scene
from src.rendering.fields import FieldQueryError
from src.rendering.renderer import RenderError, render_set
from src.rendering.voxel import VoxelFormatError
from src.utils.time import format_time

logger = logging.getLogger(__name__)

MANIFEST_FILE = "render_manifest.json"

# Errors that fail a single frame; anything else aborts the run
FRAME_ERRORS = (RenderError, FieldQueryError, VoxelFormatError, CameraModelError, DatasetWriteError)


@dataclass
class FrameFailure:
    frame_id: int
    error: str


@dataclass
class RenderRunSummary:
    """What a render run produced."""

    output_dir: Path
    sets: list[str] = field(default_factory=list)
    files: int = 0
    images: int = 0
    failures: list[FrameFailure] = field(default_factory=list)
    seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict[str, Any]:
        return {
            "output_dir": str(self.output_dir),
            "sets": self.sets,
            "files": self.files,
            "images": self.images,
            "failures": [{"frame_id": f.frame_id, "error": f.error} for f in self.failures],
            "seconds": self.seconds,
            "finished": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        }


def _render_frame(
    config: PipelineConfig,
    actor: str,
    frame: FrameGroundTruth,
    anchor: FrameGroundTruth,
    root: Path,
    index: DatasetIndex,
    pool: WorkerPool | None,
    summary: RenderRunSummary,
) -> None:
    opts = config.render_options()
    scene_field = build_scene(config.scene, frame)
    pelvis = anchor.pelvis if config.rig.recentering == "per_sequence" else frame.pelvis
    rigs = make_multi_rig(
        config.passes(), (float(pelvis[0]), float(pelvis[1])), config.rig.intrinsics.build()
    )

    for rig in rigs:
        outputs = render_set(scene_field, rig, opts, pool=pool)
        record = build_render_set_record(
            actor=actor,
            gt=frame,
            rig=rig,
            masks=[out.mask for out in outputs],
            field=scene_field if config.render.occlusion else None,
            opts=opts,
            recentering=config.rig.recentering,
            alpha_files=config.render.save_alpha,
            timings=[out.timing for out in outputs],
            render_info={
                "n_samples": opts.n_samples,
                "supersample": opts.supersample,
                "jitter_seed": opts.jitter_seed,
                "mask_threshold": opts.mask_threshold,
                "background": list(opts.background),
                "occlusion": config.render.occlusion,
            },
            provenance=config.provenance,
        )
        manifest = write_render_set(root, outputs, record, index=index)

        summary.sets.append(manifest.set_dir.as_posix())
        summary.files += manifest.file_count
        summary.images += len(manifest.images)
        for out in outputs:
            logger.debug(f"🐞 {manifest.set_dir}/{out.camera_name}: {format_time(out.timing)}")


def run_render(config: PipelineConfig, keep_going: bool = False) -> RenderRunSummary:
    """
    Render every (strided) frame of the groundtruth sequence through every pass.

    Args:
        config: Pipeline configuration (overrides already applied)
        keep_going: Continue with the next frame after a frame fails

    Returns:
        RenderRunSummary; failures are listed, not raised

    Raises:
        ConfigError: If the sequence has no frames to render
        GroundTruthError: If the groundtruth file is invalid
    """
    sequence = load_sequence(config.ground_truth)
    frames = sequence.strided(config.frame_stride)
    if not frames:
        raise ConfigError(f"No frames to render in {config.ground_truth}")

    actor = config.actor or sequence.actor
    app_config = get_config()
    if config.output_dir is None:
        app_config.ensure_directories()
        root = Path(app_config.output_dir)
    else:
        root = Path(config.output_dir)
        root.mkdir(parents=True, exist_ok=True)
    workers = config.workers or app_config.effective_workers
    index = DatasetIndex.load(root)
    summary = RenderRunSummary(output_dir=root)

    logger.info(
        f"ℹ️ Rendering {len(frames)} frames x {len(config.rig.passes)} passes for '{actor}' "
        f"with {workers} workers into {root}"
    )
    started = time.perf_counter()
    with Pool(processes=workers) if workers > 1 else nullcontext() as pool:
        for frame in tqdm(frames, desc="Frames", unit="frame"):
            try:
                _render_frame(config, actor, frame, frames[0], root, index, pool, summary)
            except FRAME_ERRORS as e:
                logger.error(f"❌ Frame {frame.frame_id} failed: {e}")
                summary.failures.append(FrameFailure(frame_id=frame.frame_id, error=str(e)))
                if not keep_going:
                    break
            finally:
                index.save()
    summary.seconds = time.perf_counter() - started

    manifest_path = root / MANIFEST_FILE
    manifest_path.write_text(json.dumps(summary.to_dict(), indent=2), encoding="utf-8")

    if summary.ok:
        logger.info(
            f"✅ Rendered {len(summary.sets)} sets ({summary.files} files) in {format_time(summary.seconds)}"
        )
    else:
        logger.error(f"❌ {len(summary.failures)} frames failed; see {manifest_path}")
    return summary


def cmd_render(config_path: str | Path, keep_going: bool = False, **overrides: Any) -> RenderRunSummary:
    """Load a config, apply command-line overrides (out, workers, seed, supersample) and render."""
    config = load_pipeline_config(config_path)
    if "out" in overrides:
        overrides["output_dir"] = overrides.pop("out")
    return run_render(config.with_overrides(**overrides), keep_going=keep_going)
