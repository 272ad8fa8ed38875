"""Self-contained demo inputs: a T-pose skeleton sequence and a person-proxy config."""

import json
import logging
import math
from collections.abc import Sequence
from pathlib import Path
from typing import Any

import numpy as np

from src.dataset.annotation import FrameGroundTruth, SequenceGroundTruth, save_sequence

logger = logging.getLogger(__name__)

DEMO_ACTOR = "demo_actor"
DEMO_PASSES = ((1.2, 1.0), (1.0, 0.5))

# Pelvis-relative T-pose in meters: z up, the subject's left on +x, facing +y
T_POSE = (
    (0.00, 0.00, 0.00),  # pelvis
    (0.09, 0.00, -0.08),  # left_hip
    (-0.09, 0.00, -0.08),  # right_hip
    (0.00, 0.00, 0.11),  # spine1
    (0.10, 0.00, -0.48),  # left_knee
    (-0.10, 0.00, -0.48),  # right_knee
    (0.00, 0.00, 0.24),  # spine2
    (0.10, 0.00, -0.88),  # left_ankle
    (-0.10, 0.00, -0.88),  # right_ankle
    (0.00, 0.00, 0.30),  # spine3
    (0.11, 0.12, -0.94),  # left_foot
    (-0.11, 0.12, -0.94),  # right_foot
    (0.00, 0.00, 0.52),  # neck
    (0.08, 0.00, 0.44),  # left_collar
    (-0.08, 0.00, 0.44),  # right_collar
    (0.00, 0.00, 0.64),  # head
    (0.18, 0.00, 0.45),  # left_shoulder
    (-0.18, 0.00, 0.45),  # right_shoulder
    (0.44, 0.00, 0.45),  # left_elbow
    (-0.44, 0.00, 0.45),  # right_elbow
    (0.69, 0.00, 0.45),  # left_wrist
    (-0.69, 0.00, 0.45),  # right_wrist
    (0.78, 0.00, 0.45),  # left_hand
    (-0.78, 0.00, 0.45),  # right_hand
)


def t_pose_joints(pelvis: Sequence[float] = (0.0, 0.0, 0.0)) -> np.ndarray:
    """T-pose joints (24, 3) with the pelvis at the given world position."""
    return np.asarray(T_POSE, dtype=np.float64) + np.asarray(pelvis, dtype=np.float64)


def demo_sequence(
    pelvis_path: Sequence[Sequence[float]] = ((0.0, 0.0, 0.0), (0.1, -0.05, 0.0)),
    actor: str = DEMO_ACTOR,
) -> SequenceGroundTruth:
    """A T-pose translated along the given pelvis positions, one frame per position."""
    frames = [
        FrameGroundTruth(frame_id=i, joints_3d=t_pose_joints(pelvis).tolist())
        for i, pelvis in enumerate(pelvis_path)
    ]
    return SequenceGroundTruth(actor=actor, frames=frames)


def demo_config(
    ground_truth: str = "demo_sequence.json",
    size: int = 256,
    n_samples: int = 128,
    output_dir: str = "topview_output/demo",
) -> dict[str, Any]:
    """Pipeline config for the person-proxy demo with both render passes."""
    return {
        "actor": DEMO_ACTOR,
        "ground_truth": ground_truth,
        "scene": {"type": "person_proxy", "sigma": 40.0},
        "rig": {
            "passes": [list(p) for p in DEMO_PASSES],
            "intrinsics": {"width": size, "height": size, "theta_max": math.pi / 2},
            "recentering": "per_frame",
        },
        "render": {
            "n_samples": n_samples,
            "stratified": True,
            "save_alpha": False,
            "occlusion": True,
        },
        "output_dir": output_dir,
        "seed": 7,
        "frame_stride": 1,
        "provenance": {
            "field": "person_proxy",
            "optimizer": "adam",
            "learning_rate": 5e-4,
            "batch_size": 6,
            "patches": "6x32x32",
            "steps": 400000,
        },
    }


def write_demo_inputs(directory: str | Path, **config_overrides: Any) -> Path:
    """
    Write demo_sequence.json and demo_config.json into a directory.

    Returns:
        Path of the config file
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    save_sequence(directory / "demo_sequence.json", demo_sequence())
    config_path = directory / "demo_config.json"
    config = demo_config(**config_overrides)
    config_path.write_text(json.dumps(config, indent=2), encoding="utf-8")
    logger.info(f"✅ Demo inputs written to {directory}")
    return config_path
