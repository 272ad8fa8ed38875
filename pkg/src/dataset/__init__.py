"""Groundtruth annotation, dataset files and dataset validation."""

from src.dataset.annotation import (
    NUM_JOINTS,
    SMPL_JOINT_NAMES,
    FrameGroundTruth,
    GroundTruthError,
    Keypoint2D,
    RenderSetRecord,
    SequenceGroundTruth,
    bbox_from_mask,
    build_render_set_record,
    load_sequence,
    occlusion_visibility,
    project_keypoints,
    save_sequence,
)
from src.dataset.statistics import dataset_statistics
from src.dataset.validation import ValidationReport, Violation, validate_dataset
from src.dataset.writer import (
    DatasetError,
    DatasetIndex,
    DatasetReadError,
    DatasetWriteError,
    RenderSetManifest,
    read_render_set,
    write_render_set,
)

__all__ = [
    "NUM_JOINTS",
    "SMPL_JOINT_NAMES",
    "DatasetError",
    "DatasetIndex",
    "DatasetReadError",
    "DatasetWriteError",
    "FrameGroundTruth",
    "GroundTruthError",
    "Keypoint2D",
    "RenderSetManifest",
    "RenderSetRecord",
    "SequenceGroundTruth",
    "ValidationReport",
    "Violation",
    "bbox_from_mask",
    "build_render_set_record",
    "dataset_statistics",
    "load_sequence",
    "occlusion_visibility",
    "project_keypoints",
    "read_render_set",
    "save_sequence",
    "validate_dataset",
    "write_render_set",
]
