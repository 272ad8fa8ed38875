"""Render pipeline: configuration, scenes, demo inputs and orchestration."""

from src.pipeline.config import ConfigError, PipelineConfig, load_pipeline_config
from src.pipeline.demo import demo_config, demo_sequence, t_pose_joints, write_demo_inputs
from src.pipeline.runner import RenderRunSummary, cmd_render, run_render
from src.pipeline.scenes import build_scene, person_proxy_field

__all__ = [
    "ConfigError",
    "PipelineConfig",
    "RenderRunSummary",
    "build_scene",
    "cmd_render",
    "demo_config",
    "demo_sequence",
    "load_pipeline_config",
    "person_proxy_field",
    "run_render",
    "t_pose_joints",
    "write_demo_inputs",
]
