"""Tests for pipeline configuration loading and scene construction."""

import json
import math
from pathlib import Path

import numpy as np
import pytest

from src.dataset.annotation import FrameGroundTruth
from src.pipeline.config import ConfigError, PipelineConfig, VoxelScene, load_pipeline_config
from src.pipeline.demo import demo_config, t_pose_joints, write_demo_inputs
from src.pipeline.scenes import build_scene, person_proxy_field
from src.rendering.fields import FieldBounds, TranslatedField, sample
from src.rendering.voxel import VoxelGrid, write_voxel_grid

DOWN = (0.0, 0.0, -1.0)


def _write_config(directory: Path, payload: dict) -> Path:
    path = directory / "config.json"
    path.write_text(json.dumps(payload, indent=2))
    return path


@pytest.fixture
def demo_inputs(tmp_path: Path) -> Path:
    """Directory holding demo_sequence.json and demo_config.json."""
    write_demo_inputs(tmp_path)
    return tmp_path


class TestLoadPipelineConfig:
    """Reading and validating config files."""

    def test_shipped_demo_config(self, demo_dir: Path) -> None:
        config = load_pipeline_config(demo_dir / "demo_config.json")
        assert config.passes() == [(1.2, 1.0), (1.0, 0.5)]
        assert Path(config.ground_truth) == demo_dir / "demo_sequence.json"
        assert config.render_options().jitter_seed == 7

    def test_shipped_sphere_scene(self, demo_dir: Path) -> None:
        config = load_pipeline_config(demo_dir / "sphere_scene.json")
        assert config.scene.type == "analytic"
        assert config.rig.intrinsics.build().f == pytest.approx(64 / (math.pi / 2))
        assert config.render_options().jitter_seed is None

    def test_json_syntax_error_has_line_and_column(self, tmp_path: Path) -> None:
        path = tmp_path / "bad.json"
        path.write_text('{\n  "actor": ,\n}')
        with pytest.raises(ConfigError, match=r"bad\.json:2:\d+: invalid JSON"):
            load_pipeline_config(path)

    def test_unknown_key_is_located(self, demo_inputs: Path) -> None:
        payload = demo_config()
        payload["render"]["n_sample"] = 64
        with pytest.raises(ConfigError, match=r"render\.n_sample"):
            load_pipeline_config(_write_config(demo_inputs, payload))

    def test_invalid_pass(self, demo_inputs: Path) -> None:
        payload = demo_config()
        payload["rig"]["passes"] = [[0.0, 1.0]]
        with pytest.raises(ConfigError, match="h > 0"):
            load_pipeline_config(_write_config(demo_inputs, payload))

    def test_half_set_integration_bounds(self, demo_inputs: Path) -> None:
        payload = demo_config()
        payload["render"]["t_near"] = 0.5
        with pytest.raises(ConfigError, match="t_near and t_far"):
            load_pipeline_config(_write_config(demo_inputs, payload))

    def test_missing_ground_truth(self, tmp_path: Path) -> None:
        with pytest.raises(ConfigError, match="referenced files not found"):
            load_pipeline_config(_write_config(tmp_path, demo_config()))

    def test_missing_config_file(self, tmp_path: Path) -> None:
        with pytest.raises(ConfigError, match="Cannot read config"):
            load_pipeline_config(tmp_path / "absent.json")

    def test_voxel_paths_resolve_against_config(self, demo_inputs: Path) -> None:
        grid = VoxelGrid((1, 1, 1), FieldBounds((-1, -1, -1), (1, 1, 1)), np.ones((1, 1, 1, 4)))
        write_voxel_grid(demo_inputs / "fields" / "body.nvox", grid)
        payload = demo_config()
        payload["scene"] = {"type": "nvox", "path": "fields/body.nvox"}

        config = load_pipeline_config(_write_config(demo_inputs, payload))
        assert isinstance(config.scene, VoxelScene)
        assert config.scene.path == str(demo_inputs / "fields" / "body.nvox")

    def test_missing_voxel_file(self, demo_inputs: Path) -> None:
        payload = demo_config()
        payload["scene"] = {"type": "nvox", "per_frame": {"0": "fields/f0.nvox"}}
        with pytest.raises(ConfigError, match="f0.nvox"):
            load_pipeline_config(_write_config(demo_inputs, payload))


class TestOverrides:
    """Command-line overrides."""

    def test_overrides_apply(self, demo_dir: Path) -> None:
        config = load_pipeline_config(demo_dir / "demo_config.json")
        updated = config.with_overrides(output_dir="elsewhere", seed=3, supersample=2, workers=None)
        assert updated.output_dir == "elsewhere"
        assert updated.seed == 3
        assert updated.render.supersample == 2
        assert updated.workers == config.workers
        assert updated.render_options().jitter_seed == 3
        assert config.seed == 7

    def test_defaults(self, demo_inputs: Path) -> None:
        payload = {
            "ground_truth": "demo_sequence.json",
            "scene": {"type": "person_proxy"},
            "rig": {"passes": [[1.2, 1.0]], "intrinsics": {"width": 32, "height": 32}},
        }
        config = load_pipeline_config(_write_config(demo_inputs, payload))
        assert isinstance(config, PipelineConfig)
        assert config.render.n_samples == 128
        assert config.rig.recentering == "per_frame"
        assert config.frame_stride == 1
        assert config.render_options().auto_bounds
        assert config.output_dir is None


class TestScenes:
    """Per-frame radiance fields."""

    @pytest.fixture
    def frame(self) -> FrameGroundTruth:
        return FrameGroundTruth(frame_id=0, joints_3d=t_pose_joints((0.2, -0.1, 0.0)).tolist())

    def test_person_proxy_covers_joints(self, frame: FrameGroundTruth) -> None:
        proxy = person_proxy_field(frame.joints)
        assert np.all(proxy.bounds().contains(frame.joints))
        assert sample(proxy, frame.joints[15], DOWN).sigma > 0
        assert sample(proxy, frame.joints[22], DOWN).sigma > 0
        assert sample(proxy, frame.pelvis + [0.0, 0.5, 0.0], DOWN).sigma == 0.0

    def test_analytic_scene_follows_pelvis(self, demo_dir: Path, frame: FrameGroundTruth) -> None:
        config = load_pipeline_config(demo_dir / "sphere_scene.json")
        scene_field = build_scene(config.scene, frame)
        assert isinstance(scene_field, TranslatedField)
        np.testing.assert_allclose(scene_field.bounds().lower[:2], [0.2 - 0.32, -0.1 - 0.32])
        assert sample(scene_field, frame.pelvis, DOWN).sigma == pytest.approx(20.0, rel=1e-6)

    def test_voxel_scene(self, tmp_path: Path, frame: FrameGroundTruth) -> None:
        grid = VoxelGrid((2, 2, 2), FieldBounds((-1, -1, -1), (1, 1, 1)), np.full((2, 2, 2, 4), 0.5))
        path = write_voxel_grid(tmp_path / "g.nvox", grid)
        scene = VoxelScene(type="nvox", path=str(path))
        scene_field = build_scene(scene, frame)
        assert sample(scene_field, (0.0, 0.0, 0.0), DOWN).sigma == pytest.approx(0.5)

    def test_voxel_scene_requires_a_source(self) -> None:
        with pytest.raises(ValueError):
            VoxelScene(type="nvox")
