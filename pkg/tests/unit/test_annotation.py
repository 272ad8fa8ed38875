"""Tests for groundtruth input, keypoint projection and set records."""

import json
import math
from pathlib import Path

import numpy as np
import pytest
from pydantic import ValidationError

from src.dataset.annotation import (
    NUM_JOINTS,
    PELVIS_INDEX,
    SMPL_FLIP_PAIRS,
    SMPL_JOINT_NAMES,
    VIS_OCCLUDED,
    VIS_OUTSIDE,
    VIS_VISIBLE,
    FrameGroundTruth,
    RenderSetRecord,
    GroundTruthError,
    SequenceGroundTruth,
    bbox_from_mask,
    build_render_set_record,
    joints_in_camera_mm,
    load_sequence,
    occlusion_visibility,
    project_keypoints,
    save_sequence,
)
from src.pipeline.demo import demo_sequence, t_pose_joints
from src.pipeline.scenes import person_proxy_field
from src.rendering.fields import BoxField, UniformSphereField, UnionField, VacuumField
from src.rendering.renderer import RenderOptions, render_image


@pytest.fixture
def t_pose_frame() -> FrameGroundTruth:
    return FrameGroundTruth(frame_id=3, joints_3d=t_pose_joints().tolist())


class TestGroundTruthFiles:
    """Sequence input files."""

    def test_skeleton_definition(self) -> None:
        assert NUM_JOINTS == 24
        assert SMPL_JOINT_NAMES[PELVIS_INDEX] == "pelvis"
        for left, right in SMPL_FLIP_PAIRS:
            assert SMPL_JOINT_NAMES[left].startswith("left_")
            assert SMPL_JOINT_NAMES[right] == SMPL_JOINT_NAMES[left].replace("left_", "right_")

    def test_round_trip(self, tmp_path: Path) -> None:
        sequence = demo_sequence()
        path = save_sequence(tmp_path / "seq.json", sequence)
        assert "betas" in json.loads(path.read_text())["frames"][0]
        assert load_sequence(path) == sequence

    def test_missing_file(self, tmp_path: Path) -> None:
        with pytest.raises(GroundTruthError, match="Cannot read"):
            load_sequence(tmp_path / "missing.json")

    def test_wrong_joint_count(self, tmp_path: Path) -> None:
        data = {"actor": "S1", "frames": [{"frame_id": 0, "joints_3d": [[0.0, 0.0, 0.0]] * 23}]}
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(data))
        with pytest.raises(GroundTruthError, match="Invalid groundtruth"):
            load_sequence(path)

    def test_rejects_non_finite_joint(self) -> None:
        joints = t_pose_joints().tolist()
        joints[4][2] = math.inf
        with pytest.raises(ValidationError):
            FrameGroundTruth(frame_id=0, joints_3d=joints)

    def test_default_smpl_parameters(self, t_pose_frame: FrameGroundTruth) -> None:
        assert t_pose_frame.smpl_betas == [0.0] * 10
        assert len(t_pose_frame.smpl_pose) == NUM_JOINTS

    def test_strided(self) -> None:
        frames = [FrameGroundTruth(frame_id=i, joints_3d=t_pose_joints().tolist()) for i in range(7)]
        sequence = SequenceGroundTruth(actor="S1", frames=frames)
        assert [f.frame_id for f in sequence.strided(3)] == [0, 3, 6]


class TestProjectKeypoints:
    """2D keypoints and visibility flags."""

    def test_pelvis_below_center_camera(self, small_rig, t_pose_frame: FrameGroundTruth) -> None:
        center = small_rig.cameras[0]
        keypoints = project_keypoints(t_pose_frame, center)
        pelvis = keypoints[PELVIS_INDEX]
        assert pelvis.u == pytest.approx(center.intrinsics.c_x, abs=1e-12)
        assert pelvis.v == pytest.approx(center.intrinsics.c_y, abs=1e-12)
        assert pelvis.vis != VIS_OUTSIDE

    def test_joint_above_camera_is_outside(self, small_rig) -> None:
        joints = t_pose_joints().tolist()
        joints[15] = [0.1, 0.0, 1.5]
        frame = FrameGroundTruth(frame_id=0, joints_3d=joints)
        keypoints = project_keypoints(frame, small_rig.cameras[0])
        assert keypoints[15].vis == VIS_OUTSIDE
        assert keypoints[0].vis == VIS_VISIBLE

    def test_t_pose_is_mirror_symmetric(self, small_rig, t_pose_frame: FrameGroundTruth) -> None:
        center = small_rig.cameras[0]
        keypoints = project_keypoints(t_pose_frame, center)
        c_x = center.intrinsics.c_x
        for left, right in SMPL_FLIP_PAIRS:
            kl, kr = keypoints[left], keypoints[right]
            assert kl.u - c_x == pytest.approx(-(kr.u - c_x), abs=1e-6)
            assert kl.v == pytest.approx(kr.v, abs=1e-6)

    def test_subject_left_appears_on_image_right(self, small_rig, t_pose_frame: FrameGroundTruth) -> None:
        keypoints = project_keypoints(t_pose_frame, small_rig.cameras[0])
        assert keypoints[20].u > keypoints[21].u

    def test_with_field_marks_occluded_joints(self, small_rig, t_pose_frame: FrameGroundTruth) -> None:
        roof = BoxField((-1, -1, 0.8), (1, 1, 0.9), sigma=1000.0)
        keypoints = project_keypoints(t_pose_frame, small_rig.cameras[0], roof, RenderOptions(n_samples=64))
        assert {k.vis for k in keypoints} == {VIS_OCCLUDED}

    def test_joints_in_camera_mm(self, small_rig, t_pose_frame: FrameGroundTruth) -> None:
        cam_mm = joints_in_camera_mm(t_pose_frame.joints, small_rig.cameras[0])
        np.testing.assert_allclose(cam_mm[PELVIS_INDEX], [0.0, 0.0, 1200.0], atol=1e-9)
        # head is 0.64 m above the pelvis, so closer to the camera
        assert cam_mm[15, 2] == pytest.approx(560.0)


class TestOcclusionVisibility:
    """Transmittance-based occlusion."""

    def test_vacuum_is_visible(self, small_rig) -> None:
        assert occlusion_visibility(np.zeros(3), small_rig.cameras[0], VacuumField()) == VIS_VISIBLE

    def test_behind_opaque_slab(self, small_rig) -> None:
        slab = BoxField((-1, -1, 0.5), (1, 1, 0.6), sigma=1000.0)
        assert occlusion_visibility(np.zeros(3), small_rig.cameras[0], slab) == VIS_OCCLUDED

    def test_on_near_surface_of_dense_sphere(self, small_rig) -> None:
        sphere = UniformSphereField((0, 0, 0), 0.3, 1000.0)
        cam = small_rig.cameras[0]
        assert occlusion_visibility(np.array([0.0, 0.0, 0.3]), cam, sphere) == VIS_VISIBLE
        assert occlusion_visibility(np.zeros(3), cam, sphere) == VIS_OCCLUDED

    def test_thin_haze_stays_visible(self, small_rig) -> None:
        haze = BoxField((-1, -1, 0.2), (1, 1, 1.0), sigma=0.5)
        assert occlusion_visibility(np.zeros(3), small_rig.cameras[0], haze) == VIS_VISIBLE

    def test_part_containing_joint_does_not_occlude(self, small_rig) -> None:
        body = UnionField([BoxField((-0.2, -0.2, -0.2), (0.2, 0.2, 0.2), sigma=1000.0)])
        assert occlusion_visibility(np.zeros(3), small_rig.cameras[0], body) == VIS_VISIBLE

    def test_other_parts_still_occlude(self, small_rig) -> None:
        body = BoxField((-0.2, -0.2, -0.2), (0.2, 0.2, 0.2), sigma=1000.0)
        roof = BoxField((-1, -1, 0.5), (1, 1, 0.6), sigma=1000.0)
        field = UnionField([body, roof])
        assert occlusion_visibility(np.zeros(3), small_rig.cameras[0], field) == VIS_OCCLUDED


class TestPersonProxyVisibility:
    """Visibility flags of a T-pose person proxy."""

    @pytest.fixture
    def keypoints_by_view(self, small_rig, t_pose_frame: FrameGroundTruth) -> list:
        proxy = person_proxy_field(t_pose_frame.joints)
        opts = RenderOptions(n_samples=64)
        return [project_keypoints(t_pose_frame, cam, proxy, opts) for cam in small_rig.cameras]

    def test_head_visible_from_above(self, keypoints_by_view: list) -> None:
        assert keypoints_by_view[0][15].vis == VIS_VISIBLE

    def test_wrists_visible_from_above(self, keypoints_by_view: list) -> None:
        assert keypoints_by_view[0][20].vis == VIS_VISIBLE
        assert keypoints_by_view[0][21].vis == VIS_VISIBLE

    def test_pelvis_under_head_is_occluded_from_above(self, keypoints_by_view: list) -> None:
        assert keypoints_by_view[0][PELVIS_INDEX].vis == VIS_OCCLUDED

    def test_pelvis_visible_from_front(self, small_rig, keypoints_by_view: list) -> None:
        north = [cam.name for cam in small_rig.cameras].index("N")
        assert keypoints_by_view[north][PELVIS_INDEX].vis == VIS_VISIBLE

    def test_flags_are_mixed(self, keypoints_by_view: list) -> None:
        flags = [k.vis for view in keypoints_by_view for k in view]
        assert flags.count(VIS_VISIBLE) > 0
        assert flags.count(VIS_OCCLUDED) > 0


class TestBoundingBoxes:
    """Mask bounding boxes."""

    def test_single_pixel(self) -> None:
        mask = np.zeros((40, 30), dtype=bool)
        mask[20, 10] = True
        assert bbox_from_mask(mask) == (10, 20, 1, 1)

    def test_full_frame(self) -> None:
        assert bbox_from_mask(np.ones((40, 30), dtype=bool)) == (0, 0, 30, 40)

    def test_empty_mask(self) -> None:
        assert bbox_from_mask(np.zeros((4, 4), dtype=bool)) is None

    def test_rendered_sphere_box_is_square(self, small_rig) -> None:
        sphere = UniformSphereField((0, 0, 0), 0.3, 100.0)
        out = render_image(sphere, small_rig.cameras[0], RenderOptions(n_samples=64))
        bbox = bbox_from_mask(out.mask)
        assert bbox is not None
        assert abs(bbox[2] - bbox[3]) <= 2


class TestRenderSetRecord:
    """Per-set annotation records."""

    def test_build_record(self, small_rig, t_pose_frame: FrameGroundTruth) -> None:
        masks = [np.zeros((64, 64), dtype=bool) for _ in range(9)]
        masks[0][30:34, 28:36] = True
        record = build_render_set_record(
            "S1",
            t_pose_frame,
            small_rig,
            masks,
            alpha_files=True,
            timings=[0.5] * 9,
            render_info={"n_samples": 16},
            provenance={"field": "test"},
        )

        assert record.frame_id == 3
        assert [v.camera_index for v in record.views] == list(range(9))
        assert record.views[4].image == "000003_04.png"
        assert record.views[4].mask == "000003_04_mask.png"
        assert record.views[4].alpha == "000003_04_alpha.png"
        assert record.views[0].bbox == [28, 30, 8, 4]
        assert record.views[1].bbox is None
        assert record.rig.h == 1.2
        assert record.provenance == {"field": "test"}
        np.testing.assert_allclose(record.camera_objects()[2].center, small_rig.cameras[2].center)

    def test_record_rejects_bad_visibility(self, small_rig, t_pose_frame: FrameGroundTruth) -> None:
        masks = [np.zeros((64, 64), dtype=bool)] * 9
        data = build_render_set_record("S1", t_pose_frame, small_rig, masks).model_dump()
        data["views"][0]["keypoints"][0]["vis"] = 3
        with pytest.raises(ValidationError):
            RenderSetRecord.model_validate(data)
