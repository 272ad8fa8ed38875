"""Tests for dataset writing, indexing, validation and statistics."""

import json
from pathlib import Path

import numpy as np
import pytest

from src.dataset.annotation import FrameGroundTruth, RenderSetRecord, build_render_set_record
from src.dataset.statistics import dataset_statistics, index_frame
from src.dataset.validation import validate_dataset
from src.dataset.writer import (
    ANNOTATION_FILE,
    INDEX_FILE,
    TRAIN_SPLIT,
    VAL_SPLIT,
    DatasetIndex,
    DatasetReadError,
    DatasetWriteError,
    pass_dir_name,
    person_category,
    read_render_set,
    set_dir,
    write_render_set,
)
from src.geometry.rig import RenderRig
from src.pipeline.demo import t_pose_joints
from src.rendering.renderer import RenderOutput


def _outputs(size: int = 64) -> list[RenderOutput]:
    """Nine synthetic renders with a small centered blob."""
    outputs = []
    for index in range(9):
        alpha = np.zeros((size, size))
        alpha[28:36, 26 + index % 3 : 34 + index % 3] = 0.9
        rgb = np.repeat(alpha[..., None], 3, axis=-1) * 0.5
        outputs.append(RenderOutput(rgb=rgb, alpha=alpha, mask=alpha >= 0.5, timing=0.01, camera_name=str(index)))
    return outputs


def _record(
    rig: RenderRig, outputs: list[RenderOutput], frame_id: int = 0, alpha: bool = False, actor: str = "S1"
) -> RenderSetRecord:
    gt = FrameGroundTruth(frame_id=frame_id, joints_3d=t_pose_joints().tolist())
    return build_render_set_record(
        actor, gt, rig, [o.mask for o in outputs], alpha_files=alpha, timings=[o.timing for o in outputs]
    )


@pytest.fixture
def dataset_root(tmp_path: Path, small_rig) -> Path:
    """A dataset with two frames of one pass and a saved index."""
    root = tmp_path / "dataset"
    index = DatasetIndex.load(root)
    outputs = _outputs()
    for frame_id in (0, 1):
        write_render_set(root, outputs, _record(small_rig, outputs, frame_id), index)
    index.save()
    return root


class TestLayout:
    """Directory naming."""

    def test_pass_dir_name(self) -> None:
        assert pass_dir_name(1.2, 1.0) == "1.20_1.00"

    def test_set_dir(self, tmp_path: Path) -> None:
        assert set_dir(tmp_path, "S1", 1.0, 0.5, 42) == tmp_path / "S1" / "1.00_0.50" / "000042"


class TestWriteRenderSet:
    """Render-set files and records."""

    def test_nineteen_files(self, tmp_path: Path, small_rig) -> None:
        outputs = _outputs()
        manifest = write_render_set(tmp_path, outputs, _record(small_rig, outputs))
        files = list((tmp_path / manifest.set_dir).iterdir())
        assert manifest.file_count == 19
        assert len(files) == 19
        assert len(manifest.images) == len(manifest.masks) == 9

    def test_alpha_files(self, tmp_path: Path, small_rig) -> None:
        outputs = _outputs()
        manifest = write_render_set(tmp_path, outputs, _record(small_rig, outputs, alpha=True))
        assert manifest.file_count == 28
        assert (tmp_path / manifest.alphas[0]).is_file()

    def test_record_round_trip(self, tmp_path: Path, small_rig) -> None:
        outputs = _outputs()
        record = _record(small_rig, outputs, frame_id=5)
        manifest = write_render_set(tmp_path, outputs, record)
        assert read_render_set(tmp_path / manifest.set_dir) == record

    def test_read_missing_record(self, tmp_path: Path) -> None:
        with pytest.raises(DatasetReadError):
            read_render_set(tmp_path)

    def test_output_count_mismatch(self, tmp_path: Path, small_rig) -> None:
        outputs = _outputs()
        with pytest.raises(ValueError):
            write_render_set(tmp_path, outputs[:8], _record(small_rig, outputs))

    def test_unwritable_root(self, tmp_path: Path, small_rig) -> None:
        blocker = tmp_path / "not_a_dir"
        blocker.write_text("x")
        outputs = _outputs()
        with pytest.raises(DatasetWriteError) as excinfo:
            write_render_set(blocker, outputs, _record(small_rig, outputs))
        assert excinfo.value.path.name == "000000"


class TestDatasetIndex:
    """COCO-style index."""

    def test_counts_over_two_sets(self, dataset_root: Path) -> None:
        index = DatasetIndex.load(dataset_root)
        assert len(index.images) == 18
        assert len(index.annotations) == 18
        assert len({img["id"] for img in index.images}) == 18
        assert "date_created" in index.data["info"]

    def test_annotation_entries(self, dataset_root: Path) -> None:
        index = DatasetIndex.load(dataset_root)
        first = index.annotations[0]
        assert len(first["keypoints"]) == 72
        assert first["bbox"] == [26, 28, 8, 8]
        assert first["area"] == 64
        assert first["num_keypoints"] == int(np.sum(index.keypoints_array(first)[:, 2] > 0))
        np.testing.assert_allclose(first["keypoints_cam"][0], [0.0, 0.0, 1200.0], atol=1e-9)
        assert index.images[0]["file_name"] == "S1/1.20_1.00/000000/000000_00.png"

    def test_rewriting_a_set_replaces_entries(self, dataset_root: Path, small_rig) -> None:
        index = DatasetIndex.load(dataset_root)
        outputs = _outputs()
        write_render_set(dataset_root, outputs, _record(small_rig, outputs, 0), index)
        assert len(index.images) == 18
        assert len(index.annotations) == 18

    def test_ids_keep_growing_after_rewrite(self, dataset_root: Path, small_rig) -> None:
        index = DatasetIndex.load(dataset_root)
        outputs = _outputs()
        write_render_set(dataset_root, outputs, _record(small_rig, outputs, 0), index)
        image_ids = [img["id"] for img in index.images]
        annotation_ids = [a["id"] for a in index.annotations]
        assert len(set(image_ids)) == 18
        assert len(set(annotation_ids)) == 18
        assert sorted(image_ids)[-9:] == list(range(19, 28))
        assert {a["image_id"] for a in index.annotations} == set(image_ids)

    def test_counters_resume_from_saved_index(self, dataset_root: Path, small_rig) -> None:
        index = DatasetIndex.load(dataset_root)
        outputs = _outputs()
        write_render_set(dataset_root, outputs, _record(small_rig, outputs, 2), index)
        assert [img["id"] for img in index.images][-9:] == list(range(19, 28))
        assert index.annotations[-1]["id"] == 27

    def test_category_skeleton(self) -> None:
        category = person_category()
        assert len(category["keypoints"]) == 24
        assert len(category["skeleton"]) == 23
        assert [2, 1] in category["skeleton"]


class TestSplits:
    """Train/val split by actor."""

    @pytest.fixture
    def two_actor_root(self, dataset_root: Path, small_rig) -> Path:
        index = DatasetIndex.load(dataset_root)
        outputs = _outputs()
        write_render_set(dataset_root, outputs, _record(small_rig, outputs, 0, actor="S9"), index)
        index.save()
        return dataset_root

    def test_new_images_default_to_train(self, two_actor_root: Path) -> None:
        index = DatasetIndex.load(two_actor_root)
        assert {img["split"] for img in index.images} == {TRAIN_SPLIT}
        assert index.val_actors == []

    def test_assign_splits_by_actor(self, two_actor_root: Path) -> None:
        index = DatasetIndex.load(two_actor_root)
        assert index.assign_splits(["S9"]) == {TRAIN_SPLIT: 18, VAL_SPLIT: 9}
        assert all((img["split"] == VAL_SPLIT) == (img["actor"] == "S9") for img in index.images)

    def test_split_persists_for_later_sets(self, two_actor_root: Path, small_rig) -> None:
        index = DatasetIndex.load(two_actor_root)
        index.assign_splits(["S9"])
        index.save()

        reloaded = DatasetIndex.load(two_actor_root)
        outputs = _outputs()
        write_render_set(two_actor_root, outputs, _record(small_rig, outputs, 1, actor="S9"), reloaded)
        assert reloaded.val_actors == ["S9"]
        assert [img["split"] for img in reloaded.images[-9:]] == [VAL_SPLIT] * 9

    def test_subset(self, two_actor_root: Path) -> None:
        index = DatasetIndex.load(two_actor_root)
        index.assign_splits(["S9"])
        val = index.subset(VAL_SPLIT)
        assert len(val.images) == 9
        assert len(val.annotations) == 9
        assert {img["actor"] for img in val.images} == {"S9"}
        assert len(index.images) == 27

    def test_statistics_by_split(self, two_actor_root: Path) -> None:
        index = DatasetIndex.load(two_actor_root)
        index.assign_splits(["S9"])
        index.save()
        stats = dataset_statistics(two_actor_root, by_split=True)
        assert stats.loc[(VAL_SPLIT, "S9", 1.2, 1.0)]["images"] == 9
        assert stats.loc[(TRAIN_SPLIT, "S1", 1.2, 1.0)]["sets"] == 2
        assert set(index_frame(two_actor_root)["split"]) == {TRAIN_SPLIT, VAL_SPLIT}


class TestValidateDataset:
    """Dataset validation reports."""

    def test_fresh_dataset_is_valid(self, dataset_root: Path) -> None:
        report = validate_dataset(dataset_root)
        assert report.ok
        assert report.sets_checked == 2

    def test_deleted_mask(self, dataset_root: Path) -> None:
        (dataset_root / "S1" / "1.20_1.00" / "000001" / "000001_03_mask.png").unlink()
        report = validate_dataset(dataset_root)
        assert report.counts() == {"schema": 0, "missing_file": 1, "invariant": 0}
        assert report.violations[0].path == "S1/1.20_1.00/000001/000001_03_mask.png"

    def test_out_of_range_visibility(self, dataset_root: Path) -> None:
        path = dataset_root / "S1" / "1.20_1.00" / "000000" / ANNOTATION_FILE
        data = json.loads(path.read_text())
        data["views"][2]["keypoints"][5]["vis"] = 3
        path.write_text(json.dumps(data))

        report = validate_dataset(dataset_root)
        assert report.counts()["schema"] == 1
        assert "views/2/keypoints/5/vis" in report.violations[0].message

    def test_tampered_keypoint(self, dataset_root: Path) -> None:
        path = dataset_root / "S1" / "1.20_1.00" / "000000" / ANNOTATION_FILE
        data = json.loads(path.read_text())
        data["views"][0]["keypoints"][0]["u"] += 1.0
        path.write_text(json.dumps(data))

        report = validate_dataset(dataset_root)
        assert report.counts() == {"schema": 0, "missing_file": 0, "invariant": 1}
        assert report.violations[0].path.endswith("#/views/0/keypoints/0")

    def test_bbox_outside_image(self, dataset_root: Path) -> None:
        path = dataset_root / "S1" / "1.20_1.00" / "000000" / ANNOTATION_FILE
        data = json.loads(path.read_text())
        data["views"][1]["bbox"] = [60, 0, 10, 10]
        path.write_text(json.dumps(data))
        assert validate_dataset(dataset_root).counts()["invariant"] == 1

    def test_index_count_mismatch(self, dataset_root: Path) -> None:
        index = json.loads((dataset_root / INDEX_FILE).read_text())
        index["images"] = index["images"][:-1]
        (dataset_root / INDEX_FILE).write_text(json.dumps(index))
        report = validate_dataset(dataset_root)
        assert [v.path for v in report.violations] == ["index.json#/images"]

    def test_unknown_split(self, dataset_root: Path) -> None:
        index = json.loads((dataset_root / INDEX_FILE).read_text())
        index["images"][4]["split"] = "holdout"
        (dataset_root / INDEX_FILE).write_text(json.dumps(index))
        report = validate_dataset(dataset_root)
        assert [(v.kind, v.path) for v in report.violations] == [("schema", "index.json#/images/4/split")]

    def test_missing_root(self, tmp_path: Path) -> None:
        with pytest.raises(DatasetReadError):
            validate_dataset(tmp_path / "nowhere")

    def test_report_dataframe(self, dataset_root: Path) -> None:
        (dataset_root / INDEX_FILE).unlink()
        frame = validate_dataset(dataset_root).to_dataframe()
        assert frame["kind"].tolist() == ["missing_file"]


class TestStatistics:
    """Per-pass summaries."""

    def test_index_frame(self, dataset_root: Path) -> None:
        frame = index_frame(dataset_root)
        assert len(frame) == 18
        assert set(frame["camera"]) == {"C", "E", "NE", "N", "NW", "W", "SW", "S", "SE"}

    def test_dataset_statistics(self, dataset_root: Path) -> None:
        stats = dataset_statistics(dataset_root)
        row = stats.loc[("S1", 1.2, 1.0)]
        assert row["sets"] == 2
        assert row["images"] == 18
        assert row["mean_bbox_area"] == 64
        assert row["mean_labelled_keypoints"] == 24

    def test_missing_index(self, tmp_path: Path) -> None:
        with pytest.raises(DatasetReadError):
            dataset_statistics(tmp_path)
