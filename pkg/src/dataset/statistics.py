"""Summary statistics of a generated dataset."""

import logging
from pathlib import Path

import numpy as np
import pandas as pd

from src.dataset.writer import DatasetIndex, DatasetReadError

logger = logging.getLogger(__name__)


def index_frame(root: str | Path) -> pd.DataFrame:
    """
    One row per indexed view: image metadata joined with its annotation.

    Columns: actor, split, frame_id, camera, h, R_circle, bbox_w, bbox_h,
    bbox_area, visible_keypoints, labelled_keypoints.
    """
    index = DatasetIndex.load(root)
    if not index.path.exists():
        raise DatasetReadError(f"No dataset index under {root}")

    images = pd.DataFrame(index.images)
    if images.empty:
        return pd.DataFrame(
            columns=[
                "actor", "split", "frame_id", "camera", "h", "R_circle",
                "bbox_w", "bbox_h", "bbox_area", "visible_keypoints", "labelled_keypoints",
            ]
        )

    rows = []
    for annotation in index.annotations:
        vis = index.keypoints_array(annotation)[:, 2]
        bbox = annotation["bbox"]
        rows.append(
            {
                "image_id": annotation["image_id"],
                "bbox_w": bbox[2],
                "bbox_h": bbox[3],
                "bbox_area": bbox[2] * bbox[3],
                "visible_keypoints": int(np.sum(vis == 2)),
                "labelled_keypoints": int(np.sum(vis > 0)),
            }
        )
    annotations = pd.DataFrame(rows)
    if "split" not in images:
        images["split"] = [index.split_of(str(actor)) for actor in images["actor"]]

    merged = images.merge(annotations, left_on="id", right_on="image_id", how="inner")
    return merged[
        [
            "actor", "split", "frame_id", "camera", "h", "R_circle",
            "bbox_w", "bbox_h", "bbox_area", "visible_keypoints", "labelled_keypoints",
        ]
    ]


def dataset_statistics(root: str | Path, by_split: bool = False) -> pd.DataFrame:
    """
    Per actor and (h, R) pass: set count, image count, mean subject bbox size
    (views with an empty mask excluded) and mean keypoint counts.

    Args:
        root: Dataset root holding index.json
        by_split: Group by train/val split first

    Returns:
        DataFrame indexed by (actor, h, R_circle), or (split, actor, h, R_circle)
    """
    views = index_frame(root)
    if views.empty:
        logger.warning(f"⚠️ Dataset {root} has no indexed views")
        return pd.DataFrame()

    sized = views[views["bbox_area"] > 0]
    keys = ["split", "actor", "h", "R_circle"] if by_split else ["actor", "h", "R_circle"]
    stats = views.groupby(keys).agg(
        sets=("frame_id", "nunique"),
        images=("camera", "size"),
        mean_visible_keypoints=("visible_keypoints", "mean"),
        mean_labelled_keypoints=("labelled_keypoints", "mean"),
    )
    sizes = sized.groupby(keys).agg(
        mean_bbox_w=("bbox_w", "mean"),
        mean_bbox_h=("bbox_h", "mean"),
        mean_bbox_area=("bbox_area", "mean"),
    )
    return stats.join(sizes, how="left")
