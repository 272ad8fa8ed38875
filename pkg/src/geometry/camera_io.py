"""Camera parameter records: validated key/value form and JSON files."""

import json
import logging
import math
from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from src.geometry.fisheye import Camera, CameraModelError, Extrinsics, Intrinsics

logger = logging.getLogger(__name__)


class CameraRecord(BaseModel):
    """Serialized camera: R row-major (9), T (3), intrinsics and an optional name."""

    model_config = ConfigDict(extra="forbid")

    name: str = ""
    R: list[float] = Field(min_length=9, max_length=9)
    T: list[float] = Field(min_length=3, max_length=3)
    f: float = Field(gt=0)
    c_x: float
    c_y: float
    width: int = Field(ge=1)
    height: int = Field(ge=1)
    theta_max: float = Field(gt=0, le=math.pi)

    @classmethod
    def from_camera(cls, cam: Camera) -> "CameraRecord":
        intr = cam.intrinsics
        return cls(
            name=cam.name,
            R=[float(x) for x in cam.extrinsics.R.reshape(-1)],
            T=[float(x) for x in cam.extrinsics.T],
            f=float(intr.f),
            c_x=float(intr.c_x),
            c_y=float(intr.c_y),
            width=int(intr.width),
            height=int(intr.height),
            theta_max=float(intr.theta_max),
        )

    def to_camera(self) -> Camera:
        intrinsics = Intrinsics(
            f=self.f,
            c_x=self.c_x,
            c_y=self.c_y,
            width=self.width,
            height=self.height,
            theta_max=self.theta_max,
        )
        extrinsics = Extrinsics(R=self.R, T=self.T)
        return Camera(intrinsics=intrinsics, extrinsics=extrinsics, name=self.name)


def save_camera(path: str | Path, cam: Camera) -> Path:
    """
    Write a camera record as JSON.

    Floats use Python's shortest round-trip repr, so reading the file back
    reproduces every parameter bit-for-bit.

    Args:
        path: Destination file
        cam: Camera to serialize

    Returns:
        The written path
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    record = CameraRecord.from_camera(cam)
    path.write_text(json.dumps(record.model_dump(), indent=2), encoding="utf-8")
    logger.debug(f"🐞 Saved camera '{cam.name}' to {path}")
    return path


def load_camera(path: str | Path) -> Camera:
    """
    Read a camera record written by save_camera.

    Raises:
        CameraModelError: If the file is not a valid camera record
    """
    path = Path(path)
    try:
        record = CameraRecord.model_validate_json(path.read_text(encoding="utf-8"))
    except ValidationError as e:
        raise CameraModelError(f"Invalid camera file {path}: {e}") from e
    return record.to_camera()
