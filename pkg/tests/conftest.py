"""Pytest configuration and shared fixtures."""

import math
from collections.abc import Iterator
from pathlib import Path

import numpy as np
import pytest

from src.config import reset_config
from src.geometry.fisheye import Camera, Extrinsics, Intrinsics
from src.geometry.rig import RigConfig, make_rig
from src.rendering.fields import UniformSphereField


@pytest.fixture
def project_root() -> Path:
    """Return the project root directory."""
    return Path(__file__).parent.parent


@pytest.fixture
def data_dir(project_root: Path) -> Path:
    """Return the data directory."""
    return project_root / "data"


@pytest.fixture
def demo_dir(data_dir: Path) -> Path:
    """Return the shipped demo inputs."""
    return data_dir / "demo"


@pytest.fixture(autouse=True)
def clean_config() -> Iterator[None]:
    """Every test starts from a fresh AppConfig."""
    reset_config()
    yield
    reset_config()


@pytest.fixture
def intrinsics() -> Intrinsics:
    """f=100 px, principal point (250, 250), 500x500, 180° image circle."""
    return Intrinsics(f=100.0, c_x=250.0, c_y=250.0, width=500, height=500, theta_max=math.pi / 2)


@pytest.fixture
def identity_camera(intrinsics: Intrinsics) -> Camera:
    """Camera at the world origin looking along +z."""
    return Camera(intrinsics=intrinsics, extrinsics=Extrinsics(R=np.eye(3), T=np.zeros(3)), name="id")


@pytest.fixture
def small_intrinsics() -> Intrinsics:
    """64x64 inscribed image circle, fast enough for full renders."""
    return Intrinsics.for_image_circle(64, 64, math.pi / 2)


@pytest.fixture
def small_rig(small_intrinsics: Intrinsics):
    return make_rig(RigConfig(h=1.2, R_circle=1.0, pelvis_xy=(0.0, 0.0), intrinsics=small_intrinsics))


@pytest.fixture
def sphere_field() -> UniformSphereField:
    """Dense unit-red sphere of radius 0.3 centered on the world origin."""
    return UniformSphereField(center=(0.0, 0.0, 0.0), radius=0.3, sigma=50.0, color=(1.0, 0.0, 0.0))

