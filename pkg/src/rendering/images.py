"""Lossless PNG output for renders, masks and alpha channels."""

import logging
from pathlib import Path

import numpy as np
from PIL import Image

logger = logging.getLogger(__name__)


def to_uint8(values: np.ndarray) -> np.ndarray:
    """Quantize [0, 1] floats to 8 bits with round-half-to-even."""
    return np.rint(np.clip(values, 0.0, 1.0) * 255.0).astype(np.uint8)


def save_rgb(path: str | Path, rgb: np.ndarray) -> Path:
    """Write an (H, W, 3) float image in [0, 1] as 8-bit RGB PNG."""
    path = Path(path)
    Image.fromarray(to_uint8(rgb)).save(path, format="PNG")
    return path


def save_mask(path: str | Path, mask: np.ndarray) -> Path:
    """Write a boolean (H, W) mask as 8-bit grayscale {0, 255}."""
    path = Path(path)
    data = np.where(np.asarray(mask, dtype=bool), 255, 0).astype(np.uint8)
    Image.fromarray(data).save(path, format="PNG")
    return path


def save_alpha16(path: str | Path, alpha: np.ndarray) -> Path:
    """Write accumulated opacity (H, W) in [0, 1] as 16-bit grayscale."""
    path = Path(path)
    data = np.rint(np.clip(alpha, 0.0, 1.0) * 65535.0).astype(np.uint16)
    Image.fromarray(data).save(path, format="PNG")
    return path


def load_image(path: str | Path) -> np.ndarray:
    """
    Read a PNG back as floats in [0, 1].

    8-bit images are scaled by 1/255 and 16-bit grayscale by 1/65535.
    Masks therefore come back as {0.0, 1.0}.
    """
    with Image.open(path) as image:
        sixteen_bit = image.mode.startswith("I")
        data = np.asarray(image)
    scale = 65535.0 if sixteen_bit else 255.0
    return data.astype(np.float64) / scale


def load_mask(path: str | Path) -> np.ndarray:
    with Image.open(path) as image:
        return np.asarray(image.convert("L")) > 127


def composite_background(rgb: np.ndarray, alpha: np.ndarray, background: np.ndarray) -> np.ndarray:
    """
    Re-composite a render over a new background.

    Renders carry T_final * old_background in their color, so a render made
    on a black background composites as rgb + (1 - alpha) * background.

    Args:
        rgb: Render on a black background, shape (H, W, 3)
        alpha: Accumulated opacity, shape (H, W)
        background: New background, shape (H, W, 3) or (3,)

    Returns:
        Composited image, shape (H, W, 3), clipped to [0, 1]
    """
    rgb = np.asarray(rgb, dtype=np.float64)
    alpha = np.asarray(alpha, dtype=np.float64)
    background = np.asarray(background, dtype=np.float64)
    if rgb.shape[:2] != alpha.shape:
        raise ValueError(f"rgb {rgb.shape} and alpha {alpha.shape} sizes differ")
    if background.ndim == 3 and background.shape != rgb.shape:
        raise ValueError(f"Background shape {background.shape} does not match {rgb.shape}")
    return np.clip(rgb + (1.0 - alpha)[..., None] * background, 0.0, 1.0)
