"""Image preprocessing: bicubic resize, center crop, channel normalization.

Matches the standard dual-encoder evaluation pipeline: the shorter side is
resized to the target resolution with bicubic interpolation, a square
center crop is taken, and channels are normalized with the pretraining
statistics.
"""

from __future__ import annotations

import numpy as np
from PIL import Image

IMAGE_SIZE = 224

# Channel statistics of the CLIP pretraining corpus.
CHANNEL_MEAN = np.array([0.48145466, 0.4578275, 0.40821073], dtype=np.float32)
CHANNEL_STD = np.array([0.26862954, 0.26130258, 0.27577711], dtype=np.float32)


def preprocess(image: Image.Image, size: int = IMAGE_SIZE) -> np.ndarray:
    """PIL image -> float32 CHW array, resized, cropped, and normalized."""
    image = image.convert("RGB")
    width, height = image.size
    scale = size / min(width, height)
    new_size = (max(size, round(width * scale)), max(size, round(height * scale)))
    image = image.resize(new_size, Image.Resampling.BICUBIC)

    left = (image.size[0] - size) // 2
    top = (image.size[1] - size) // 2
    image = image.crop((left, top, left + size, top + size))

    array = np.asarray(image, dtype=np.float32) / 255.0
    array = (array - CHANNEL_MEAN) / CHANNEL_STD
    return array.transpose(2, 0, 1)  # HWC -> CHW


def preprocess_batch(images, size: int = IMAGE_SIZE) -> np.ndarray:
    return np.stack([preprocess(im, size) for im in images])
