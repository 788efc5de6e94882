"""Latent tensors, seeded randomness, timestep arithmetic and spatial filters.

Latents are plain ``numpy.float32`` arrays of shape ``(4, H, W)`` — four
feature channels at 1/8 of the image resolution.  Everything in this module is
a pure function of its inputs (plus the explicit random source), so identical
seeds reproduce identical results bit for bit.
"""

from __future__ import annotations

import math
import struct

import numpy as np
from scipy import ndimage

LATENT_CHANNELS = 4

#: serialized latent buffer: magic, format version, then C, H, W (all little
#: endian u32) followed by C*H*W float32 values.  20 header bytes total.
BUFFER_MAGIC = b"TAUE"
BUFFER_VERSION = 1
_HEADER = struct.Struct("<4sIIII")


class LatentShapeError(ValueError):
    """Raised when an array does not satisfy the latent layout contract."""


def validate_latent(z: np.ndarray) -> np.ndarray:
    """Check the (4, H, W) layout and finiteness; returns a float view.

    float64 input stays float64 so callers can trade speed for precision;
    everything else is cast to the float32 working dtype.
    """
    z = np.asarray(z)
    if z.ndim != 3:
        raise LatentShapeError(f"latent must be 3-D (C,H,W), got ndim={z.ndim}")
    c, h, w = z.shape
    if c != LATENT_CHANNELS:
        raise LatentShapeError(f"latent must have {LATENT_CHANNELS} channels, got {c}")
    if h < 1 or w < 1:
        raise LatentShapeError(f"latent spatial dims must be >= 1, got {h}x{w}")
    if not np.all(np.isfinite(z)):
        raise LatentShapeError("latent contains non-finite values")
    if z.dtype == np.float64:
        return z
    return z.astype(np.float32, copy=False)


class RandomSource:
    """Seeded sample stream; same seed + same call sequence = same bits."""

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    def normal(self, shape) -> np.ndarray:
        return self._gen.standard_normal(shape, dtype=np.float32)

    def uniform(self, shape) -> np.ndarray:
        # uniform on [0, 1)
        return self._gen.random(shape, dtype=np.float32)

    def spawn(self, key: int) -> "RandomSource":
        """Independent child stream, reproducible from (seed, key)."""
        return RandomSource((self.seed * 1_000_003 + int(key)) & 0x7FFFFFFFFFFFFFFF)


def sample_gaussian(shape, rng: RandomSource) -> np.ndarray:
    """Draw i.i.d. standard-normal initial noise with the latent layout."""
    c, h, w = shape
    if c != LATENT_CHANNELS or h < 1 or w < 1:
        raise LatentShapeError(f"invalid latent shape {shape}")
    return validate_latent(rng.normal((c, h, w)))


def crop_step(total_steps: int, r_crop: float) -> int:
    """Step index at which a given fraction of denoising has completed.

    floor(T * (1 - r_crop)) on the descending step axis (step T is pure
    noise, step 0 is clean).
    """
    if total_steps < 2:
        raise ValueError(f"total_steps must be >= 2, got {total_steps}")
    if not 0.0 <= r_crop <= 1.0:
        raise ValueError(f"r_crop must be in [0, 1], got {r_crop}")
    # tiny epsilon guards against 50*0.7 = 34.999... style float droop
    return int(math.floor(total_steps * (1.0 - r_crop) + 1e-9))


def gaussian_kernel_1d(sigma: float) -> np.ndarray:
    """Discretized 1-D Gaussian, truncated at 3*sigma, renormalized to sum 1."""
    if sigma <= 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    radius = max(1, int(math.ceil(3.0 * sigma)))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return (k / k.sum()).astype(np.float32)


def gaussian_blur(arr: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian blur of a 2-D map with replicate boundary handling."""
    arr = np.asarray(arr, dtype=np.float32)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D map, got ndim={arr.ndim}")
    k = gaussian_kernel_1d(sigma)
    out = ndimage.correlate1d(arr, k, axis=0, mode="nearest")
    out = ndimage.correlate1d(out, k, axis=1, mode="nearest")
    return out


_LAPLACIAN = np.array([[0, 1, 0], [1, -4, 1], [0, 1, 0]], dtype=np.float32)


def laplacian_highpass(z: np.ndarray) -> np.ndarray:
    """Per-channel 4-neighbor Laplacian with replicate padding.

    Removes the per-channel DC component: constants map to exactly zero.
    """
    z = validate_latent(z)
    out = np.empty_like(z)
    for c in range(z.shape[0]):
        out[c] = ndimage.correlate(z[c], _LAPLACIAN, mode="nearest")
    return out


def save_buffer(path, arr: np.ndarray) -> None:
    """Write a (C, H, W) float32 array in the flat little-endian buffer format."""
    arr = np.asarray(arr, dtype=np.float32)
    if arr.ndim != 3:
        raise ValueError(f"buffer format stores 3-D arrays, got ndim={arr.ndim}")
    c, h, w = arr.shape
    with open(path, "wb") as f:
        f.write(_HEADER.pack(BUFFER_MAGIC, BUFFER_VERSION, c, h, w))
        f.write(arr.astype("<f4").tobytes())


def load_buffer(path) -> np.ndarray:
    with open(path, "rb") as f:
        head = f.read(_HEADER.size)
        if len(head) != _HEADER.size:
            raise ValueError(f"{path}: truncated header")
        magic, version, c, h, w = _HEADER.unpack(head)
        if magic != BUFFER_MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}")
        if version != BUFFER_VERSION:
            raise ValueError(f"{path}: unsupported version {version}")
        data = np.frombuffer(f.read(4 * c * h * w), dtype="<f4")
    if data.size != c * h * w:
        raise ValueError(f"{path}: truncated payload")
    return data.reshape(c, h, w).astype(np.float32)
