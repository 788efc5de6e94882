"""Probabilistic bounding-box masks and object-region extraction.

Two deliberately distinct binary masks live here:

* the box mask ``M`` — 1 marks green-blend (background-tending) locations,
  sampled against the boxed-Gaussian retention score;
* the object mask ``m_obj`` — 1 marks the detected object region, from low
  green-channel activation conjoined with high foreground attention.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .core import RandomSource, gaussian_blur, validate_latent


@dataclass(frozen=True)
class BoxSpec:
    """A bounding box in latent pixels with its retention-score parameters."""

    cx: float
    cy: float
    w: float
    h: float
    sigma_box: float = 0.5
    p_min: float = 0.2
    p_max: float = 0.95

    def validate(self, height: int, width: int) -> None:
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"box extent must be positive, got w={self.w} h={self.h}")
        if not (0.0 <= self.p_min <= self.p_max <= 1.0):
            raise ValueError(f"need 0 <= p_min <= p_max <= 1, got [{self.p_min}, {self.p_max}]")
        if self.sigma_box <= 0:
            raise ValueError(f"sigma_box must be > 0, got {self.sigma_box}")
        if (self.cx + self.w / 2 < 0 or self.cx - self.w / 2 > width - 1
                or self.cy + self.h / 2 < 0 or self.cy - self.h / 2 > height - 1):
            raise ValueError(f"box {self} does not intersect a {height}x{width} grid")

    def support(self, height: int, width: int) -> np.ndarray:
        """Binary map of the grid locations covered by the box."""
        y, x = np.mgrid[0:height, 0:width]
        return ((np.abs(x - self.cx) <= self.w / 2)
                & (np.abs(y - self.cy) <= self.h / 2)).astype(np.float32)


def box_retention(box: BoxSpec, height: int, width: int) -> np.ndarray:
    """Single-box retention score: boxed radial Gaussian rescaled to [p_min, p_max]."""
    y, x = np.mgrid[0:height, 0:width]
    inside = (np.abs(x - box.cx) <= box.w / 2) & (np.abs(y - box.cy) <= box.h / 2)
    u = (x - box.cx) / (box.w / 2.0)
    v = (y - box.cy) / (box.h / 2.0)
    raw = np.exp(-(u * u + v * v) / (2.0 * box.sigma_box ** 2))
    out = np.zeros((height, width), dtype=np.float32)
    if not inside.any():
        return out
    vals = raw[inside]
    lo, hi = float(vals.min()), float(vals.max())
    if hi > lo:
        scaled = box.p_min + (raw - lo) * (box.p_max - box.p_min) / (hi - lo)
    else:
        scaled = np.full_like(raw, box.p_max)
    out[inside] = scaled[inside]
    return out


def retention_map(boxes, height: int, width: int) -> np.ndarray:
    """Pointwise maximum of per-box retention scores; zero outside every box."""
    if not boxes:
        raise ValueError("at least one box is required")
    out = np.zeros((height, width), dtype=np.float32)
    for box in boxes:
        box.validate(height, width)
        np.maximum(out, box_retention(box, height, width), out=out)
    return out


def sample_box_mask(p_map: np.ndarray, rng: RandomSource) -> np.ndarray:
    """Binary mask: 1 where a uniform [0,1) draw exceeds the retention score."""
    p_map = np.asarray(p_map, dtype=np.float32)
    r = rng.uniform(p_map.shape)
    return (r > p_map).astype(np.float32)


def activation_map(seedling: np.ndarray, sigma_blur: float) -> np.ndarray:
    """Smooth green-channel response of a seedling latent.

    Blurs the sum of channels 1 and 2 (0-based) — the channels elevated by
    the green-vector injection — so low values indicate the object region.
    """
    seedling = validate_latent(seedling)
    return gaussian_blur(seedling[1] + seedling[2], sigma_blur)


def object_mask(v_gb: np.ndarray, attn: np.ndarray, tau_bg: float,
                tau_attn: float) -> np.ndarray:
    """Conjunction: low green response AND high foreground attention."""
    v_gb = np.asarray(v_gb, dtype=np.float32)
    attn = np.asarray(attn, dtype=np.float32)
    if v_gb.shape != attn.shape:
        raise ValueError(f"shape mismatch: {v_gb.shape} vs {attn.shape}")
    return ((v_gb < tau_bg) & (attn > tau_attn)).astype(np.float32)


def postprocess_mask(mask: np.ndarray, boxes, height: int, width: int) -> np.ndarray:
    """Morphological closing (3x3, 1 iter) then largest connected component per box."""
    m = np.asarray(mask) > 0.5
    m = ndimage.binary_closing(m, structure=np.ones((3, 3), bool))
    out = np.zeros_like(m)
    labels, n = ndimage.label(m)
    if n == 0:
        return out.astype(np.float32)
    for box in boxes:
        sup = box.support(height, width) > 0.5
        counts = np.bincount(labels[sup & m].ravel(), minlength=n + 1)
        counts[0] = 0
        if counts.max() > 0:
            out |= (labels == counts.argmax()) & sup
    return out.astype(np.float32)
