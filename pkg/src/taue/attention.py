"""Cross-attention aggregation and mask-driven blending of dual conditionings.

A raw attention tensor is ``(h, w, d)``: attention-layer output features at
the layer's spatial resolution.  An aggregated map is a 2-D array normalized
to [0, 1], used to localize the object region.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage


def normalize01(arr: np.ndarray) -> np.ndarray:
    """Min-max rescale to [0, 1]; a constant map collapses to all zeros."""
    arr = np.asarray(arr, dtype=np.float32)
    lo, hi = float(arr.min()), float(arr.max())
    if hi <= lo:
        return np.zeros_like(arr)
    return (arr - lo) / (hi - lo)


def resize_bilinear(arr: np.ndarray, height: int, width: int) -> np.ndarray:
    arr = np.asarray(arr, dtype=np.float32)
    if arr.shape == (height, width):
        return arr.copy()
    zoom = (height / arr.shape[0], width / arr.shape[1])
    return ndimage.zoom(arr, zoom, order=1, mode="nearest", grid_mode=True)


def resize_nearest(arr: np.ndarray, height: int, width: int) -> np.ndarray:
    arr = np.asarray(arr, dtype=np.float32)
    if arr.shape == (height, width):
        return arr.copy()
    rows = (np.arange(height) * arr.shape[0] // height).clip(0, arr.shape[0] - 1)
    cols = (np.arange(width) * arr.shape[1] // width).clip(0, arr.shape[1] - 1)
    return arr[np.ix_(rows, cols)]


def aggregate_attention(per_token_maps, token_span, height: int, width: int) -> np.ndarray:
    """Token-aggregated map: mean over selected tokens, resized, normalized.

    ``per_token_maps`` holds one 2-D map per prompt token (already averaged
    over whatever heads/layers the backend supplies).
    """
    token_span = list(token_span)
    if not token_span:
        raise ValueError("token_span must be non-empty")
    maps = [np.asarray(per_token_maps[i], dtype=np.float32) for i in token_span]
    mean = np.mean(maps, axis=0)
    return normalize01(resize_bilinear(mean, height, width))


def blend_attention(fg: np.ndarray, bg: np.ndarray, m_obj: np.ndarray) -> np.ndarray:
    """Pixel-wise convex combination: m_obj picks fg features, 1-m_obj picks bg.

    The binary mask is nearest-neighbor resized to the attention resolution
    and broadcast over the trailing feature channels.
    """
    fg = np.asarray(fg)
    bg = np.asarray(bg)
    if fg.dtype != np.float64:
        fg = fg.astype(np.float32)
    if bg.dtype != fg.dtype:
        bg = bg.astype(fg.dtype)
    if fg.shape != bg.shape:
        raise ValueError(f"shape mismatch: {fg.shape} vs {bg.shape}")
    m = resize_nearest(np.asarray(m_obj, dtype=fg.dtype), fg.shape[0], fg.shape[1])
    if fg.ndim == 3:
        m = m[:, :, None]
    return m * fg + (1.0 - m) * bg


class AttentionHook:
    """Per-layer blending callback installed into a denoiser backend.

    Stateless per call: the backend invokes it once per cross-attention layer
    with both conditionings computed; the hook returns the blended features.
    """

    def __init__(self, m_obj: np.ndarray, enabled: bool = True):
        self.m_obj = np.asarray(m_obj, dtype=np.float32)
        self.enabled = enabled

    def __call__(self, layer_id, fg_conditioned, bg_conditioned):
        if fg_conditioned is None or bg_conditioned is None:
            raise ValueError(f"layer {layer_id}: hook requires both conditionings")
        if not self.enabled:
            return np.asarray(fg_conditioned, dtype=np.float32)
        return blend_attention(fg_conditioned, bg_conditioned, self.m_obj)
