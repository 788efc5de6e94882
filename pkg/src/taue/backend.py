"""Denoiser backend contract plus the deterministic toy backend.

The toy backend contracts each latent location toward a prompt-keyed target
at a fixed rate, so trajectories have a closed form and every prediction is
spatially local — perturbing one location never leaks into its neighbors.
That locality is what makes the region-isolation checks exact.

A real latent-diffusion adapter plugs in behind the same contract: it must
accept an externally supplied initial latent, expose a per-step noise
override, and (if it supports hooks) intercept cross-attention layers with
both prompt conditionings computed.  Adapter settings (model id, device,
precision) live in the config's backend section and never leak into core
modules.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .attention import normalize01
from .core import RandomSource, gaussian_blur, validate_latent


class CapabilityError(RuntimeError):
    """A job asked for a feature the backend does not support."""


@dataclass(frozen=True)
class Conditioning:
    prompt: str
    guidance: float = 7.5
    bg_prompt: Optional[str] = None  # set for dual-prompt attention blending

    def __post_init__(self):
        if self.guidance < 0:
            raise ValueError(f"guidance must be >= 0, got {self.guidance}")


def prompt_seed(prompt: str) -> int:
    """Stable 63-bit seed from a prompt string (same prompt, same target)."""
    digest = hashlib.sha256(prompt.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little") & 0x7FFFFFFFFFFFFFFF


class ToyBackend:
    """Contraction-map denoiser: prediction = k * (z - target(prompt))."""

    def __init__(self, height: int, width: int, total_steps: int = 20,
                 contraction: float = 0.2, supports_hooks: bool = True):
        if not 0.0 < contraction < 1.0:
            raise ValueError(f"contraction must be in (0, 1), got {contraction}")
        if total_steps < 2:
            raise ValueError(f"total_steps must be >= 2, got {total_steps}")
        self.height = height
        self.width = width
        self.total_steps = total_steps
        self.contraction = contraction
        self.supports_hooks = supports_hooks
        self.supports_dual = supports_hooks
        self._targets: dict[str, np.ndarray] = {}

    def target(self, prompt: str) -> np.ndarray:
        if prompt not in self._targets:
            rng = RandomSource(prompt_seed(prompt))
            self._targets[prompt] = rng.normal((4, self.height, self.width))
        return self._targets[prompt]

    def predict_noise(self, z: np.ndarray, t: int, cond: Conditioning,
                      hook=None) -> np.ndarray:
        z = validate_latent(z)
        if hook is not None and not self.supports_hooks:
            raise CapabilityError("toy backend instance has attention hooks disabled")
        n_fg = self.contraction * (z - self.target(cond.prompt))
        if hook is None or cond.bg_prompt is None:
            return n_fg.astype(np.float32)
        n_bg = self.contraction * (z - self.target(cond.bg_prompt))
        # single pseudo attention layer; features laid out (h, w, d) for the hook
        blended = hook("toy.attn0", n_fg.transpose(1, 2, 0), n_bg.transpose(1, 2, 0))
        return np.asarray(blended, dtype=np.float32).transpose(2, 0, 1)

    def scheduler_step(self, z_t: np.ndarray, n_t: np.ndarray, t: int) -> np.ndarray:
        if t < 1:
            raise ValueError("trajectory complete: no step below t=1")
        return (z_t - n_t).astype(np.float32)

    def token_maps(self, prompt: str) -> list[np.ndarray]:
        """Pseudo per-token attention maps for aggregation (one per word)."""
        tokens = prompt.split() or [prompt]
        maps = []
        for tok in tokens:
            tgt = self.target(tok if len(tokens) > 1 else prompt)
            maps.append(gaussian_blur(np.abs(tgt).sum(axis=0), 1.0))
        return maps

    def aggregated_attention(self, prompt: str) -> np.ndarray:
        """Token-aggregated map in [0, 1] for object localization."""
        return normalize01(np.mean(self.token_maps(prompt), axis=0))


def run_denoise(backend, z_init: np.ndarray, total_steps: int, cond: Conditioning,
                noise_override: Optional[Callable[[np.ndarray, int], np.ndarray]] = None,
                hook=None, record=(), on_step: Optional[Callable[[int], None]] = None):
    """Reverse loop from t = T down to 1: predict, override, step.

    At each recorded step the pre-override latent and the raw prediction are
    cached (copies, never aliases).  Returns (final latent, trajectory dict
    mapping step -> (latent, noise)).
    """
    z = validate_latent(z_init).copy()
    record = set(record)
    bad = [t for t in record if not 0 <= t <= total_steps]
    if bad:
        raise ValueError(f"record steps out of [0, {total_steps}]: {bad}")
    # fail eagerly, never mid-trajectory
    if hook is not None and not getattr(backend, "supports_hooks", False):
        raise CapabilityError("backend does not support attention hooks")
    if cond.bg_prompt is not None and hook is not None \
            and not getattr(backend, "supports_dual", False):
        raise CapabilityError("backend does not support dual conditioning")

    trajectory: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    for t in range(total_steps, 0, -1):
        n = backend.predict_noise(z, t, cond, hook)
        if t in record:
            trajectory[t] = (z.copy(), n.copy())
        if noise_override is not None:
            n = noise_override(n, t)
            if n.shape != z.shape:
                raise ValueError(f"noise override returned shape {n.shape}, "
                                 f"expected {z.shape}")
        z = backend.scheduler_step(z, n, t)
        if on_step is not None:
            on_step(t)
    if 0 in record:
        trajectory[0] = (z.copy(), np.zeros_like(z))
    return z, trajectory
