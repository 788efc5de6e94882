"""Noise transplantation and cultivation: seedling extraction, phase
initializations, and the pinned-noise blending schedules.

A seedling bundle is the unit moved between phases: the cached intermediate
latent, the raw predicted noise at the crop step, the crop step index, and
(for composite-phase bundles) the object mask that was in force.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .core import laplacian_highpass, load_buffer, save_buffer, validate_latent

#: per-channel green background vector blended into masked regions;
#: channels 1 and 2 at 1, channels 0 and 3 at 0.
GREEN_LATENT = np.array([0.0, 1.0, 1.0, 0.0], dtype=np.float32)


@dataclass(frozen=True)
class SeedlingBundle:
    latent: np.ndarray
    noise: np.ndarray
    step: int
    phase: str  # "foreground" | "composite"
    mask: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.latent.shape != self.noise.shape:
            raise ValueError(f"latent/noise shape mismatch: "
                             f"{self.latent.shape} vs {self.noise.shape}")
        if self.step < 0:
            raise ValueError(f"crop step must be >= 0, got {self.step}")
        if self.phase not in ("foreground", "composite"):
            raise ValueError(f"unknown phase {self.phase!r}")

    def save(self, directory) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        save_buffer(directory / "latent.taue", self.latent)
        save_buffer(directory / "noise.taue", self.noise)
        meta = {"step": self.step, "phase": self.phase, "has_mask": self.mask is not None}
        if self.mask is not None:
            save_buffer(directory / "mask.taue", self.mask[None, :, :])
        (directory / "meta.json").write_text(json.dumps(meta, indent=2))

    @classmethod
    def load(cls, directory) -> "SeedlingBundle":
        directory = Path(directory)
        meta = json.loads((directory / "meta.json").read_text())
        mask = None
        if meta["has_mask"]:
            mask = load_buffer(directory / "mask.taue")[0]
        return cls(latent=load_buffer(directory / "latent.taue"),
                   noise=load_buffer(directory / "noise.taue"),
                   step=int(meta["step"]), phase=meta["phase"], mask=mask)


def blend_green(z: np.ndarray, mask: np.ndarray, alpha: float,
                cgb: np.ndarray = GREEN_LATENT) -> np.ndarray:
    """Mix the green background vector into masked locations of initial noise.

    Unmasked locations are bit-identical to the input.
    """
    z = validate_latent(z)
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    mask = np.asarray(mask, dtype=z.dtype)
    if mask.shape != z.shape[1:]:
        raise ValueError(f"mask shape {mask.shape} does not match latent {z.shape[1:]}")
    cgb = np.asarray(cgb, dtype=z.dtype).reshape(4, 1, 1)
    blended = (1.0 - alpha) * z + alpha * cgb
    m = mask[None, :, :]
    return np.where(m > 0.5, blended, z).astype(z.dtype)


def extract_seedling(trajectory: dict, step: int, phase: str,
                     mask: Optional[np.ndarray] = None) -> SeedlingBundle:
    """Bundle the recorded (latent, noise) pair at the crop step; no recompute."""
    if step not in trajectory:
        raise KeyError(f"step {step} was not recorded in the trajectory")
    latent, noise = trajectory[step]
    return SeedlingBundle(latent=latent.copy(), noise=noise.copy(),
                          step=step, phase=phase, mask=mask)


def composite_init(bundle: SeedlingBundle, m_obj: np.ndarray, lam: float,
                   z_fresh: np.ndarray, highpass: bool = True) -> np.ndarray:
    """Composite-phase initial latent: seedling (optionally high-passed) plus
    scaled crop noise inside the object, fresh noise outside."""
    if bundle.phase != "foreground":
        raise ValueError(f"composite_init needs a foreground bundle, got {bundle.phase}")
    if lam < 0:
        raise ValueError(f"lambda must be >= 0, got {lam}")
    z_fresh = validate_latent(z_fresh)
    m = np.asarray(m_obj, dtype=z_fresh.dtype)[None, :, :]
    seed = laplacian_highpass(bundle.latent) if highpass else bundle.latent
    return (m * (seed + lam * bundle.noise) + (1.0 - m) * z_fresh).astype(z_fresh.dtype)


def background_init(bundle: SeedlingBundle, m_obj: np.ndarray, lam: float,
                    z_fresh: np.ndarray) -> np.ndarray:
    """Background-phase initial latent: composite seedling outside the object,
    fresh noise inside."""
    if bundle.phase != "composite":
        raise ValueError(f"background_init needs a composite bundle, got {bundle.phase}")
    if lam < 0:
        raise ValueError(f"lambda must be >= 0, got {lam}")
    z_fresh = validate_latent(z_fresh)
    m = np.asarray(m_obj, dtype=z_fresh.dtype)[None, :, :]
    return ((1.0 - m) * (bundle.latent + lam * bundle.noise) + m * z_fresh).astype(z_fresh.dtype)


def pin_noise_fg(n_t: np.ndarray, bundle: SeedlingBundle, m_obj: np.ndarray,
                 t: int) -> np.ndarray:
    """While t >= crop step, hold the object region at the cached crop noise."""
    if t < bundle.step:
        return n_t
    m = np.asarray(m_obj, dtype=n_t.dtype)[None, :, :]
    return (m * bundle.noise + (1.0 - m) * n_t).astype(n_t.dtype)


def pin_noise_bg(n_t: np.ndarray, bundle: SeedlingBundle, m_obj: np.ndarray,
                 t: int) -> np.ndarray:
    """While t >= crop step, hold the background region at the cached crop noise."""
    if t < bundle.step:
        return n_t
    m = np.asarray(m_obj, dtype=n_t.dtype)[None, :, :]
    return ((1.0 - m) * bundle.noise + m * n_t).astype(n_t.dtype)
