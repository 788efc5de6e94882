"""Three-phase orchestration: foreground, composite, background.

Every run is a pure function of its ``PipelineConfig``: all randomness is
derived from the config seed through fixed spawn keys, so a config snapshot
re-runs to bit-identical outputs on the toy backend.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from PIL import Image

from . import masks as masks_mod
from . import ntc
from .attention import AttentionHook, normalize01, resize_bilinear
from .backend import Conditioning, ToyBackend, run_denoise
from .core import RandomSource, crop_step, gaussian_blur, load_buffer, sample_gaussian, save_buffer
from .masks import BoxSpec
from .ntc import SeedlingBundle

MAX_BOXES = 8

# fixed spawn keys so every phase draws from an independent, reproducible stream
_KEY_FRESH_COMPOSITE = 3
_KEY_FRESH_BACKGROUND = 4


def _key_init(box_index: int) -> int:
    return 100 + 2 * box_index


def _key_boxmask(box_index: int) -> int:
    return 101 + 2 * box_index


class ConfigError(ValueError):
    """Invalid or unknown pipeline configuration fields."""


@dataclass(frozen=True)
class PipelineConfig:
    prompt_fg: str | list = "an object"
    prompt_bg: str = "a background"
    prompt_all: Optional[str] = None  # defaults to "fg, bg" when absent
    boxes: tuple = ()
    alpha: float = 0.8
    lambda_: float = 1.0
    sigma_blur: float = 1.0
    tau_bg: Optional[float] = None  # None: 30th percentile of the activation map
    tau_attn: float = 0.3
    r_crop: float = 0.5
    steps: int = 50
    guidance_fg: float = 7.5
    guidance_other: float = 5.0
    seed: int = 0
    highpass: bool = True
    mask_postprocess: bool = True
    recompute_mask: bool = False
    backend: str = "toy"
    backend_options: tuple = ()  # sorted (key, value) pairs, kept hashable
    width: int = 1024
    height: int = 1024
    contraction: float = 0.2
    feather_radius: float = 2.0

    def __post_init__(self):
        if self.width % 8 or self.height % 8:
            raise ConfigError("image width/height must be multiples of 8")
        if not self.prompt_fg or not self.prompt_bg:
            raise ConfigError("prompts must be non-empty")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"alpha must be in [0, 1], got {self.alpha}")
        if self.lambda_ < 0:
            raise ConfigError(f"lambda must be >= 0, got {self.lambda_}")
        if not 0.0 <= self.r_crop <= 1.0:
            raise ConfigError(f"r_crop must be in [0, 1], got {self.r_crop}")
        if self.steps < 2:
            raise ConfigError(f"steps must be >= 2, got {self.steps}")
        if len(self.boxes) > MAX_BOXES:
            raise ConfigError(f"at most {MAX_BOXES} boxes supported, got {len(self.boxes)}")

    @property
    def latent_height(self) -> int:
        return self.height // 8

    @property
    def latent_width(self) -> int:
        return self.width // 8

    @property
    def composite_prompt(self) -> str:
        if self.prompt_all:
            return self.prompt_all
        fg = self.prompt_fg if isinstance(self.prompt_fg, str) else ", ".join(self.prompt_fg)
        return f"{fg}, {self.prompt_bg}"

    def fg_prompts(self) -> list:
        """One foreground prompt per box (a single string broadcasts)."""
        n = max(1, len(self.boxes))
        if isinstance(self.prompt_fg, str):
            return [self.prompt_fg] * n
        prompts = list(self.prompt_fg)
        if len(prompts) != n:
            raise ConfigError(f"{len(prompts)} foreground prompts for {n} boxes")
        return prompts

    def to_dict(self) -> dict:
        d = {
            "prompt_fg": self.prompt_fg if isinstance(self.prompt_fg, str) else list(self.prompt_fg),
            "prompt_bg": self.prompt_bg,
            "prompt_all": self.prompt_all,
            "boxes": [
                {"cx": b.cx, "cy": b.cy, "w": b.w, "h": b.h,
                 "sigma_box": b.sigma_box, "p_min": b.p_min, "p_max": b.p_max}
                for b in self.boxes
            ],
            "alpha": self.alpha,
            "lambda": self.lambda_,
            "sigma_blur": self.sigma_blur,
            "tau_bg": self.tau_bg,
            "tau_attn": self.tau_attn,
            "r_crop": self.r_crop,
            "steps": self.steps,
            "guidance_fg": self.guidance_fg,
            "guidance_other": self.guidance_other,
            "seed": self.seed,
            "highpass": self.highpass,
            "mask_postprocess": self.mask_postprocess,
            "recompute_mask": self.recompute_mask,
            "backend": self.backend,
            "backend_options": dict(self.backend_options),
            "width": self.width,
            "height": self.height,
            "contraction": self.contraction,
            "feather_radius": self.feather_radius,
        }
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        d = dict(d)
        known = set(cls.__dataclass_fields__) | {"lambda"} - {"lambda_"}
        unknown = [k for k in d if k not in known and k != "lambda_"]
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        if "lambda" in d:
            d["lambda_"] = d.pop("lambda")
        if "boxes" in d:
            boxes = []
            for i, b in enumerate(d["boxes"]):
                extra = set(b) - {"cx", "cy", "w", "h", "sigma_box", "p_min", "p_max"}
                if extra:
                    raise ConfigError(f"unknown box fields at boxes[{i}]: {sorted(extra)}")
                boxes.append(BoxSpec(**b))
            d["boxes"] = tuple(boxes)
        if "backend_options" in d and isinstance(d["backend_options"], dict):
            d["backend_options"] = tuple(sorted(d["backend_options"].items()))
        try:
            return cls(**d)
        except TypeError as e:
            raise ConfigError(str(e)) from e


class BackendError(RuntimeError):
    """Backend failure tagged with the phase it occurred in."""

    def __init__(self, phase: str, cause: Exception):
        super().__init__(f"[{phase}] {cause}")
        self.phase = phase
        self.cause = cause


def make_backend(cfg: PipelineConfig):
    opts = dict(cfg.backend_options)
    if cfg.backend == "toy":
        return ToyBackend(cfg.latent_height, cfg.latent_width, cfg.steps,
                          contraction=cfg.contraction,
                          supports_hooks=bool(opts.get("supports_hooks", True)))
    if cfg.backend == "ldm":
        raise BackendError("setup", RuntimeError(
            "no LDM adapter is bundled; install one exposing the DenoiserBackend "
            "contract (external initial latent, per-step noise override, "
            "cross-attention interception) and register it here"))
    raise ConfigError(f"unknown backend {cfg.backend!r}")


# Fixed linear decode from 4 latent channels to RGB, so the toy backend has
# images to feed the metrics without a VAE.
DECODE_MATRIX = np.array([
    [0.35, -0.15, 0.10, 0.20],
    [-0.10, 0.30, 0.05, 0.15],
    [0.05, 0.10, 0.30, -0.20],
], dtype=np.float32)


def decode_latent(z: np.ndarray) -> np.ndarray:
    """Map a (4, h, w) latent to an (8h, 8w, 3) uint8 image (nearest upsample)."""
    rgb = np.tensordot(DECODE_MATRIX, z, axes=(1, 0))  # (3, h, w)
    rgb = np.clip(0.5 + rgb, 0.0, 1.0)
    rgb = np.kron(rgb, np.ones((1, 8, 8), dtype=np.float32))
    return np.round(rgb.transpose(1, 2, 0) * 255.0).astype(np.uint8)


def default_box(cfg: PipelineConfig) -> BoxSpec:
    """Centered box covering half the grid, used when no layout is given."""
    h, w = cfg.latent_height, cfg.latent_width
    return BoxSpec(cx=(w - 1) / 2.0, cy=(h - 1) / 2.0, w=w / 2.0, h=h / 2.0)


def _boxes(cfg: PipelineConfig) -> list:
    if not cfg.boxes:
        raise ConfigError("at least one box is required")
    return list(cfg.boxes)


def generate_foreground(cfg: PipelineConfig, backend, box: Optional[BoxSpec] = None,
                        box_index: int = 0, prompt: Optional[str] = None,
                        on_step=None):
    """Phase 1: green-blended init, vanilla denoise, seedling extraction."""
    box = box or _boxes(cfg)[box_index]
    prompt = prompt or cfg.fg_prompts()[box_index]
    rng = RandomSource(cfg.seed)
    shape = (4, cfg.latent_height, cfg.latent_width)
    z_t = sample_gaussian(shape, rng.spawn(_key_init(box_index)))
    p_map = masks_mod.retention_map([box], cfg.latent_height, cfg.latent_width)
    box_mask = masks_mod.sample_box_mask(p_map, rng.spawn(_key_boxmask(box_index)))
    z_init = ntc.blend_green(z_t, box_mask, cfg.alpha)
    t_crop = crop_step(cfg.steps, cfg.r_crop)
    cond = Conditioning(prompt=prompt, guidance=cfg.guidance_fg)
    try:
        z_final, traj = run_denoise(backend, z_init, cfg.steps, cond,
                                    record={t_crop}, on_step=on_step)
    except Exception as e:  # noqa: BLE001 - tag with phase and rethrow
        raise BackendError("foreground", e) from e
    bundle = ntc.extract_seedling(traj, t_crop, phase="foreground")
    return decode_latent(z_final), bundle, box_mask


def localize_object(cfg: PipelineConfig, backend, bundle: SeedlingBundle,
                    box: BoxSpec, prompt: str) -> np.ndarray:
    """Object mask from green activation + foreground attention, confined to
    the box support (optionally closed + largest-component filtered)."""
    h, w = cfg.latent_height, cfg.latent_width
    v_gb = masks_mod.activation_map(bundle.latent, cfg.sigma_blur)
    tau_bg = cfg.tau_bg if cfg.tau_bg is not None else float(np.percentile(v_gb, 30.0))
    attn = normalize01(resize_bilinear(backend.aggregated_attention(prompt), h, w))
    m = masks_mod.object_mask(v_gb, attn, tau_bg, cfg.tau_attn)
    m = m * box.support(h, w)
    if cfg.mask_postprocess:
        m = masks_mod.postprocess_mask(m, [box], h, w)
    if not m.any():
        warnings.warn("object mask is empty; proceeding with a scene without "
                      "a detected object", stacklevel=2)
    return m


def _composite_cond_and_hook(cfg: PipelineConfig, backend, m_obj: np.ndarray,
                             prompt_fg: str):
    """Dual conditioning with attention blending when the backend supports it;
    otherwise single-prompt fallback on the composite prompt."""
    if getattr(backend, "supports_hooks", False):
        cond = Conditioning(prompt=prompt_fg, guidance=cfg.guidance_other,
                            bg_prompt=cfg.prompt_bg)
        return cond, AttentionHook(m_obj)
    return Conditioning(prompt=cfg.composite_prompt, guidance=cfg.guidance_other), None


def generate_composite(cfg: PipelineConfig, backend, fg_bundle: SeedlingBundle,
                       m_obj: Optional[np.ndarray] = None, box: Optional[BoxSpec] = None,
                       on_step=None):
    """Phase 2: transplant the foreground seedling and cultivate a full scene."""
    box = box or _boxes(cfg)[0]
    prompt_fg = cfg.fg_prompts()[0]
    if m_obj is None:
        m_obj = localize_object(cfg, backend, fg_bundle, box, prompt_fg)
    elif not np.asarray(m_obj).any():
        warnings.warn("object mask is empty; proceeding with a scene without "
                      "a detected object", stacklevel=2)
    rng = RandomSource(cfg.seed)
    shape = (4, cfg.latent_height, cfg.latent_width)
    z_fresh = sample_gaussian(shape, rng.spawn(_KEY_FRESH_COMPOSITE))
    z_init = ntc.composite_init(fg_bundle, m_obj, cfg.lambda_, z_fresh,
                                highpass=cfg.highpass)
    t_crop = crop_step(cfg.steps, cfg.r_crop)
    cond, hook = _composite_cond_and_hook(cfg, backend, m_obj, prompt_fg)

    def override(n_t, t):
        return ntc.pin_noise_fg(n_t, fg_bundle, m_obj, t)

    try:
        z_final, traj = run_denoise(backend, z_init, cfg.steps, cond,
                                    noise_override=override, hook=hook,
                                    record={t_crop}, on_step=on_step)
    except Exception as e:  # noqa: BLE001
        raise BackendError("composite", e) from e
    bundle = ntc.extract_seedling(traj, t_crop, phase="composite", mask=m_obj)
    return decode_latent(z_final), bundle


def generate_background(cfg: PipelineConfig, backend, comp_bundle: SeedlingBundle,
                        on_step=None) -> np.ndarray:
    """Phase 3: regenerate the background from the composite seedling."""
    if comp_bundle.phase != "composite":
        raise ValueError("background phase needs a composite-phase bundle")
    m_obj = comp_bundle.mask
    if m_obj is None:
        raise ValueError("composite bundle is missing its object mask")
    rng = RandomSource(cfg.seed)
    shape = (4, cfg.latent_height, cfg.latent_width)
    z_fresh = sample_gaussian(shape, rng.spawn(_KEY_FRESH_BACKGROUND))
    z_init = ntc.background_init(comp_bundle, m_obj, cfg.lambda_, z_fresh)
    cond = Conditioning(prompt=cfg.prompt_bg, guidance=cfg.guidance_other)

    def override(n_t, t):
        return ntc.pin_noise_bg(n_t, comp_bundle, m_obj, t)

    try:
        z_final, _ = run_denoise(backend, z_init, cfg.steps, cond,
                                 noise_override=override, on_step=on_step)
    except Exception as e:  # noqa: BLE001
        raise BackendError("background", e) from e
    return decode_latent(z_final)


def extract_rgba_foreground(image: np.ndarray, m_obj: np.ndarray,
                            feather_radius: float = 2.0) -> np.ndarray:
    """RGBA layer: color from the foreground image, alpha from the feathered
    (x8 bilinear upsampled, Gaussian-blurred) object mask."""
    image = np.asarray(image)
    h, w = image.shape[0], image.shape[1]
    alpha = resize_bilinear(np.asarray(m_obj, dtype=np.float32), h, w)
    if feather_radius > 0:
        alpha = gaussian_blur(alpha, feather_radius)
    alpha = np.clip(alpha, 0.0, 1.0)
    out = np.dstack([image[:, :, :3], np.round(alpha * 255.0).astype(np.uint8)])
    return out


@dataclass
class LayerSet:
    foreground: np.ndarray  # (H, W, 4) uint8
    background: np.ndarray  # (H, W, 3) uint8
    composite: np.ndarray   # (H, W, 3) uint8
    m_obj: np.ndarray       # latent-resolution binary map
    box_mask: np.ndarray    # latent-resolution binary map
    config: PipelineConfig
    fg_bundles: list = field(default_factory=list)
    comp_bundle: Optional[SeedlingBundle] = None
    metadata: dict = field(default_factory=dict)

    def save(self, directory) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        Image.fromarray(self.foreground, mode="RGBA").save(directory / "foreground.png")
        Image.fromarray(self.background, mode="RGB").save(directory / "background.png")
        Image.fromarray(self.composite, mode="RGB").save(directory / "composite.png")
        Image.fromarray(self.m_obj > 0.5).save(directory / "object_mask.png")
        Image.fromarray(self.box_mask > 0.5).save(directory / "box_mask.png")
        save_buffer(directory / "object_mask.taue", self.m_obj[None, :, :])
        save_buffer(directory / "box_mask.taue", self.box_mask[None, :, :])
        doc = {"config": self.config.to_dict(), "metadata": self.metadata}
        (directory / "metadata.json").write_text(json.dumps(doc, indent=2))
        for i, b in enumerate(self.fg_bundles):
            b.save(directory / f"fg_bundle_{i}")
        if self.comp_bundle is not None:
            self.comp_bundle.save(directory / "comp_bundle")

    @classmethod
    def load(cls, directory) -> "LayerSet":
        directory = Path(directory)
        doc = json.loads((directory / "metadata.json").read_text())
        fg_bundles = []
        i = 0
        while (directory / f"fg_bundle_{i}").exists():
            fg_bundles.append(SeedlingBundle.load(directory / f"fg_bundle_{i}"))
            i += 1
        comp = None
        if (directory / "comp_bundle").exists():
            comp = SeedlingBundle.load(directory / "comp_bundle")
        return cls(
            foreground=np.asarray(Image.open(directory / "foreground.png")),
            background=np.asarray(Image.open(directory / "background.png")),
            composite=np.asarray(Image.open(directory / "composite.png")),
            m_obj=load_buffer(directory / "object_mask.taue")[0],
            box_mask=load_buffer(directory / "box_mask.taue")[0],
            config=PipelineConfig.from_dict(doc["config"]),
            fg_bundles=fg_bundles,
            comp_bundle=comp,
            metadata=doc["metadata"],
        )


def generate_layers(cfg: PipelineConfig, backend=None, on_step=None) -> LayerSet:
    """Run all three phases (dispatching to the multi-object path when more
    than one box is configured) and assemble the LayerSet."""
    boxes = _boxes(cfg)
    if len(boxes) > 1:
        return place_multi_objects(cfg, backend, on_step=on_step)
    backend = backend or make_backend(cfg)
    box = boxes[0]
    i_fg, fg_bundle, box_mask = generate_foreground(cfg, backend, box=box,
                                                    on_step=on_step)
    m_obj = localize_object(cfg, backend, fg_bundle, box, cfg.fg_prompts()[0])
    i_all, comp_bundle = generate_composite(cfg, backend, fg_bundle, m_obj=m_obj,
                                            box=box, on_step=on_step)
    i_bg = generate_background(cfg, backend, comp_bundle, on_step=on_step)
    rgba = extract_rgba_foreground(i_fg, m_obj, cfg.feather_radius)
    meta = {"t_crop": fg_bundle.step, "n_boxes": 1,
            "overlap_rule": "first-listed box wins"}
    return LayerSet(foreground=rgba, background=i_bg, composite=i_all,
                    m_obj=m_obj, box_mask=box_mask, config=cfg,
                    fg_bundles=[fg_bundle], comp_bundle=comp_bundle, metadata=meta)


def place_multi_objects(cfg: PipelineConfig, backend=None, on_step=None) -> LayerSet:
    """One foreground trajectory per box, composed into a single composite
    init by per-box masked insertion (first-listed box wins on overlap)."""
    boxes = _boxes(cfg)
    if len(boxes) == 1:
        return generate_layers(cfg, backend, on_step=on_step)
    backend = backend or make_backend(cfg)
    prompts = cfg.fg_prompts()
    h, w = cfg.latent_height, cfg.latent_width
    shape = (4, h, w)

    fg_images, fg_bundles, fg_box_masks, obj_masks = [], [], [], []
    for i, box in enumerate(boxes):
        i_fg, bundle, bm = generate_foreground(cfg, backend, box=box, box_index=i,
                                               prompt=prompts[i], on_step=on_step)
        fg_images.append(i_fg)
        fg_bundles.append(bundle)
        fg_box_masks.append(bm)
        obj_masks.append(localize_object(cfg, backend, bundle, box, prompts[i]))

    # first-wins composition of per-box object regions
    claimed = np.zeros((h, w), dtype=np.float32)
    regions = []
    for m in obj_masks:
        region = m * (1.0 - claimed)
        regions.append(region)
        claimed = np.maximum(claimed, m)
    union = claimed

    rng = RandomSource(cfg.seed)
    z_fresh = sample_gaussian(shape, rng.spawn(_KEY_FRESH_COMPOSITE))
    t_crop = crop_step(cfg.steps, cfg.r_crop)

    seed_map = np.zeros(shape, dtype=np.float32)
    pin_map = np.zeros(shape, dtype=np.float32)
    for bundle, region in zip(fg_bundles, regions):
        src = ntc.composite_init(bundle, region, cfg.lambda_, np.zeros(shape, np.float32),
                                 highpass=cfg.highpass)
        seed_map += region[None] * src
        pin_map += region[None] * bundle.noise
    z_init = (union[None] * seed_map + (1.0 - union[None]) * z_fresh).astype(np.float32)

    def override(n_t, t):
        if t < t_crop:
            return n_t
        return (union[None] * pin_map + (1.0 - union[None]) * n_t).astype(np.float32)

    cond, hook = _composite_cond_and_hook(cfg, backend, union, prompts[0])
    try:
        z_final, traj = run_denoise(backend, z_init, cfg.steps, cond,
                                    noise_override=override, hook=hook,
                                    record={t_crop}, on_step=on_step)
    except Exception as e:  # noqa: BLE001
        raise BackendError("composite", e) from e
    comp_bundle = ntc.extract_seedling(traj, t_crop, phase="composite", mask=union)
    i_all = decode_latent(z_final)
    i_bg = generate_background(cfg, backend, comp_bundle, on_step=on_step)

    # foreground layer: per-region colors from each box's own foreground image
    fg_rgb = np.zeros_like(fg_images[0])
    remaining = np.ones((cfg.height, cfg.width), dtype=bool)
    for img, region in zip(fg_images, regions):
        up = np.kron(region, np.ones((8, 8), np.float32)) > 0.5
        take = up & remaining
        fg_rgb[take] = img[take]
        remaining &= ~up
    fg_rgb[remaining] = fg_images[0][remaining]
    rgba = extract_rgba_foreground(fg_rgb, union, cfg.feather_radius)

    box_mask_union = np.clip(np.sum(fg_box_masks, axis=0), 0.0, 1.0).astype(np.float32)
    meta = {"t_crop": t_crop, "n_boxes": len(boxes),
            "overlap_rule": "first-listed box wins"}
    return LayerSet(foreground=rgba, background=i_bg, composite=i_all,
                    m_obj=union, box_mask=box_mask_union, config=cfg,
                    fg_bundles=fg_bundles, comp_bundle=comp_bundle, metadata=meta)


def shift_bundle(bundle: SeedlingBundle, dy: int, dx: int,
                 mask: np.ndarray) -> tuple[SeedlingBundle, np.ndarray]:
    """Translate a seedling and its mask by whole latent pixels (zero fill)."""
    def shift2(a):
        out = np.zeros_like(a)
        sy, sx = a.shape[-2:]
        ys = slice(max(dy, 0), sy + min(dy, 0))
        xs = slice(max(dx, 0), sx + min(dx, 0))
        yo = slice(max(-dy, 0), sy + min(-dy, 0))
        xo = slice(max(-dx, 0), sx + min(-dx, 0))
        out[..., ys, xs] = a[..., yo, xo]
        return out

    shifted = SeedlingBundle(latent=shift2(bundle.latent), noise=shift2(bundle.noise),
                             step=bundle.step, phase=bundle.phase,
                             mask=None if bundle.mask is None else shift2(bundle.mask))
    return shifted, shift2(np.asarray(mask, dtype=np.float32))


def replace_background(layer_set: LayerSet, new_prompt_bg: str,
                       overrides: Optional[dict] = None, backend=None,
                       on_step=None) -> LayerSet:
    """Re-run phases 2-3 with a new background prompt, reusing the stored
    foreground bundle unchanged.  A new box center translates the transplant."""
    if not layer_set.fg_bundles:
        raise ValueError("no persisted foreground bundle to reuse")
    if len(layer_set.fg_bundles) > 1:
        raise ValueError("background replacement currently supports one box")
    overrides = dict(overrides or {})
    cfg_dict = layer_set.config.to_dict()
    cfg_dict["prompt_bg"] = new_prompt_bg
    cfg_dict["prompt_all"] = None
    new_boxes = overrides.pop("boxes", None)
    for k, v in overrides.items():
        cfg_dict[k] = v
    if new_boxes is not None:
        cfg_dict["boxes"] = new_boxes
    cfg = PipelineConfig.from_dict(cfg_dict)
    backend = backend or make_backend(cfg)

    bundle = layer_set.fg_bundles[0]
    m_obj = layer_set.m_obj
    old_box = _boxes(layer_set.config)[0]
    box = _boxes(cfg)[0]
    dy, dx = int(round(box.cy - old_box.cy)), int(round(box.cx - old_box.cx))
    if dy or dx:
        bundle, m_obj = shift_bundle(bundle, dy, dx, m_obj)

    i_all, comp_bundle = generate_composite(cfg, backend, bundle, m_obj=m_obj,
                                            box=box, on_step=on_step)
    i_bg = generate_background(cfg, backend, comp_bundle, on_step=on_step)
    rgba = extract_rgba_foreground(layer_set.foreground[:, :, :3], m_obj,
                                   cfg.feather_radius)
    meta = dict(layer_set.metadata)
    meta.update({"replaced_background": True, "offset": [dy, dx]})
    return LayerSet(foreground=rgba, background=i_bg, composite=i_all,
                    m_obj=m_obj, box_mask=layer_set.box_mask, config=cfg,
                    fg_bundles=[bundle], comp_bundle=comp_bundle, metadata=meta)


def rerun_from_snapshot(snapshot: dict, backend=None) -> LayerSet:
    """Re-create a LayerSet from a saved config snapshot (reproducibility)."""
    return generate_layers(PipelineConfig.from_dict(snapshot), backend)
