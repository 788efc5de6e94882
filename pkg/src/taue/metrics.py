"""Region-split reconstruction metrics and benchmark annotation filtering.

Foreground metrics compare the composite against the foreground layer inside
the object mask; background metrics compare the composite against the
background layer outside it.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import ndimage

from .core import gaussian_kernel_1d

log = logging.getLogger(__name__)

PSNR_SENTINEL = 99.0  # identical inputs report this instead of infinity
SSIM_WIN = 11
SSIM_SIGMA = 1.5


def psnr(a: np.ndarray, b: np.ndarray, region: np.ndarray,
         data_range: float = 255.0) -> float:
    """Peak signal-to-noise ratio over the region's pixels only, in dB."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    region = np.asarray(region) > 0.5
    if region.shape != a.shape[:2]:
        raise ValueError(f"region shape {region.shape} does not match {a.shape[:2]}")
    if not region.any():
        raise ValueError("region is empty")
    mse = float(np.mean((a[region] - b[region]) ** 2))
    if mse == 0.0:
        return PSNR_SENTINEL
    return min(PSNR_SENTINEL, 10.0 * np.log10(data_range ** 2 / mse))


def _ssim_map(a: np.ndarray, b: np.ndarray, data_range: float) -> np.ndarray:
    """Local SSIM map for one channel: 11x11 Gaussian window, standard
    stabilizers, replicate boundary."""
    k = gaussian_kernel_1d(SSIM_SIGMA).astype(np.float64)

    def filt(x):
        out = ndimage.correlate1d(x, k, axis=0, mode="nearest")
        return ndimage.correlate1d(out, k, axis=1, mode="nearest")

    c1 = (0.01 * data_range) ** 2
    c2 = (0.03 * data_range) ** 2
    mu_a, mu_b = filt(a), filt(b)
    var_a = filt(a * a) - mu_a ** 2
    var_b = filt(b * b) - mu_b ** 2
    cov = filt(a * b) - mu_a * mu_b
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a ** 2 + mu_b ** 2 + c1) * (var_a + var_b + c2)
    return num / den


def ssim(a: np.ndarray, b: np.ndarray, region: np.ndarray,
         data_range: float = 255.0) -> float:
    """Mean local SSIM over windows whose centers fall in the region."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    region = np.asarray(region) > 0.5
    if int(region.sum()) < SSIM_WIN * SSIM_WIN:
        raise ValueError(f"region smaller than one {SSIM_WIN}x{SSIM_WIN} window")
    if a.ndim == 2:
        a, b = a[:, :, None], b[:, :, None]
    scores = [float(np.mean(_ssim_map(a[:, :, c], b[:, :, c], data_range)[region]))
              for c in range(a.shape[2])]
    return float(np.mean(scores))


@dataclass
class RegionReport:
    psnr_fg: Optional[float] = None
    psnr_bg: Optional[float] = None
    ssim_fg: Optional[float] = None
    ssim_bg: Optional[float] = None
    n_fg: int = 0
    n_bg: int = 0
    flags: list = field(default_factory=list)
    config_ref: Optional[dict] = None

    def to_dict(self) -> dict:
        return {"psnr_fg": self.psnr_fg, "psnr_bg": self.psnr_bg,
                "ssim_fg": self.ssim_fg, "ssim_bg": self.ssim_bg,
                "n_fg": self.n_fg, "n_bg": self.n_bg, "flags": self.flags}


def upsample_mask(m: np.ndarray, factor: int = 8) -> np.ndarray:
    return np.kron(np.asarray(m, dtype=np.float32),
                   np.ones((factor, factor), np.float32))


def region_split_eval(layers) -> RegionReport:
    """Layer-wise reconstruction quality of a LayerSet."""
    i_all = np.asarray(layers.composite)[:, :, :3]
    i_fg = np.asarray(layers.foreground)[:, :, :3]
    i_bg = np.asarray(layers.background)[:, :, :3]
    factor = i_all.shape[0] // layers.m_obj.shape[0]
    fg_region = upsample_mask(layers.m_obj, factor) > 0.5
    bg_region = ~fg_region
    report = RegionReport(n_fg=int(fg_region.sum()), n_bg=int(bg_region.sum()),
                          config_ref=layers.config.to_dict())
    min_px = SSIM_WIN * SSIM_WIN
    if report.n_fg == 0:
        report.flags.append("empty_fg_region")
    else:
        report.psnr_fg = psnr(i_all, i_fg, fg_region)
        if report.n_fg >= min_px:
            report.ssim_fg = ssim(i_all, i_fg, fg_region)
        else:
            report.flags.append("fg_region_below_ssim_window")
    if report.n_bg == 0:
        report.flags.append("empty_bg_region")
    else:
        report.psnr_bg = psnr(i_all, i_bg, bg_region)
        if report.n_bg >= min_px:
            report.ssim_bg = ssim(i_all, i_bg, bg_region)
        else:
            report.flags.append("bg_region_below_ssim_window")
    return report


@dataclass(frozen=True)
class BenchmarkFilter:
    min_bbox_area_ratio: float = 0.03
    exclude_crowd: bool = True

    def __post_init__(self):
        if not 0.0 < self.min_bbox_area_ratio < 1.0:
            raise ValueError(f"area ratio must be in (0, 1), "
                             f"got {self.min_bbox_area_ratio}")


def filter_benchmark(annotations, rules: BenchmarkFilter = BenchmarkFilter()) -> list:
    """Keep annotations that are not crowd-labeled and whose bbox area ratio
    meets the minimum; preserves input order, skips malformed entries."""
    kept = []
    for i, entry in enumerate(annotations):
        try:
            crowd = bool(entry["iscrowd"])
            ratio = float(entry["area_ratio"])
        except (KeyError, TypeError, ValueError) as e:
            log.warning("skipping malformed annotation %d: %s", i, e)
            continue
        if rules.exclude_crowd and crowd:
            continue
        if ratio < rules.min_bbox_area_ratio:
            continue
        kept.append(entry)
    return kept


def load_coco_annotations(path) -> list:
    """Read COCO-style JSON; only bbox/iscrowd/image_id and area ratio are used."""
    doc = json.loads(open(path).read())
    images = {im["id"]: im for im in doc.get("images", [])}
    out = []
    for ann in doc.get("annotations", []):
        entry = {"bbox": ann.get("bbox"), "iscrowd": ann.get("iscrowd", 0),
                 "image_id": ann.get("image_id")}
        if "area_ratio" in ann:
            entry["area_ratio"] = ann["area_ratio"]
        else:
            im = images.get(ann.get("image_id"), {})
            hw = im.get("height", 0) * im.get("width", 0)
            bbox = ann.get("bbox") or [0, 0, 0, 0]
            entry["area_ratio"] = (bbox[2] * bbox[3] / hw) if hw else 0.0
        out.append(entry)
    return out


#: pluggable external scorers (LPIPS, FID, CLIP etc. need pretrained networks
#: and plug in from outside): name -> callable(image_a, image_b) -> float
ExternalScorer = Callable[[np.ndarray, np.ndarray], float]

METRIC_COLUMNS = ("psnr_fg", "psnr_bg", "ssim_fg", "ssim_bg")


def format_report_table(rows: list[tuple[str, dict]],
                        extra_columns: tuple = ()) -> str:
    """Aligned plain-text table: one labeled row of region-split metrics."""
    columns = METRIC_COLUMNS + tuple(extra_columns)
    label_w = max([len("row")] + [len(label) for label, _ in rows])
    header = "row".ljust(label_w) + "".join(c.rjust(12) for c in columns)
    lines = [header, "-" * len(header)]
    for label, rep in rows:
        cells = []
        for c in columns:
            v = rep.get(c)
            cells.append(("-" if v is None else f"{v:.4f}").rjust(12))
        lines.append(label.ljust(label_w) + "".join(cells))
    return "\n".join(lines)
