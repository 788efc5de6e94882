import numpy as np
import pytest

from taue.masks import BoxSpec
from taue.metrics import (
    PSNR_SENTINEL,
    BenchmarkFilter,
    filter_benchmark,
    format_report_table,
    psnr,
    region_split_eval,
    ssim,
)
from taue.pipeline import PipelineConfig, generate_layers


def full(h, w):
    return np.ones((h, w), bool)


class TestPsnr:
    def test_identical_sentinel(self):
        a = np.random.default_rng(0).integers(0, 256, (32, 32, 3)).astype(np.uint8)
        assert psnr(a, a, full(32, 32)) == PSNR_SENTINEL

    def test_plus_one_offset(self):
        a = np.full((32, 32, 3), 100, np.uint8)
        b = a + 1
        expected = 10 * np.log10(255.0 ** 2)
        assert psnr(a, b, full(32, 32)) == pytest.approx(expected, abs=0.01)

    def test_region_restriction(self):
        rng = np.random.default_rng(1)
        a = rng.integers(0, 256, (16, 32, 3)).astype(np.uint8)
        b = rng.integers(0, 256, (16, 32, 3)).astype(np.uint8)
        region = np.zeros((16, 32), bool)
        region[:, :16] = True
        assert psnr(a, b, region) == pytest.approx(
            psnr(a[:, :16], b[:, :16], full(16, 16)), abs=1e-9)

    def test_symmetry(self):
        rng = np.random.default_rng(2)
        a = rng.integers(0, 256, (16, 16)).astype(np.uint8)
        b = rng.integers(0, 256, (16, 16)).astype(np.uint8)
        assert psnr(a, b, full(16, 16)) == psnr(b, a, full(16, 16))

    def test_empty_region(self):
        a = np.zeros((8, 8), np.uint8)
        with pytest.raises(ValueError):
            psnr(a, a, np.zeros((8, 8), bool))

    def test_mse_region_additivity(self):
        rng = np.random.default_rng(3)
        a = rng.normal(size=(16, 16)) * 50 + 128
        b = rng.normal(size=(16, 16)) * 50 + 128
        r1 = np.zeros((16, 16), bool)
        r2 = np.zeros((16, 16), bool)
        r1[:7] = True
        r2[7:] = True
        mse = lambda x, y, r: float(np.mean((x[r] - y[r]) ** 2))
        combined = mse(a, b, r1 | r2)
        weighted = (mse(a, b, r1) * r1.sum() + mse(a, b, r2) * r2.sum()) / 256
        assert combined == pytest.approx(weighted, rel=1e-12)


class TestSsim:
    def test_identical_is_one(self):
        a = np.random.default_rng(4).integers(0, 256, (48, 48)).astype(np.uint8)
        assert ssim(a, a, full(48, 48)) == pytest.approx(1.0, abs=1e-9)

    def test_inverted_contrast_negative(self):
        # zero-mean structured pattern and its negative anti-correlate
        y, x = np.mgrid[0:64, 0:64]
        a = 128 + 100 * np.sin(x / 3.0) * np.cos(y / 4.0)
        b = 256 - a
        assert ssim(a, b, full(64, 64)) < 0

    def test_symmetry(self):
        rng = np.random.default_rng(5)
        a = rng.integers(0, 256, (32, 32)).astype(np.uint8)
        b = rng.integers(0, 256, (32, 32)).astype(np.uint8)
        assert ssim(a, b, full(32, 32)) == pytest.approx(ssim(b, a, full(32, 32)),
                                                         abs=1e-12)

    def test_reference_implementation_agreement(self):
        from skimage.metrics import structural_similarity

        rng = np.random.default_rng(6)
        base = rng.integers(0, 200, (64, 64)).astype(np.uint8)
        noisy = np.clip(base + rng.normal(0, 20, (64, 64)), 0, 255).astype(np.uint8)
        ref = structural_similarity(base, noisy, win_size=11, gaussian_weights=True,
                                    sigma=1.5, use_sample_covariance=False,
                                    data_range=255)
        # skimage averages over the interior (pad-cropped) map; match its region
        region = np.zeros((64, 64), bool)
        region[5:-5, 5:-5] = True
        assert ssim(base, noisy, region) == pytest.approx(ref, abs=1e-3)

    def test_small_region_errors(self):
        a = np.zeros((32, 32), np.uint8)
        region = np.zeros((32, 32), bool)
        region[0, :5] = True
        with pytest.raises(ValueError):
            ssim(a, a, region)


class TestRegionSplitEval:
    def _layers(self, **kw):
        cfg = PipelineConfig(prompt_fg="a red fox", prompt_bg="a snowy forest",
                             boxes=(BoxSpec(cx=7.5, cy=7.5, w=12, h=12),),
                             width=128, height=128, steps=20, seed=5, **kw)
        return generate_layers(cfg)

    def test_identical_layers_sentinel(self):
        layers = self._layers()
        layers.foreground = np.dstack([layers.composite,
                                       np.full(layers.composite.shape[:2], 255,
                                               np.uint8)])
        layers.background = layers.composite.copy()
        rep = region_split_eval(layers)
        assert rep.psnr_fg == PSNR_SENTINEL and rep.psnr_bg == PSNR_SENTINEL
        assert rep.ssim_fg == pytest.approx(1.0, abs=1e-9)
        assert rep.ssim_bg == pytest.approx(1.0, abs=1e-9)

    def test_transplant_noise_degrades_fg_match(self):
        quiet = region_split_eval(self._layers(lambda_=0.0))
        noisy = region_split_eval(self._layers(lambda_=2.0))
        assert quiet.psnr_fg > noisy.psnr_fg

    def test_counts_and_config_ref(self):
        rep = region_split_eval(self._layers())
        assert rep.n_fg + rep.n_bg == 128 * 128
        assert rep.config_ref["seed"] == 5


class TestFilterBenchmark:
    def entry(self, ratio, crowd=False, i=0):
        return {"bbox": [0, 0, 10, 10], "area_ratio": ratio, "iscrowd": crowd,
                "image_id": i}

    def test_crowd_excluded(self):
        assert filter_benchmark([self.entry(0.5, crowd=True)]) == []

    def test_threshold_boundary(self):
        assert filter_benchmark([self.entry(0.029)]) == []
        kept = filter_benchmark([self.entry(0.031)])
        assert len(kept) == 1

    def test_matches_bruteforce_on_synthetic_list(self):
        rng = np.random.default_rng(7)
        entries = [self.entry(float(rng.random() * 0.06), bool(rng.random() < 0.2), i)
                   for i in range(100)]
        kept = filter_benchmark(entries)
        brute = [e for e in entries
                 if not e["iscrowd"] and e["area_ratio"] >= 0.03]
        assert kept == brute

    def test_idempotent(self):
        rng = np.random.default_rng(8)
        entries = [self.entry(float(rng.random() * 0.06), bool(rng.random() < 0.2), i)
                   for i in range(50)]
        once = filter_benchmark(entries)
        assert filter_benchmark(once) == once

    def test_malformed_skipped(self, caplog):
        entries = [self.entry(0.5), {"bbox": None}, self.entry(0.4)]
        assert len(filter_benchmark(entries)) == 2

    def test_bad_rules(self):
        with pytest.raises(ValueError):
            BenchmarkFilter(min_bbox_area_ratio=1.5)


class TestReportTable:
    def test_shape(self):
        rows = [("a", {"psnr_fg": 20.0, "psnr_bg": 21.0, "ssim_fg": 0.9,
                       "ssim_bg": 0.8}),
                ("b", {"psnr_fg": None, "psnr_bg": 1.0, "ssim_fg": 0.5,
                       "ssim_bg": 0.4})]
        table = format_report_table(rows)
        lines = table.splitlines()
        assert len(lines) == 4
        assert "psnr_fg" in lines[0] and "ssim_bg" in lines[0]
        assert lines[3].split()[-4] == "-"
