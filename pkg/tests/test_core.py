import numpy as np
import pytest

from taue.core import (
    LatentShapeError,
    RandomSource,
    crop_step,
    gaussian_blur,
    gaussian_kernel_1d,
    laplacian_highpass,
    load_buffer,
    sample_gaussian,
    save_buffer,
)


def blur_oracle(arr, sigma):
    """Scalar double-loop separable blur with replicate indexing."""
    k = gaussian_kernel_1d(sigma)
    r = len(k) // 2
    h, w = arr.shape
    tmp = np.zeros_like(arr, dtype=np.float64)
    for i in range(h):
        for j in range(w):
            tmp[i, j] = sum(k[d + r] * arr[min(max(i + d, 0), h - 1), j]
                            for d in range(-r, r + 1))
    out = np.zeros_like(tmp)
    for i in range(h):
        for j in range(w):
            out[i, j] = sum(k[d + r] * tmp[i, min(max(j + d, 0), w - 1)]
                            for d in range(-r, r + 1))
    return out


def laplacian_oracle(z):
    """Scalar triple-loop 4-neighbor Laplacian with replicate indexing."""
    c, h, w = z.shape
    out = np.zeros_like(z, dtype=np.float64)
    for ch in range(c):
        for i in range(h):
            for j in range(w):
                up = z[ch, max(i - 1, 0), j]
                dn = z[ch, min(i + 1, h - 1), j]
                lf = z[ch, i, max(j - 1, 0)]
                rt = z[ch, i, min(j + 1, w - 1)]
                out[ch, i, j] = up + dn + lf + rt - 4 * z[ch, i, j]
    return out


class TestSampleGaussian:
    def test_determinism(self):
        a = sample_gaussian((4, 8, 8), RandomSource(7))
        b = sample_gaussian((4, 8, 8), RandomSource(7))
        assert np.array_equal(a, b)

    def test_moments(self):
        z = sample_gaussian((4, 64, 64), RandomSource(123))
        assert -0.05 <= z.mean() <= 0.05
        assert 0.9 <= z.var() <= 1.1

    def test_bad_channels(self):
        with pytest.raises(LatentShapeError):
            sample_gaussian((3, 8, 8), RandomSource(0))

    def test_bad_spatial(self):
        with pytest.raises(LatentShapeError):
            sample_gaussian((4, 0, 8), RandomSource(0))


class TestCropStep:
    @pytest.mark.parametrize("r,expected", [(0.0, 50), (0.25, 37), (0.5, 25),
                                            (0.75, 12), (1.0, 0)])
    def test_table(self, r, expected):
        assert crop_step(50, r) == expected

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            crop_step(50, 1.5)
        with pytest.raises(ValueError):
            crop_step(50, -0.1)

    def test_monotone_nonincreasing(self):
        steps = [crop_step(37, r) for r in np.linspace(0, 1, 101)]
        assert all(a >= b for a, b in zip(steps, steps[1:]))


class TestGaussianBlur:
    def test_constant_preserved(self):
        out = gaussian_blur(np.full((10, 12), 3.25, np.float32), 1.0)
        assert np.allclose(out, 3.25, atol=1e-6)

    def test_impulse_kernel(self):
        m = np.zeros((15, 15), np.float32)
        m[7, 7] = 1.0
        out = gaussian_blur(m, 1.0)
        k = gaussian_kernel_1d(1.0)
        expected = np.outer(k, k)
        r = len(k) // 2
        assert np.allclose(out[7 - r:7 + r + 1, 7 - r:7 + r + 1], expected, atol=1e-6)
        assert abs(out.sum() - 1.0) < 1e-6

    def test_mass_conservation_interior(self):
        # replicate padding only conserves mass when the boundary band is
        # quiet, so the oracle maps carry a zero border wider than the kernel
        rng = np.random.default_rng(0)
        sigma = 0.8
        r = len(gaussian_kernel_1d(sigma)) // 2
        for _ in range(5):
            m = np.zeros((8 + 2 * r, 8 + 2 * r), np.float32)
            m[r:-r, r:-r] = rng.normal(size=(8, 8))
            out = gaussian_blur(m, sigma)
            assert abs(out.sum() - m.sum()) < 1e-4

    def test_matches_scalar_oracle(self):
        rng = np.random.default_rng(5)
        m = rng.normal(size=(8, 8)).astype(np.float32)
        assert np.allclose(gaussian_blur(m, 1.3), blur_oracle(m, 1.3), atol=1e-5)

    def test_bad_sigma(self):
        with pytest.raises(ValueError):
            gaussian_blur(np.zeros((4, 4), np.float32), 0.0)


class TestLaplacian:
    def test_constant_is_zero(self):
        z = np.full((4, 6, 6), 2.5, np.float32)
        assert np.array_equal(laplacian_highpass(z), np.zeros_like(z))

    def test_impulse_response(self):
        z = np.zeros((4, 7, 7), np.float32)
        z[2, 3, 3] = 1.0
        out = laplacian_highpass(z)
        assert out[2, 3, 3] == -4.0
        assert out[2, 2, 3] == out[2, 4, 3] == out[2, 3, 2] == out[2, 3, 4] == 1.0
        assert out[0].sum() == 0.0

    def test_matches_scalar_oracle(self):
        rng = np.random.default_rng(11)
        z = rng.normal(size=(4, 6, 6)).astype(np.float32)
        assert np.allclose(laplacian_highpass(z), laplacian_oracle(z), atol=1e-6)

    def test_dc_removal(self):
        rng = np.random.default_rng(12)
        z = rng.normal(size=(4, 6, 6)).astype(np.float32)
        c = np.array([1.0, -2.0, 0.5, 3.0], np.float32).reshape(4, 1, 1)
        a = laplacian_highpass(z + c)
        b = laplacian_highpass(z)
        assert np.allclose(a, b, atol=1e-5)

    def test_shift_equivariance_interior(self):
        rng = np.random.default_rng(13)
        z = rng.normal(size=(4, 10, 10)).astype(np.float32)
        shifted = np.roll(z, (2, 1), axis=(1, 2))
        a = np.roll(laplacian_highpass(z), (2, 1), axis=(1, 2))
        b = laplacian_highpass(shifted)
        assert np.array_equal(a[:, 4:8, 3:7], b[:, 4:8, 3:7])


class TestBufferFormat:
    def test_roundtrip(self, tmp_path):
        z = sample_gaussian((4, 5, 9), RandomSource(2))
        p = tmp_path / "z.taue"
        save_buffer(p, z)
        assert np.array_equal(load_buffer(p), z)

    def test_bad_magic(self, tmp_path):
        p = tmp_path / "bad.taue"
        p.write_bytes(b"NOPE" + b"\0" * 32)
        with pytest.raises(ValueError):
            load_buffer(p)

    def test_single_channel_mask(self, tmp_path):
        m = np.zeros((1, 6, 6), np.float32)
        m[0, 2:4, 2:4] = 1.0
        p = tmp_path / "m.taue"
        save_buffer(p, m)
        assert np.array_equal(load_buffer(p), m)
