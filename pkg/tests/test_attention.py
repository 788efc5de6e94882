import numpy as np
import pytest

from taue.attention import AttentionHook, aggregate_attention, blend_attention, normalize01
from taue.backend import Conditioning, ToyBackend, run_denoise
from taue.core import RandomSource, sample_gaussian


def blend_oracle(fg, bg, m):
    out = np.zeros_like(fg)
    for i in range(fg.shape[0]):
        for j in range(fg.shape[1]):
            for d in range(fg.shape[2]):
                out[i, j, d] = m[i, j] * fg[i, j, d] + (1 - m[i, j]) * bg[i, j, d]
    return out


class TestAggregate:
    def test_single_map(self):
        m = np.array([[0.0, 1.0], [2.0, 4.0]], np.float32)
        out = aggregate_attention([m], [0], 2, 2)
        assert np.allclose(out, normalize01(m))

    def test_mean_idempotence(self):
        m = np.array([[0.0, 1.0], [2.0, 4.0]], np.float32)
        one = aggregate_attention([m], [0], 2, 2)
        two = aggregate_attention([m, m], [0, 1], 2, 2)
        assert np.allclose(one, two)

    def test_hand_arithmetic(self):
        a = np.array([[0.0, 1.0], [2.0, 3.0]], np.float32)
        b = np.array([[4.0, 5.0], [6.0, 7.0]], np.float32)
        out = aggregate_attention([a, b], [0, 1], 2, 2)
        expected = np.array([[0.0, 1 / 3], [2 / 3, 1.0]], np.float32)
        assert np.allclose(out, expected, atol=1e-6)

    def test_empty_span(self):
        with pytest.raises(ValueError):
            aggregate_attention([np.zeros((2, 2))], [], 2, 2)

    def test_resize_to_latent(self):
        m = np.arange(4, dtype=np.float32).reshape(2, 2)
        out = aggregate_attention([m], [0], 8, 8)
        assert out.shape == (8, 8)
        assert out.min() == 0.0 and out.max() == 1.0


class TestBlend:
    def test_mask_all_ones(self):
        rng = np.random.default_rng(0)
        fg = rng.normal(size=(4, 4, 2)).astype(np.float32)
        bg = rng.normal(size=(4, 4, 2)).astype(np.float32)
        assert np.array_equal(blend_attention(fg, bg, np.ones((4, 4))), fg)

    def test_mask_all_zeros(self):
        rng = np.random.default_rng(1)
        fg = rng.normal(size=(4, 4, 2)).astype(np.float32)
        bg = rng.normal(size=(4, 4, 2)).astype(np.float32)
        assert np.array_equal(blend_attention(fg, bg, np.zeros((4, 4))), bg)

    def test_checkerboard_oracle(self):
        rng = np.random.default_rng(2)
        fg = rng.normal(size=(4, 4, 2)).astype(np.float32)
        bg = rng.normal(size=(4, 4, 2)).astype(np.float32)
        m = np.indices((4, 4)).sum(axis=0) % 2
        out = blend_attention(fg, bg, m.astype(np.float32))
        assert np.allclose(out, blend_oracle(fg, bg, m), atol=1e-7)

    def test_convex_envelope(self):
        rng = np.random.default_rng(3)
        fg = rng.normal(size=(6, 6, 3)).astype(np.float32)
        bg = rng.normal(size=(6, 6, 3)).astype(np.float32)
        m = (rng.random((6, 6)) > 0.5).astype(np.float32)
        out = blend_attention(fg, bg, m)
        assert np.all(out >= np.minimum(fg, bg) - 1e-7)
        assert np.all(out <= np.maximum(fg, bg) + 1e-7)

    def test_identity_on_equal_inputs(self):
        rng = np.random.default_rng(4)
        fg = rng.normal(size=(5, 5, 2)).astype(np.float32)
        m = (rng.random((5, 5)) > 0.5).astype(np.float32)
        assert np.array_equal(blend_attention(fg, fg, m), fg)

    def test_mask_resized_deterministically(self):
        rng = np.random.default_rng(5)
        fg = rng.normal(size=(8, 8, 2)).astype(np.float32)
        bg = rng.normal(size=(8, 8, 2)).astype(np.float32)
        m = (rng.random((4, 4)) > 0.5).astype(np.float32)
        a = blend_attention(fg, bg, m)
        b = blend_attention(fg, bg, m)
        assert np.array_equal(a, b)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            blend_attention(np.zeros((4, 4, 2)), np.zeros((4, 5, 2)), np.ones((4, 4)))


class TestHook:
    def test_disabled_is_identity(self):
        rng = np.random.default_rng(6)
        fg = rng.normal(size=(4, 4, 2)).astype(np.float32)
        bg = rng.normal(size=(4, 4, 2)).astype(np.float32)
        hook = AttentionHook(np.zeros((4, 4)), enabled=False)
        assert np.array_equal(hook("l0", fg, bg), fg)

    def test_missing_conditioning(self):
        hook = AttentionHook(np.ones((4, 4)))
        with pytest.raises(ValueError):
            hook("l0", np.zeros((4, 4, 2)), None)

    def _trajectory(self, hook, cond, seed=5):
        backend = ToyBackend(8, 8, total_steps=12)
        z0 = sample_gaussian((4, 8, 8), RandomSource(seed))
        final, _ = run_denoise(backend, z0, 12, cond, hook=hook)
        return final

    def test_full_mask_equals_pure_foreground(self):
        hook = AttentionHook(np.ones((8, 8)))
        dual = self._trajectory(hook, Conditioning("cat", bg_prompt="beach"))
        pure = self._trajectory(None, Conditioning("cat"))
        assert np.array_equal(dual, pure)

    def test_zero_mask_equals_pure_background(self):
        hook = AttentionHook(np.zeros((8, 8)))
        dual = self._trajectory(hook, Conditioning("cat", bg_prompt="beach"))
        pure = self._trajectory(None, Conditioning("beach"))
        assert np.array_equal(dual, pure)
