import numpy as np
import pytest

from wavesr.errors import ChannelMismatch, DegenerateOutput, ShapeMismatch, TooSmall
from wavesr.metrics import bicubic_resize, cubic_kernel, psnr, ssim, to_luma


class TestCubicKernel:
    def test_anchor_values(self):
        # interpolating kernel: 1 at zero, 0 at the other integers
        t = np.array([0.0, 1.0, 2.0, -1.0, -2.0, 3.0])
        np.testing.assert_allclose(cubic_kernel(t), [1, 0, 0, 0, 0, 0], atol=1e-12)

    def test_symmetry(self):
        t = np.linspace(-2, 2, 81)
        np.testing.assert_allclose(cubic_kernel(t), cubic_kernel(-t))

    def test_partition_of_unity(self):
        # the four taps around any fractional position sum to one
        for frac in np.linspace(0, 1, 33):
            taps = cubic_kernel(frac - np.array([-1, 0, 1, 2]))
            assert abs(taps.sum() - 1.0) < 1e-12


class TestBicubic:
    def test_identity(self):
        img = np.random.default_rng(0).uniform(0, 1, (3, 10, 12))
        np.testing.assert_allclose(bicubic_resize(img, 1.0), img, atol=1e-12)

    def test_constant_preserved(self):
        img = np.full((3, 8, 8), 0.37)
        up = bicubic_resize(img, 2.0)
        assert up.shape == (3, 16, 16)
        np.testing.assert_allclose(up, 0.37, atol=1e-12)

    def test_output_dims_rounded(self):
        img = np.zeros((3, 10, 10))
        assert bicubic_resize(img, 1.5).shape == (3, 15, 15)
        assert bicubic_resize(img, 0.5).shape == (3, 5, 5)
        # 7 * 1.5 = 10.5 rounds up
        assert bicubic_resize(np.zeros((3, 7, 7)), 1.5).shape == (3, 11, 11)

    def test_1d_ramp_oracle(self):
        """Hand-rolled cubic convolution along one row with half-pixel
        centers and edge clamp must match exactly."""
        row = np.array([0.0, 1.0, 4.0, 9.0, 16.0, 25.0])
        img = np.tile(row, (1, 6, 1))
        up = bicubic_resize(img, 2.0)
        n = len(row)
        for j in range(2 * n):
            src = (j + 0.5) / 2.0 - 0.5
            base = int(np.floor(src))
            val = 0.0
            for m in (-1, 0, 1, 2):
                idx = min(max(base + m, 0), n - 1)
                val += row[idx] * cubic_kernel(np.array([src - (base + m)]))[0]
            assert up[0, 3, j] == pytest.approx(val, abs=1e-12)

    def test_linearity(self):
        rng = np.random.default_rng(1)
        a = rng.uniform(0, 1, (3, 8, 8))
        b = rng.uniform(0, 1, (3, 8, 8))
        lhs = bicubic_resize(2.0 * a + 3.0 * b, 2.0)
        rhs = 2.0 * bicubic_resize(a, 2.0) + 3.0 * bicubic_resize(b, 2.0)
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)

    def test_down_then_up_loses_detail(self):
        rng = np.random.default_rng(2)
        img = rng.uniform(0, 1, (3, 16, 16))
        rt = bicubic_resize(bicubic_resize(img, 0.5), 2.0)
        assert rt.shape == img.shape
        assert float(np.max(np.abs(rt - img))) > 1e-3

    def test_degenerate(self):
        with pytest.raises(DegenerateOutput):
            bicubic_resize(np.zeros((3, 4, 4)), 0.0)
        with pytest.raises(DegenerateOutput):
            bicubic_resize(np.zeros((3, 4, 4)), 0.05)


class TestPsnr:
    def test_identical_is_inf(self):
        img = np.random.default_rng(0).uniform(0, 1, (3, 8, 8))
        assert psnr(img, img) == float("inf")

    def test_uniform_offset_oracle(self):
        # uniform error of 10/255: 20 log10(255/10)
        a = np.full((3, 16, 16), 100 / 255)
        b = np.full((3, 16, 16), 110 / 255)
        assert psnr(a, b) == pytest.approx(20 * np.log10(255 / 10), abs=1e-9)

    def test_known_mse(self):
        a = np.zeros((1, 4, 4))
        b = np.full((1, 4, 4), 0.1)
        assert psnr(a, b) == pytest.approx(20.0, abs=1e-9)

    def test_monotone_in_error(self):
        base = np.full((3, 8, 8), 0.5)
        vals = [psnr(base, base + k / 255) for k in range(1, 33)]
        assert all(x > y for x, y in zip(vals, vals[1:]))

    def test_symmetry(self):
        rng = np.random.default_rng(3)
        a = rng.uniform(0, 1, (3, 8, 8))
        b = rng.uniform(0, 1, (3, 8, 8))
        assert psnr(a, b) == pytest.approx(psnr(b, a))

    def test_shape_guard(self):
        with pytest.raises(ShapeMismatch):
            psnr(np.zeros((3, 8, 8)), np.zeros((3, 8, 9)))


class TestSsim:
    def test_self_similarity(self):
        img = np.random.default_rng(0).uniform(0, 1, (3, 16, 16))
        assert ssim(img, img) == pytest.approx(1.0, abs=1e-12)

    def test_symmetry(self):
        rng = np.random.default_rng(1)
        a = rng.uniform(0, 1, (3, 16, 16))
        b = rng.uniform(0, 1, (3, 16, 16))
        assert ssim(a, b) == pytest.approx(ssim(b, a))

    def test_bounded(self):
        rng = np.random.default_rng(2)
        for _ in range(5):
            a = rng.uniform(0, 1, (1, 12, 12))
            b = rng.uniform(0, 1, (1, 12, 12))
            assert -1.0 <= ssim(a, b) <= 1.0

    def test_constant_pair_closed_form(self):
        # zero variance: score reduces to the luminance term
        a = np.full((1, 16, 16), 0.2)
        b = np.full((1, 16, 16), 0.6)
        c1 = 0.01**2
        expected = (2 * 0.2 * 0.6 + c1) / (0.2**2 + 0.6**2 + c1)
        assert ssim(a, b) == pytest.approx(expected, abs=1e-12)

    def test_noise_hurts_more_than_blur(self):
        rng = np.random.default_rng(4)
        img = bicubic_resize(rng.uniform(0, 1, (1, 8, 8)), 4.0)
        noisy = np.clip(img + rng.normal(0, 0.2, img.shape), 0, 1)
        blurry = bicubic_resize(bicubic_resize(img, 0.5), 2.0)
        assert ssim(img, noisy) < ssim(img, blurry)

    def test_too_small(self):
        with pytest.raises(TooSmall):
            ssim(np.zeros((1, 8, 8)), np.zeros((1, 8, 8)))


class TestLuma:
    def test_pure_red(self):
        img = np.zeros((3, 4, 4))
        img[0] = 1.0
        np.testing.assert_allclose(to_luma(img), 0.299)

    def test_gray_passthrough(self):
        img = np.full((3, 4, 4), 0.5)
        np.testing.assert_allclose(to_luma(img), 0.5, atol=1e-12)

    def test_weights_sum_to_one(self):
        rng = np.random.default_rng(5)
        g = rng.uniform(0, 1, (4, 4))
        img = np.stack([g, g, g])
        np.testing.assert_allclose(to_luma(img)[0], g, atol=1e-12)

    def test_shape_and_guard(self):
        assert to_luma(np.zeros((2, 3, 4, 4))).shape == (2, 1, 4, 4)
        with pytest.raises(ChannelMismatch):
            to_luma(np.zeros((4, 4, 4)))
