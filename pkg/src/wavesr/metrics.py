"""Image fidelity metrics and the cubic resampler used for input prep
and as evaluation baseline."""

from __future__ import annotations

import numpy as np

from .errors import ChannelMismatch, DegenerateOutput, ShapeMismatch, TooSmall
from .tensor import Tensor

CUBIC_A = -0.5  # Catmull-Rom


def _as_array(img) -> np.ndarray:
    return img.data if isinstance(img, Tensor) else np.asarray(img)


def cubic_kernel(t: np.ndarray) -> np.ndarray:
    """Cubic convolution kernel with a = -0.5; support (-2, 2)."""
    a = CUBIC_A
    t = np.abs(t)
    t2 = t * t
    t3 = t2 * t
    near = (a + 2) * t3 - (a + 3) * t2 + 1
    far = a * t3 - 5 * a * t2 + 8 * a * t - 4 * a
    return np.where(t <= 1, near, np.where(t < 2, far, 0.0))


def _resample_axis(arr: np.ndarray, axis: int, out_size: int) -> np.ndarray:
    in_size = arr.shape[axis]
    ratio = out_size / in_size
    src = (np.arange(out_size) + 0.5) / ratio - 0.5
    base = np.floor(src).astype(np.int64)
    out = np.zeros(arr.shape[:axis] + (out_size,) + arr.shape[axis + 1 :], dtype=arr.dtype)
    for m in (-1, 0, 1, 2):
        idx = np.clip(base + m, 0, in_size - 1)
        w = cubic_kernel(src - (base + m)).astype(arr.dtype)
        shape = [1] * arr.ndim
        shape[axis] = out_size
        out += np.take(arr, idx, axis=axis) * w.reshape(shape)
    return out


def bicubic_resize(img, scale: float) -> np.ndarray:
    """Separable cubic resize, half-pixel centers, edge clamp.

    Works on arrays with the last two axes spatial; output dims are
    round(scale * dims).
    """
    arr = _as_array(img)
    if scale <= 0:
        raise DegenerateOutput(f"scale must be positive, got {scale}")
    h, w = arr.shape[-2], arr.shape[-1]
    oh = int(np.floor(scale * h + 0.5))
    ow = int(np.floor(scale * w + 0.5))
    if oh < 1 or ow < 1:
        raise DegenerateOutput(f"output size {oh}x{ow} degenerate")
    out = _resample_axis(arr, arr.ndim - 2, oh)
    out = _resample_axis(out, arr.ndim - 1, ow)
    return out


def psnr(a, b, peak: float = 1.0) -> float:
    """10 log10(peak^2 / MSE); +inf when the images are identical."""
    aa = np.clip(_as_array(a), 0.0, 1.0).astype(np.float64)
    bb = np.clip(_as_array(b), 0.0, 1.0).astype(np.float64)
    if aa.shape != bb.shape:
        raise ShapeMismatch(f"psnr: {aa.shape} vs {bb.shape}")
    mse = float(np.mean((aa - bb) ** 2))
    if mse == 0.0:
        return float("inf")
    return 10.0 * np.log10(peak * peak / mse)


def _gaussian_window(size: int = 11, sigma: float = 1.5) -> np.ndarray:
    x = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return g / g.sum()


def _filter_valid(x: np.ndarray, win: np.ndarray) -> np.ndarray:
    """Separable valid-mode correlation of a 2-D map with win (x) win."""
    t = np.lib.stride_tricks.sliding_window_view(x, len(win), axis=0)
    t = np.einsum("iwk,k->iw", t, win, optimize=True)
    t = np.lib.stride_tricks.sliding_window_view(t, len(win), axis=1)
    return np.einsum("ijk,k->ij", t, win, optimize=True)


def ssim(a, b, window_size: int = 11, sigma: float = 1.5) -> float:
    """Mean local structural similarity with a Gaussian window, per
    channel and averaged; constants C1=(0.01)^2, C2=(0.03)^2 at peak 1."""
    aa = np.clip(_as_array(a), 0.0, 1.0).astype(np.float64)
    bb = np.clip(_as_array(b), 0.0, 1.0).astype(np.float64)
    if aa.shape != bb.shape:
        raise ShapeMismatch(f"ssim: {aa.shape} vs {bb.shape}")
    if min(aa.shape[-2], aa.shape[-1]) < window_size:
        raise TooSmall(f"image smaller than {window_size}x{window_size} window")
    aa = aa.reshape(-1, aa.shape[-2], aa.shape[-1])
    bb = bb.reshape(-1, bb.shape[-2], bb.shape[-1])
    win = _gaussian_window(window_size, sigma)
    c1 = 0.01**2
    c2 = 0.03**2
    vals = []
    for xa, xb in zip(aa, bb):
        mu_a = _filter_valid(xa, win)
        mu_b = _filter_valid(xb, win)
        ea2 = _filter_valid(xa * xa, win)
        eb2 = _filter_valid(xb * xb, win)
        eab = _filter_valid(xa * xb, win)
        var_a = ea2 - mu_a * mu_a
        var_b = eb2 - mu_b * mu_b
        cov = eab - mu_a * mu_b
        s = ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) / (
            (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
        )
        vals.append(float(s.mean()))
    return float(np.mean(vals))


def to_luma(img) -> np.ndarray:
    """Rec.601 luma from an (..., 3, h, w) RGB array."""
    arr = _as_array(img)
    if arr.shape[-3] != 3:
        raise ChannelMismatch(f"to_luma expects 3 channels, got {arr.shape[-3]}")
    w = np.array([0.299, 0.587, 0.114], dtype=arr.dtype)
    y = arr[..., 0, :, :] * w[0] + arr[..., 1, :, :] * w[1] + arr[..., 2, :, :] * w[2]
    return y[..., None, :, :]
