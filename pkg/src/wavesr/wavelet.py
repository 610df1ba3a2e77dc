"""Orthonormal Haar 2-D wavelet transform, single and multi level.

A decomposed tensor keeps the four subbands as channel blocks in the
order [A | H | V | D] (approximation, horizontal, vertical, diagonal),
each block in source-channel order.  The transform is orthonormal: each
2x2 block [[a, b], [c, d]] maps to

    A = (a + b + c + d) / 2
    H = (a - b + c - d) / 2
    V = (a + b - c - d) / 2
    D = (a - b - c + d) / 2

so round trips are exact up to float rounding and energy is preserved.
"""

from __future__ import annotations

import numpy as np

from .errors import ChannelNotDivisibleBy4, NotDivisible, OddSpatialSize
from .tensor import Tensor, _make


def dwt2_array(x: np.ndarray) -> np.ndarray:
    """Single-level Haar analysis on a (n, c, h, w) array, h and w even."""
    a = x[:, :, 0::2, 0::2]
    b = x[:, :, 0::2, 1::2]
    c = x[:, :, 1::2, 0::2]
    d = x[:, :, 1::2, 1::2]
    A = (a + b + c + d) * 0.5
    H = (a - b + c - d) * 0.5
    V = (a + b - c - d) * 0.5
    D = (a - b - c + d) * 0.5
    return np.concatenate([A, H, V, D], axis=1)


def idwt2_array(s: np.ndarray) -> np.ndarray:
    """Exact inverse of dwt2_array; channel count divisible by 4."""
    n, c4, h2, w2 = s.shape
    c = c4 // 4
    A = s[:, 0 * c : 1 * c]
    H = s[:, 1 * c : 2 * c]
    V = s[:, 2 * c : 3 * c]
    D = s[:, 3 * c : 4 * c]
    out = np.empty((n, c, 2 * h2, 2 * w2), dtype=s.dtype)
    out[:, :, 0::2, 0::2] = (A + H + V + D) * 0.5
    out[:, :, 0::2, 1::2] = (A - H + V - D) * 0.5
    out[:, :, 1::2, 0::2] = (A + H - V - D) * 0.5
    out[:, :, 1::2, 1::2] = (A - H - V + D) * 0.5
    return out


def dwt2(x: Tensor) -> Tensor:
    """Differentiable single-level Haar transform, (n,c,h,w) -> (n,4c,h/2,w/2)."""
    n, c, h, w = x.data.shape
    if h % 2 or w % 2:
        raise OddSpatialSize(f"dwt2 needs even spatial dims, got {h}x{w}")
    y = dwt2_array(x.data)
    # Orthonormal transform: the Jacobian transpose equals the inverse.
    return _make(y, [(x, idwt2_array)])


def idwt2(s: Tensor) -> Tensor:
    """Differentiable inverse Haar transform, (n,4c,h,w) -> (n,c,2h,2w)."""
    c4 = s.data.shape[1]
    if c4 % 4:
        raise ChannelNotDivisibleBy4(f"idwt2 needs channels divisible by 4, got {c4}")
    y = idwt2_array(s.data)
    return _make(y, [(s, dwt2_array)])


def dwt_multi(x: Tensor, levels: int) -> list[Tensor]:
    """Repeated full-stack decomposition; level l+1 transforms all of level l."""
    n, c, h, w = x.data.shape
    if h % (2**levels) or w % (2**levels):
        raise NotDivisible(f"{h}x{w} not divisible by 2^{levels}")
    stacks = []
    cur = x
    for _ in range(levels):
        cur = dwt2(cur)
        stacks.append(cur)
    return stacks


def idwt_multi(deepest: Tensor, levels: int) -> Tensor:
    """Invert ``levels`` stacked decompositions from the deepest stack."""
    cur = deepest
    for _ in range(levels):
        cur = idwt2(cur)
    return cur


def split_subbands(s: Tensor | np.ndarray):
    """Return the (A, H, V, D) channel blocks of a decomposed array."""
    arr = s.data if isinstance(s, Tensor) else s
    c = arr.shape[1] // 4
    return tuple(arr[:, i * c : (i + 1) * c] for i in range(4))
