"""Differential amplifier layer: paired directional convolutions with a
spatial offset, subtracted to suppress the common mode, concatenated
with the input and fused by a final convolution."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .errors import ChannelMismatch, InvalidConfig
from .tensor import ConvParams, Tensor


@dataclass
class DwaConfig:
    c_in: int
    c_f: int = 16
    c_final: int = 64
    k: int = 3
    s: int = 1
    nonlinearity: str = "relu"
    padding_mode: str = "replicate"

    def validate(self) -> None:
        if min(self.c_in, self.c_f, self.c_final) < 1:
            raise InvalidConfig("channel counts must be >= 1")
        if self.k < 1 or self.k % 2 == 0:
            raise InvalidConfig(f"kernel size must be odd, got {self.k}")
        if self.s < 0:
            raise InvalidConfig(f"stride offset must be >= 0, got {self.s}")
        if self.nonlinearity not in ("relu", "sigmoid", "tanh"):
            raise InvalidConfig(f"unknown nonlinearity {self.nonlinearity!r}")
        if self.padding_mode not in ("replicate", "zero"):
            raise InvalidConfig(f"unknown padding mode {self.padding_mode!r}")


@dataclass
class DwaParams:
    """Five convolutions: two horizontal-pair, two vertical-pair, one fusion."""

    theta1: ConvParams
    theta2: ConvParams
    theta3: ConvParams
    theta4: ConvParams
    theta_final: ConvParams

    def named(self, prefix=""):
        items = []
        for nm, cp in (
            ("theta1", self.theta1),
            ("theta2", self.theta2),
            ("theta3", self.theta3),
            ("theta4", self.theta4),
            ("theta_final", self.theta_final),
        ):
            items.append((f"{prefix}{nm}.weight", cp.weight))
            items.append((f"{prefix}{nm}.bias", cp.bias))
        return items


def dwa_init(cfg: DwaConfig, rng, dtype=np.float32) -> DwaParams:
    """Deterministic fan-in uniform init of all five convolutions."""
    cfg.validate()
    pair = lambda: T.conv_init(
        cfg.c_in, cfg.c_f, cfg.k, rng, padding_mode=cfg.padding_mode, dtype=dtype
    )
    t1, t2, t3, t4 = pair(), pair(), pair(), pair()
    tf = T.conv_init(
        cfg.c_in + 2 * cfg.c_f, cfg.c_final, cfg.k, rng,
        padding_mode=cfg.padding_mode, dtype=dtype,
    )
    return DwaParams(t1, t2, t3, t4, tf)


def dwa_zero(cfg: DwaConfig, dtype=np.float32) -> DwaParams:
    cfg.validate()
    z = lambda ci, co: T.conv_zero(ci, co, cfg.k, padding_mode=cfg.padding_mode, dtype=dtype)
    return DwaParams(
        z(cfg.c_in, cfg.c_f), z(cfg.c_in, cfg.c_f),
        z(cfg.c_in, cfg.c_f), z(cfg.c_in, cfg.c_f),
        z(cfg.c_in + 2 * cfg.c_f, cfg.c_final),
    )


def _offsets(x: Tensor, s: int):
    # Offsets larger than the map would violate shift2d's domain; clamp so
    # the layer stays defined on inputs as small as the kernel itself.
    _, _, h, w = x.data.shape
    return min(s, w - 1), min(s, h - 1)


def differential_maps(x: Tensor, p: DwaParams, cfg: DwaConfig):
    """The raw H and V maps before the nonlinearity."""
    sx, sy = _offsets(x, cfg.s)
    h_map = T.sub(
        T.conv2d(x, p.theta1),
        T.shift2d(T.conv2d(x, p.theta2), dx=sx, dy=0, padding_mode=cfg.padding_mode),
    )
    v_map = T.sub(
        T.conv2d(x, p.theta3),
        T.shift2d(T.conv2d(x, p.theta4), dx=0, dy=sy, padding_mode=cfg.padding_mode),
    )
    return h_map, v_map


def dwa_forward(x: Tensor, p: DwaParams, cfg: DwaConfig) -> Tensor:
    """H = conv(x;t1) - shift_x(conv(x;t2), s); V likewise along y;
    out = conv(concat(x, sigma(concat(H, V))); t_final)."""
    if x.data.shape[1] != cfg.c_in:
        raise ChannelMismatch(f"input has {x.data.shape[1]} channels, expected {cfg.c_in}")
    h_map, v_map = differential_maps(x, p, cfg)
    g = T.concat_channels(x, T.activation(T.concat_channels(h_map, v_map), cfg.nonlinearity))
    return T.conv2d(g, p.theta_final)
