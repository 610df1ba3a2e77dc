"""Shared verification suites: wavelet exactness, common-mode rejection,
zero-network residual identity, and the 64-bit gradient-check battery.

The CLI `selftest` and `gradcheck` subcommands and the acceptance test
module both run these.
"""

from __future__ import annotations

import numpy as np

from . import tensor as T
from .dwa import DwaConfig, dwa_forward, dwa_init, differential_maps
from .models import ModelConfig, ModelKind, build_model, model_forward
from .metrics import bicubic_resize
from .tensor import Tensor, grad_check
from .training import loss_fn
from .wavelet import dwt2, dwt2_array, idwt2, idwt2_array


def check_wavelet_exactness(n_images: int = 1000, max_size: int = 64, seed: int = 0):
    """Round-trip error at 32-bit and Parseval mismatch at 64-bit over
    random even-sized images; returns (max_roundtrip_err, max_energy_err)."""
    rng = np.random.default_rng(seed)
    worst_rt = 0.0
    worst_en = 0.0
    for _ in range(n_images):
        h = 2 * int(rng.integers(1, max_size // 2 + 1))
        w = 2 * int(rng.integers(1, max_size // 2 + 1))
        x64 = rng.uniform(-1, 1, size=(1, 3, h, w))
        x32 = x64.astype(np.float32)
        rt = idwt2_array(dwt2_array(x32))
        worst_rt = max(worst_rt, float(np.max(np.abs(rt - x32))))
        s = dwt2_array(x64)
        worst_en = max(worst_en, abs(float(np.sum(s * s) - np.sum(x64 * x64))))
    return worst_rt, worst_en


def check_cmr(shapes=((1, 1, 8, 8), (2, 3, 12, 10), (1, 4, 16, 16)), strides=(0, 1, 2, 3)):
    """Constant input + tied weights + replicate padding must give bitwise
    zero H and V maps.  Returns the worst absolute value seen (want 0.0)."""
    worst = 0.0
    for shape in shapes:
        for s in strides:
            cfg = DwaConfig(c_in=shape[1], c_f=3, c_final=4, s=s)
            rng = np.random.default_rng(7)
            p = dwa_init(cfg, rng, dtype=np.float64)
            p.theta2 = p.theta1
            p.theta4 = p.theta3
            x = Tensor(np.full(shape, 0.375))
            h_map, v_map = differential_maps(x, p, cfg)
            worst = max(worst, float(np.max(np.abs(h_map.data))), float(np.max(np.abs(v_map.data))))
    return worst


def check_zero_network_identity(scale: int = 2, size: int = 16, seed: int = 3):
    """Zero-initialized models must reproduce the bicubic baseline.

    Returns {kind: max abs deviation from bicubic}."""
    rng = np.random.default_rng(seed)
    lr = rng.uniform(0, 1, size=(1, 3, size, size)).astype(np.float32)
    out = {}
    for kind in ModelKind:
        cfg = ModelConfig(kind=kind, depth=4, width=8, scale=scale)
        m = build_model(cfg, seed=0, dtype=np.float32, zero_init=True)
        y = model_forward(m, lr).data
        base = bicubic_resize(lr, scale)
        out[kind.value] = float(np.max(np.abs(y - base)))
    return out


def _rand(rng, shape, away_from_zero=False):
    x = rng.uniform(-1, 1, size=shape)
    if away_from_zero:
        # keep values clear of activation kinks so central differences hold
        x = np.where(np.abs(x) < 1e-2, x + np.sign(x + 1e-12) * 2e-2, x)
    return x


def gradcheck_suite(tol: float = 1e-4, end_to_end_tol: float = 1e-3, step: float = 1e-5):
    """The full 64-bit gradient battery; yields (name, GradReport)."""
    rng = np.random.default_rng(11)
    results = []

    # conv2d (both paddings), gradient w.r.t. input, weight, bias
    for mode in ("replicate", "zero"):
        x = Tensor(_rand(rng, (1, 2, 6, 6)), requires_grad=True)
        p = T.conv_init(2, 3, 3, rng, padding_mode=mode, dtype=np.float64)
        f = lambda x=x, p=p: T.mean(T.mul(T.conv2d(x, p), T.conv2d(x, p)))
        rep = grad_check(f, [("x", x), ("w", p.weight), ("b", p.bias)], tol=tol, step=step)
        results.append((f"conv2d[{mode}]", rep))

    # shift2d
    for mode in ("replicate", "zero"):
        x = Tensor(_rand(rng, (1, 2, 6, 7)), requires_grad=True)
        f = lambda x=x, mode=mode: T.mean(
            T.mul(T.shift2d(x, 2, -1, mode), T.shift2d(x, 2, -1, mode))
        )
        results.append((f"shift2d[{mode}]", grad_check(f, [("x", x)], tol=tol, step=step)))

    # activations
    for kind in ("relu", "sigmoid", "tanh"):
        x = Tensor(_rand(rng, (1, 2, 5, 5), away_from_zero=True), requires_grad=True)
        f = lambda x=x, kind=kind: T.mean(T.mul(T.activation(x, kind), T.activation(x, kind)))
        results.append((f"activation[{kind}]", grad_check(f, [("x", x)], tol=tol, step=step)))

    # wavelet transforms
    x = Tensor(_rand(rng, (1, 2, 8, 8)), requires_grad=True)
    f = lambda x=x: T.mean(T.mul(dwt2(x), dwt2(x)))
    results.append(("dwt2", grad_check(f, [("x", x)], tol=tol, step=step)))
    s = Tensor(_rand(rng, (1, 8, 4, 4)), requires_grad=True)
    f = lambda s=s: T.mean(T.mul(idwt2(s), idwt2(s)))
    results.append(("idwt2", grad_check(f, [("x", s)], tol=tol, step=step)))

    # full differential layer at each stride offset
    for stride in (0, 1, 2, 3):
        cfg = DwaConfig(c_in=3, c_f=2, c_final=2, s=stride)
        p = dwa_init(cfg, np.random.default_rng(21 + stride), dtype=np.float64)
        x = Tensor(_rand(rng, (1, 3, 8, 8)), requires_grad=True)
        target = Tensor(_rand(rng, (1, 2, 8, 8)))
        f = lambda x=x, p=p, cfg=cfg, t=target: loss_fn("l2", dwa_forward(x, p, cfg), t)
        params = [("x", x)] + p.named()
        results.append((f"dwa[s={stride}]", grad_check(f, params, tol=tol, step=step)))

    # end-to-end on a small residual network (looser tolerance: depth)
    mcfg = ModelConfig(
        kind=ModelKind.DWSR_DWA, depth=4, width=8, scale=2, dwa=DwaConfig(c_in=12, c_f=4)
    )
    model = build_model(mcfg, seed=5, dtype=np.float64)
    lr_img = np.random.default_rng(6).uniform(0, 1, size=(1, 3, 16, 16))
    target = Tensor(np.random.default_rng(8).uniform(0, 1, size=(1, 3, 32, 32)))
    f = lambda: loss_fn("l1", model_forward(model, lr_img), target)
    rep = grad_check(f, model.named_params(), tol=end_to_end_tol, step=step)
    results.append(("end_to_end[dwsr_dwa,depth=4]", rep))

    return results
