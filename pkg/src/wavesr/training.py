"""Deterministic training loop: L1/L2 objectives, Adam with coupled L2
regularization, stepped learning-rate decay, dihedral augmentation, and
aligned HR/LR patch sampling."""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np

from . import tensor as T
from .errors import BadTransformId, ImageTooSmall, InvalidConfig, ShapeMismatch
from .metrics import bicubic_resize, psnr, ssim
from .models import Model, ModelConfig, build_model, model_forward
from .tensor import Tensor, grad_or_zero


@dataclass
class TrainConfig:
    loss: str = "l1"
    lr0: float = 1e-4
    l2_reg: float = 1e-8
    decay: float = 0.8
    decay_every: int = 20
    epochs: int = 1
    steps_per_epoch: int | None = None
    batch_size: int = 8
    patch_size: int = 192
    seed: int = 0
    scale: int = 2

    def validate(self) -> None:
        if self.loss not in ("l1", "l2"):
            raise InvalidConfig(f"loss must be l1 or l2, got {self.loss!r}")
        if self.patch_size % (2 * self.scale):
            raise InvalidConfig(
                f"patch_size {self.patch_size} must be divisible by 2*scale={2 * self.scale}"
            )
        if self.epochs < 1 or self.batch_size < 1:
            raise InvalidConfig("epochs and batch_size must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)


def loss_fn(kind: str, pred: Tensor, target: Tensor) -> Tensor:
    if pred.data.shape != target.data.shape:
        raise ShapeMismatch(f"loss: {pred.data.shape} vs {target.data.shape}")
    diff = T.sub(pred, target)
    if kind == "l1":
        return T.mean(T.abs_(diff))
    if kind == "l2":
        return T.mean(T.mul(diff, diff))
    raise InvalidConfig(f"unknown loss {kind!r}")


def lr_at_epoch(epoch: int, cfg: TrainConfig) -> float:
    return cfg.lr0 * cfg.decay ** (epoch // cfg.decay_every)


@dataclass
class AdamState:
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)
    t: int = 0


def adam_init(params) -> AdamState:
    state = AdamState()
    for name, p in params:
        state.m[name] = np.zeros_like(p.data)
        state.v[name] = np.zeros_like(p.data)
    return state


def adam_step(params, state: AdamState, lr: float, l2_reg: float = 0.0,
              beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> None:
    """One Adam update in place; gradients read from .grad (zero if unset)."""
    state.t += 1
    t = state.t
    bc1 = 1.0 - beta1**t
    bc2 = 1.0 - beta2**t
    for name, p in params:
        g = grad_or_zero(p)
        if g.shape != p.data.shape:
            raise ShapeMismatch(f"grad shape {g.shape} vs param {p.data.shape} for {name}")
        if l2_reg:
            g = g + l2_reg * p.data
        m = state.m[name]
        v = state.v[name]
        m[...] = beta1 * m + (1.0 - beta1) * g
        v[...] = beta2 * v + (1.0 - beta2) * (g * g)
        m_hat = m / bc1
        v_hat = v / bc2
        p.data = p.data - lr * m_hat / (np.sqrt(v_hat) + eps)


def augment(hr_patch: np.ndarray, lr_patch: np.ndarray, transform_id: int):
    """Apply one of the 8 dihedral transforms to both patches."""
    if not 0 <= transform_id <= 7:
        raise BadTransformId(f"transform id must be in 0..7, got {transform_id}")

    def tf(a):
        a = np.rot90(a, k=transform_id % 4, axes=(-2, -1))
        if transform_id >= 4:
            a = np.flip(a, axis=-1)
        return np.ascontiguousarray(a)

    return tf(hr_patch), tf(lr_patch)


def make_pairs(hr_images, scale: int):
    """Pair each HR image with its bicubic-downscaled LR counterpart."""
    pairs = []
    for hr in hr_images:
        hr = np.asarray(hr)
        lr = bicubic_resize(hr, 1.0 / scale)
        pairs.append((hr, lr))
    return pairs


def sample_patches(pairs, patch_size: int, batch: int, scale: int, rng):
    """Draw an aligned (hr, lr) patch batch; origins divisible by scale."""
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    for hr, _ in pairs:
        if hr.shape[-2] < patch_size or hr.shape[-1] < patch_size:
            raise ImageTooSmall(
                f"image {hr.shape[-2]}x{hr.shape[-1]} smaller than patch {patch_size}"
            )
    ps_lr = patch_size // scale
    hr_out = np.empty((batch, 3, patch_size, patch_size), dtype=np.float32)
    lr_out = np.empty((batch, 3, ps_lr, ps_lr), dtype=np.float32)
    for b in range(batch):
        hr, lr = pairs[int(rng.integers(0, len(pairs)))]
        oy = scale * int(rng.integers(0, (hr.shape[-2] - patch_size) // scale + 1))
        ox = scale * int(rng.integers(0, (hr.shape[-1] - patch_size) // scale + 1))
        hp = hr[:, oy : oy + patch_size, ox : ox + patch_size]
        lp = lr[:, oy // scale : oy // scale + ps_lr, ox // scale : ox // scale + ps_lr]
        tid = int(rng.integers(0, 8))
        hp, lp = augment(hp, lp, tid)
        hr_out[b] = hp
        lr_out[b] = lp
    return hr_out, lr_out


@dataclass
class TrainHistory:
    steps: list = field(default_factory=list)  # (step, epoch, lr, loss)
    val: list = field(default_factory=list)  # (epoch, psnr, ssim)

    def to_log_text(self) -> str:
        lines = ["step\tepoch\tlr\tloss"]
        for step, epoch, lr, loss in self.steps:
            lines.append(f"{step}\t{epoch}\t{lr:.10e}\t{loss:.10e}")
        return "\n".join(lines) + "\n"


def zero_grads(params) -> None:
    for _, p in params:
        p.grad = None


def train(model_cfg: ModelConfig, train_cfg: TrainConfig, hr_images,
          val_images=None, progress=None):
    """Run the full deterministic loop; returns (model, history)."""
    train_cfg.validate()
    if not hr_images:
        raise InvalidConfig("dataset is empty")
    model = build_model(model_cfg, seed=train_cfg.seed, dtype=np.float32)
    params = model.named_params()
    state = adam_init(params)
    pairs = make_pairs(hr_images, train_cfg.scale)
    rng = np.random.default_rng([train_cfg.seed, 0xDA7A])
    spe = train_cfg.steps_per_epoch or max(1, len(pairs))
    lr_patch = train_cfg.patch_size // train_cfg.scale

    history = TrainHistory()
    step = 0
    for epoch in range(train_cfg.epochs):
        lr = lr_at_epoch(epoch, train_cfg)
        for _ in range(spe):
            hr_b, lr_b = sample_patches(
                pairs, train_cfg.patch_size, train_cfg.batch_size, train_cfg.scale, rng
            )
            assert lr_b.shape[-1] == lr_patch
            pred = model_forward(model, lr_b)
            loss = loss_fn(train_cfg.loss, pred, Tensor(hr_b, _check=False))
            zero_grads(params)
            loss.backward()
            adam_step(params, state, lr, train_cfg.l2_reg)
            history.steps.append((step, epoch, lr, loss.item()))
            if progress:
                progress(step, epoch, lr, loss.item())
            step += 1
        if val_images:
            ps, ss = evaluate(model, val_images)
            history.val.append((epoch, ps, ss))
    return model, history


def crop_for_model(hr: np.ndarray, cfg: ModelConfig) -> np.ndarray:
    """Crop an HR image so the LR/half-resolution pipeline stays integral."""
    from .models import MWCNN_FAMILY

    div = cfg.scale * 2 ** (cfg.mwcnn_levels + 1 if cfg.kind in MWCNN_FAMILY else 2)
    h = (hr.shape[-2] // div) * div
    w = (hr.shape[-1] // div) * div
    if h < 1 or w < 1:
        raise ImageTooSmall(f"image {hr.shape[-2]}x{hr.shape[-1]} too small for divisor {div}")
    return hr[..., :h, :w]


def evaluate(model: Model, hr_images):
    """Mean PSNR/SSIM of the model against HR images (LR via bicubic)."""
    psnrs, ssims = [], []
    for hr in hr_images:
        hr = crop_for_model(np.asarray(hr), model.cfg)
        lr = bicubic_resize(hr, 1.0 / model.cfg.scale)
        sr = model_forward(model, lr[None]).data[0]
        psnrs.append(psnr(sr, hr))
        ssims.append(ssim(sr, hr))
    return float(np.mean(psnrs)), float(np.mean(ssims))
