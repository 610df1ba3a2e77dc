"""Complete super-resolution networks built from the tensor core: the
10-layer wavelet-residual baseline, its differential-amplifier variants,
the direct (image-space) variants, and a small wavelet U-Net."""

from __future__ import annotations

from dataclasses import dataclass, field, asdict
from enum import Enum

import numpy as np

from . import tensor as T
from .dwa import DwaConfig, DwaParams, dwa_forward, dwa_init, dwa_zero
from .errors import InvalidConfig, ShapeIncompatible
from .metrics import bicubic_resize
from .tensor import ConvParams, Tensor
from .wavelet import dwt2, idwt2


class ModelKind(str, Enum):
    DWSR = "dwsr"
    DWSR_DWA = "dwsr_dwa"
    DWA_DIRECT_DWSR = "dwa_direct_dwsr"
    MWCNN_MINI = "mwcnn_mini"
    MWCNN_MINI_DWA = "mwcnn_mini_dwa"
    DWA_DIRECT_MWCNN = "dwa_direct_mwcnn"


DWSR_FAMILY = {ModelKind.DWSR, ModelKind.DWSR_DWA, ModelKind.DWA_DIRECT_DWSR}
MWCNN_FAMILY = {ModelKind.MWCNN_MINI, ModelKind.MWCNN_MINI_DWA, ModelKind.DWA_DIRECT_MWCNN}
DIRECT_KINDS = {ModelKind.DWA_DIRECT_DWSR, ModelKind.DWA_DIRECT_MWCNN}
DWA_KINDS = {
    ModelKind.DWSR_DWA,
    ModelKind.DWA_DIRECT_DWSR,
    ModelKind.MWCNN_MINI_DWA,
    ModelKind.DWA_DIRECT_MWCNN,
}


@dataclass
class ModelConfig:
    kind: ModelKind
    depth: int = 10  # body conv layers, DWSR family only
    width: int = 64
    scale: int = 2
    dwa: DwaConfig | None = None  # c_in/c_final are overridden by the channel plan
    mwcnn_levels: int = 2
    mwcnn_block_convs: int = 2

    def __post_init__(self):
        self.kind = ModelKind(self.kind)

    def validate(self) -> None:
        if self.depth < 2:
            raise InvalidConfig(f"depth must be >= 2, got {self.depth}")
        if self.width < 1:
            raise InvalidConfig(f"width must be >= 1, got {self.width}")
        if self.scale not in (2, 3, 4):
            raise InvalidConfig(f"scale must be 2, 3 or 4, got {self.scale}")
        if self.mwcnn_levels < 1:
            raise InvalidConfig(f"mwcnn_levels must be >= 1, got {self.mwcnn_levels}")
        if self.mwcnn_block_convs < 1:
            raise InvalidConfig(f"mwcnn_block_convs must be >= 1, got {self.mwcnn_block_convs}")
        if self.dwa is not None:
            self.dwa.validate()

    def to_dict(self) -> dict:
        d = asdict(self)
        d["kind"] = self.kind.value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        d = dict(d)
        if d.get("dwa") is not None:
            d["dwa"] = DwaConfig(**d["dwa"])
        return cls(**d)


class ConvLayer:
    def __init__(self, params: ConvParams, act: str | None = None):
        self.params = params
        self.act = act

    def forward(self, x: Tensor) -> Tensor:
        y = T.conv2d(x, self.params)
        return T.activation(y, self.act) if self.act else y

    def named_params(self, prefix: str):
        return [(f"{prefix}.weight", self.params.weight), (f"{prefix}.bias", self.params.bias)]


class DwaLayer:
    def __init__(self, cfg: DwaConfig, params: DwaParams, act: str | None = None):
        self.cfg = cfg
        self.params = params
        self.act = act

    def forward(self, x: Tensor) -> Tensor:
        y = dwa_forward(x, self.params, self.cfg)
        return T.activation(y, self.act) if self.act else y

    def named_params(self, prefix: str):
        return self.params.named(prefix + ".")


@dataclass
class Model:
    cfg: ModelConfig
    layers: list = field(default_factory=list)  # DWSR family body
    enc_blocks: list = field(default_factory=list)  # U-Net family
    dec_expand: list = field(default_factory=list)
    dec_blocks: list = field(default_factory=list)
    final: ConvLayer | None = None

    def named_params(self):
        out = []
        for i, layer in enumerate(self.layers):
            out.extend(layer.named_params(f"layer{i:02d}"))
        for bi, block in enumerate(self.enc_blocks):
            for li, layer in enumerate(block):
                out.extend(layer.named_params(f"enc{bi}.conv{li}"))
        for bi, (expand, block) in enumerate(zip(self.dec_expand, self.dec_blocks)):
            out.extend(expand.named_params(f"dec{bi}.expand"))
            for li, layer in enumerate(block):
                out.extend(layer.named_params(f"dec{bi}.conv{li}"))
        if self.final is not None:
            out.extend(self.final.named_params("final"))
        return out

    def first_layer(self):
        if self.layers:
            return self.layers[0]
        return self.enc_blocks[0][0]


def _dwa_cfg_for(cfg: ModelConfig, c_in: int, c_final: int) -> DwaConfig:
    base = cfg.dwa or DwaConfig(c_in=c_in)
    return DwaConfig(
        c_in=c_in,
        c_f=base.c_f,
        c_final=c_final,
        k=base.k,
        s=base.s,
        nonlinearity=base.nonlinearity,
        padding_mode=base.padding_mode,
    )


def build_model(cfg: ModelConfig, seed: int, dtype=np.float32, zero_init=False) -> Model:
    """Deterministic model construction under (cfg, seed)."""
    cfg.validate()
    rng = np.random.default_rng(seed)
    kind = cfg.kind
    w = cfg.width

    def conv(ci, co, act=None):
        if zero_init:
            return ConvLayer(T.conv_zero(ci, co, 3, dtype=dtype), act)
        return ConvLayer(T.conv_init(ci, co, 3, rng, dtype=dtype), act)

    def dwa(ci, co, act=None):
        dcfg = _dwa_cfg_for(cfg, ci, co)
        params = dwa_zero(dcfg, dtype=dtype) if zero_init else dwa_init(dcfg, rng, dtype=dtype)
        return DwaLayer(dcfg, params, act)

    m = Model(cfg=cfg)
    if kind in DWSR_FAMILY:
        c_in = 3 if kind is ModelKind.DWA_DIRECT_DWSR else 12
        first = dwa(c_in, w, act="relu") if kind in DWA_KINDS else conv(c_in, w, act="relu")
        m.layers = [first]
        for _ in range(cfg.depth - 2):
            m.layers.append(conv(w, w, act="relu"))
        m.layers.append(conv(w, 12))
        return m

    # U-Net family.  The first block sits one transform below image space
    # (12 channels), or at half image resolution for the direct kind.
    c_in = 3 if kind is ModelKind.DWA_DIRECT_MWCNN else 12
    bc = cfg.mwcnn_block_convs
    first = dwa(c_in, w, act="relu") if kind in DWA_KINDS else conv(c_in, w, act="relu")
    block0 = [first] + [conv(w, w, act="relu") for _ in range(bc - 1)]
    m.enc_blocks = [block0]
    for _ in range(cfg.mwcnn_levels - 1):
        m.enc_blocks.append(
            [conv(4 * w, w, act="relu")] + [conv(w, w, act="relu") for _ in range(bc - 1)]
        )
    for _ in range(cfg.mwcnn_levels - 1):
        m.dec_expand.append(conv(w, 4 * w))
        m.dec_blocks.append([conv(w, w, act="relu") for _ in range(bc)])
    m.final = conv(w, 12)
    return m


def count_params(m: Model) -> int:
    return sum(t.data.size for _, t in m.named_params())


def _run_block(block, x: Tensor) -> Tensor:
    for layer in block:
        x = layer.forward(x)
    return x


def _unet_forward(m: Model, x: Tensor) -> Tensor:
    """Encoder/decoder with wavelet down/up sampling and additive skips."""
    skips = []
    f = _run_block(m.enc_blocks[0], x)
    skips.append(f)
    for block in m.enc_blocks[1:]:
        f = _run_block(block, dwt2(f))
        skips.append(f)
    g = skips[-1]
    for i in range(len(m.dec_expand) - 1, -1, -1):
        u = idwt2(m.dec_expand[i].forward(g))
        g = _run_block(m.dec_blocks[i], T.add(u, skips[i]))
    return m.final.forward(g)


def _half_upscale(lr: np.ndarray, r: int) -> np.ndarray:
    """Bicubic to half the target resolution; fractional for r = 3."""
    b = bicubic_resize(lr, r / 2)
    h, w = lr.shape[-2], lr.shape[-1]
    if 2 * b.shape[-2] != r * h or 2 * b.shape[-1] != r * w:
        raise ShapeIncompatible(
            f"half-resolution size {b.shape[-2]}x{b.shape[-1]} cannot double to {r*h}x{r*w}"
        )
    return b


def first_layer_features(m: Model, lr) -> np.ndarray:
    """Feature maps after the first layer, on the pipeline's first-layer input."""
    cfg = m.cfg
    arr = lr.data if isinstance(lr, Tensor) else np.asarray(lr)
    if cfg.kind in DIRECT_KINDS:
        x = Tensor(_half_upscale(arr, cfg.scale), _check=False)
    else:
        x = dwt2(Tensor(bicubic_resize(arr, cfg.scale), _check=False))
    return m.first_layer().forward(x).data


def model_forward(m: Model, lr) -> Tensor:
    """LR (n,3,h,w) to SR (n,3,rh,rw).  Output is not clamped."""
    cfg = m.cfg
    r = cfg.scale
    arr = lr.data if isinstance(lr, Tensor) else np.asarray(lr)
    if arr.ndim != 4 or arr.shape[1] != 3:
        raise ShapeIncompatible(f"expected (n,3,h,w) input, got {arr.shape}")
    kind = cfg.kind

    if kind in DIRECT_KINDS:
        half = Tensor(_half_upscale(arr, r), _check=False)
        if half.data.shape[2] % 2 or half.data.shape[3] % 2:
            raise ShapeIncompatible("half-resolution dims must be even")
        if kind is ModelKind.DWA_DIRECT_DWSR:
            out12 = half
            for layer in m.layers:
                out12 = layer.forward(out12)
        else:
            div = 2 ** (cfg.mwcnn_levels - 1)
            if half.data.shape[2] % div or half.data.shape[3] % div:
                raise ShapeIncompatible(
                    f"half-resolution dims must divide 2^{cfg.mwcnn_levels - 1}"
                )
            out12 = _unet_forward(m, half)
        full = Tensor(bicubic_resize(arr, r), _check=False)
        return T.add(idwt2(out12), full)

    b = bicubic_resize(arr, r)
    if b.shape[2] % 2 or b.shape[3] % 2:
        raise ShapeIncompatible(f"target size {b.shape[2]}x{b.shape[3]} must be even")
    bt = Tensor(b, _check=False)
    z = dwt2(bt)
    if kind in (ModelKind.DWSR, ModelKind.DWSR_DWA):
        out = z
        for layer in m.layers:
            out = layer.forward(out)
        # Residual added in the wavelet domain.
        return idwt2(T.add(out, z))
    div = 2 ** (cfg.mwcnn_levels - 1)
    if z.data.shape[2] % div or z.data.shape[3] % div:
        raise ShapeIncompatible(f"target size must divide 2^{cfg.mwcnn_levels}")
    out12 = _unet_forward(m, z)
    # Residual added in image space.
    return T.add(idwt2(out12), bt)
