"""Dense 4-D tensors with reverse-mode automatic differentiation.

Tensors are immutable numpy-backed values arranged as (batch, channel,
height, width).  Every operation records a closure on a per-pass tape so
that ``backward`` on a scalar loss fills ``.grad`` on all reachable
tensors that were created with ``requires_grad=True``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ChannelMismatch,
    NonFiniteValue,
    NonScalarLoss,
    ShapeMismatch,
    ShiftTooLarge,
)

# When enabled, every op output is checked for NaN/Inf (slow; used in tests).
_debug_checks = False


def set_debug_checks(flag: bool) -> None:
    global _debug_checks
    _debug_checks = bool(flag)


def _check_finite(data: np.ndarray, where: str) -> None:
    if not np.all(np.isfinite(data)):
        raise NonFiniteValue(f"non-finite value produced by {where}")


class Tensor:
    """A numpy array plus an optional autodiff record."""

    __slots__ = ("data", "grad", "requires_grad", "_prev")

    def __init__(self, data, requires_grad=False, _prev=None, _check=True):
        arr = np.asarray(data)
        if arr.dtype not in (np.float32, np.float64):
            arr = arr.astype(np.float64)
        self.data = arr
        self.grad = None
        self.requires_grad = bool(requires_grad)
        # list of (parent Tensor, fn mapping output grad -> parent grad)
        self._prev = _prev or []
        if _check:
            _check_finite(arr, "tensor construction")

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def detach(self) -> "Tensor":
        return Tensor(self.data, _check=False)

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype})"

    def backward(self) -> None:
        backward(self)


def tensor_new(shape, values, requires_grad=False) -> Tensor:
    """Build a tensor from a flat row-major value list."""
    shape = tuple(int(s) for s in shape)
    flat = np.asarray(values, dtype=np.float64).reshape(-1)
    n = int(np.prod(shape)) if shape else 1
    if flat.size != n:
        raise ShapeMismatch(f"{flat.size} values for shape {shape} (need {n})")
    if not np.all(np.isfinite(flat)):
        raise NonFiniteValue("non-finite value in tensor_new")
    return Tensor(flat.reshape(shape), requires_grad=requires_grad, _check=False)


def _make(data, prev):
    """Wrap an op result, tracking grads only if some parent needs them."""
    if _debug_checks:
        _check_finite(data, "op")
    needs = any(p.requires_grad or p._prev for p, _ in prev)
    if needs:
        return Tensor(data, _prev=prev, _check=False)
    return Tensor(data, _check=False)


def backward(loss: Tensor) -> None:
    """Reverse-accumulate gradients of a scalar into ``.grad`` fields."""
    if loss.data.size != 1:
        raise NonScalarLoss(f"loss has {loss.data.size} elements, expected 1")

    topo: list[Tensor] = []
    seen: set[int] = set()
    stack = [(loss, False)]
    while stack:
        node, done = stack.pop()
        if done:
            topo.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent, _ in node._prev:
            if id(parent) not in seen:
                stack.append((parent, False))

    grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    for node in reversed(topo):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if node.requires_grad:
            node.grad = g if node.grad is None else node.grad + g
        for parent, fn in node._prev:
            pg = fn(g)
            if id(parent) in grads:
                grads[id(parent)] = grads[id(parent)] + pg
            else:
                grads[id(parent)] = pg


def grad_or_zero(t: Tensor) -> np.ndarray:
    """Gradient of the last backward pass; zeros if unreachable."""
    return t.grad if t.grad is not None else np.zeros_like(t.data)


# ---------------------------------------------------------------------------
# Parameters


@dataclass
class ConvParams:
    """Weights of one k x k convolution (same-padded)."""

    weight: Tensor  # (c_out, c_in, k, k)
    bias: Tensor  # (c_out,)
    padding_mode: str = "replicate"

    def __post_init__(self):
        w = self.weight.data
        if w.ndim != 4 or w.shape[2] != w.shape[3]:
            raise ShapeMismatch(f"conv weight must be (c_out, c_in, k, k), got {w.shape}")
        if w.shape[2] % 2 != 1:
            raise ShapeMismatch(f"kernel size must be odd, got {w.shape[2]}")
        if self.bias.data.shape != (w.shape[0],):
            raise ShapeMismatch(
                f"bias shape {self.bias.data.shape} does not match c_out {w.shape[0]}"
            )
        if self.padding_mode not in ("replicate", "zero"):
            raise ShapeMismatch(f"unknown padding mode {self.padding_mode!r}")

    @property
    def c_in(self) -> int:
        return self.weight.data.shape[1]

    @property
    def c_out(self) -> int:
        return self.weight.data.shape[0]

    @property
    def k(self) -> int:
        return self.weight.data.shape[2]


def conv_init(c_in, c_out, k, rng, padding_mode="replicate", dtype=np.float32) -> ConvParams:
    """Fan-in uniform init in +-sqrt(1/(c_in*k*k)), deterministic under rng."""
    limit = float(np.sqrt(1.0 / (c_in * k * k)))
    w = rng.uniform(-limit, limit, size=(c_out, c_in, k, k)).astype(dtype)
    b = rng.uniform(-limit, limit, size=(c_out,)).astype(dtype)
    return ConvParams(
        Tensor(w, requires_grad=True, _check=False),
        Tensor(b, requires_grad=True, _check=False),
        padding_mode=padding_mode,
    )


def conv_zero(c_in, c_out, k, padding_mode="replicate", dtype=np.float32) -> ConvParams:
    w = np.zeros((c_out, c_in, k, k), dtype=dtype)
    b = np.zeros((c_out,), dtype=dtype)
    return ConvParams(
        Tensor(w, requires_grad=True, _check=False),
        Tensor(b, requires_grad=True, _check=False),
        padding_mode=padding_mode,
    )


# ---------------------------------------------------------------------------
# Padding helpers

def _pad_input(x: np.ndarray, p: int, mode: str) -> np.ndarray:
    if p == 0:
        return x
    spec = ((0, 0), (0, 0), (p, p), (p, p))
    if mode == "replicate":
        return np.pad(x, spec, mode="edge")
    return np.pad(x, spec, mode="constant")


def _unpad_grad(gxp: np.ndarray, p: int, mode: str, h: int, w: int) -> np.ndarray:
    """Map a gradient w.r.t. the padded array back to the source array."""
    if p == 0:
        return gxp
    if mode == "replicate":
        # Edge replication is separable, so folding rows then columns is exact.
        gxp = gxp.copy()
        gxp[:, :, p, :] += gxp[:, :, :p, :].sum(axis=2)
        gxp[:, :, h + p - 1, :] += gxp[:, :, h + p :, :].sum(axis=2)
        gxp = gxp[:, :, p : h + p, :]
        gxp[:, :, :, p] += gxp[:, :, :, :p].sum(axis=3)
        gxp[:, :, :, w + p - 1] += gxp[:, :, :, w + p :].sum(axis=3)
        return gxp[:, :, :, p : w + p]
    return gxp[:, :, p : h + p, p : w + p]


# ---------------------------------------------------------------------------
# Differentiable ops


def conv2d(x: Tensor, p: ConvParams) -> Tensor:
    """Same-padded 2-D convolution (cross-correlation), differentiable."""
    n, c, h, w = x.data.shape
    if c != p.c_in:
        raise ChannelMismatch(f"input has {c} channels, conv expects {p.c_in}")
    k = p.k
    pad = k // 2
    xp = _pad_input(x.data, pad, p.padding_mode)
    windows = np.lib.stride_tricks.sliding_window_view(xp, (k, k), axis=(2, 3))
    wgt = p.weight.data
    y = np.einsum("nchwij,ocij->nohw", windows, wgt, optimize=True)
    y = y + p.bias.data[None, :, None, None]

    def grad_x(gy):
        gxp = np.zeros_like(xp)
        for i in range(k):
            for j in range(k):
                gxp[:, :, i : i + h, j : j + w] += np.einsum(
                    "nohw,oc->nchw", gy, wgt[:, :, i, j], optimize=True
                )
        return _unpad_grad(gxp, pad, p.padding_mode, h, w)

    def grad_w(gy):
        return np.einsum("nohw,nchwij->ocij", gy, windows, optimize=True)

    def grad_b(gy):
        return gy.sum(axis=(0, 2, 3))

    return _make(y, [(x, grad_x), (p.weight, grad_w), (p.bias, grad_b)])


def shift2d(x: Tensor, dx: int, dy: int, padding_mode: str = "replicate") -> Tensor:
    """y[i, j] = x[i + dy, j + dx], out-of-range reads per padding mode."""
    n, c, h, w = x.data.shape
    if max(abs(dx), abs(dy)) >= min(h, w):
        raise ShiftTooLarge(f"shift ({dx}, {dy}) too large for {h}x{w}")
    rows = np.arange(h) + dy
    cols = np.arange(w) + dx
    if padding_mode == "replicate":
        ridx = np.clip(rows, 0, h - 1)
        cidx = np.clip(cols, 0, w - 1)
        y = x.data[:, :, ridx[:, None], cidx[None, :]]

        def grad_x(gy):
            gx = np.zeros_like(x.data)
            np.add.at(gx, (slice(None), slice(None), ridx[:, None], cidx[None, :]), gy)
            return gx

    else:
        ridx = np.clip(rows, 0, h - 1)
        cidx = np.clip(cols, 0, w - 1)
        valid = ((rows >= 0) & (rows < h))[:, None] & ((cols >= 0) & (cols < w))[None, :]
        y = x.data[:, :, ridx[:, None], cidx[None, :]] * valid

        def grad_x(gy):
            gx = np.zeros_like(x.data)
            np.add.at(
                gx,
                (slice(None), slice(None), ridx[:, None], cidx[None, :]),
                gy * valid,
            )
            return gx

    return _make(y, [(x, grad_x)])


def add(a: Tensor, b: Tensor) -> Tensor:
    if a.data.shape != b.data.shape:
        raise ShapeMismatch(f"add: {a.data.shape} vs {b.data.shape}")
    return _make(a.data + b.data, [(a, lambda g: g), (b, lambda g: g)])


def sub(a: Tensor, b: Tensor) -> Tensor:
    if a.data.shape != b.data.shape:
        raise ShapeMismatch(f"sub: {a.data.shape} vs {b.data.shape}")
    return _make(a.data - b.data, [(a, lambda g: g), (b, lambda g: -g)])


def mul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.shape != b.data.shape:
        raise ShapeMismatch(f"mul: {a.data.shape} vs {b.data.shape}")
    ad, bd = a.data, b.data
    return _make(ad * bd, [(a, lambda g: g * bd), (b, lambda g: g * ad)])


def scale(a: Tensor, s: float) -> Tensor:
    s = float(s)
    return _make(a.data * s, [(a, lambda g: g * s)])


def concat_channels(*tensors: Tensor) -> Tensor:
    first = tensors[0].data.shape
    for t in tensors[1:]:
        s = t.data.shape
        if (s[0], s[2], s[3]) != (first[0], first[2], first[3]):
            raise ShapeMismatch(f"concat: {s} incompatible with {first}")
    data = np.concatenate([t.data for t in tensors], axis=1)
    prev = []
    off = 0
    for t in tensors:
        c = t.data.shape[1]
        lo, hi = off, off + c

        def grad_t(g, lo=lo, hi=hi):
            return g[:, lo:hi]

        prev.append((t, grad_t))
        off += c
    return _make(data, prev)


def activation(x: Tensor, kind: str) -> Tensor:
    if kind == "relu":
        y = np.maximum(x.data, 0)
        mask = (x.data > 0).astype(x.data.dtype)
        return _make(y, [(x, lambda g: g * mask)])
    if kind == "sigmoid":
        # exp on the non-positive branch only, so large |x| cannot overflow
        pos = x.data >= 0
        e = np.exp(np.where(pos, -x.data, x.data))
        y = np.where(pos, 1.0 / (1.0 + e), e / (1.0 + e)).astype(x.data.dtype)
        return _make(y, [(x, lambda g: g * y * (1.0 - y))])
    if kind == "tanh":
        y = np.tanh(x.data)
        return _make(y, [(x, lambda g: g * (1.0 - y * y))])
    raise ShapeMismatch(f"unknown activation {kind!r}")


def abs_(x: Tensor) -> Tensor:
    # sign(0) == 0: subgradient 0 at ties, deterministic.
    s = np.sign(x.data)
    return _make(np.abs(x.data), [(x, lambda g: g * s)])


def sum_(x: Tensor) -> Tensor:
    return _make(
        np.array(x.data.sum()).reshape(()),
        [(x, lambda g: np.broadcast_to(g, x.data.shape).astype(x.data.dtype, copy=False))],
    )


def mean(x: Tensor) -> Tensor:
    n = x.data.size
    return _make(
        np.array(x.data.mean()).reshape(()),
        [(x, lambda g: (np.broadcast_to(g, x.data.shape) / n).astype(x.data.dtype, copy=False))],
    )


# ---------------------------------------------------------------------------
# Gradient checking


@dataclass
class GradReport:
    """Comparison of analytic gradients against central finite differences."""

    per_param: dict = field(default_factory=dict)  # name -> max relative error
    tol: float = 1e-4
    passed: bool = False

    @property
    def max_rel_err(self) -> float:
        return max(self.per_param.values()) if self.per_param else 0.0

    def summary(self) -> str:
        lines = [
            f"  {name}: max rel err {err:.3e}" for name, err in sorted(self.per_param.items())
        ]
        verdict = "PASS" if self.passed else "FAIL"
        return f"grad check {verdict} (tol {self.tol:g})\n" + "\n".join(lines)


def grad_check(f, params, tol=1e-4, step=1e-5) -> GradReport:
    """Compare analytic gradients of a scalar-valued f() with central differences.

    ``params`` is a list of (name, Tensor) pairs; f must close over them and
    return a scalar Tensor.  Tensors should hold 64-bit data.
    """
    for _, p in params:
        p.grad = None
    loss = f()
    backward(loss)
    analytic = {name: grad_or_zero(p).copy() for name, p in params}

    report = GradReport(tol=tol)
    for name, p in params:
        flat = p.data.reshape(-1)
        num = np.zeros_like(flat)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            hi = f().item()
            flat[i] = orig - step
            lo = f().item()
            flat[i] = orig
            num[i] = (hi - lo) / (2.0 * step)
        a = analytic[name].reshape(-1)
        denom = np.maximum(np.maximum(np.abs(a), np.abs(num)), 1e-8)
        report.per_param[name] = float(np.max(np.abs(a - num) / denom))
    report.passed = report.max_rel_err < tol
    return report
