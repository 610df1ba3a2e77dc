"""PNG decode/encode, synthetic dataset generation, dataset manifests,
and bit-exact checkpoint serialization.

Checkpoint layout (all little-endian, version 1):

    line 1: b"WSRCKPT1\\n"
    line 2: one JSON object + b"\\n" with keys
            model_config, train_config (or null), seed, step, params
            (params: list of {"name", "shape"} in declaration order)
    then:   concatenated raw float32 parameter data in listed order
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np
from PIL import Image as PILImage

from .errors import BadSize, CorruptPayload, DecodeError, VersionMismatch, WavesrError
from .models import Model, ModelConfig, build_model
from .wavelet import dwt2_array

CKPT_MAGIC = b"WSRCKPT1\n"


# ---------------------------------------------------------------------------
# PNG


def load_png(path) -> np.ndarray:
    """Load an 8- or 16-bit RGB/grayscale PNG as (3, h, w) floats in [0, 1]."""
    try:
        with PILImage.open(path) as im:
            im.load()
            mode = im.mode
            if mode in ("I;16", "I"):
                arr = np.asarray(im, dtype=np.float64) / 65535.0
                arr = np.repeat(arr[None], 3, axis=0)
            elif mode == "L":
                arr = np.asarray(im, dtype=np.float64) / 255.0
                arr = np.repeat(arr[None], 3, axis=0)
            elif mode in ("RGB", "RGBA"):
                a = np.asarray(im.convert("RGB"), dtype=np.float64) / 255.0
                arr = a.transpose(2, 0, 1)
            else:
                a = np.asarray(im.convert("RGB"), dtype=np.float64) / 255.0
                arr = a.transpose(2, 0, 1)
    except (OSError, SyntaxError, ValueError) as e:
        raise DecodeError(f"cannot decode {path}: {e}") from e
    return np.ascontiguousarray(arr)


def save_png(img, path) -> None:
    """Clamp to [0, 1], quantize to 8-bit, write RGB (or grayscale) PNG."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim == 4:
        arr = arr[0]
    arr = np.clip(arr, 0.0, 1.0)
    q = np.round(arr * 255.0).astype(np.uint8)
    if q.shape[0] == 1:
        PILImage.fromarray(q[0], mode="L").save(path)
    else:
        PILImage.fromarray(q.transpose(1, 2, 0), mode="RGB").save(path)


# ---------------------------------------------------------------------------
# Synthetic dataset


def _band_limited_noise(rng, size, cutoff_frac):
    """White noise low-passed in the Fourier domain."""
    noise = rng.standard_normal((size, size))
    spec = np.fft.rfft2(noise)
    fy = np.fft.fftfreq(size)[:, None]
    fx = np.fft.rfftfreq(size)[None, :]
    mask = (fy * fy + fx * fx) <= cutoff_frac * cutoff_frac
    out = np.fft.irfft2(spec * mask, s=(size, size))
    peak = np.max(np.abs(out))
    return out / peak if peak > 0 else out


def gen_synthetic(seed: int, count: int, size: int):
    """Deterministic images mixing gradients, oriented edges, and
    band-limited noise, each (3, size, size) in [0, 1]."""
    if size % 2 or size < 32:
        raise BadSize(f"size must be even and >= 32, got {size}")
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    images = []
    for _ in range(count):
        img = np.zeros((3, size, size))
        for c in range(3):
            ang = rng.uniform(0, 2 * np.pi)
            base = 0.5 + 0.2 * (
                np.cos(ang) * (xx / size - 0.5) + np.sin(ang) * (yy / size - 0.5)
            )
            # dense mid-frequency gratings: below the LR Nyquist limit for 2x,
            # so the content survives downscaling but interpolation attenuates it
            for _ in range(int(rng.integers(3, 6))):
                f = rng.uniform(0.10, 0.21)  # cycles per HR pixel
                oa = rng.uniform(0, np.pi)
                ph = rng.uniform(0, 2 * np.pi)
                base = base + rng.uniform(0.10, 0.22) * np.sin(
                    2 * np.pi * f * (np.cos(oa) * xx + np.sin(oa) * yy) + ph
                )
            # hard oriented edges so the detail subbands carry real energy
            for _ in range(int(rng.integers(1, 3))):
                ea = rng.uniform(0, 2 * np.pi)
                off = rng.uniform(0.2, 0.8)
                d = np.cos(ea) * (xx / size - off) + np.sin(ea) * (yy / size - off)
                base = base + rng.uniform(-0.25, 0.25) * np.tanh(rng.uniform(150, 500) * d)
            base = base + 0.02 * _band_limited_noise(rng, size, rng.uniform(0.05, 0.2))
            img[c] = base
        lo, hi = img.min(), img.max()
        img = (img - lo) / (hi - lo) if hi > lo else np.full_like(img, 0.5)
        images.append(np.ascontiguousarray(img))
    return images


def detail_energy(img: np.ndarray) -> float:
    """Sum of squares of the H/V/D subbands of one image."""
    s = dwt2_array(np.asarray(img)[None])
    c = s.shape[1] // 4
    return float(np.sum(s[:, c:] ** 2))


# ---------------------------------------------------------------------------
# Checkpoints


def save_checkpoint(model: Model, path, train_config=None, seed=None, step=0) -> None:
    params = model.named_params()
    header = {
        "model_config": model.cfg.to_dict(),
        "train_config": train_config.to_dict() if train_config is not None else None,
        "seed": seed,
        "step": step,
        "params": [{"name": n, "shape": list(p.data.shape)} for n, p in params],
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode() + b"\n"
    with open(path, "wb") as f:
        f.write(CKPT_MAGIC)
        f.write(blob)
        for _, p in params:
            f.write(np.ascontiguousarray(p.data, dtype="<f4").tobytes())


def load_checkpoint(path) -> tuple[Model, dict]:
    """Rebuild the model with bitwise-identical float32 parameters."""
    with open(path, "rb") as f:
        magic = f.read(len(CKPT_MAGIC))
        if magic != CKPT_MAGIC:
            raise VersionMismatch(f"bad checkpoint magic {magic!r}")
        header_line = f.readline()
        try:
            header = json.loads(header_line)
        except json.JSONDecodeError as e:
            raise CorruptPayload(f"unreadable checkpoint header: {e}") from e
        payload = f.read()

    cfg = ModelConfig.from_dict(header["model_config"])
    model = build_model(cfg, seed=header.get("seed") or 0, dtype=np.float32, zero_init=True)
    params = model.named_params()
    declared = header.get("params", [])
    if [n for n, _ in params] != [d["name"] for d in declared]:
        raise CorruptPayload("parameter names do not match the declared model config")
    for (name, p), d in zip(params, declared):
        if list(p.data.shape) != list(d["shape"]):
            raise CorruptPayload(f"shape mismatch for {name}")
    total = sum(p.data.size for _, p in params) * 4
    if len(payload) != total:
        raise CorruptPayload(f"payload is {len(payload)} bytes, expected {total}")
    off = 0
    for name, p in params:
        nbytes = p.data.size * 4
        arr = np.frombuffer(payload[off : off + nbytes], dtype="<f4").reshape(p.data.shape)
        p.data = arr.copy()
        off += nbytes
    return model, header


# ---------------------------------------------------------------------------
# Manifests


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(hr_paths, scale: int, path) -> None:
    lines = [f"scale\t{scale}"]
    for p in hr_paths:
        lines.append(f"{file_sha256(p)}\t{Path(p).as_posix()}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_manifest(path):
    """Return (scale, hr_paths); verifies existence and hashes."""
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith("scale\t"):
        raise WavesrError(f"manifest {path} missing scale header")
    scale = int(lines[0].split("\t")[1])
    paths = []
    for line in lines[1:]:
        if not line.strip():
            continue
        digest, p = line.split("\t")
        if not Path(p).exists():
            raise WavesrError(f"manifest entry missing on disk: {p}")
        if file_sha256(p) != digest:
            raise WavesrError(f"manifest hash mismatch for {p}")
        paths.append(p)
    return scale, paths
