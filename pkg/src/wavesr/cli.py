"""Command-line entry point: train, eval, sr, gradcheck, selftest,
ablate, dump-features."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import checks, data_io
from .dwa import DwaConfig
from .errors import WavesrError
from .metrics import bicubic_resize, psnr, ssim, to_luma
from .models import (
    DIRECT_KINDS,
    ModelConfig,
    ModelKind,
    build_model,
    count_params,
    first_layer_features,
    model_forward,
)
from .training import TrainConfig, crop_for_model, evaluate, train

MODEL_CHOICES = [k.value for k in ModelKind]


def _load_dataset(spec: str):
    """Either a directory of PNGs or synthetic:SEED:COUNT:SIZE."""
    if spec.startswith("synthetic:"):
        parts = spec.split(":")
        if len(parts) != 4:
            raise WavesrError(f"bad synthetic spec {spec!r}, want synthetic:SEED:COUNT:SIZE")
        seed, count, size = (int(p) for p in parts[1:])
        return data_io.gen_synthetic(seed, count, size)
    root = Path(spec)
    if not root.is_dir():
        raise WavesrError(f"--data {spec!r} is not a directory or synthetic spec")
    paths = sorted(root.glob("*.png"))
    if not paths:
        raise WavesrError(f"no PNG files in {spec}")
    return [data_io.load_png(p) for p in paths]


def _write_run_record(out_dir: Path, args: argparse.Namespace) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    record = {k: v for k, v in vars(args).items() if k != "func"}
    record["argv"] = sys.argv[1:]
    (out_dir / "run_config.json").write_text(json.dumps(record, indent=2, sort_keys=True) + "\n")


def _model_config(args) -> ModelConfig:
    dwa = DwaConfig(c_in=3, c_f=args.cf, s=args.stride, nonlinearity=args.nonlinearity)
    return ModelConfig(
        kind=ModelKind(args.model),
        depth=args.depth,
        width=args.width,
        scale=args.scale,
        dwa=dwa,
        mwcnn_levels=args.levels,
    )


def _fmt(x: float) -> str:
    return "inf" if np.isinf(x) else f"{x:.4f}"


def cmd_train(args) -> int:
    out_dir = Path(args.out_dir)
    _write_run_record(out_dir, args)
    model_cfg = _model_config(args)
    train_cfg = TrainConfig(
        loss=args.loss,
        epochs=args.epochs,
        steps_per_epoch=args.steps_per_epoch,
        batch_size=args.batch,
        patch_size=args.patch,
        seed=args.seed,
        scale=args.scale,
    )
    dataset = _load_dataset(args.data)
    val = _load_dataset(args.val_data) if args.val_data else None

    def progress(step, epoch, lr, loss):
        if step % 25 == 0:
            print(f"step {step:6d}  epoch {epoch:3d}  lr {lr:.3e}  loss {loss:.6f}")

    model, history = train(model_cfg, train_cfg, dataset, val_images=val, progress=progress)
    data_io.save_checkpoint(
        model, out_dir / "checkpoint.wsr", train_config=train_cfg, seed=args.seed,
        step=len(history.steps),
    )
    (out_dir / "history.log").write_text(history.to_log_text())
    print(f"trained {count_params(model)} parameters, "
          f"final loss {history.steps[-1][3]:.6f}, wrote {out_dir}/checkpoint.wsr")
    return 0


def cmd_eval(args) -> int:
    model, _ = data_io.load_checkpoint(args.ckpt)
    images = _load_dataset(args.data)
    use_y = args.metric_channel == "y"
    rows = []
    for i, hr in enumerate(images):
        hr = crop_for_model(np.asarray(hr), model.cfg)
        lr = bicubic_resize(hr, 1.0 / model.cfg.scale)
        sr = model_forward(model, lr[None]).data[0]
        base = bicubic_resize(lr, float(model.cfg.scale))
        if use_y:
            hr_s, sr_s, base_s = to_luma(hr), to_luma(sr), to_luma(base)
        else:
            hr_s, sr_s, base_s = hr, sr, base
        rows.append((f"image{i:03d}", psnr(sr_s, hr_s), ssim(sr_s, hr_s),
                     psnr(base_s, hr_s), ssim(base_s, hr_s)))
    print(f"{'image':<10} {'psnr':>9} {'ssim':>7}   {'bicubic_psnr':>12} {'bicubic_ssim':>12}")
    for name, p_m, s_m, p_b, s_b in rows:
        print(f"{name:<10} {_fmt(p_m):>9} {_fmt(s_m):>7}   {_fmt(p_b):>12} {_fmt(s_b):>12}")
    mean = lambda i: float(np.mean([r[i] for r in rows]))
    print(f"{'mean':<10} {_fmt(mean(1)):>9} {_fmt(mean(2)):>7}   "
          f"{_fmt(mean(3)):>12} {_fmt(mean(4)):>12}")
    if args.out_dir:
        _write_run_record(Path(args.out_dir), args)
    return 0


def cmd_sr(args) -> int:
    out_dir = Path(args.out_dir)
    _write_run_record(out_dir, args)
    model, _ = data_io.load_checkpoint(args.ckpt)
    lr = data_io.load_png(args.input)
    sr = model_forward(model, lr[None]).data[0]
    data_io.save_png(sr, out_dir / "sr.png")
    print(f"wrote {out_dir}/sr.png ({sr.shape[-2]}x{sr.shape[-1]})")
    if args.residual:
        base = bicubic_resize(lr, float(model.cfg.scale))
        # mid-gray offset so signed residuals are visible
        data_io.save_png(sr - base + 0.5, out_dir / "residual.png")
        print(f"wrote {out_dir}/residual.png")
    return 0


def cmd_gradcheck(args) -> int:
    results = checks.gradcheck_suite()
    ok = True
    for name, rep in results:
        status = "PASS" if rep.passed else "FAIL"
        print(f"{status}  {name:<28} max rel err {rep.max_rel_err:.3e} (tol {rep.tol:g})")
        ok = ok and rep.passed
    if args.out_dir:
        _write_run_record(Path(args.out_dir), args)
    return 0 if ok else 2


def cmd_selftest(args) -> int:
    ok = True
    rt, en = checks.check_wavelet_exactness()
    line_ok = rt < 1e-6 and en < 1e-9
    ok = ok and line_ok
    print(f"{'PASS' if line_ok else 'FAIL'}  wavelet round trip {rt:.3e} / energy {en:.3e}")
    cmr = checks.check_cmr()
    line_ok = cmr == 0.0
    ok = ok and line_ok
    print(f"{'PASS' if line_ok else 'FAIL'}  common-mode rejection residue {cmr:.3e}")
    for kind, err in checks.check_zero_network_identity().items():
        exact = ModelKind(kind) in DIRECT_KINDS
        line_ok = err == 0.0 if exact else err < 1e-6
        ok = ok and line_ok
        print(f"{'PASS' if line_ok else 'FAIL'}  zero-network identity {kind}: {err:.3e}")
    if args.out_dir:
        _write_run_record(Path(args.out_dir), args)
    return 0 if ok else 2


def cmd_ablate(args) -> int:
    out_dir = Path(args.out_dir)
    _write_run_record(out_dir, args)
    dataset = _load_dataset(args.data)
    if len(dataset) < 2:
        raise WavesrError("ablation needs at least 2 images (last is held out)")
    train_set, val_set = dataset[:-1], dataset[-1:]
    strides = [int(s) for s in args.strides.split(",")]
    seeds = [int(s) for s in args.seeds.split(",")]
    depths = [int(d) for d in args.depths.split(",")] if args.depths else [args.depth]

    rows = []
    for depth in depths:
        for stride in strides:
            per_seed = []
            for seed in seeds:
                mc = ModelConfig(
                    kind=ModelKind(args.model), depth=depth, width=args.width,
                    scale=args.scale,
                    dwa=DwaConfig(c_in=3, c_f=args.cf, s=stride,
                                  nonlinearity=args.nonlinearity),
                )
                tc = TrainConfig(
                    loss=args.loss, epochs=args.epochs,
                    steps_per_epoch=args.steps_per_epoch, batch_size=args.batch,
                    patch_size=args.patch, seed=seed, scale=args.scale,
                )
                model, _ = train(mc, tc, train_set)
                p, s = evaluate(model, val_set)
                per_seed.append((p, s))
            mp = float(np.mean([x[0] for x in per_seed]))
            ms = float(np.mean([x[1] for x in per_seed]))
            rows.append((depth, stride, mp, ms))
            print(f"depth={depth} s={stride}: psnr {mp:.4f}  ssim {ms:.4f}")

    header = f"{'depth':>5} {'stride':>6} {'psnr':>9} {'ssim':>7}"
    table = [header] + [f"{d:>5} {s:>6} {p:>9.4f} {m:>7.4f}" for d, s, p, m in rows]
    (out_dir / "ablation.txt").write_text("\n".join(table) + "\n")
    with open(out_dir / "ablation.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["depth", "stride", "psnr", "ssim"])
        w.writerows(rows)
    base = [r for r in rows if r[1] == 0]
    strided = [r for r in rows if r[1] >= 1]
    if base and strided:
        best = max(strided, key=lambda r: r[2])
        trend = "holds" if best[2] > base[0][2] else "not visible at this scale"
        print(f"stride>=1 vs s=0: {best[2]:.4f} vs {base[0][2]:.4f} dB -> trend {trend}")
    return 0


def cmd_dump_features(args) -> int:
    out_dir = Path(args.out_dir)
    _write_run_record(out_dir, args)
    model, _ = data_io.load_checkpoint(args.ckpt)
    lr = data_io.load_png(args.input)
    feats = first_layer_features(model, lr[None])[0]
    c = feats.shape[0]
    # rank channels by the sum of pairwise L2 distances
    flat = feats.reshape(c, -1)
    dists = np.sqrt(((flat[:, None, :] - flat[None, :, :]) ** 2).sum(-1))
    order = np.argsort(-dists.sum(1))
    top = order[: args.top]
    for rank, ci in enumerate(top):
        fmap = feats[ci]
        lo, hi = fmap.min(), fmap.max()
        norm = (fmap - lo) / (hi - lo) if hi > lo else np.zeros_like(fmap)
        data_io.save_png(norm[None], out_dir / f"feature_{rank:02d}_ch{ci:03d}.png")
    print(f"wrote {len(top)} feature maps to {out_dir}")
    return 0


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", choices=MODEL_CHOICES, default="dwsr_dwa")
    p.add_argument("--scale", type=int, choices=(2, 3, 4), default=2)
    p.add_argument("--depth", type=int, default=10)
    p.add_argument("--width", type=int, default=64)
    p.add_argument("--stride", type=int, default=1)
    p.add_argument("--cf", type=int, default=16, help="differential feature channels")
    p.add_argument("--nonlinearity", choices=("relu", "sigmoid", "tanh"), default="relu")
    p.add_argument("--levels", type=int, default=2, help="wavelet U-Net levels")


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--loss", choices=("l1", "l2"), default="l1")
    p.add_argument("--epochs", type=int, default=1)
    p.add_argument("--steps-per-epoch", type=int, default=None)
    p.add_argument("--batch", type=int, default=8)
    p.add_argument("--patch", type=int, default=192)
    p.add_argument("--data", required=True, help="PNG directory or synthetic:SEED:COUNT:SIZE")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wavesr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model")
    _add_model_flags(p)
    _add_train_flags(p)
    p.add_argument("--val-data", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="score a checkpoint against HR images")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--metric-channel", choices=("rgb", "y"), default="rgb")
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sr", help="super-resolve one PNG")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--residual", action="store_true",
                   help="also write the SR - bicubic residual image")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_sr)

    p = sub.add_parser("gradcheck", help="run the 64-bit gradient suite")
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("selftest", help="run invariant suites")
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=cmd_selftest)

    p = sub.add_parser("ablate", help="stride/depth sweep with held-out scoring")
    _add_model_flags(p)
    _add_train_flags(p)
    p.add_argument("--strides", default="0,1,2,3")
    p.add_argument("--depths", default=None)
    p.add_argument("--seeds", default="0,1,2")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("dump-features", help="write first-layer feature maps")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--top", type=int, default=5)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_dump_features)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code == 0 else 1
    try:
        return args.func(args)
    except WavesrError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as e:
        print(f"runtime failure: {e}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
