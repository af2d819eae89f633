"""Command-line front end: simulate, reconstruct, analyze, dataset.

Usage:
    simshot simulate   --config run.cfg --seed 7 --out outdir [--key value ...]
    simshot reconstruct STACK_DIR [--config run.cfg] [--out outdir] [--key value ...]
    simshot analyze    IMAGE.img1 [--config run.cfg] [--out outdir] [--key value ...]
    simshot dataset    --config run.cfg --seed 7 --out outdir [--key value ...]

Any configuration key (see ``--help``) may be overridden with ``--key value``.
Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric or
analysis error.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .config import RunConfig
from .errors import ConfigError, SimshotError
from .forward import acquire_stack, load_stack, save_stack, widefield
from .illumination import default_protocol
from .imagecore import read_img1, write_img1
from .metrology import analyze_resolution
from .phantom import generate_phantom
from .simrecon import reconstruct6

_WIDEFIELD_STREAM = 6


def _mix_seed(seed: int, tag: int) -> int:
    """Derive an independent 64-bit sub-seed (splitmix64 finalizer)."""
    z = (seed + tag * 0x9E3779B97F4A7C15) % 2**64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) % 2**64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) % 2**64
    return z ^ (z >> 31)


def _atomic_write_text(path, text):
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _atomic_write_img1(img, path):
    tmp = path + ".tmp"
    write_img1(img, tmp)
    os.replace(tmp, path)


def _simulate_group(cfg: RunConfig, seed: int, out_dir: str) -> None:
    optical = cfg.optical()
    divisor = cfg["sim.fine_divisor"]
    fine_pixel = optical.pixel_size_nm / divisor
    fw = cfg["image.width"] * divisor
    fh = cfg["image.height"] * divisor
    truth = generate_phantom(cfg.phantom(seed=_mix_seed(seed, 1)), fw, fh, fine_pixel)
    protocol = default_protocol(
        optical, cfg["protocol.freq_fraction"], cfg["protocol.modulation"]
    )
    noise = cfg.noise(seed=_mix_seed(seed, 2))
    stack = acquire_stack(truth, optical, protocol, noise)
    wf = widefield(truth, optical, noise, stream=_WIDEFIELD_STREAM)
    os.makedirs(out_dir, exist_ok=True)
    _atomic_write_img1(truth, os.path.join(out_dir, "truth.img1"))
    _atomic_write_img1(wf, os.path.join(out_dir, "widefield.img1"))
    save_stack(stack, out_dir)


def cmd_simulate(cfg: RunConfig, seed: int, out_dir: str) -> int:
    _simulate_group(cfg, seed, out_dir)
    print(f"wrote truth, widefield, and 6-slice stack to {out_dir}")
    return 0


def cmd_reconstruct(stack_dir: str, cfg: RunConfig, out_dir: str) -> int:
    stack = load_stack(stack_dir)
    sr, report = reconstruct6(stack, cfg.optical(), cfg.recon())
    os.makedirs(out_dir, exist_ok=True)
    sr_path = os.path.join(out_dir, "sr.img1")
    _atomic_write_img1(sr, sr_path)
    _atomic_write_text(
        os.path.join(out_dir, "recon_report.txt"), "\n".join(report.lines()) + "\n"
    )
    print(f"wrote {sr_path} (pixel {sr.pixel_size_nm} nm)")
    return 0


def cmd_analyze(image_path: str, cfg: RunConfig, out_dir: str) -> int:
    img = read_img1(image_path)
    result = analyze_resolution(img, **cfg.metrology_kwargs())
    print(f"kcmax={result.kcmax:.6f}")
    print(f"resolution_nm={result.resolution_nm:.3f}")
    os.makedirs(out_dir, exist_ok=True)
    stem = os.path.splitext(os.path.basename(image_path))[0]
    csv_path = os.path.join(out_dir, f"{stem}_decorrelation.csv")
    headers = ["r", "d0"] + [f"filtered_{i}" for i in range(len(result.filtered_curves))]
    rows = np.column_stack([result.radii, result.d0, *result.filtered_curves])
    lines = [",".join(headers)]
    lines += [",".join(f"{v:.9g}" for v in row) for row in rows]
    _atomic_write_text(csv_path, "\n".join(lines) + "\n")
    print(f"wrote {csv_path}")
    return 0


def cmd_dataset(cfg: RunConfig, seed: int, out_dir: str) -> int:
    n_groups = cfg["dataset.n_groups"]
    split = cfg["dataset.split_fraction"]
    if n_groups < 1:
        raise ConfigError(f"dataset.n_groups must be >= 1, got {n_groups}")
    if not 0 < split <= 1:
        raise ConfigError(f"dataset.split_fraction must lie in (0, 1], got {split}")
    os.makedirs(out_dir, exist_ok=True)
    optical = cfg.optical()
    params = cfg.recon()
    names = []
    for g in range(n_groups):
        name = f"group_{g:04d}"
        group_dir = os.path.join(out_dir, name)
        _simulate_group(cfg, _mix_seed(seed, 100 + g), group_dir)
        stack = load_stack(group_dir)
        sr, _ = reconstruct6(stack, optical, params)
        _atomic_write_img1(sr, os.path.join(group_dir, "sr_label.img1"))
        names.append(name)
    n_train = int(round(n_groups * split))
    rng = np.random.Generator(np.random.Philox(key=_mix_seed(seed, 7)))
    order = rng.permutation(n_groups)
    split_of = {}
    for rank, idx in enumerate(order):
        split_of[names[idx]] = "train" if rank < n_train else "test"
    if n_train == n_groups:
        print("warning: test split is empty", file=sys.stderr)
    lines = [f"group={name} split={split_of[name]}" for name in names]
    _atomic_write_text(os.path.join(out_dir, "dataset.txt"), "\n".join(lines) + "\n")
    print(f"wrote {n_groups} groups ({n_train} train) to {out_dir}")
    return 0


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="simshot",
        description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="configuration keys:\n" + RunConfig.describe_keys(),
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("simulate", "render a phantom and acquire a six-frame stack"),
        ("reconstruct", "reconstruct an SR image from a stack directory"),
        ("analyze", "decorrelation resolution analysis of an IMG1 image"),
        ("dataset", "generate a train/test dataset of acquisition groups"),
    ):
        p = sub.add_parser(name, help=help_text)
        if name == "reconstruct":
            p.add_argument("stack_dir", help="directory holding slice files + stack.txt")
        if name == "analyze":
            p.add_argument("image", help="IMG1 image to analyze")
        p.add_argument("--config", help="key=value config file")
        p.add_argument("--seed", type=int, default=0, help="master 64-bit seed")
        p.add_argument("--out", help="output directory (default from config output.dir)")
    return parser


def _apply_overrides(cfg: RunConfig, extras):
    i = 0
    while i < len(extras):
        token = extras[i]
        if not token.startswith("--"):
            raise ConfigError(f"unexpected argument {token!r}")
        if "=" in token:
            name, value = token[2:].split("=", 1)
            i += 1
        else:
            if i + 1 >= len(extras):
                raise ConfigError(f"override {token!r} is missing a value")
            name, value = token[2:], extras[i + 1]
            i += 2
        cfg.set(name, value)


def main(argv=None) -> int:
    parser = _build_parser()
    args, extras = parser.parse_known_args(argv)
    try:
        cfg = RunConfig.load(args.config) if args.config else RunConfig()
        _apply_overrides(cfg, extras)
        out_dir = args.out if args.out else cfg["output.dir"]
        if args.command == "simulate":
            return cmd_simulate(cfg, args.seed, out_dir)
        if args.command == "reconstruct":
            default_out = args.out if args.out else args.stack_dir
            return cmd_reconstruct(args.stack_dir, cfg, default_out)
        if args.command == "analyze":
            default_out = args.out if args.out else (os.path.dirname(args.image) or ".")
            return cmd_analyze(args.image, cfg, default_out)
        if args.command == "dataset":
            return cmd_dataset(cfg, args.seed, out_dir)
        raise ConfigError(f"unknown command {args.command!r}")
    except SimshotError as exc:
        print(f"simshot {args.command}: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(f"simshot {args.command}: error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
