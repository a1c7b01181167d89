"""Command-line interface.

One binary with subcommands for partition building, image ingestion,
transforms, denoising, PSNR, raster export, dataset generation, and
filter-bank export.  Binary containers keep data bit-exact between
steps; reports are JSON.  Every subcommand is deterministic given its
flags and seed.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import datasets, denoise, signals, sphere, transform
from .errors import (
    BracketError,
    DepthLimitError,
    DimensionMismatch,
    DomainError,
    FormatError,
    HaarError,
    ImageError,
    InvalidFilterBank,
    LevelRangeError,
    NotOrthonormal,
    NotZeroSum,
    RankDeficient,
)
from .filterbank import read_bank_document, spherical_bank, write_bank_document

EXIT_CODES = (
    (FormatError, 3),
    (DepthLimitError, 4),
    ((DimensionMismatch, LevelRangeError), 5),
    ((DomainError, BracketError), 6),
    (ImageError, 7),
    ((InvalidFilterBank, NotOrthonormal, NotZeroSum, RankDeficient), 8),
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="haarsphere",
        description="Equal-area spherical Haar framelets: partitions, "
                    "transforms, and denoising.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("partition", help="build the partition and write an SPHP cache")
    p.add_argument("--depth", type=int, required=True, help="partition depth J")
    p.add_argument("--out", required=True, help="output .sphp path")

    p = sub.add_parser("ingest", help="sample a grayscale image onto the partition")
    p.add_argument("--image", required=True, help="input PGM or grayscale PNG")
    p.add_argument("--level", type=int, required=True, help="sampling level J")
    p.add_argument("--out", required=True, help="output .sphs path")

    p = sub.add_parser("export-filters", help="write the spherical filter-bank document")
    p.add_argument("--out", required=True, help="output document path")

    p = sub.add_parser("decompose", help="framelet-decompose an SPHS signal")
    p.add_argument("--in", dest="input", required=True, help="input .sphs path")
    p.add_argument("--levels", type=int, required=True, help="decomposition levels J-L")
    p.add_argument("--out", required=True, help="output .sphc path")

    p = sub.add_parser("reconstruct", help="reconstruct an SPHS signal from SPHC")
    p.add_argument("--in", dest="input", required=True, help="input .sphc path")
    p.add_argument("--out", required=True, help="output .sphs path")
    p.add_argument("--fmax", type=float, default=None,
                   help="peak value stored in the output (default: observed peak)")

    p = sub.add_parser("rasterize", help="export face PGMs and a JSON sidecar")
    p.add_argument("--in", dest="input", required=True, help="input .sphs path")
    p.add_argument("--outdir", required=True, help="output directory")

    p = sub.add_parser("addnoise", help="add seeded Gaussian noise to a signal")
    p.add_argument("--in", dest="input", required=True, help="input .sphs path")
    p.add_argument("--out", required=True, help="output .sphs path")
    p.add_argument("--rate", type=float, required=True, help="sigma = rate * peak")
    p.add_argument("--seed", type=int, default=0, help="noise seed")

    p = sub.add_parser("denoise", help="shrinkage-denoise a signal")
    p.add_argument("--in", dest="input", required=True, help="input .sphs path")
    p.add_argument("--out", required=True, help="output .sphs path")
    p.add_argument("--method", choices=denoise.METHODS, required=True)
    p.add_argument("--rate", type=float, required=True,
                   help="noise rate, sigma = rate * peak")
    p.add_argument("--levels", type=int, required=True, help="decomposition levels J-L")
    p.add_argument("--seed", type=int, default=None,
                   help="if given, treat the input as clean and add noise first")
    p.add_argument("--lambda", dest="lambda_s", type=float, default=None,
                   help="soft threshold override (default 0.9 * rate * peak)")
    p.add_argument("--window", type=int, default=2, help="local window half-width")
    p.add_argument("--r", type=float, default=0.3, help="local threshold factor")

    p = sub.add_parser("psnr", help="print PSNR between two signals")
    p.add_argument("--ref", required=True, help="reference .sphs path")
    p.add_argument("--est", required=True, help="estimate .sphs path")

    p = sub.add_parser("experiment", help="run the denoising table harness")
    p.add_argument("--dataset", required=True, help="directory of .sphs files")
    p.add_argument("--rates", required=True, help="comma-separated noise rates")
    p.add_argument("--methods", default="all",
                   help="comma-separated methods or 'all'")
    p.add_argument("--levels", type=int, required=True, help="decomposition levels J-L")
    p.add_argument("--out", required=True, help="output report JSON path")
    p.add_argument("--seed", type=int, default=0, help="master seed")

    p = sub.add_parser("dataset", help="generate a desk-scale SPHS dataset")
    p.add_argument("--kind", choices=("digits", "synthetic"), required=True)
    p.add_argument("--count", type=int, required=True, help="number of signals")
    p.add_argument("--level", type=int, required=True, help="signal level J")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=0, help="generation seed")
    p.add_argument("--rate", type=float, default=None,
                   help="also write noisy copies at this rate under noisy/")
    p.add_argument("--coarse", type=int, default=None,
                   help="synthetic only: level of the constant blocks (default J-3)")
    return parser


def _cmd_partition(args) -> int:
    tree = sphere.build_partition(args.depth)
    sphere.write_partition(tree, args.out)
    for level in range(tree.depth + 1):
        target = sphere.FACE_AREA / 4 ** level
        deviation = float(np.max(np.abs(tree.areas(level) - target)))
        print(f"level {level}: {4 ** level} blocks, max area deviation {deviation:.3e}")
    print(f"wrote {args.out}")
    return 0


def _cmd_ingest(args) -> int:
    grid = signals.load_image(args.image)
    signal = signals.sample_equirect(grid, args.level)
    signals.write_signal(signal, args.out)
    print(f"wrote {args.out} (level {args.level}, {signal.values.size} values)")
    return 0


def _cmd_export_filters(args) -> int:
    write_bank_document(spherical_bank(), args.out)
    print(f"wrote {args.out}")
    return 0


def _cmd_decompose(args) -> int:
    signal = signals.read_signal(args.input)
    if args.levels < 1 or args.levels > signal.level:
        raise LevelRangeError(
            f"levels must be in 1..{signal.level}, got {args.levels}")
    coeffs = transform.decompose_signal(signal, spherical_bank(),
                                        signal.level - args.levels)
    transform.write_coefficients(coeffs, args.out)
    print(f"wrote {args.out} (levels {coeffs.coarse_level}..{coeffs.fine_level})")
    return 0


def _cmd_reconstruct(args) -> int:
    coeffs = transform.read_coefficients(args.input)
    values = transform.reconstruct(coeffs, spherical_bank())
    peak = args.fmax if args.fmax is not None else float(np.max(np.abs(values)))
    signal = signals.SphericalSignal(coeffs.fine_level, values, peak)
    signals.write_signal(signal, args.out)
    print(f"wrote {args.out} (level {signal.level})")
    return 0


def _cmd_rasterize(args) -> int:
    signal = signals.read_signal(args.input)
    paths = signals.export_faces(signal, args.outdir)
    print(f"wrote {len(paths)} faces and faces.json to {args.outdir}")
    return 0


def _cmd_addnoise(args) -> int:
    signal = signals.read_signal(args.input)
    spec = denoise.NoiseSpec.for_signal(signal, args.rate, args.seed)
    signals.write_signal(denoise.add_noise(signal, spec), args.out)
    print(f"wrote {args.out} (sigma {spec.sigma:.4g}, seed {spec.seed})")
    return 0


def _cmd_denoise(args) -> int:
    signal = signals.read_signal(args.input)
    if args.seed is not None:
        spec = denoise.NoiseSpec.for_signal(signal, args.rate, args.seed)
        signal = denoise.add_noise(signal, spec)
    params = denoise.ShrinkageParams(method=args.method, lambda_s=args.lambda_s,
                                     window_half=args.window, r=args.r)
    restored = denoise.denoise_signal(signal, args.method, args.rate,
                                      args.levels, params=params)
    signals.write_signal(restored, args.out)
    print(f"wrote {args.out}")
    return 0


def _cmd_psnr(args) -> int:
    ref = signals.read_signal(args.ref)
    est = signals.read_signal(args.est)
    print(f"{denoise.psnr(ref, est):.2f}")
    return 0


def _cmd_experiment(args) -> int:
    paths = sorted(Path(args.dataset).glob("*.sphs"))
    if not paths:
        raise ImageError(f"no .sphs files under {args.dataset}")
    items = [signals.read_signal(p) for p in paths]
    rates = [float(r) for r in args.rates.split(",") if r]
    if args.methods == "all":
        methods = list(denoise.METHODS)
    else:
        methods = [m for m in args.methods.split(",") if m]
    report = denoise.run_experiment(items, rates, methods, args.levels,
                                    seed=args.seed,
                                    dataset_id=str(args.dataset))
    Path(args.out).write_text(report.to_json(), encoding="utf-8")
    for cell in report.cells:
        print(f"rate {cell.rate:g} {cell.method}: "
              f"{cell.before_mean:.2f} -> {cell.after_mean:.2f} dB "
              f"({cell.improvement:+.2f})")
    print(f"wrote {args.out}")
    return 0


def _cmd_dataset(args) -> int:
    out = Path(args.out)
    clean_dir = out / "clean"
    clean_dir.mkdir(parents=True, exist_ok=True)
    if args.kind == "digits":
        items = datasets.digit_signals(args.count, args.level, seed=args.seed)
    else:
        coarse = args.coarse if args.coarse is not None else max(args.level - 3, 0)
        items = datasets.piecewise_constant_signals(args.count, args.level,
                                                    coarse, seed=args.seed)
    noisy_dir = None
    if args.rate is not None:
        noisy_dir = out / "noisy"
        noisy_dir.mkdir(parents=True, exist_ok=True)
    width = max(4, len(str(args.count - 1)))
    for i, item in enumerate(items):
        name = f"{i:0{width}d}.sphs"
        signals.write_signal(item, clean_dir / name)
        if noisy_dir is not None:
            spec = denoise.NoiseSpec.for_signal(item, args.rate, args.seed + i)
            signals.write_signal(denoise.add_noise(item, spec), noisy_dir / name)
    print(f"wrote {len(items)} signals to {clean_dir}"
          + (f" and {noisy_dir}" if noisy_dir else ""))
    return 0


_HANDLERS = {
    "partition": _cmd_partition,
    "ingest": _cmd_ingest,
    "export-filters": _cmd_export_filters,
    "decompose": _cmd_decompose,
    "reconstruct": _cmd_reconstruct,
    "rasterize": _cmd_rasterize,
    "addnoise": _cmd_addnoise,
    "denoise": _cmd_denoise,
    "psnr": _cmd_psnr,
    "experiment": _cmd_experiment,
    "dataset": _cmd_dataset,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except HaarError as exc:
        print(f"error: {exc}", file=sys.stderr)
        for classes, code in EXIT_CODES:
            if isinstance(exc, classes):
                return code
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 9


if __name__ == "__main__":
    sys.exit(main())
