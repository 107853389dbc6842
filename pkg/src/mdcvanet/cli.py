"""Command line entry point: ``mdcvanet run | compare | metrics score | trace synth | presets``."""

from __future__ import annotations

import argparse
import csv
import os
import sys
from pathlib import Path

from .config import OUTPUT_DIR_ENV, PRESETS, load_config
from .errors import InputError, MdcVanetError, OutputError
from .mapper import MAPPERS
from .metrics import SSIM_WINDOW, read_raw_frames, score_raw
from .runner import compare_mappers, run_scenario, summary_text
from .trace import synthesize_trace, write_trace


def parse_seeds(text: str) -> list[int]:
    """``"1..10"`` (inclusive), ``"3,5,8"`` or a mix such as ``"1..3,7"``."""
    seeds: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            if ".." in part:
                lo, hi = (int(x) for x in part.split("..", 1))
                if hi < lo:
                    raise ValueError
                seeds.extend(range(lo, hi + 1))
            else:
                seeds.append(int(part))
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad seed list {text!r}") from None
    if not seeds or any(s < 0 for s in seeds):
        raise argparse.ArgumentTypeError(f"bad seed list {text!r}")
    return seeds


def _out_dir(arg, config, default: str) -> Path:
    # --out beats the environment, which beats the config file.
    if arg:
        return Path(arg)
    if os.environ.get(OUTPUT_DIR_ENV):
        return Path(os.environ[OUTPUT_DIR_ENV])
    return config.output_dir or Path(default)


def cmd_run(args) -> int:
    config = load_config(args.config)
    changes = {}
    if args.mapper:
        changes["mapper"] = args.mapper
    if args.seed is not None:
        changes["seed"] = args.seed
    config = config.replace(**changes)
    out = _out_dir(args.out, config, f"out/{config.name}-{config.mapper}-{config.seed}")
    report = run_scenario(config.replace(output_dir=out), check_invariants=args.check_invariants)
    sys.stdout.write(summary_text(report))
    print(f"wrote {out}")
    return 0


def cmd_compare(args) -> int:
    config = load_config(args.config)
    out = _out_dir(args.out, config, f"out/{config.name}-compare")
    result = compare_mappers(config, args.mappers, args.seeds, jobs=args.jobs, out=out)
    sys.stdout.write(result.to_text())
    print(f"wrote {out}")
    return 0


def cmd_score(args) -> int:
    try:
        ref = read_raw_frames(args.ref, args.width, args.height, args.layout)
        test = read_raw_frames(args.test, args.width, args.height, args.layout)
        scores = score_raw(ref, test, window=args.window)
    except (OSError, ValueError) as exc:
        raise InputError(str(exc)) from None
    if args.csv:
        try:
            with open(args.csv, "w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["frame_index", "mse", "psnr_db", "ssim"])
                for k, (m, p, s) in enumerate(zip(scores["mse"], scores["psnr"], scores["ssim"])):
                    w.writerow([k, f"{m:.6f}", f"{p:.4f}", f"{s:.6f}"])
        except OSError as exc:
            raise OutputError(f"cannot write {args.csv}: {exc.strerror}") from None
    sigma = scores["sigma_mse"]
    print(f"frames: {len(scores['mse'])}")
    print(f"avg_psnr_db: {scores['psnr_avg']:.4f}")
    print(f"sigma_mse: {'n/a' if sigma is None else f'{sigma:.4f}'}")
    print(f"avg_ssim: {scores['ssim_mean']:.6f}")
    return 0


def cmd_synth(args) -> int:
    frames = synthesize_trace(
        n_frames=args.frames, fps=args.fps, mean_size=args.mean_size,
        mean_mse_lost=args.mse_lost, mean_mse_received=args.mse_received, seed=args.seed,
    )
    if args.output == "-":
        write_trace(frames, sys.stdout)
        return 0
    try:
        with open(args.output, "w", encoding="utf-8") as fh:
            write_trace(frames, fh)
    except OSError as exc:
        raise OutputError(f"cannot write {args.output}: {exc.strerror}") from None
    return 0


def cmd_presets(args) -> int:
    for name in PRESETS:
        print(name)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mdcvanet", description="MDC video over 802.11p EDCA simulator")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one scenario and write plot data")
    run.add_argument("config", help="config file or preset name")
    run.add_argument("--mapper", choices=MAPPERS)
    run.add_argument("--seed", type=int)
    run.add_argument("--out", help=f"output directory (overrides ${OUTPUT_DIR_ENV})")
    run.add_argument("--check-invariants", action="store_true", help="assert queue invariants at every event")
    run.set_defaults(func=cmd_run)

    cmp_ = sub.add_parser("compare", help="mean and std of metrics over mappers x seeds")
    cmp_.add_argument("config")
    cmp_.add_argument("--mappers", nargs="+", choices=MAPPERS, default=list(MAPPERS))
    cmp_.add_argument("--seeds", type=parse_seeds, default=parse_seeds("1..10"), help="e.g. 1..10 or 1,4,9")
    cmp_.add_argument("--jobs", type=int, default=1)
    cmp_.add_argument("--out")
    cmp_.set_defaults(func=cmd_compare)

    met = sub.add_parser("metrics", help="quality metrics on decoded raw video")
    met_sub = met.add_subparsers(dest="metrics_command", required=True)
    score = met_sub.add_parser("score", help="PSNR/SSIM between two raw 8-bit sequences")
    score.add_argument("--ref", required=True)
    score.add_argument("--test", required=True)
    score.add_argument("--width", type=int, required=True)
    score.add_argument("--height", type=int, required=True)
    score.add_argument("--layout", choices=("y", "yuv420"), default="yuv420")
    score.add_argument("--window", type=int, default=SSIM_WINDOW)
    score.add_argument("--csv", help="also write per-frame scores here")
    score.set_defaults(func=cmd_score)

    tr = sub.add_parser("trace", help="trace utilities")
    tr_sub = tr.add_subparsers(dest="trace_command", required=True)
    synth = tr_sub.add_parser("synth", help="write a synthetic distortion trace")
    synth.add_argument("-o", "--output", default="-")
    synth.add_argument("--frames", type=int, default=600)
    synth.add_argument("--fps", type=float, default=60.0)
    synth.add_argument("--mean-size", type=int, default=15000)
    synth.add_argument("--mse-lost", type=float, default=300.0)
    synth.add_argument("--mse-received", type=float, default=12.0)
    synth.add_argument("--seed", type=int, default=7)
    synth.set_defaults(func=cmd_synth)

    pre = sub.add_parser("presets", help="list bundled presets")
    pre.set_defaults(func=cmd_presets)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except MdcVanetError as exc:
        print(f"error[{exc.category}]: {exc}", file=sys.stderr)
        return exc.exit_code
    except KeyboardInterrupt:
        return 130


if __name__ == "__main__":
    sys.exit(main())
