"""Command-line entry point.

Subcommands: ``synth``, ``keygen``, ``encrypt``, ``decrypt --level {a,b}``
and ``evaluate``. Exit status is 0 on success, 2 on validation errors and
3 on I/O errors.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import codec, io
from .ecg import SynthParams, segment, synth_ecg
from .experiment import PRESETS, ExperimentConfig, evaluate, report_table
from .sensing import sub_seed

logger = logging.getLogger("ecgcrypt")

EXIT_OK, EXIT_VALIDATION, EXIT_IO = 0, 2, 3
SEGMENT = 2048
REPORT_FIELDS = ["watermark_recovered_exactly", "solver_converged", "residual_norm", "mask_type", "decode_error"]


class AuthorizationError(ValueError):
    """The key file lacks material needed for the requested recovery level."""


def _load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.from_preset(args.preset) if args.preset else ExperimentConfig()
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except json.JSONDecodeError as exc:
            raise io.FormatError(f"{args.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise io.FormatError(f"{args.config}: expected a JSON object")
        cfg = ExperimentConfig.from_dict(data, base=cfg)
    return cfg


def _seeded(cfg: ExperimentConfig, seed: Optional[int]) -> ExperimentConfig:
    # one master seed fans out to the independent key and nonce seeds
    if seed is None:
        return cfg
    return dataclasses.replace(cfg, seed_a=sub_seed(seed, 1), seed_b=sub_seed(seed, 2), sign_seed=sub_seed(seed, 3))


def cmd_synth(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    lo, hi = args.bpm_range
    rng = np.random.default_rng(args.seed)
    count = 0
    for k in range(args.records):
        bpm = args.bpm if args.bpm is not None else float(rng.uniform(lo, hi))
        params = SynthParams(bpm=bpm, fs=args.fs, rr_jitter=args.rr_jitter, amplitude_noise=args.noise)
        rec = synth_ecg(params, seed=sub_seed(args.seed, k), n_samples=args.samples)
        for j, seg in enumerate(segment(rec, args.window)):
            io.write_signal_csv(out / f"rec{k:03d}_seg{j:03d}.csv", seg)
            count += 1
    if count == 0:
        raise ValueError(f"--samples {args.samples} is shorter than one {args.window}-sample segment")
    print(f"wrote {count} segments to {out}")
    return EXIT_OK


def cmd_keygen(args) -> int:
    cfg = _seeded(_load_config(args), args.seed)
    extra = {"fs": args.fs, "half_width": cfg.half_width}
    io.write_key_file(args.out, cfg.sense_key, cfg.embed_key, **extra)
    if args.user_a_out:
        io.write_key_file(args.user_a_out, cfg.sense_key, None, **extra)
    return EXIT_OK


def cmd_encrypt(args) -> int:
    cfg = _load_config(args)
    sk, ek, extra = io.read_key_file(args.key)
    if args.preset or args.config:
        if abs(cfg.mr - sk.mr) > 1e-12:
            raise ValueError(f"key mr={sk.mr} does not match configured mr={cfg.mr}")
        if ek is not None and (ek.t != cfg.t or abs(ek.a - cfg.embedding_power) > 1e-12):
            raise ValueError(f"key (t={ek.t}, a={ek.a}) does not match configured (t={cfg.t}, a={cfg.embedding_power})")
    rec = io.read_signal_csv(args.input)
    if "fs" in extra and float(extra["fs"]) != rec.signal.fs:
        logger.warning("signal fs %g differs from key fs %g", rec.signal.fs, float(extra["fs"]))
    mask = dataclasses.replace(cfg.mask, half_width=int(extra.get("half_width", cfg.half_width)))
    ct = codec.encrypt(rec.signal, sk, ek, mask, sign_seed=args.seed if args.seed is not None else cfg.sign_seed)
    io.write_ciphertext(args.out, ct)
    return EXIT_OK


def cmd_decrypt(args) -> int:
    cfg = _load_config(args)
    sk, ek, extra = io.read_key_file(args.key)
    ct = io.read_ciphertext(args.input)
    fs = float(extra.get("fs", codec.DEFAULT_FS))
    ccfg = cfg.codec_config()
    if args.level == "a":
        io.write_signal_csv(args.out, codec.recover_user_a(ct, sk, ccfg, fs))
        return EXIT_OK
    if ek is None:
        raise AuthorizationError(f"{args.key} has no embedding key (seed_b, t, a); level b needs it")
    half_width = int(extra.get("half_width", cfg.half_width))
    rep = codec.recover_user_b(ct, sk, ek, ccfg, fs, half_width)
    io.write_signal_csv(args.out, rep.signal)
    report = Path(args.report) if args.report else Path(args.out).with_suffix(".report.csv")
    with open(report, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(REPORT_FIELDS)
        w.writerow(
            [rep.watermark_recovered_exactly, rep.solver_converged, repr(rep.residual_norm), ct.mask_type.name.lower(), rep.decode_error or ""]
        )
    return EXIT_OK


def cmd_evaluate(args) -> int:
    cfg = _seeded(_load_config(args), args.seed)
    if args.limit is not None:
        cfg = dataclasses.replace(cfg, batch_size=args.limit)
    root = Path(args.dataset)
    if not root.is_dir():
        raise FileNotFoundError(f"{root} is not a directory")
    paths = sorted(root.glob("*.csv"))
    if not paths:
        raise ValueError(f"no signal CSV files in {root}")
    records = [io.read_signal_csv(p) for p in paths]
    n = {len(r.signal) for r in records}
    if n != {cfg.n}:
        if len(n) != 1:
            raise ValueError(f"segments have mixed lengths {sorted(n)}")
        cfg = dataclasses.replace(cfg, n=n.pop())
    report = evaluate(records, cfg, names=[p.stem for p in paths], jobs=args.jobs)
    rows = report_table(report)
    with open(args.out, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)
    agg = report.aggregate_row()
    print(
        f"psnr_a={agg.psnr_a:.2f} psnr_b={agg.psnr_b:.2f} recall_a={agg.recall_a:.4f} "
        f"recall_b={agg.recall_b:.4f} full_recovery_rate={report.full_recovery_rate:.3f}"
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ecgcrypt", description="Multi-level compressive-sensing ECG encryption.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed_help):
        sp.add_argument("--config", help="JSON file with experiment settings (overrides the preset)")
        sp.add_argument("--preset", choices=sorted(PRESETS), help="measurement rate / embedding power / t row")
        sp.add_argument("--seed", type=int, help=seed_help)

    sp = sub.add_parser("synth", help="write synthetic annotated ECG segments")
    sp.add_argument("--out", required=True, help="output directory")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--records", type=int, default=1)
    sp.add_argument("--samples", type=int, default=16 * SEGMENT, help="samples per record")
    sp.add_argument("--window", type=int, default=SEGMENT)
    sp.add_argument("--bpm", type=float)
    sp.add_argument("--bpm-range", type=float, nargs=2, default=(60.0, 100.0), metavar=("LO", "HI"))
    sp.add_argument("--fs", type=float, default=codec.DEFAULT_FS)
    sp.add_argument("--rr-jitter", type=float, default=0.03)
    sp.add_argument("--noise", type=float, default=0.002, help="additive noise std in mV")
    sp.set_defaults(func=cmd_synth)

    sp = sub.add_parser("keygen", help="write a key file")
    common(sp, "master seed for seed_a and seed_b")
    sp.add_argument("--out", required=True)
    sp.add_argument("--user-a-out", help="also write a key file without the embedding key")
    sp.add_argument("--fs", type=float, default=codec.DEFAULT_FS)
    sp.set_defaults(func=cmd_keygen)

    sp = sub.add_parser("encrypt", help="encrypt one signal CSV")
    common(sp, "per-signal nonce for the mask sign pattern")
    sp.add_argument("input")
    sp.add_argument("--key", required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_encrypt)

    sp = sub.add_parser("decrypt", help="recover a signal from a ciphertext")
    common(sp, "unused; accepted for symmetry")
    sp.add_argument("input")
    sp.add_argument("--key", required=True)
    sp.add_argument("--level", choices=("a", "b"), required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--report", help="level b report CSV (default: <out>.report.csv)")
    sp.set_defaults(func=cmd_decrypt)

    sp = sub.add_parser("evaluate", help="run the two-level evaluation over a directory of segments")
    common(sp, "master seed for keys and per-signal nonces")
    sp.add_argument("dataset")
    sp.add_argument("--out", required=True)
    sp.add_argument("--limit", type=int, help="use at most this many segments")
    sp.add_argument("--jobs", type=int, default=1)
    sp.set_defaults(func=cmd_evaluate)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
