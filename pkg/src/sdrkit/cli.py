"""Command-line front door: evaluation, loss values, gradient checks, SSN
synthesis, manifest-driven mixing, and phoneme tables.

Output is JSON by default (full float precision, non-finite values as the
strings "inf"/"-inf"), CSV behind --format csv (6 significant digits).
Exit codes: 0 success, 1 partial batch failure, 2 usage, 3 I/O error,
4 numeric degeneracy.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .audio import AudioBuffer, MalformedWavError, UnsupportedWavError, read_wav, write_wav
from .decomp import DecompositionError
from .loss import LOSS_IDS, GradCheckReport, LossConfig, grad_check, loss_eval, loss_grad, loss_weights
from .metrics import MetricsConfig, report, report_to_csv_row, report_to_json, CSV_COLUMNS
from .mixer import ArrayGeometry, MixSpec, convolve_rir, generate_ssn, measured_sir_db, mix_at_sir, sir_gain, validate_geometry
from .phoneme import category_table_to_csv, load_alignment, per_category_metrics
from .stft import StftConfig
from .stoi import StoiError
from .weighting import weightmap_to_csv

log = logging.getLogger("sdrkit")

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_NUMERIC = 4


def _json_safe(obj):
    if isinstance(obj, float):
        if math.isfinite(obj):
            return obj
        return "inf" if obj > 0 else ("-inf" if obj < 0 else "nan")
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj


def _emit(obj) -> None:
    print(json.dumps(_json_safe(obj)))


def _write_map_csv(map_2d, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("band,frame,value\n")
        bands, frames = map_2d.shape
        for b in range(bands):
            for t in range(frames):
                fh.write(f"{b},{t},{map_2d[b, t]:.12g}\n")


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--stft-size", type=int, default=512, help="FFT size in samples")
    parser.add_argument("--hop", type=int, default=256, help="hop in samples")
    parser.add_argument("--mel-bands", type=int, default=18)
    parser.add_argument("--gamma", type=float, default=0.2, help="spectral-magnitude weight exponent")
    parser.add_argument("--ref-channel", type=int, default=0)
    parser.add_argument("--clamp-db", default="-60,60", help="per-bin dB clamp as lo,hi")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--jobs", type=int, default=1)
    parser.add_argument("--format", choices=("json", "csv"), default="json")


def _clamp(args) -> tuple:
    try:
        lo, hi = (float(v) for v in args.clamp_db.split(","))
    except ValueError as exc:
        raise ValueError(f"--clamp-db expects lo,hi; got {args.clamp_db!r}") from exc
    return (lo, hi)


def _stft_config(args) -> StftConfig:
    return StftConfig(fft_size=args.stft_size, hop=args.hop)


def _metrics_config(args, sample_rate: int) -> MetricsConfig:
    return MetricsConfig(
        sample_rate=sample_rate,
        stft=_stft_config(args),
        mel_bands=args.mel_bands,
        gamma=args.gamma,
        ref_channel=args.ref_channel,
    )


def _loss_config(args, sample_rate: int) -> LossConfig:
    return LossConfig.from_id(
        args.id,
        stft=_stft_config(args),
        sample_rate=sample_rate,
        mel_bands=args.mel_bands,
        gamma=args.gamma,
        clamp_db=_clamp(args),
    )


def _read_aligned(paths):
    buffers = [read_wav(p) for p in paths]
    rates = {b.sample_rate for b in buffers}
    if len(rates) > 1:
        raise ValueError(f"sample rate mismatch across inputs: {sorted(rates)}")
    lengths = {b.length for b in buffers}
    if len(lengths) > 1:
        raise ValueError(f"length mismatch across inputs: {sorted(lengths)}")
    return buffers, rates.pop()


def _cmd_eval(args) -> int:
    (est, mix, clean, noise), sr = _read_aligned([args.est, args.mixture, args.clean, args.noise])
    rep = report(mix, est, clean, noise, _metrics_config(args, sr))
    if args.format == "csv":
        print(",".join(CSV_COLUMNS))
        print(report_to_csv_row(rep))
    else:
        print(report_to_json(rep))
    return EXIT_OK


def _cmd_loss(args) -> int:
    (est, clean, noise), sr = _read_aligned([args.est, args.clean, args.noise])
    cfg = _loss_config(args, sr)
    ref = args.ref_channel
    est_c, clean_c, noise_c = est.channel(ref), clean.channel(ref), noise.channel(ref)
    weights = loss_weights(cfg, est_c, clean_c, noise_c)
    value = loss_eval(cfg, est_c, clean_c, noise_c, weights=weights, diagnostics=bool(args.diag_csv))
    if args.diag_csv:
        if value.components is None or "sdr_db" not in value.components:
            raise ValueError(f"{cfg.id} has no per-bin diagnostic map (time domain)")
        _write_map_csv(value.components["sdr_db"], args.diag_csv)
    if args.weights_csv:
        if weights is None:
            raise ValueError(f"{cfg.id} is unweighted; no weight map to export")
        weightmap_to_csv(weights, args.weights_csv)
    record = {"id": cfg.id, "value": value.value}
    if args.with_grad:
        record["gradient"] = loss_grad(cfg, est_c, clean_c, noise_c, weights=weights).tolist()
    if args.format == "csv":
        print("id,value")
        print(f"{cfg.id},{value.value:.6g}")
    else:
        _emit(record)
    return EXIT_OK


def _parse_ids(text: str) -> list[str]:
    if text == "all":
        return list(LOSS_IDS)
    if ".." in text:
        first, last = text.split("..", 1)
        ids = list(LOSS_IDS)
        if first not in ids or last not in ids:
            raise ValueError(f"bad loss id range {text!r}")
        return ids[ids.index(first) : ids.index(last) + 1]
    ids = [t.strip() for t in text.split(",") if t.strip()]
    for i in ids:
        if i not in LOSS_IDS:
            raise ValueError(f"unknown loss id {i!r}")
    return ids


def _cmd_gradcheck(args) -> int:
    ids = _parse_ids(args.id)
    def one(loss_id: str) -> GradCheckReport:
        cfg = LossConfig.from_id(
            loss_id, stft=_stft_config(args), mel_bands=args.mel_bands,
            gamma=args.gamma, clamp_db=_clamp(args),
        )
        return grad_check(cfg, trials=args.trials, length=args.length, seed=args.seed)
    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            reports = list(pool.map(one, ids))
    else:
        reports = [one(i) for i in ids]
    rows = [
        {"id": r.id, "trials": r.trials, "length": r.length, "step": r.step, "max_rel_err": r.max_rel_err}
        for r in reports
    ]
    if args.format == "csv":
        print("id,trials,length,step,max_rel_err")
        for r in rows:
            print(f"{r['id']},{r['trials']},{r['length']},{r['step']:.6g},{r['max_rel_err']:.6g}")
    else:
        _emit(rows)
    return EXIT_OK


def _cmd_ssn(args) -> int:
    corpus_dir = Path(args.corpus)
    wavs = sorted(corpus_dir.glob("*.wav"))
    if not wavs:
        raise FileNotFoundError(f"no WAV files in {corpus_dir}")
    corpus = [read_wav(p) for p in wavs]
    ssn = generate_ssn(corpus, args.dur, seed=args.seed)
    write_wav(ssn, args.out, format="float32")
    _emit({"out": str(args.out), "duration_s": args.dur, "seed": args.seed, "sample_rate": ssn.sample_rate})
    return EXIT_OK


def _load_image(path, rir_path) -> AudioBuffer:
    source = read_wav(path)
    if rir_path:
        rir = read_wav(rir_path)
        if rir.sample_rate != source.sample_rate:
            raise ValueError(f"RIR rate {rir.sample_rate} != source rate {source.sample_rate}")
        return convolve_rir(source, rir)
    return source


def _cmd_mix(args) -> int:
    manifest_path = Path(args.manifest)
    if not manifest_path.is_file():
        raise FileNotFoundError(f"no such manifest: {manifest_path}")
    items = []
    with open(manifest_path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                items.append(json.loads(line))
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    def one(indexed):
        index, item = indexed
        geometry = item.get("geometry")
        if geometry:
            violations = validate_geometry(ArrayGeometry(**geometry))
            if violations:
                raise ValueError("geometry violations: " + "; ".join(violations))
        clean_dry = read_wav(item["clean_path"])
        noise_dry = read_wav(item["noise_path"])
        clean_img = _load_image(item["clean_path"], item.get("rir_clean_path"))
        noise_img = _load_image(item["noise_path"], item.get("rir_noise_path"))
        n = min(clean_img.length, noise_img.length)
        clean_img = AudioBuffer(clean_img.samples[:, :n], clean_img.sample_rate)
        noise_img = AudioBuffer(noise_img.samples[:, :n], noise_img.sample_rate)
        spec = MixSpec(
            target_sir_db=float(item["target_sir_db"]),
            ref_channel=args.ref_channel,
            seed=int(item.get("seed", args.seed + index)),
        )
        explicit_gain = None
        if args.calibrate == "pre":  # level on the dry sources, not the images
            explicit_gain = sir_gain(
                clean_dry.channel(0), noise_dry.channel(0), spec.target_sir_db
            )
        mixture, scaled_noise, gain = mix_at_sir(clean_img, noise_img, spec, gain=explicit_gain)
        stem = out_dir / f"mix_{index:04d}"
        write_wav(mixture, f"{stem}_mix.wav", format="float32")
        write_wav(clean_img, f"{stem}_clean.wav", format="float32")
        write_wav(scaled_noise, f"{stem}_noise.wav", format="float32")
        return {
            "index": index,
            "mixture": f"{stem}_mix.wav",
            "target_sir_db": spec.target_sir_db,
            "achieved_sir_db": measured_sir_db(clean_img, scaled_noise, args.ref_channel),
            "gain": gain,
        }

    indexed = list(enumerate(items))
    failures = 0
    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            futures = [pool.submit(one, it) for it in indexed]
            outcomes = []
            for it, fut in zip(indexed, futures):
                try:
                    outcomes.append(fut.result())
                except Exception as exc:  # logged per item, batch continues
                    outcomes.append({"index": it[0], "error": str(exc)})
    else:
        outcomes = []
        for it in indexed:
            try:
                outcomes.append(one(it))
            except Exception as exc:
                outcomes.append({"index": it[0], "error": str(exc)})
    for rec in outcomes:
        if "error" in rec:
            failures += 1
            log.error("mix item %d failed: %s", rec["index"], rec["error"])
        _emit(rec)
    return EXIT_PARTIAL if failures else EXIT_OK


def _cmd_phoneme(args) -> int:
    (est, mix, clean, noise), sr = _read_aligned([args.est, args.mixture, args.clean, args.noise])
    segments = load_alignment(args.align)
    table = per_category_metrics(est, mix, clean, noise, segments, _metrics_config(args, sr))
    if args.format == "csv":
        sys.stdout.write(category_table_to_csv(table, args.loss_label))
    else:
        _emit({c: row.as_dict() for c, row in table.ordered()})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sdrkit",
        description="Frequency-weighted SDR losses, decomposition metrics, and mixture tooling",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="metric report for an enhanced utterance")
    p.add_argument("est"); p.add_argument("mixture"); p.add_argument("clean"); p.add_argument("noise")
    _add_common(p)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("loss", help="loss value for one utterance")
    p.add_argument("--id", required=True, choices=LOSS_IDS)
    p.add_argument("est"); p.add_argument("clean"); p.add_argument("noise")
    p.add_argument("--weights-csv", default=None, help="export the weight map as CSV")
    p.add_argument("--diag-csv", default=None, help="export the per-bin SDR map as CSV")
    p.add_argument("--with-grad", action="store_true", help="include the gradient in JSON output")
    _add_common(p)
    p.set_defaults(func=_cmd_loss)

    p = sub.add_parser("gradcheck", help="finite-difference gradient check")
    p.add_argument("--id", default="all", help="loss id, list (L3,L5), range (L1..L11), or all")
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--length", type=int, default=1024)
    _add_common(p)
    p.set_defaults(func=_cmd_gradcheck)

    p = sub.add_parser("ssn", help="generate speech-shaped noise from a corpus directory")
    p.add_argument("--corpus", required=True)
    p.add_argument("--dur", type=float, required=True)
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=_cmd_ssn)

    p = sub.add_parser("mix", help="render mixtures from a JSONL manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--calibrate", choices=("post", "pre"), default="post",
                   help="SIR levelling on reverberant images (post) or dry sources (pre)")
    _add_common(p)
    p.set_defaults(func=_cmd_mix)

    p = sub.add_parser("phoneme", help="per-phoneme-category metric table")
    p.add_argument("--align", required=True)
    p.add_argument("--loss-label", default="")
    p.add_argument("est"); p.add_argument("mixture"); p.add_argument("clean"); p.add_argument("noise")
    _add_common(p)
    p.set_defaults(func=_cmd_phoneme)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("SDRKIT_LOG", "WARNING").upper())
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (FileNotFoundError, MalformedWavError, UnsupportedWavError, OSError) as exc:
        _emit({"error": {"kind": "io", "message": str(exc)}})
        return EXIT_IO
    except (DecompositionError, StoiError) as exc:
        _emit({"error": {"kind": "numeric", "message": str(exc)}})
        return EXIT_NUMERIC
    except ValueError as exc:
        _emit({"error": {"kind": "usage", "message": str(exc)}})
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
