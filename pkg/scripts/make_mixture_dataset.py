#!/usr/bin/env python3
"""Build a small synthetic mixture dataset through the CLI-facing interfaces.

Writes clean/noise WAVs and a JSONL manifest with SIR targets, random RIR
stubs, and geometry entries, then invokes the mix pipeline and verifies the
achieved SIR log. Mirrors how a real corpus would be assembled: the manifest
carries SSN/ecological split and room metadata, the mixer only levels and
sums source images.
"""

import argparse
import json
from pathlib import Path

import numpy as np
from scipy.signal import lfilter

from sdrkit import AudioBuffer, generate_ssn, write_wav
from sdrkit.cli import main as cli_main

SR = 16000


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("mixture_dataset"))
    ap.add_argument("--items", type=int, default=6)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--ssn-fraction", type=float, default=0.3)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    out = args.out
    (out / "sources").mkdir(parents=True, exist_ok=True)

    corpus = [lfilter([1.0], [1.0, -0.9], rng.standard_normal(10 * SR)) for _ in range(4)]
    manifest_path = out / "manifest.jsonl"
    with open(manifest_path, "w") as fh:
        for i in range(args.items):
            n = 2 * SR
            clean = lfilter([1.0], [1.0, -0.9], rng.standard_normal(n))
            clean /= np.std(clean) * 8
            use_ssn = rng.random() < args.ssn_fraction
            if use_ssn:
                noise = generate_ssn(corpus, 2.0, seed=args.seed + 100 + i).channel(0) / 8
            else:
                noise = rng.standard_normal(n) / 8  # stand-in for ecological noise
            clean_path = out / "sources" / f"clean_{i:03d}.wav"
            noise_path = out / "sources" / f"noise_{i:03d}.wav"
            write_wav(AudioBuffer.from_mono(clean, SR), clean_path, format="float32")
            write_wav(AudioBuffer.from_mono(noise[:n], SR), noise_path, format="float32")

            # 4-channel RIR stub: per-channel delays and gains (real corpora
            # would load simulated room responses here)
            rir = np.zeros((4, 400))
            for c in range(4):
                d = int(rng.integers(0, 32))
                rir[c, d] = 1.0
                tail = rng.standard_normal(64) * 0.05 * np.exp(-np.arange(64) / 16)
                rir[c, d + 1 : d + 65] += tail
            rir_path = out / "sources" / f"rir_{i:03d}.wav"
            write_wav(AudioBuffer(rir, SR), rir_path, format="float32")

            item = {
                "clean_path": str(clean_path),
                "noise_path": str(noise_path),
                "rir_clean_path": str(rir_path),
                "rir_noise_path": str(rir_path),
                "target_sir_db": float(rng.uniform(-10, 10)),
                "seed": args.seed + i,
                "geometry": {
                    "interaural_m": float(rng.uniform(0.12, 0.18)),
                    "lateral_offset_m": float(rng.uniform(0.01, 0.02)),
                    "vertical_offset_m": float(rng.uniform(0.01, 0.015)),
                },
                "noise_kind": "ssn" if use_ssn else "ecological",
                "rt60_s": float(rng.uniform(0.15, 0.4)),
            }
            fh.write(json.dumps(item) + "\n")

    print(f"manifest: {manifest_path}")
    code = cli_main(["mix", "--manifest", str(manifest_path), "--out-dir", str(out / "mixes")])
    print(f"mix exit code: {code}")


if __name__ == "__main__":
    main()
