#!/usr/bin/env python3
"""Survey all eleven losses on one synthetic scene.

Builds a speech-like utterance, contaminates it with speech-shaped noise at a
chosen SIR, simulates a few enhancement qualities, and prints the loss value
of every L1-L11 config for each, plus the metric report of the best estimate.
Optionally dumps the L8/L11 weight maps as CSV for plotting.
"""

import argparse
from pathlib import Path

import numpy as np
from scipy.signal import lfilter

from sdrkit import (
    LOSS_IDS,
    LossConfig,
    MetricsConfig,
    generate_ssn,
    loss_eval,
    loss_weights,
    report,
)
from sdrkit.weighting import weightmap_to_csv

SR = 16000


def speech_like(n, rng):
    shaped = lfilter([1.0], [1.0, -0.9], rng.standard_normal(n))
    t = np.arange(n) / SR
    env = 0.4 + 0.6 * (0.5 + 0.5 * np.sin(2 * np.pi * 4.0 * t))
    x = shaped * env
    return x / np.std(x)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--duration", type=float, default=3.0)
    ap.add_argument("--sir-db", type=float, default=0.0)
    ap.add_argument("--weights-dir", type=Path, default=None, help="dump L8/L11 weight maps here")
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    n = int(args.duration * SR)
    clean = speech_like(n, rng)
    corpus = [speech_like(10 * SR, rng) for _ in range(4)]
    ssn = generate_ssn(corpus, args.duration, seed=args.seed + 1, sample_rate=SR).channel(0)[:n]
    noise = ssn * np.std(clean) / np.std(ssn) * 10 ** (-args.sir_db / 20)

    estimates = {
        "mixture (no enhancement)": clean + noise,
        "mild (-6 dB residual)": clean + 0.5 * noise,
        "strong (-14 dB residual)": clean + 0.2 * noise + 0.02 * rng.standard_normal(n),
    }

    print(f"scene: {args.duration:.1f}s at {args.sir_db:+.0f} dB SIR, seed {args.seed}")
    header = "loss " + "".join(f"{k[:7]:>10}" for k in estimates)
    print(header)
    for lid in LOSS_IDS:
        cfg = LossConfig.from_id(lid)
        row = [f"{loss_eval(cfg, est, clean, noise).value:10.3f}" for est in estimates.values()]
        print(f"{lid:<5}" + "".join(row))

    best = estimates["strong (-14 dB residual)"]
    rep = report(clean + noise, best, clean, noise, MetricsConfig())
    print("\nmetrics of the strong estimate:")
    for k, v in rep.as_dict().items():
        print(f"  {k:>10}: {v:.3f}")

    if args.weights_dir:
        args.weights_dir.mkdir(parents=True, exist_ok=True)
        for lid in ("L8", "L11"):
            wm = loss_weights(LossConfig.from_id(lid), best, clean, noise)
            out = args.weights_dir / f"weights_{lid}.csv"
            weightmap_to_csv(wm, out)
            print(f"wrote {out}")


if __name__ == "__main__":
    main()
