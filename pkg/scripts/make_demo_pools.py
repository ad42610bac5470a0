"""Build two small pools of synthetic 'speech-like' wav files.

Each class is an AR(1) noise process with a class-specific pole, padded
with silence at both ends so the energy endpointing has something to trim.
The pools feed the synthesize/train/trials subcommands when no real corpus
is at hand.
"""
import argparse
from pathlib import Path

import numpy as np

from switchdet.audio import AudioBuffer, write_wav

RATE = 16000


def ar_wav(coef: float, dur_sec: float, seed: int, amp: float = 0.3,
           pad_sec: float = 0.1) -> AudioBuffer:
    rng = np.random.default_rng(seed)
    n = int(dur_sec * RATE)
    x = np.empty(n)
    prev = 0.0
    for e in range(n):
        prev = coef * prev + rng.standard_normal()
        x[e] = prev
    x *= amp / (np.abs(x).max() + 1e-12)
    pad = np.zeros(int(pad_sec * RATE))
    return AudioBuffer(np.concatenate([pad, x, pad]), RATE)


def build_pools(out: Path, per_class: int, seed: int) -> dict[str, Path]:
    poles = {"aa": 0.9, "bb": -0.5}
    dirs = {}
    for label, coef in poles.items():
        d = out / label
        d.mkdir(parents=True, exist_ok=True)
        for k in range(per_class):
            buf = ar_wav(coef, 2.5 + 0.25 * (k % 4), seed=seed * 100 + k)
            write_wav(d / f"{label}{k:02d}.wav", buf)
        dirs[label] = d
    return dirs


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("demo_pools"))
    ap.add_argument("--per-class", type=int, default=6)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()
    dirs = build_pools(args.out, args.per_class, args.seed)
    for label, d in sorted(dirs.items()):
        print(f"{label}: {len(list(d.glob('*.wav')))} files in {d}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
