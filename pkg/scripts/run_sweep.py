"""MPS sweep on the built-in imbalanced corpus, with a major/minor breakdown.

Runs the full split/augment/train/evaluate pipeline at every (seed, MPS)
combination over a synthetic corpus whose minority pairs hold a handful of
sentences, then prints macro-F1 per MPS and the gain on minority pairs.

Usage:
    python3 scripts/run_sweep.py --mps 0,5,15 --seeds 0,1,2 --out reports
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from revmine.classify import HashedBowEncoder, TrainConfig
from revmine.dataset import build_pair_matrix
from revmine.experiment import (
    augmented_pair_delta,
    major_minor_breakdown,
    run_mps_sweep,
    save_breakdown_csv,
    save_sweep_csv,
    save_sweep_json,
)
from revmine.synthetic import imbalanced_corpus


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--mps", default="0,5,15", help="comma-separated MPS values")
    parser.add_argument("--seeds", default="0,1,2", help="comma-separated seeds")
    parser.add_argument("--epochs", type=int, default=60)
    parser.add_argument("--learning-rate", type=float, default=0.02)
    parser.add_argument("--dimension", type=int, default=1024, help="encoder dimension")
    parser.add_argument("--cut", type=int, default=10, help="minor/major pair-size cut")
    parser.add_argument("--out", help="directory for sweep.csv, sweep.json, breakdown.csv")
    args = parser.parse_args(argv)

    mps_values = [int(v) for v in args.mps.split(",")]
    seeds = [int(v) for v in args.seeds.split(",")]

    dataset, schema, lexicon = imbalanced_corpus(seed=0)
    matrix = build_pair_matrix(dataset, schema)
    sizes = sorted(n for _, n in matrix.cells() if n > 0)
    print(f"{len(dataset)} sentences over {len(sizes)} pairs (sizes {sizes})")

    started = time.perf_counter()
    sweep = run_mps_sweep(
        dataset,
        schema,
        lexicon,
        mps_values,
        seeds,
        HashedBowEncoder(dimension=args.dimension),
        train_config=TrainConfig(epochs=args.epochs, learning_rate=args.learning_rate),
    )
    print(f"swept {len(sweep.runs)} runs in {time.perf_counter() - started:.1f}s\n")

    for mps in sweep.mps_values:
        comp = sweep.mean_macro_f1("component", mps)
        asp = sweep.mean_macro_f1("aspect", mps)
        print(f"MPS={mps:>3}: component macro-F1 {comp:.4f}, aspect macro-F1 {asp:.4f}")

    breakdown = major_minor_breakdown(sweep, matrix, cut=args.cut)
    print(f"\nminor pairs (<= {args.cut} sentences), delta vs MPS=0:")
    for mps in sweep.mps_values:
        if mps == 0:
            continue
        for role in ("component", "aspect"):
            g = breakdown.get("minor", role, mps)
            print(f"  MPS={mps:>3} {role:<9} macro-F1 {g.macro_f1:.4f} ({g.delta_vs_baseline:+.4f})")

    deltas = augmented_pair_delta(sweep, schema)
    if deltas:
        print("\naugmented-pair delta vs baseline:")
        for (mps, role), delta in sorted(deltas.items()):
            print(f"  MPS={mps:>3} {role:<9} {delta:+.4f}")

    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        save_sweep_csv(sweep, out / "sweep.csv")
        save_sweep_json(sweep, out / "sweep.json")
        save_breakdown_csv(breakdown, out / "breakdown.csv")
        print(f"\nwrote sweep.csv, sweep.json, breakdown.csv to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
