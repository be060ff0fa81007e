"""Per-gesture ICC across generator seeds, optionally with config overrides.

    python3 scripts/consistency_sweep.py --seeds 0:10 --set round_drift=0.3
"""

import argparse
import json
from collections import Counter

from touchtell.analysis import icc_table
from touchtell.pipeline import generate_features
from touchtell.synth import SynthConfig


def parse_override(text):
    key, _, value = text.partition("=")
    return key, json.loads(value)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", default="0:10", help="start:stop")
    ap.add_argument("--task", default="gesture", choices=("gesture", "emotion"))
    ap.add_argument("--set", action="append", default=[], type=parse_override,
                    metavar="FIELD=VALUE")
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    start, stop = map(int, args.seeds.split(":"))
    tops = Counter()
    for seed in range(start, stop):
        table = generate_features(SynthConfig(seed=seed, **dict(args.set)), args.task,
                                  jobs=args.jobs)
        rows = icc_table(table, args.task)
        top = max(rows, key=lambda r: r.icc)
        tops[top.label] += 1
        print(seed, " ".join(f"{r.label}:{r.icc:.2f}" for r in rows), "top", top.label,
              flush=True)
    print("top counts", dict(tops.most_common()))


if __name__ == "__main__":
    main()
