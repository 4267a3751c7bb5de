"""Run experiment specs and write <out>/<name>.csv, .summary.csv and .json.

    python scripts/run_specs.py                      # every spec in scripts/specs
    python scripts/run_specs.py er_recovery --workers 4
"""

import argparse
import json
import time
from pathlib import Path

from netsynth.experiments import run_experiment

SPECS = Path(__file__).resolve().parent / "specs"


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("names", nargs="*", help="spec names (default: all)")
    ap.add_argument("--out", default="results")
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    names = args.names or sorted(p.stem for p in SPECS.glob("*.json"))
    for name in names:
        spec = json.loads((SPECS / f"{name}.json").read_text())
        spec["workers"] = args.workers
        start = time.perf_counter()
        res = run_experiment(spec)
        (out / f"{name}.csv").write_text(res.rows_csv())
        (out / f"{name}.summary.csv").write_text(res.summary_csv())
        (out / f"{name}.json").write_text(res.to_json() + "\n")
        print(f"== {name} ({time.perf_counter() - start:.0f}s)")
        print(res.summary_csv(), end="")


if __name__ == "__main__":
    main()
