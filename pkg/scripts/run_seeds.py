"""Run a training subcommand over several seeds and summarize the manifests.

    python scripts/run_seeds.py type1-train --preset desk --seeds 0 1 2 3 4
    python scripts/run_seeds.py type2-train --preset paper --out runs/type2 --workers 2
"""

import argparse
import json
import subprocess
import sys
import time
from pathlib import Path


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=("type1-train", "type2-train"))
    ap.add_argument("--preset", default="desk")
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default=None)
    ap.add_argument("--set", dest="overrides", action="append", default=[])
    args = ap.parse_args()
    out = Path(args.out or f"runs/{args.command}-{args.preset}")
    cmd = [sys.executable, "-m", "msnn.cli", "--preset", args.preset, "--out", str(out),
           "--workers", str(args.workers), "--seeds", *map(str, args.seeds)]
    for item in args.overrides:
        cmd += ["--set", item]
    t0 = time.perf_counter()
    subprocess.run(cmd + [args.command], check=True)
    print(f"total wall time {time.perf_counter() - t0:.0f} s")
    for seed in args.seeds:
        summary = json.loads((out / f"seed_{seed}" / "manifest").read_text())["summary"]
        print(f"seed {seed}: {json.dumps(summary, sort_keys=True)}")


if __name__ == "__main__":
    main()
