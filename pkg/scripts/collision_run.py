"""Two-walker collisions on the medium comb and its control, with a per-window summary.

Writes the full JSON report and the per-window CSV to ``--outdir`` and
prints the contrast. Same seed and trial count give byte-identical files.

    python scripts/collision_run.py --trials 200 --outdir results/collide
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from returnlab.harness.cli import main as cli


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--params", default="medium")
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int)
    ap.add_argument("--outdir", default="results/collide")
    args = ap.parse_args(argv)

    out = Path(args.outdir)
    base = ["collide", "--params", args.params, "--trials", str(args.trials), "--seed", str(args.seed)]
    if args.workers:
        base += ["--workers", str(args.workers)]
    code = cli(base + ["--out", str(out / "report.json")])
    if code == 3:
        return code
    cli(base + ["--format", "csv", "--out", str(out / "windows.csv")])

    rep = json.loads((out / "report.json").read_text())["report"]
    for label in ("main", "control"):
        if label not in rep:
            continue
        for k, f in enumerate(rep[label]["collision_frequency"], 1):
            print(f"{label:8s} window {k}: {f['estimate']:.3f} [{f['ci_low']:.3f}, {f['ci_high']:.3f}]")
    if "contrast" in rep:
        c = rep["contrast"]
        print(f"final window: main {c['main']}/{c['trials']} vs control {c['control']}/{c['trials']}, "
              f"one-sided p = {c['p_value']:.3g}")
    print(f"exit status {code}")
    return code


if __name__ == "__main__":
    sys.exit(main())
