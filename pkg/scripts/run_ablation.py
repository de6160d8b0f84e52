"""Group-count sensitivity on Syn2 over learners x beta_R and learners x beta.

Writes ablation.json / ablation.txt matrices (rows = learners) for plotting.

    python scripts/run_ablation.py --out results/ablation
"""

import argparse
from pathlib import Path

from compfs.experiment import make_config, render_ablation, run_ablation


def floats(text):
    return [float(t) for t in text.split(",")]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--learners", default="2,5,8,10")
    ap.add_argument("--beta-r-grid", type=floats, default=[0.4, 1.2, 2.0])
    ap.add_argument("--beta-grid", type=floats, default=[0.4, 1.0, 2.0])
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--out", type=Path, default=Path("results/ablation"))
    args = ap.parse_args()
    base = make_config("syn2", "compfs", repeats=args.repeats)
    learners = [int(n) for n in args.learners.split(",")]
    result = run_ablation(base, learners, args.beta_r_grid, args.beta_grid, out_dir=args.out)
    print(render_ablation(result))


if __name__ == "__main__":
    main()
