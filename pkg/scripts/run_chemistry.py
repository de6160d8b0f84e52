"""Chemistry binding-logic table on regenerated Chem1-3 data.

    python scripts/run_chemistry.py --repeats 10 --out results/chemistry
"""

import argparse
from pathlib import Path

from compfs.experiment import make_config, run_experiment

TASKS = ("chem1", "chem2", "chem3")
MODELS = ("compfs", "compfs1", "oracle", "lasso")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=10)
    ap.add_argument("--tasks", default=",".join(TASKS))
    ap.add_argument("--models", default=",".join(MODELS))
    ap.add_argument("--out", type=Path, default=Path("results/chemistry"))
    args = ap.parse_args()
    for task in args.tasks.split(","):
        for model in args.models.split(","):
            rep = run_experiment(make_config(task, model, repeats=args.repeats),
                                 args.out / f"{task}_{model}")
            print(rep.render(), flush=True)


if __name__ == "__main__":
    main()
