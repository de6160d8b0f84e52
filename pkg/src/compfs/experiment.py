"""Repeated seeded experiments, presets, ablation grids and report files."""

from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
import tomli

from .baselines import LassoConfig, train_lasso, train_oracle
from .datasets import CHEM_TASKS, SYN_TASKS, LabeledDataset, load_binary_csv, make_splits
from .objective import LossWeights
from .trainer import TrainConfig, TrainingDiverged, evaluate, train

MODELS = ("compfs", "compfs1", "oracle", "lasso")
METRICS = ("tpr", "fdr", "g_sim", "n_groups", "accuracy")
WORKERS_ENV = "COMPFS_WORKERS"

# (reg, beta_e, beta_r, batch, hidden, lr, lr_decay) as published per task/model
_TABLE = {
    "syn": {"compfs5": (4.5, 1.0, 1.2, 50, 20, 0.003, 0.99),
            "compfs1": (0.35, 1.0, None, 100, 30, 0.003, 0.99),
            "lasso": (0.4, None, None, 50, None, 0.003, 0.99)},
    "chem1": {"compfs5": (2.0, 1.0, 1.2, 20, 20, 0.003, 0.99),
              "compfs1": (0.4, 1.0, None, 20, 30, 0.003, 0.99),
              "lasso": (0.4, None, None, 20, None, 0.003, 0.99)},
    "chem2": {"compfs5": (3.4, 1.0, 1.2, 20, 20, 0.003, 0.99),
              "compfs1": (0.4, 1.0, None, 20, 30, 0.003, 0.99),
              "lasso": (0.2, None, None, 20, None, 0.003, 0.99)},
    "chem3": {"compfs5": (2.0, 1.0, 1.2, 20, 20, 0.003, 0.99),
              "compfs1": (0.7, 1.0, None, 20, 30, 0.003, 0.99),
              "lasso": (0.2, None, None, 20, None, 0.003, 0.99)},
}


def _build_presets() -> dict[str, dict]:
    presets = {}
    for task in SYN_TASKS + CHEM_TASKS:
        rows = _TABLE["syn" if task in SYN_TASKS else task]
        for name, (reg, be, br, bs, hid, lr, dec) in rows.items():
            common = {"task": task, "batch_size": bs, "lr": lr, "lr_decay": dec}
            if name == "lasso":
                presets[f"{task}/lasso"] = {**common, "model": "lasso", "reg": reg, "epochs": 8}
                continue
            n_groups = 5 if name == "compfs5" else 1
            presets[f"{task}/{name}"] = {
                **common, "model": "compfs" if n_groups == 5 else "compfs1", "epochs": 35,
                "beta": reg, "beta_e": be, "beta_r": br or 0.0, "hidden": hid,
                "n_groups": n_groups}
        # the oracle reuses the single-learner trainer settings
        presets[f"{task}/oracle"] = {**presets[f"{task}/compfs1"], "model": "oracle", "beta": 0.0}
    return presets


PRESETS = _build_presets()


def preset_name(task: str, model: str) -> str:
    key = "compfs5" if model == "compfs" else model
    return f"{task}/{key}"


@dataclass
class ExperimentConfig:
    task: str
    model: str = "compfs"
    repeats: int = 10
    seed: int = 0
    preset: str | None = None
    epochs: int = 35
    batch_size: int = 50
    lr: float = 0.003
    lr_decay: float = 0.99
    beta: float = 4.5
    beta_e: float = 1.0
    beta_r: float = 1.2
    scale_by_sqrt_p: bool = True
    hidden: int = 20
    n_groups: int = 5
    tau: float = 0.1
    threshold: float = 0.7
    gate_param: str = "prob"
    reg: float = 0.4
    lasso_threshold: float = 0.01
    n_train: int | None = None
    n_test: int | None = None
    p: int = 500
    truth: str | None = None
    test_fraction: float = 0.2
    workers: int | None = None

    def __post_init__(self):
        self.task = self.task.lower()
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}; choose from {', '.join(MODELS)}")
        if not (self.task in SYN_TASKS or self.task in CHEM_TASKS or self.task.startswith("file:")):
            raise ValueError(f"unknown task {self.task!r}")
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")

    def train_config(self, seed: int) -> TrainConfig:
        n_groups = 1 if self.model in ("compfs1", "oracle") else self.n_groups
        return TrainConfig(epochs=self.epochs, batch_size=self.batch_size, lr=self.lr,
                           lr_decay=self.lr_decay, seed=seed, n_groups=n_groups,
                           hidden=self.hidden, tau=self.tau, threshold=self.threshold,
                           gate_param=self.gate_param,
                           weights=LossWeights(self.beta, self.beta_e, self.beta_r,
                                               self.scale_by_sqrt_p))

    def lasso_config(self, seed: int) -> LassoConfig:
        return LassoConfig(reg=self.reg, epochs=self.epochs, batch_size=self.batch_size,
                           lr=self.lr, lr_decay=self.lr_decay, seed=seed,
                           threshold=self.lasso_threshold)


def make_config(task: str | None = None, model: str | None = None, preset: str | None = None,
                **overrides) -> ExperimentConfig:
    """Preset values (explicit, or Table-4 default for task/model) then overrides."""
    values: dict = {}
    if model is not None and model not in MODELS:
        raise ValueError(f"unknown model {model!r}; choose from {', '.join(MODELS)}")
    if preset is None and task and model and not task.startswith("file:"):
        preset = preset_name(task.lower(), model)
    if preset is not None:
        if preset not in PRESETS:
            raise ValueError(f"unknown preset {preset!r}")
        values.update(PRESETS[preset])
        values["preset"] = preset
    if task is not None:
        values["task"] = task
    if model is not None:
        values["model"] = model
    values.update({k: v for k, v in overrides.items() if v is not None})
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = set(values) - known
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
    if "task" not in values:
        raise ValueError("config needs a task")
    return ExperimentConfig(**values)


def load_config(path, **overrides) -> ExperimentConfig:
    """Read a flat TOML file; ``preset = "syn1/compfs5"`` pulls in a published row."""
    with open(path, "rb") as fh:
        values = tomli.load(fh)
    values.update({k: v for k, v in overrides.items() if v is not None})
    return make_config(**values)


# --------------------------------------------------------------------- runs


def load_task(cfg: ExperimentConfig, seed: int) -> tuple[LabeledDataset, LabeledDataset]:
    if cfg.task.startswith("file:"):
        data = load_binary_csv(cfg.task[len("file:"):], truth_path=cfg.truth)
        order = np.random.default_rng(seed).permutation(data.n)
        n_test = max(1, int(round(cfg.test_fraction * data.n)))
        te, tr = order[:n_test], order[n_test:]
        return (LabeledDataset(data.X[tr], data.y[tr], data.truth, data.name),
                LabeledDataset(data.X[te], data.y[te], data.truth, data.name))
    return make_splits(cfg.task, seed, cfg.n_train, cfg.n_test, p=cfg.p)


def run_once(cfg: ExperimentConfig, seed: int) -> dict:
    """One train + evaluate cycle; failures are recorded, not raised."""
    t0 = time.perf_counter()
    record = {"seed": seed, "task": cfg.task, "model": cfg.model, "status": "ok"}
    try:
        train_data, test_data = load_task(cfg, seed)
        if cfg.model == "lasso":
            _, entry = train_lasso(train_data, test_data, cfg.lasso_config(seed))
        elif cfg.model == "oracle":
            _, entry = train_oracle(train_data, test_data, cfg.train_config(seed))
        else:
            model, _ = train(cfg.train_config(seed), train_data)
            entry = evaluate(model, test_data)
    except TrainingDiverged as exc:
        record.update(status="failed", error=str(exc))
        entry = {}
    entry.pop("eval_time", None)
    groups = entry.pop("groups", [])
    record.update(entry)
    record["groups"] = [[k + 1 for k in g] for g in groups]
    record["wall_time"] = time.perf_counter() - t0
    return record


def _aggregate(runs: list[dict]) -> dict:
    out = {}
    ok = [r for r in runs if r["status"] == "ok"]
    for key in METRICS:
        vals = [r[key] for r in ok if key in r]
        if vals:
            out[key] = {"mean": float(np.mean(vals)), "std": float(np.std(vals))}
    return out


@dataclass
class ExperimentReport:
    config: dict
    runs: list[dict] = field(default_factory=list)
    aggregate: dict = field(default_factory=dict)
    partial: bool = False

    @classmethod
    def from_runs(cls, config: dict, runs: list[dict]) -> "ExperimentReport":
        return cls(config, runs, _aggregate(runs), any(r["status"] != "ok" for r in runs))

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentReport":
        return cls(**json.loads(text))

    def metric(self, key: str) -> float:
        return self.aggregate[key]["mean"]

    def render(self) -> str:
        c = self.config
        lines = [f"task={c['task']} model={c['model']} repeats={len(self.runs)} base_seed={c['seed']}"
                 + ("  [PARTIAL]" if self.partial else ""), ""]
        head = f"{'seed':>6} {'TPR':>7} {'FDR':>7} {'Gsim':>6} {'groups':>6} {'acc':>7}  discovered"
        lines.append(head)
        for r in self.runs:
            if r["status"] != "ok":
                lines.append(f"{r['seed']:>6}  FAILED: {r.get('error', '')}")
                continue
            groups = " ".join("{" + ",".join(map(str, g)) + "}" for g in r["groups"]) or "-"
            lines.append(f"{r['seed']:>6} {_pct(r, 'tpr'):>7} {_pct(r, 'fdr'):>7} "
                         f"{_fmt(r, 'g_sim', '.2f'):>6} {r['n_groups']:>6} "
                         f"{100 * r['accuracy']:>7.1f}  {groups}")
        lines.append("")
        for key in METRICS:
            if key in self.aggregate:
                a = self.aggregate[key]
                k = 100.0 if key in ("tpr", "fdr", "accuracy") else 1.0
                lines.append(f"{key:>9}: {k * a['mean']:.2f} +- {k * a['std']:.2f}")
        return "\n".join(lines) + "\n"

    def write(self, out_dir) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(self.to_json())
        (out / "report.txt").write_text(self.render())


def _pct(r, key):
    return f"{100 * r[key]:.1f}" if key in r else "-"


def _fmt(r, key, spec):
    return format(r[key], spec) if key in r else "-"


def default_workers() -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(1, int(env))
    try:
        return max(1, len(os.sched_getaffinity(0)))
    except AttributeError:
        return os.cpu_count() or 1


def _run_star(args):
    return run_once(*args)


def run_experiment(cfg: ExperimentConfig, out_dir=None) -> ExperimentReport:
    """Run ``cfg.repeats`` independent seeds (base seed + r) and collect a report."""
    seeds = [cfg.seed + r for r in range(cfg.repeats)]
    workers = min(cfg.workers or default_workers(), len(seeds))
    if workers <= 1:
        runs = [run_once(cfg, s) for s in seeds]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(_run_star, [(cfg, s) for s in seeds]))
    report = ExperimentReport.from_runs(asdict(cfg), runs)
    if out_dir is not None:
        report.write(out_dir)
    return report


# ----------------------------------------------------------------- ablation


def run_ablation(base: ExperimentConfig, learners, beta_r_grid=(), beta_grid=(),
                 beta_fixed: float = 1.0, beta_r_fixed: float = 1.2, out_dir=None) -> dict:
    """Mean/median discovered-group counts over (learners x beta_r) and (learners x beta)."""
    learners = list(learners)
    if not learners or not (beta_r_grid or beta_grid):
        raise ValueError("ablation grids must be nonempty")
    result = {"task": base.task, "repeats": base.repeats, "learners": learners}
    sweeps = [("beta_r", list(beta_r_grid), {"beta": beta_fixed}),
              ("beta", list(beta_grid), {"beta_r": beta_r_fixed})]
    for name, grid, fixed in sweeps:
        if not grid:
            continue
        mean_counts, median_counts, raw = [], [], []
        for n in learners:
            row_mean, row_median, row_raw = [], [], []
            for value in grid:
                cfg = ExperimentConfig(**{**asdict(base), **fixed, name: value,
                                          "n_groups": n, "model": "compfs"})
                rep = run_experiment(cfg)
                counts = [r["n_groups"] for r in rep.runs if r["status"] == "ok"]
                row_raw.append(counts)
                row_mean.append(float(np.mean(counts)) if counts else math.nan)
                row_median.append(float(np.median(counts)) if counts else math.nan)
            mean_counts.append(row_mean)
            median_counts.append(row_median)
            raw.append(row_raw)
        result[name] = {"values": grid, "fixed": fixed, "mean_groups": mean_counts,
                        "median_groups": median_counts, "counts": raw}
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "ablation.json").write_text(json.dumps(result, indent=2))
        (out / "ablation.txt").write_text(render_ablation(result))
    return result


def render_ablation(result: dict) -> str:
    lines = []
    for name in ("beta_r", "beta"):
        if name not in result:
            continue
        sweep = result[name]
        lines.append(f"mean discovered groups, rows = learners, cols = {name} {sweep['values']}")
        for n, row in zip(result["learners"], sweep["mean_groups"]):
            lines.append(f"{n:>4}  " + " ".join(f"{v:6.2f}" for v in row))
        lines.append("")
    return "\n".join(lines)
