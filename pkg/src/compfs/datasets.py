"""Synthetic benchmarks with known composite-feature ground truth.

Indices are 0-based everywhere in code; 1-based only in rendered output and
in the groups/truth text files.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .metrics import GroupStructure, group_structure

SYN_TASKS = ("syn1", "syn2", "syn3", "syn4")
CHEM_TASKS = ("chem1", "chem2", "chem3")
SYN4_RHO = 0.9
CHEM_N_FEATURES = 84
CHEM_NOISE_RATE = 0.1


@dataclass
class LabeledDataset:
    X: np.ndarray
    y: np.ndarray
    truth: GroupStructure | None
    name: str

    def __post_init__(self):
        if self.X.ndim != 2 or self.X.shape[0] != self.y.shape[0]:
            raise ValueError(f"X {self.X.shape} and y {self.y.shape} disagree on sample count")
        if self.truth and max(max(g) for g in self.truth) >= self.X.shape[1]:
            raise ValueError("ground-truth index out of range")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


# ---------------------------------------------------------------- synthetic

SYN_TRUTH = {
    "syn1": [[0], [1]],
    "syn2": [[0, 1], [2, 3]],
    "syn3": [[0, 1], [0, 2]],
    "syn4": [[0, 3], [6, 9]],
}


def syn_label(task: str, X: np.ndarray) -> np.ndarray:
    x = X
    if task == "syn1":
        y = (x[:, 0] > 0.55) | (x[:, 1] > 0.55)
    elif task == "syn2":
        y = (x[:, 0] * x[:, 1] > 0.30) | (x[:, 2] * x[:, 3] > 0.30)
    elif task == "syn3":
        y = (x[:, 0] * x[:, 1] > 0.30) | (x[:, 0] * x[:, 2] > 0.30)
    elif task == "syn4":
        y = (x[:, 0] * x[:, 3] > 0.30) | (x[:, 6] * x[:, 9] > 0.30)
    else:
        raise ValueError(f"unknown synthetic task {task!r}")
    return y.astype(np.int64)


def _block_correlated_normal(rng, n, p, rho, block=3):
    """N(0, Sigma) with Sigma block diagonal over consecutive index blocks."""
    X = np.empty((n, p))
    for start in range(0, p, block):
        k = min(block, p - start)
        cov = np.full((k, k), rho)
        np.fill_diagonal(cov, 1.0)
        chol = np.linalg.cholesky(cov)
        X[:, start:start + k] = rng.standard_normal((n, k)) @ chol.T
    return X


def gen_syn(task: str, n: int, p: int = 500, seed: int = 0) -> LabeledDataset:
    task = task.lower()
    if task not in SYN_TASKS:
        raise ValueError(f"unknown synthetic task {task!r}")
    if n < 1 or p < 10:
        raise ValueError("need n >= 1 and p >= 10")
    rng = np.random.default_rng(seed)
    if task == "syn4":
        X = _block_correlated_normal(rng, n, p, SYN4_RHO)
    else:
        X = rng.standard_normal((n, p))
    return LabeledDataset(X, syn_label(task, X), group_structure(SYN_TRUTH[task], p), task)


# --------------------------------------------------------------- chemistry


class Logic:
    """Boolean expression tree over binary feature indices."""

    def __call__(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def features(self) -> set[int]:
        raise NotImplementedError


@dataclass(frozen=True)
class Var(Logic):
    index: int

    def __call__(self, X):
        return X[:, self.index] > 0.5

    def features(self):
        return {self.index}


@dataclass(frozen=True)
class Not(Logic):
    arg: Logic

    def __call__(self, X):
        return ~self.arg(X)

    def features(self):
        return self.arg.features()


@dataclass(frozen=True)
class And(Logic):
    args: tuple

    def __call__(self, X):
        return np.logical_and.reduce([a(X) for a in self.args])

    def features(self):
        return set().union(*(a.features() for a in self.args))


@dataclass(frozen=True)
class Or(Logic):
    args: tuple

    def __call__(self, X):
        return np.logical_or.reduce([a(X) for a in self.args])

    def features(self):
        return set().union(*(a.features() for a in self.args))


# functional-group columns (0-based) in the 84-fragment featurisation
ALKYNE, BENZENE, CARBONYL, ETHER, PRIMARY_AMINE = 0, 17, 28, 39, 55

CHEM_LOGIC = {
    # ether OR no alkyne
    "chem1": Or((Var(ETHER), Not(Var(ALKYNE)))),
    # (primary amine OR no benzene) AND no ether
    "chem2": And((Or((Var(PRIMARY_AMINE), Not(Var(BENZENE)))), Not(Var(ETHER)))),
    # (benzene AND no carbonyl) OR (alkyne AND no ether)
    "chem3": Or((And((Var(BENZENE), Not(Var(CARBONYL)))), And((Var(ALKYNE), Not(Var(ETHER)))))),
}

CHEM_TRUTH = {
    "chem1": [[ETHER], [ALKYNE]],
    "chem2": [[PRIMARY_AMINE, BENZENE], [ETHER]],
    "chem3": [[BENZENE, CARBONYL], [ALKYNE, ETHER]],
}


def gen_chem(task: str, n: int, seed: int = 0, noise_rate: float = CHEM_NOISE_RATE) -> LabeledDataset:
    """Binary fragment vectors labelled by a binding logic.

    The logic's literals cycle through every on/off combination equally often
    (then rows are shuffled); all other bits are Bernoulli(noise_rate).
    """
    task = task.lower()
    if task not in CHEM_LOGIC:
        raise ValueError(f"unknown chemistry task {task!r}")
    if n < 16:
        raise ValueError("need n >= 16")
    rng = np.random.default_rng(seed)
    logic = CHEM_LOGIC[task]
    lits = sorted(logic.features())
    X = (rng.random((n, CHEM_N_FEATURES)) < noise_rate).astype(np.float64)
    combos = (np.arange(n)[:, None] >> np.arange(len(lits))[None, :]) & 1
    X[:, lits] = combos[rng.permutation(n)]
    y = logic(X).astype(np.int64)
    return LabeledDataset(X, y, group_structure(CHEM_TRUTH[task], CHEM_N_FEATURES), task)


# ------------------------------------------------------------------ files


def read_groups(path) -> GroupStructure:
    """One group per line, comma-separated 1-based indices; blank lines and # comments skipped."""
    groups = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            idx = [int(tok) - 1 for tok in line.split(",") if tok.strip()]
        except ValueError:
            raise ValueError(f"{path}:{lineno}: bad group line {line!r}") from None
        if any(i < 0 for i in idx):
            raise ValueError(f"{path}:{lineno}: indices are 1-based")
        groups.append(idx)
    return group_structure(groups)


def write_groups(path, groups) -> None:
    lines = [",".join(str(k + 1) for k in sorted(g)) for g in sorted(groups, key=sorted)]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


def load_binary_csv(path, truth_path=None, label_column: str | None = None) -> LabeledDataset:
    """Read a header + rows CSV of 0/1 features with the label in the last column
    (or ``label_column``). Ground truth comes from an optional groups sidecar."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValueError(f"{path}: no data rows")
        header = [h.strip() for h in header]
        label_idx = header.index(label_column) if label_column else len(header) - 1
        rows, labels = [], []
        for row in reader:
            lineno = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ValueError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            feats = []
            for col, cell in enumerate(row):
                if col == label_idx:
                    continue
                cell = cell.strip()
                if cell not in ("0", "1", "0.0", "1.0"):
                    raise ValueError(
                        f"{path}:{lineno}: column {header[col]!r} has non-binary value {cell!r}")
                feats.append(float(cell))
            try:
                labels.append(int(float(row[label_idx])))
            except ValueError:
                raise ValueError(f"{path}:{lineno}: bad label {row[label_idx]!r}") from None
            rows.append(feats)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    X = np.array(rows, dtype=np.float64)
    truth = read_groups(truth_path) if truth_path else None
    return LabeledDataset(X, np.array(labels, dtype=np.int64), truth, path.stem)


def make_splits(task: str, seed: int, n_train: int | None = None, n_test: int | None = None,
                p: int = 500):
    """Train and test splits drawn from one stream seeded by ``seed``."""
    task = task.lower()
    if task in SYN_TASKS:
        n_train = n_train or 20000
        n_test = n_test or 200
        full = gen_syn(task, n_train + n_test, p=p, seed=seed)
    elif task in CHEM_TASKS:
        n_train = n_train or 8000
        n_test = n_test or 1000
        full = gen_chem(task, n_train + n_test, seed=seed)
    else:
        raise ValueError(f"unknown task {task!r}")
    train = LabeledDataset(full.X[:n_train], full.y[:n_train], full.truth, task)
    test = LabeledDataset(full.X[n_train:], full.y[n_train:], full.truth, task)
    return train, test
