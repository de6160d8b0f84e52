"""Ensemble of gated group-selection learners with a summed linear aggregate.

All N learners are held as stacked parameter tensors with a leading group
axis, so one batched matmul runs every encoder at once. ``learner(i)`` gives
a per-learner view when one is needed.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .gates import GateBank, gate
from .metrics import GroupStructure, group_structure

CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class ModelConfig:
    n_features: int
    n_groups: int = 5
    hidden: int = 20
    n_classes: int = 2
    latent: int | None = None  # defaults to hidden
    tau: float = 0.1
    threshold: float = 0.7
    gate_param: str = "prob"

    @property
    def latent_width(self) -> int:
        return self.hidden if self.latent is None else self.latent

    def __post_init__(self):
        if self.n_groups < 1:
            raise ValueError("need at least one learner")
        if min(self.n_features, self.hidden, self.n_classes, self.latent_width) < 1:
            raise ValueError("model widths must be positive")


@dataclass
class GroupSelectionModel:
    """Read-only snapshot of one learner's gate, encoder and head."""

    index: int
    selection_probs: np.ndarray
    encoder: list[tuple[np.ndarray, np.ndarray]]
    head: tuple[np.ndarray, np.ndarray]


PARAM_NAMES = ("gate_param", "enc_w1", "enc_b1", "enc_w2", "enc_b2", "enc_w3", "enc_b3",
               "head_w", "head_b", "agg_w", "agg_b")


def _linear_init(rng, n, fan_in, fan_out):
    bound = 1.0 / np.sqrt(fan_in)
    w = rng.uniform(-bound, bound, size=(n, fan_in, fan_out))
    b = rng.uniform(-bound, bound, size=(n, 1, fan_out))
    return w, b


class CompFSModel:
    def __init__(self, config: ModelConfig, x_mean, rng: np.random.Generator,
                 fixed_mask=None):
        self.config = config
        n, p, h, lat, c = (config.n_groups, config.n_features, config.hidden,
                           config.latent_width, config.n_classes)
        x_mean = np.asarray(x_mean, dtype=np.float64)
        if x_mean.shape != (p,):
            raise ad.ShapeError(f"x_mean has shape {x_mean.shape}, expected ({p},)")
        self.gates = GateBank.init(n, p, x_mean, rng, config.tau, config.threshold,
                                   config.gate_param)
        # a fixed binary mask replaces the learnt gates (oracle baseline)
        self.fixed_mask = None
        if fixed_mask is not None:
            self.fixed_mask = np.asarray(fixed_mask, dtype=np.float64).reshape(n, 1, p)
            self.gates.param.requires_grad = False

        shapes = [(p, h), (h, h), (h, lat)]
        tensors = {}
        for k, (fi, fo) in enumerate(shapes, start=1):
            w, b = _linear_init(rng, n, fi, fo)
            tensors[f"enc_w{k}"], tensors[f"enc_b{k}"] = w, b
        tensors["head_w"], tensors["head_b"] = _linear_init(rng, n, lat, c)
        tensors["agg_w"], tensors["agg_b"] = _linear_init(rng, n, lat, c)
        self.params: dict[str, Tensor] = {"gate_param": self.gates.param}
        for name, arr in tensors.items():
            self.params[name] = Tensor(arr, requires_grad=True, name=name)

    # ------------------------------------------------------------------ access

    def trainable(self) -> list[Tensor]:
        return [t for t in self.params.values() if t.requires_grad]

    def project(self) -> None:
        """Re-impose parameter constraints after an optimiser step."""
        self.gates.project()

    def selection_probs(self) -> np.ndarray:
        if self.fixed_mask is not None:
            return self.fixed_mask[:, 0, :].copy()
        return self.gates.probs_numpy()

    def learner(self, i: int) -> GroupSelectionModel:
        P = {k: v.data for k, v in self.params.items()}
        enc = [(P[f"enc_w{k}"][i].copy(), P[f"enc_b{k}"][i, 0].copy()) for k in (1, 2, 3)]
        return GroupSelectionModel(i, self.selection_probs()[i],
                                   enc, (P["head_w"][i].copy(), P["head_b"][i, 0].copy()))

    def state_dict(self) -> dict[str, np.ndarray]:
        return {k: v.data.copy() for k, v in self.params.items()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        for k, t in self.params.items():
            arr = np.asarray(state[k], dtype=np.float64)
            if arr.shape != t.shape:
                raise ad.ShapeError(f"{k}: checkpoint shape {arr.shape} != model shape {t.shape}")
            t.data = arr.copy()

    # ----------------------------------------------------------------- forward

    def _pipeline(self, xg: Tensor):
        P = self.params
        h1 = ad.relu(ad.add(ad.matmul(xg, P["enc_w1"]), P["enc_b1"]))
        h2 = ad.relu(ad.add(ad.matmul(h1, P["enc_w2"]), P["enc_b2"]))
        z = ad.add(ad.matmul(h2, P["enc_w3"]), P["enc_b3"])
        group_logits = ad.add(ad.matmul(z, P["head_w"]), P["head_b"])
        ensemble = ad.tsum(ad.add(ad.matmul(z, P["agg_w"]), P["agg_b"]), axis=0)
        return ensemble, group_logits

    def _check_x(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.config.n_features:
            raise ad.ShapeError(f"input has shape {x.shape}, expected (batch, {self.config.n_features})")
        return x

    def forward_train(self, x, rng: np.random.Generator):
        """Stochastic pass: returns (ensemble logits (B, C), group logits (N, B, C), pi (N, p))."""
        x = self._check_x(x)
        if self.fixed_mask is not None:
            xg = gate(x, self.fixed_mask, self.gates.x_mean)
        else:
            xg = self.gates.sample_gated(x, rng)
        ensemble, group_logits = self._pipeline(xg)
        return ensemble, group_logits, self.gates.probs()

    def forward_eval(self, x):
        """Deterministic pass with binary gates pi > threshold."""
        x = self._check_x(x)
        n, p = self.config.n_groups, self.config.n_features
        if self.fixed_mask is not None:
            m = self.fixed_mask
        else:
            m = self.gates.hard_mask().reshape(n, 1, p)
        xg = gate(x, m, self.gates.x_mean)
        ensemble, group_logits = self._pipeline(xg)
        return ensemble.data, group_logits.data

    def predict(self, x) -> np.ndarray:
        return self.forward_eval(x)[0].argmax(axis=1)

    def selections(self) -> list[frozenset[int]]:
        pi = self.selection_probs()
        if self.fixed_mask is not None:
            return [frozenset(np.flatnonzero(row > 0.5).tolist()) for row in pi]
        return self.gates.selections()

    def discovered_groups(self) -> GroupStructure:
        return group_structure(self.selections())

    # -------------------------------------------------------------- checkpoint

    def save(self, path) -> None:
        """Write every parameter and the config to one ``.npz`` file."""
        meta = {"version": CHECKPOINT_VERSION, "config": asdict(self.config),
                "fixed_mask": self.fixed_mask is not None}
        arrays = self.state_dict()
        arrays["x_mean"] = self.gates.x_mean
        if self.fixed_mask is not None:
            arrays["fixed_mask"] = self.fixed_mask
        with open(path, "wb") as fh:
            np.savez(fh, __meta__=np.array(json.dumps(meta)), **arrays)

    @classmethod
    def load(cls, path) -> "CompFSModel":
        with np.load(Path(path), allow_pickle=False) as f:
            meta = json.loads(str(f["__meta__"]))
            if meta.get("version") != CHECKPOINT_VERSION:
                raise ValueError(f"unsupported checkpoint version {meta.get('version')}")
            config = ModelConfig(**meta["config"])
            fixed = f["fixed_mask"] if meta["fixed_mask"] else None
            model = cls(config, f["x_mean"], np.random.default_rng(0), fixed_mask=fixed)
            model.load_state_dict({k: f[k] for k in PARAM_NAMES})
        return model
