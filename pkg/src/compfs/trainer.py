"""Minibatch Adam training loop and held-out evaluation."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .autodiff import Adam, backward
from .datasets import LabeledDataset
from .metrics import accuracy, g_sim, tpr_fdr
from .model import CompFSModel, ModelConfig
from .objective import LossWeights, total_loss

log = logging.getLogger(__name__)


class TrainingDiverged(FloatingPointError):
    def __init__(self, epoch: int, batch: int, value: float):
        super().__init__(f"non-finite loss {value} at epoch {epoch}, batch {batch}")
        self.epoch = epoch
        self.batch = batch


@dataclass
class TrainConfig:
    epochs: int = 35
    batch_size: int = 50
    lr: float = 0.003
    lr_decay: float = 0.99
    seed: int = 0
    weights: LossWeights = field(default_factory=LossWeights)
    n_groups: int = 5
    hidden: int = 20
    n_classes: int = 2
    tau: float = 0.1
    threshold: float = 0.7
    gate_param: str = "prob"

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.batch_size < 1 or self.lr <= 0 or not 0 < self.lr_decay <= 1:
            raise ValueError("batch_size, lr and lr_decay must be positive (lr_decay <= 1)")

    def model_config(self, n_features: int) -> ModelConfig:
        return ModelConfig(n_features=n_features, n_groups=self.n_groups, hidden=self.hidden,
                           n_classes=self.n_classes, tau=self.tau, threshold=self.threshold,
                           gate_param=self.gate_param)


def rng_streams(seed: int) -> dict[str, np.random.Generator]:
    """Independent init / shuffle / gate-noise generators derived from one seed."""
    init, shuffle, noise = np.random.SeedSequence(seed).spawn(3)
    return {"init": np.random.default_rng(init),
            "shuffle": np.random.default_rng(shuffle),
            "noise": np.random.default_rng(noise)}


def build_model(config: TrainConfig, train: LabeledDataset, fixed_mask=None) -> CompFSModel:
    rngs = rng_streams(config.seed)
    return CompFSModel(config.model_config(train.p), train.X.mean(axis=0), rngs["init"],
                       fixed_mask=fixed_mask)


def train(config: TrainConfig, data: LabeledDataset, model: CompFSModel | None = None,
          on_epoch=None):
    """Fit ``model`` (built from ``config`` if omitted); return it with per-epoch mean losses.

    ``on_epoch(epoch, model, loss)`` is called after every epoch if given.
    """
    if data.n == 0:
        raise ValueError("empty training split")
    if model is None:
        model = build_model(config, data)
    if model.config.n_features != data.p:
        raise ValueError(f"model expects {model.config.n_features} features, data has {data.p}")
    rngs = rng_streams(config.seed)
    opt = Adam(model.trainable(), lr=config.lr, lr_decay=config.lr_decay)
    history = []
    n, bs = data.n, config.batch_size
    for epoch in range(config.epochs):
        order = rngs["shuffle"].permutation(n)
        total, count = 0.0, 0
        for b, start in enumerate(range(0, n, bs)):
            idx = order[start:start + bs]
            x, y = data.X[idx], data.y[idx]
            try:
                ens, grp, pi = model.forward_train(x, rngs["noise"])
                loss = total_loss(ens, grp, pi, y, config.weights)
            except FloatingPointError:
                raise TrainingDiverged(epoch, b, float("nan")) from None
            value = loss.item()
            if not np.isfinite(value):
                raise TrainingDiverged(epoch, b, value)
            backward(loss)
            opt.step()
            model.project()
            total += value * len(idx)
            count += len(idx)
        opt.end_epoch(epoch + 1)
        history.append(total / count)
        log.debug("epoch %d loss %.5f lr %.6f", epoch, history[-1], opt.lr)
        if on_epoch is not None:
            on_epoch(epoch, model, history[-1])
    return model, history


def evaluate(model: CompFSModel, test: LabeledDataset, truth=None) -> dict:
    """Accuracy of the hard-gated ensemble, plus selection metrics when ``truth`` is given."""
    t0 = time.perf_counter()
    pred = model.predict(test.X)
    groups = model.discovered_groups()
    out = {"accuracy": accuracy(pred, test.y), "n_groups": len(groups),
           "groups": sorted(sorted(g) for g in groups)}
    truth = test.truth if truth is None else truth
    if truth:
        tpr, fdr = tpr_fdr(truth, groups)
        out.update(tpr=tpr, fdr=fdr, g_sim=g_sim(truth, groups))
    out["eval_time"] = time.perf_counter() - t0
    return out
