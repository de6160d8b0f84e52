"""Oracle and LASSO reference selectors."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import autodiff as ad
from .autodiff import Adam, Tensor, backward
from .datasets import LabeledDataset
from .metrics import accuracy, g_sim, group_structure, tpr_fdr, union
from .objective import LossWeights
from .trainer import TrainConfig, build_model, evaluate, rng_streams, train


def train_oracle(train_data: LabeledDataset, test_data: LabeledDataset, config: TrainConfig):
    """Single learner whose gate is fixed open on exactly the true features."""
    if not train_data.truth:
        raise ValueError("oracle needs ground truth")
    relevant = sorted(union(train_data.truth))
    mask = np.zeros((1, train_data.p))
    mask[0, relevant] = 1.0
    config = replace(config, n_groups=1,
                     weights=LossWeights(beta=0.0, beta_e=config.weights.beta_e, beta_r=0.0))
    model = build_model(config, train_data, fixed_mask=mask)
    model, history = train(config, train_data, model)
    return model, evaluate(model, test_data)


@dataclass
class LassoConfig:
    reg: float = 0.4
    epochs: int = 8
    batch_size: int = 50
    lr: float = 0.003
    lr_decay: float = 0.99
    seed: int = 0
    threshold: float = 0.01
    n_classes: int = 2


@dataclass
class LinearModel:
    weights: np.ndarray  # (classes, p)
    bias: np.ndarray
    threshold: float = 0.01

    def pruned(self) -> np.ndarray:
        w = self.weights.copy()
        w[np.abs(w) <= self.threshold] = 0.0
        return w

    def selected(self) -> frozenset[int]:
        return frozenset(np.flatnonzero(np.any(self.pruned() != 0, axis=0)).tolist())

    def predict(self, X) -> np.ndarray:
        return (np.asarray(X) @ self.pruned().T + self.bias).argmax(axis=1)


def fit_lasso(data: LabeledDataset, config: LassoConfig) -> tuple[LinearModel, list[float]]:
    """L1-penalised softmax regression trained with Adam.

    The data term is the minibatch-mean cross-entropy; the L1 term is added
    once per step.
    """
    rngs = rng_streams(config.seed)
    c, p = config.n_classes, data.p
    bound = 1.0 / np.sqrt(p)
    w = Tensor(rngs["init"].uniform(-bound, bound, (p, c)), requires_grad=True, name="w")
    b = Tensor(rngs["init"].uniform(-bound, bound, (c,)), requires_grad=True, name="b")
    opt = Adam([w, b], lr=config.lr, lr_decay=config.lr_decay)
    history = []
    for epoch in range(config.epochs):
        order = rngs["shuffle"].permutation(data.n)
        total = 0.0
        for start in range(0, data.n, config.batch_size):
            idx = order[start:start + config.batch_size]
            logits = ad.add(ad.matmul(data.X[idx], w), b)
            l1 = ad.scale(ad.tsum(ad.absolute(w)), config.reg)
            loss = ad.add(ad.softmax_cross_entropy(logits, data.y[idx]), l1)
            total += loss.item() * len(idx)
            backward(loss)
            opt.step()
        opt.end_epoch(epoch + 1)
        history.append(total / data.n)
    return LinearModel(w.data.T.copy(), b.data.copy(), config.threshold), history


def train_lasso(train_data: LabeledDataset, test_data: LabeledDataset, config: LassoConfig):
    model, _ = fit_lasso(train_data, config)
    sel = model.selected()
    groups = group_structure([sel])
    report = {"accuracy": accuracy(model.predict(test_data.X), test_data.y),
              "n_groups": len(groups), "groups": sorted(sorted(g) for g in groups)}
    if test_data.truth:
        tpr, fdr = tpr_fdr(test_data.truth, groups)
        report.update(tpr=tpr, fdr=fdr, g_sim=g_sim(test_data.truth, groups))
    return model, report
