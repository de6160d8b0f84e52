"""Training objective: per-learner, ensemble and overlap terms."""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import autodiff as ad
from .autodiff import Tensor


@dataclass(frozen=True)
class LossWeights:
    """Raw hyperparameters as published; ``effective`` applies the sqrt(p) rule."""

    beta: float = 4.5
    beta_e: float = 1.0
    beta_r: float = 1.2
    scale_by_sqrt_p: bool = True

    def effective(self, n_features: int) -> tuple[float, float, float]:
        """(beta, beta_e, beta_r) as used in the loss for ``n_features`` inputs."""
        s = math.sqrt(n_features) if self.scale_by_sqrt_p else 1.0
        return self.beta * s, self.beta_e, self.beta_r * s


def sparsity_penalty(pi: Tensor) -> Tensor:
    """Squared mean selection probability, one value per row of ``pi``."""
    return ad.square(ad.mean(pi, axis=-1))


def group_loss(group_logits: Tensor, labels, pi: Tensor, beta_eff: float) -> Tensor:
    """Cross-entropy plus beta * <pi>^2.

    Accepts a single learner ((B, C) logits, (p,) pi) or the stacked form
    ((N, B, C), (N, p)); the stacked form returns the sum over learners.
    """
    ce = ad.softmax_cross_entropy(group_logits, labels)
    return ad.tsum(ad.add(ce, ad.scale(sparsity_penalty(pi), beta_eff)))


def ensemble_loss(ensemble_logits: Tensor, labels) -> Tensor:
    return ad.softmax_cross_entropy(ensemble_logits, labels)


def overlap_loss(pi: Tensor) -> Tensor:
    """Sum over learner pairs i < j of pi_i . pi_j.

    Uses sum_{i<j} pi_i.pi_j = (|sum_i pi_i|^2 - sum_i |pi_i|^2) / 2.
    """
    total = ad.tsum(pi, axis=0)
    return ad.scale(ad.sub(ad.tsum(ad.square(total)), ad.tsum(ad.square(pi))), 0.5)


def total_loss(ensemble_logits: Tensor, group_logits: Tensor, pi: Tensor, labels,
               weights: LossWeights) -> Tensor:
    beta, beta_e, beta_r = weights.effective(pi.shape[-1])
    loss = group_loss(group_logits, labels, pi, beta)
    if beta_e:
        loss = ad.add(loss, ad.scale(ensemble_loss(ensemble_logits, labels), beta_e))
    if beta_r and pi.shape[0] > 1:
        loss = ad.add(loss, ad.scale(overlap_loss(pi), beta_r))
    return loss
