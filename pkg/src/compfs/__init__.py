"""Composite feature selection with an ensemble of stochastically gated learners."""

from .datasets import LabeledDataset, gen_chem, gen_syn, make_splits
from .metrics import auroc, g_sim, jaccard, tpr_fdr
from .model import CompFSModel, ModelConfig
from .objective import LossWeights, total_loss
from .trainer import TrainConfig, evaluate, train

__version__ = "0.1.0"

__all__ = [
    "CompFSModel", "LabeledDataset", "LossWeights", "ModelConfig", "TrainConfig",
    "auroc", "evaluate", "g_sim", "gen_chem", "gen_syn", "jaccard", "make_splits",
    "total_loss", "tpr_fdr", "train",
]
