"""Single-step sign-gradient attack against the final head.

x_adv = clip(x + eps * sign(d loss / d x), lo, hi), with the loss taken
through the final classifier only and sign(0) = 0. The gradient does not
depend on eps, so a whole eps grid reuses one backward pass per sample.
"""

from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .model import MultiHeadNet
from .nn import forward_backward


@dataclass
class AttackConfig:
    eps_grid: list[float] = field(default_factory=lambda: default_eps_grid())
    domain_lo: float = 0.0
    domain_hi: float = 1.0

    def __post_init__(self):
        if any(e < 0 for e in self.eps_grid):
            raise ValueError("eps values must be >= 0")
        if any(lo >= hi for lo, hi in zip(self.eps_grid, self.eps_grid[1:])):
            raise ValueError("eps_grid must be strictly ascending")
        if not self.domain_lo < self.domain_hi:
            raise ValueError("domain_lo must be < domain_hi")


def default_eps_grid() -> list[float]:
    """0 plus the 20-step grid n/20, n = 1..20."""
    return [0.0] + [n / 20.0 for n in range(1, 21)]


def input_gradient(net: MultiHeadNet, x: np.ndarray, true_label: int) -> np.ndarray:
    """Gradient of the final-head cross-entropy w.r.t. the input."""
    _, grads = forward_backward(net.final_stack(), x, true_label)
    return grads.input_grad


def fgsm(
    net: MultiHeadNet,
    x: np.ndarray,
    true_label: int,
    eps: float,
    domain_lo: float = 0.0,
    domain_hi: float = 1.0,
) -> np.ndarray:
    """One attacked copy of x; the perturbation stays within eps in sup-norm."""
    x = np.asarray(x, dtype=np.float64)
    if eps < 0:
        raise ValueError("eps must be >= 0")
    if np.any(x < domain_lo) or np.any(x > domain_hi):
        raise ValueError("input lies outside the feature domain")
    if eps == 0.0:
        return x.copy()
    step = np.sign(input_gradient(net, x, true_label))
    return np.clip(x + eps * step, domain_lo, domain_hi)


def attack_batch(
    net: MultiHeadNet, dataset: Dataset, cfg: AttackConfig
) -> dict[float, Dataset]:
    """Attacked copy of the dataset for every eps in the grid.

    The sign pattern per sample is eps-independent and computed once.
    The input dataset is left untouched and labels are preserved.
    """
    signs = np.stack(
        [
            np.sign(input_gradient(net, x, int(y)))
            for x, y in zip(dataset.features, dataset.labels)
        ]
    )
    out: dict[float, Dataset] = {}
    for eps in cfg.eps_grid:
        if eps == 0.0:
            features = dataset.features.copy()
        else:
            features = np.clip(
                dataset.features + eps * signs, cfg.domain_lo, cfg.domain_hi
            )
        out[eps] = Dataset(features, dataset.labels.copy(), dataset.n_classes, dataset.dim)
    return out
