"""Two-phase training: the trunk with its final head first, then every
earlier head independently against the frozen trunk.

Head training never touches block or final-head parameters (they are
bit-identical before and after), and each head draws mini-batches from
its own derived RNG stream, so heads can be trained in any order with
identical results.
"""

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .model import MultiHeadNet, head_distribution, predict_all_heads, trunk_activations
from .nn import adam_step, forward_backward, grads_as_list, init_adam, stack_params
from .rng import Xorshift64Star, derive_seed


@dataclass
class TrainConfig:
    backbone_epochs: int = 30
    backbone_lr_max: float = 7.5e-4
    cycle_frac: float = 0.7  # fraction of backbone epochs inside the triangular cycle
    head_epochs: int = 8
    head_lr: float = 3e-3
    batch_size: int = 32
    seed: int = 0

    def __post_init__(self):
        if self.backbone_epochs < 1:
            raise ValueError("backbone_epochs must be >= 1")
        if self.head_epochs < 0:
            raise ValueError("head_epochs must be >= 0")
        if self.backbone_lr_max <= 0 or self.head_lr <= 0:
            raise ValueError("learning rates must be > 0")
        if not 0.0 < self.cycle_frac <= 1.0:
            raise ValueError("cycle_frac must lie in (0, 1]")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


def one_cycle_lr(epoch: int, cfg: TrainConfig) -> float:
    """Triangular 1-cycle schedule with a linear cool-down tail.

    Over the cycle (the first cycle_frac fraction of the epochs) the rate
    ramps linearly from 0.1*lr_max to lr_max and back to 0.1*lr_max; the
    remaining epochs decay linearly to 0.01*lr_max at the final epoch.
    """
    if not 0 <= epoch < cfg.backbone_epochs:
        raise ValueError(f"epoch {epoch} outside [0, {cfg.backbone_epochs})")
    lr_max = cfg.backbone_lr_max
    cycle = cfg.cycle_frac * cfg.backbone_epochs
    half = cycle / 2.0
    if epoch <= half:
        return lr_max * (0.1 + 0.9 * (epoch / half))
    if epoch <= cycle:
        return lr_max * (1.0 - 0.9 * (epoch - half) / (cycle - half))
    t = (epoch - cycle) / (cfg.backbone_epochs - 1 - cycle)
    return lr_max * (0.1 - 0.09 * t)


def _epoch_batches(n: int, batch_size: int, rng: Xorshift64Star) -> list[list[int]]:
    order = rng.shuffled_indices(n)
    return [order[i : i + batch_size] for i in range(0, n, batch_size)]


def _train_stack_epoch(stack, inputs, labels, batches, state, lr) -> float:
    """One epoch of mini-batch Adam on a layer stack; returns mean loss."""
    params = stack_params(stack)
    losses = []
    for batch in batches:
        acc = [np.zeros_like(p) for p in params]
        for i in batch:
            loss, grads = forward_backward(stack, inputs[i], int(labels[i]))
            losses.append(loss)
            for a, g in zip(acc, grads_as_list(grads)):
                a += g
        for a in acc:
            a /= len(batch)
        adam_step(params, acc, state, lr)
    return float(np.mean(losses))


def train_backbone(net: MultiHeadNet, train_set: Dataset, cfg: TrainConfig) -> list[float]:
    """Train blocks plus the final head on its cross-entropy.

    Earlier heads are untouched. Returns the per-epoch mean loss.
    """
    if train_set.n < 1:
        raise ValueError("empty training set")
    if train_set.dim != net.input_dim:
        raise ValueError("dataset dimension does not match the net input")
    rng = Xorshift64Star(derive_seed(cfg.seed, "train-backbone"))
    stack = net.final_stack()
    state = init_adam(stack_params(stack))
    history = []
    for epoch in range(cfg.backbone_epochs):
        lr = one_cycle_lr(epoch, cfg)
        batches = _epoch_batches(train_set.n, cfg.batch_size, rng)
        history.append(
            _train_stack_epoch(stack, train_set.features, train_set.labels, batches, state, lr)
        )
    return history


def train_heads(net: MultiHeadNet, train_set: Dataset, cfg: TrainConfig) -> list[list[float]]:
    """Train heads 1..N-1 on their own cross-entropy with the trunk frozen.

    Gradients stop at the block boundary; block and final-head parameters
    are never written. Returns per-head loss histories (empty when
    head_epochs is 0).
    """
    if train_set.n < 1:
        raise ValueError("empty training set")
    if train_set.dim != net.input_dim:
        raise ValueError("dataset dimension does not match the net input")
    # The trunk is frozen, so per-block activations can be computed once.
    acts = [trunk_activations(net, x) for x in train_set.features]
    histories: list[list[float]] = []
    for h in range(net.n_blocks - 1):
        rng = Xorshift64Star(derive_seed(cfg.seed, "train-head", h + 1))
        stack = net.heads[h]
        state = init_adam(stack_params(stack))
        inputs = [acts[i][h] for i in range(train_set.n)]
        history = []
        for _ in range(cfg.head_epochs):
            batches = _epoch_batches(train_set.n, cfg.batch_size, rng)
            history.append(
                _train_stack_epoch(stack, inputs, train_set.labels, batches, state, cfg.head_lr)
            )
        histories.append(history)
    return histories


def head_accuracies(net: MultiHeadNet, ds: Dataset) -> list[float]:
    """Top-1 accuracy of every head on a dataset."""
    correct = np.zeros(net.n_blocks, dtype=np.int64)
    for x, y in zip(ds.features, ds.labels):
        pred = predict_all_heads(net, x)
        correct += pred.rows.argmax(axis=1) == int(y)
    return [float(c) / ds.n for c in correct]


def final_head_accuracy(net: MultiHeadNet, ds: Dataset) -> float:
    """Top-1 accuracy of the final head (the plain classifier)."""
    correct = 0
    for x, y in zip(ds.features, ds.labels):
        acts = trunk_activations(net, x)
        p = head_distribution(net, net.n_blocks - 1, acts[-1])
        correct += int(p.argmax()) == int(y)
    return correct / ds.n
