"""Experiment orchestration: train -> attack -> uncertainty -> evaluate,
with one subdirectory of CSV artifacts per seed.

A run with --seeds K executes seeds {seed, seed+1, ..., seed+K-1}
independently; everything (data, split, init, shuffles) is re-derived
from the per-run seed, so a run is reproducible byte for byte.
"""

import csv
import os
from dataclasses import replace

from .attack import attack_batch
from .config import ExperimentConfig, default_ablation_subsets, subset_label
from .data import Dataset, gen_blobs, load_idx, save_idx, split
from .dirichlet import fit_dirichlet, sample_moments, select_heads, uncertainty_scores
from .errors import ConfigError, MhuiError
from .metrics import ADVERSARIAL, CLEAN, DetectionReport, ScoredSample, auroc
from .model import MultiHeadNet, build_net, load_checkpoint, predict_all_heads, save_checkpoint
from .rng import Xorshift64Star, derive_seed
from .train import final_head_accuracy, head_accuracies, train_backbone, train_heads

CHECKPOINT_FILE = "checkpoint.mhui"
TRAIN_LOG_FILE = "train_log.csv"
HEAD_ACC_FILE = "head_accuracy.csv"
DETECTION_FILE = "detection.csv"
ABLATION_FILE = "ablation.csv"
ATTACK_FILE = "attack.csv"

DETECTION_HEADER = ["seed", "epsilon", "metric", "head_subset", "auroc", "clean_acc", "adv_acc"]
HEAD_ACC_HEADER = ["seed", "head_id", "accuracy"]
TRAIN_LOG_HEADER = ["seed", "phase", "epoch", "mean_loss"]
ATTACK_HEADER = ["seed", "epsilon", "clean_acc", "adv_acc"]


def fmt(value) -> str:
    """Shortest round-trip decimal form; keeps CSV output reproducible."""
    return repr(float(value)) if isinstance(value, float) else str(value)


def write_csv(path: str, header: list[str], rows: list[list]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def seed_dir(out_dir: str, seed: int) -> str:
    return os.path.join(out_dir, f"seed_{seed}")


def run_seeds(cfg: ExperimentConfig, n_seeds: int) -> list[int]:
    if n_seeds < 1:
        raise ConfigError("--seeds must be >= 1")
    return [cfg.seed + k for k in range(n_seeds)]


def make_dataset(cfg: ExperimentConfig, seed: int) -> Dataset:
    if cfg.data.kind == "blobs":
        return gen_blobs(
            cfg.data.classes,
            cfg.data.per_class,
            cfg.data.dim,
            cfg.data.spread,
            derive_seed(seed, "data"),
        )
    max_n = cfg.data.max_n if cfg.data.max_n > 0 else None
    return load_idx(cfg.data.images, cfg.data.labels, max_n)


def make_splits(cfg: ExperimentConfig, seed: int) -> tuple[Dataset, Dataset]:
    ds = make_dataset(cfg, seed)
    return split(ds, cfg.data.train_frac, derive_seed(seed, "split"))


def train_one_seed(cfg: ExperimentConfig, out_dir: str, seed: int) -> None:
    train_set, test_set = make_splits(cfg, seed)
    net = build_net(
        train_set.dim,
        train_set.n_classes,
        cfg.model.blocks,
        cfg.model.head_hidden,
        Xorshift64Star(derive_seed(seed, "init")),
    )
    train_cfg = replace(cfg.train, seed=seed)
    backbone_losses = train_backbone(net, train_set, train_cfg)
    head_losses = train_heads(net, train_set, train_cfg)

    sdir = seed_dir(out_dir, seed)
    os.makedirs(sdir, exist_ok=True)
    save_checkpoint(net, os.path.join(sdir, CHECKPOINT_FILE))

    log_rows: list[list] = [
        [seed, "backbone", epoch, loss] for epoch, loss in enumerate(backbone_losses)
    ]
    for h, losses in enumerate(head_losses, start=1):
        log_rows.extend([seed, f"head_{h}", epoch, loss] for epoch, loss in enumerate(losses))
    write_csv(os.path.join(sdir, TRAIN_LOG_FILE), TRAIN_LOG_HEADER, log_rows)

    accs = head_accuracies(net, test_set)
    write_csv(
        os.path.join(sdir, HEAD_ACC_FILE),
        HEAD_ACC_HEADER,
        [[seed, hid, acc] for hid, acc in enumerate(accs, start=1)],
    )


def cmd_train(cfg: ExperimentConfig, out_dir: str, n_seeds: int) -> None:
    """Train one checkpoint per seed, logging losses and head accuracies."""
    for seed in run_seeds(cfg, n_seeds):
        train_one_seed(cfg, out_dir, seed)


def load_seed_checkpoint(cfg: ExperimentConfig, out_dir: str, seed: int) -> MultiHeadNet:
    path = os.path.join(seed_dir(out_dir, seed), CHECKPOINT_FILE)
    if not os.path.exists(path):
        raise MhuiError(f"missing checkpoint {path}; run `mhui train` first")
    net = load_checkpoint(path)
    if net.block_widths != cfg.model.blocks or net.head_hidden != cfg.model.head_hidden:
        raise ConfigError(
            f"checkpoint {path} architecture {net.block_widths}/{net.head_hidden} "
            f"does not match config {cfg.model.blocks}/{cfg.model.head_hidden}"
        )
    return net


def _scores_by_subset(
    net: MultiHeadNet, ds: Dataset, subsets: list[tuple[int, ...]]
) -> dict[tuple[int, ...], dict[str, list[float]]]:
    """Both uncertainty scores for every sample, per head subset.

    Predictions are computed once per sample and shared across subsets.
    """
    out = {s: {"max_p": [], "ent": []} for s in subsets}
    for x in ds.features:
        pred = predict_all_heads(net, x)
        for subset in subsets:
            est = fit_dirichlet(sample_moments(select_heads(pred, subset)))
            scores = uncertainty_scores(est)
            out[subset]["max_p"].append(scores.max_p)
            out[subset]["ent"].append(scores.ent)
    return out


def adversarial_positive(metric: str, value: float) -> float:
    """Orient a metric so larger always means "more likely attacked".

    Entropy rises under attack and is used as-is; max-probability falls,
    so it enters AUROC negated. AUROC is invariant under any strictly
    increasing rescaling, so the choice of negation is immaterial.
    """
    return value if metric == "ent" else -value


def detect_one_seed(
    cfg: ExperimentConfig,
    net: MultiHeadNet,
    seed: int,
    subsets: list[tuple[int, ...]],
) -> list[DetectionReport]:
    _, test_set = make_splits(cfg, seed)
    attacked = attack_batch(net, test_set, cfg.attack)
    clean_scores = _scores_by_subset(net, test_set, subsets)
    clean_acc = final_head_accuracy(net, test_set)

    reports: list[DetectionReport] = []
    for eps in cfg.attack.eps_grid:
        adv_set = attacked[eps]
        adv_scores = _scores_by_subset(net, adv_set, subsets)
        adv_acc = final_head_accuracy(net, adv_set)
        for metric in cfg.ui_metrics:
            for subset in subsets:
                samples = [
                    ScoredSample(adversarial_positive(metric, v), CLEAN)
                    for v in clean_scores[subset][metric]
                ] + [
                    ScoredSample(adversarial_positive(metric, v), ADVERSARIAL)
                    for v in adv_scores[subset][metric]
                ]
                reports.append(
                    DetectionReport(
                        seed=seed,
                        epsilon=eps,
                        metric=metric,
                        head_subset=subset_label(subset),
                        auroc=auroc(samples),
                        clean_accuracy=clean_acc,
                        adversarial_accuracy=adv_acc,
                    )
                )
    return reports


def write_detection_csv(path: str, reports: list[DetectionReport]) -> None:
    write_csv(
        path,
        DETECTION_HEADER,
        [
            [r.seed, r.epsilon, r.metric, r.head_subset, r.auroc, r.clean_accuracy, r.adversarial_accuracy]
            for r in reports
        ],
    )


def ui_subsets_of(cfg: ExperimentConfig) -> list[tuple[int, ...]]:
    """Configured detection subsets; default is the all-heads combination."""
    return cfg.ui_subsets if cfg.ui_subsets else [tuple(range(1, cfg.n_heads + 1))]


def ablate_subsets_of(cfg: ExperimentConfig) -> list[tuple[int, ...]]:
    """Configured ablation subsets; default is the standard five combinations."""
    return cfg.ablate_subsets if cfg.ablate_subsets else default_ablation_subsets(cfg.n_heads)


def cmd_detect(cfg: ExperimentConfig, out_dir: str, n_seeds: int) -> None:
    """Score clean vs attacked test sets and write detection AUROC rows."""
    for seed in run_seeds(cfg, n_seeds):
        net = load_seed_checkpoint(cfg, out_dir, seed)
        reports = detect_one_seed(cfg, net, seed, ui_subsets_of(cfg))
        write_detection_csv(os.path.join(seed_dir(out_dir, seed), DETECTION_FILE), reports)


def cmd_ablate(cfg: ExperimentConfig, out_dir: str, n_seeds: int) -> None:
    """Detection sweep over the configured list of head combinations."""
    for seed in run_seeds(cfg, n_seeds):
        net = load_seed_checkpoint(cfg, out_dir, seed)
        reports = detect_one_seed(cfg, net, seed, ablate_subsets_of(cfg))
        write_detection_csv(os.path.join(seed_dir(out_dir, seed), ABLATION_FILE), reports)


def cmd_attack(cfg: ExperimentConfig, out_dir: str, n_seeds: int) -> None:
    """Report final-head accuracy degradation over the eps grid."""
    for seed in run_seeds(cfg, n_seeds):
        net = load_seed_checkpoint(cfg, out_dir, seed)
        _, test_set = make_splits(cfg, seed)
        attacked = attack_batch(net, test_set, cfg.attack)
        clean_acc = final_head_accuracy(net, test_set)
        rows = [
            [seed, eps, clean_acc, final_head_accuracy(net, attacked[eps])]
            for eps in cfg.attack.eps_grid
        ]
        write_csv(os.path.join(seed_dir(out_dir, seed), ATTACK_FILE), ATTACK_HEADER, rows)


def cmd_gen_data(cfg: ExperimentConfig, out_dir: str) -> tuple[str, str]:
    """Materialize the configured dataset as an IDX pair under out_dir.

    Features are quantized to bytes (see data.save_idx), so this is a
    snapshot for external tools, not the training path itself.
    """
    ds = make_dataset(cfg, cfg.seed)
    os.makedirs(out_dir, exist_ok=True)
    images = os.path.join(out_dir, "images.idx")
    labels = os.path.join(out_dir, "labels.idx")
    save_idx(ds, images, labels)
    return images, labels
