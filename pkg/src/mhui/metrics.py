"""Detection metrics: exact rank-based AUROC, Youden threshold
calibration, and the thresholded detection decision.

Scores are oriented adversarial-positive: larger means "more likely
attacked". AUROC is the Mann-Whitney statistic (ties count 0.5), not a
curve integration, so it matches pairwise counting exactly.
"""

from dataclasses import dataclass

import numpy as np

CLEAN = "clean"
ADVERSARIAL = "adversarial"


@dataclass
class ScoredSample:
    score: float
    label: str  # CLEAN or ADVERSARIAL

    def __post_init__(self):
        if self.label not in (CLEAN, ADVERSARIAL):
            raise ValueError(f"label must be {CLEAN!r} or {ADVERSARIAL!r}")
        if not np.isfinite(self.score):
            raise ValueError("score must be finite")


@dataclass
class DetectionReport:
    """One detection-evaluation record: a row of the results CSV."""

    seed: int
    epsilon: float
    metric: str  # "max_p" or "ent"
    head_subset: str  # canonical "1+2+..." membership string
    auroc: float
    clean_accuracy: float
    adversarial_accuracy: float


def _midranks(scores: np.ndarray) -> np.ndarray:
    """Ranks 1..n with tied values sharing their average rank."""
    order = np.argsort(scores, kind="stable")
    ranks = np.empty(scores.shape[0], dtype=np.float64)
    i = 0
    while i < scores.shape[0]:
        j = i
        while j + 1 < scores.shape[0] and scores[order[j + 1]] == scores[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def auroc(samples: list[ScoredSample]) -> float:
    """P(adversarial score > clean score) with ties counted as 0.5."""
    scores = np.array([s.score for s in samples], dtype=np.float64)
    positive = np.array([s.label == ADVERSARIAL for s in samples], dtype=bool)
    n_pos = int(positive.sum())
    n_neg = scores.shape[0] - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("need at least one sample of each label")
    ranks = _midranks(scores)
    u = ranks[positive].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def calibrate_threshold(validation: list[ScoredSample]) -> tuple[float, float]:
    """Threshold maximizing Youden's J = TPR - FPR.

    Candidates are midpoints of adjacent sorted unique scores; among
    equal-J candidates the smallest threshold wins. Degenerate input
    (a single unique score) yields that score with J = 0.
    """
    scores = np.array([s.score for s in validation], dtype=np.float64)
    positive = np.array([s.label == ADVERSARIAL for s in validation], dtype=bool)
    n_pos = int(positive.sum())
    n_neg = scores.shape[0] - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("need at least one sample of each label")
    uniq = np.unique(scores)
    if uniq.shape[0] == 1:
        return float(uniq[0]), 0.0
    best_t, best_j = None, -np.inf
    for t in (uniq[:-1] + uniq[1:]) / 2.0:
        tpr = float(np.sum(scores[positive] > t)) / n_pos
        fpr = float(np.sum(scores[~positive] > t)) / n_neg
        j = tpr - fpr
        if j > best_j:
            best_t, best_j = float(t), j
    return best_t, best_j


def detect(score: float, threshold: float) -> bool:
    """Flag a sample as attacked iff its score strictly exceeds the threshold."""
    return score > threshold
