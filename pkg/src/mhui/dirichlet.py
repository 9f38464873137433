"""Dirichlet-based uncertainty scoring over per-head predictions.

The per-head rows of a `PredictionSet` are treated as samples from a
single Dirichlet distribution. Its concentration vector is recovered by
matching first and second moments:

    E[y] = alpha / alpha0
    Var[y] = alpha * (alpha0 - alpha) / (alpha0^2 * (alpha0 + 1))

Inverting componentwise gives s_c = mean_c * (1 - mean_c) / var_c - 1,
which equals alpha0 for every class when the moments are exact; the
estimate aggregates the qualifying s_c by arithmetic mean. Uncertainty
is then read off the density mode m_c = (alpha_c - 1) / (alpha0 - C):
its maximum component (high on confident inputs) and its Shannon
entropy (high when the heads disagree, as they do under attack).
"""

import csv
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import FormatError
from .model import MultiHeadNet, PredictionSet, predict_all_heads

# Guard constants for the moment-matching inversion.
VAR_FLOOR = 1e-12  # below this a component is treated as dispersion-free
ALPHA_FLOOR = 1.000001  # keeps every alpha_c > 1 so the mode exists
ALPHA0_CAP = 1e6  # concentration assigned to a zero-variance consensus
MEAN_TOL = 1e-6


@dataclass
class Moments:
    mean: np.ndarray  # E[y], on the simplex
    var: np.ndarray  # unbiased per-class variance


@dataclass
class DirichletEstimate:
    alpha: np.ndarray
    alpha0: float
    mode: np.ndarray
    clamped: bool  # True when any guard changed or excluded a value

    @property
    def mean(self) -> np.ndarray:
        """Dirichlet mean alpha/alpha0 (alternative location estimate)."""
        return self.alpha / self.alpha0


@dataclass
class UncertaintyScores:
    max_p: float  # max mode component, in [1/C, 1]
    ent: float  # mode entropy, in [0, ln C]


def select_heads(pred: PredictionSet, subset: Sequence[int]) -> PredictionSet:
    """Restrict a prediction set to a subset of head ids (ascending)."""
    ids = list(subset)
    if not ids:
        raise ValueError("empty subset")
    if len(set(ids)) != len(ids):
        raise ValueError("subset ids must be distinct")
    if len(ids) < 2:
        raise ValueError("subset must contain at least 2 heads")
    known = {hid: i for i, hid in enumerate(pred.head_ids)}
    for hid in ids:
        if hid not in known:
            raise ValueError(f"unknown head id {hid}")
    ids = sorted(ids)
    rows = pred.rows[[known[hid] for hid in ids]]
    return PredictionSet(rows, ids)


def sample_moments(pred: PredictionSet) -> Moments:
    """Empirical mean and unbiased variance of the head predictions."""
    if pred.n_heads < 2:
        raise ValueError("need at least 2 heads to form a variance")
    mean = pred.rows.mean(axis=0)
    var = np.square(pred.rows - mean).sum(axis=0) / (pred.n_heads - 1)
    return Moments(mean, var)


def fit_dirichlet(mom: Moments) -> DirichletEstimate:
    """Recover the concentration vector from empirical moments.

    A class c qualifies for the inversion when var_c > VAR_FLOOR and
    s_c = mean_c*(1-mean_c)/var_c - 1 is positive; alpha0 is the mean of
    the qualifying s_c, clamped to [C*ALPHA_FLOOR, ALPHA0_CAP]. With no
    qualifying class, alpha0 falls back to ALPHA0_CAP when all variances
    sit at the floor (perfect consensus) and to C otherwise
    (over-dispersed beyond any Dirichlet). Each alpha_c = mean_c*alpha0
    is finally floored at ALPHA_FLOOR so the mode stays defined;
    `clamped` records whether any of these guards fired.
    """
    mean = np.asarray(mom.mean, dtype=np.float64)
    var = np.asarray(mom.var, dtype=np.float64)
    n_classes = mean.shape[0]
    if abs(float(mean.sum()) - 1.0) > MEAN_TOL or np.any(mean < -MEAN_TOL):
        raise ValueError("mean is off the probability simplex")

    clamped = False
    dispersed = var > VAR_FLOOR
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(dispersed, mean * (1.0 - mean) / np.where(dispersed, var, 1.0) - 1.0, 0.0)
    qualifying = dispersed & (s > 0.0)

    if np.any(qualifying):
        if not np.all(qualifying):
            clamped = True
        alpha0 = float(np.mean(s[qualifying]))
        lo = n_classes * ALPHA_FLOOR
        if alpha0 < lo:
            alpha0, clamped = lo, True
        elif alpha0 > ALPHA0_CAP:
            alpha0, clamped = ALPHA0_CAP, True
    else:
        clamped = True
        alpha0 = ALPHA0_CAP if not np.any(dispersed) else float(n_classes)

    alpha = mean * alpha0
    low = alpha < ALPHA_FLOOR
    if np.any(low):
        clamped = True
        alpha = np.where(low, ALPHA_FLOOR, alpha)
    alpha0 = float(alpha.sum())

    # Summing the shifted alphas directly keeps the mode on the simplex
    # to within one rounding per term even when alpha0 is close to C.
    shifted = alpha - 1.0
    mode = shifted / float(shifted.sum())
    return DirichletEstimate(alpha, alpha0, mode, clamped)


def uncertainty_scores(est: DirichletEstimate) -> UncertaintyScores:
    """Max-probability and entropy of the fitted mode (0*ln 0 := 0)."""
    m = est.mode
    positive = m > 0.0
    ent = float(-np.sum(m[positive] * np.log(m[positive])))
    return UncertaintyScores(max_p=float(m.max()), ent=ent)


def ui_pipeline(net: MultiHeadNet, x: np.ndarray, subset: Sequence[int]) -> UncertaintyScores:
    """predict_all_heads -> select_heads -> moments -> fit -> scores."""
    pred = select_heads(predict_all_heads(net, x), subset)
    return uncertainty_scores(fit_dirichlet(sample_moments(pred)))


def write_prediction_set(pred: PredictionSet, path: str) -> None:
    """CSV export: header `head_id,p0..p{C-1}`, one row per head."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["head_id"] + [f"p{c}" for c in range(pred.n_classes)])
        for hid, row in zip(pred.head_ids, pred.rows):
            writer.writerow([hid] + [repr(float(v)) for v in row])


def read_prediction_set(path: str) -> PredictionSet:
    """CSV import; validates the header and the simplex invariant."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty prediction-set file") from None
        if len(header) < 3 or header[0] != "head_id" or header[1:] != [
            f"p{c}" for c in range(len(header) - 1)
        ]:
            raise FormatError(f"{path}: unexpected prediction-set header {header!r}")
        head_ids: list[int] = []
        rows: list[list[float]] = []
        for record in reader:
            if not record:
                continue
            if len(record) != len(header):
                raise FormatError(f"{path}: row width does not match header")
            head_ids.append(int(record[0]))
            rows.append([float(v) for v in record[1:]])
    if len(rows) < 2:
        raise FormatError(f"{path}: need at least 2 head rows")
    try:
        return PredictionSet(np.array(rows, dtype=np.float64), head_ids)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc
