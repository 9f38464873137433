"""Multi-head uncertainty inference for adversarial-attack detection.

A small multi-head classifier yields per-depth normalized predictions;
a Dirichlet distribution fitted to them by moment matching provides
mode-based uncertainty scores that separate clean from attacked inputs.
"""

from .attack import AttackConfig, attack_batch, default_eps_grid, fgsm
from .data import Dataset, gen_blobs, load_idx, save_idx, split
from .dirichlet import (
    DirichletEstimate,
    Moments,
    UncertaintyScores,
    fit_dirichlet,
    read_prediction_set,
    sample_moments,
    select_heads,
    ui_pipeline,
    uncertainty_scores,
    write_prediction_set,
)
from .metrics import (
    ADVERSARIAL,
    CLEAN,
    DetectionReport,
    ScoredSample,
    auroc,
    calibrate_threshold,
    detect,
)
from .model import (
    MultiHeadNet,
    PredictionSet,
    build_net,
    load_checkpoint,
    predict_all_heads,
    predict_final,
    save_checkpoint,
    trunk_digest,
)
from .nn import (
    AdamState,
    DenseLayer,
    Gradients,
    adam_step,
    cross_entropy,
    dense_forward,
    forward_backward,
    init_adam,
    softmax,
)
from .train import (
    TrainConfig,
    final_head_accuracy,
    head_accuracies,
    one_cycle_lr,
    train_backbone,
    train_heads,
)

__version__ = "0.1.0"
