"""Run aggregation: AUROC-vs-epsilon series averaged over seeds, written
as plot-data CSV, a text summary, and rendered figures.

Seed spread is reported as the population standard deviation (divisor
n); with a single seed the std column is identically zero.
"""

import csv
import os
from collections import defaultdict

import numpy as np

from .errors import FormatError, MhuiError
from .harness import ABLATION_FILE, DETECTION_FILE, fmt, write_csv

REPORT_DIR = "report"
SERIES_FILE = "auroc_vs_epsilon.csv"
SUMMARY_FILE = "summary.txt"
SERIES_HEADER = ["metric", "head_subset", "epsilon", "auroc_mean", "auroc_std", "n_seeds"]


def _read_detection_rows(path: str) -> list[dict]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        rows = []
        for rec in reader:
            try:
                rows.append(
                    {
                        "seed": int(rec["seed"]),
                        "epsilon": float(rec["epsilon"]),
                        "metric": rec["metric"],
                        "head_subset": rec["head_subset"],
                        "auroc": float(rec["auroc"]),
                        "clean_acc": float(rec["clean_acc"]),
                        "adv_acc": float(rec["adv_acc"]),
                    }
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise FormatError(f"{path}: malformed detection row: {exc}") from exc
    return rows


def collect_rows(run_dir: str) -> list[dict]:
    """All detection rows in a run directory.

    Per seed directory, detection.csv is preferred and ablation.csv is
    the fallback, so both `detect` and `ablate` runs are reportable.
    """
    if not os.path.isdir(run_dir):
        raise MhuiError(f"run directory {run_dir} does not exist")
    rows: list[dict] = []
    for entry in sorted(os.listdir(run_dir)):
        sdir = os.path.join(run_dir, entry)
        if not (entry.startswith("seed_") and os.path.isdir(sdir)):
            continue
        for name in (DETECTION_FILE, ABLATION_FILE):
            path = os.path.join(sdir, name)
            if os.path.exists(path):
                rows.extend(_read_detection_rows(path))
                break
    if not rows:
        raise MhuiError(f"no detection results found under {run_dir}")
    return rows


def aggregate_series(rows: list[dict]) -> list[dict]:
    """Group rows by (metric, subset, epsilon); mean/std of AUROC over seeds."""
    groups: dict[tuple, list[dict]] = defaultdict(list)
    for row in rows:
        groups[(row["metric"], row["head_subset"], row["epsilon"])].append(row)
    series = []
    for (metric, subset, eps) in sorted(groups, key=lambda k: (k[0], k[1], k[2])):
        bucket = groups[(metric, subset, eps)]
        aurocs = np.array([b["auroc"] for b in bucket], dtype=np.float64)
        series.append(
            {
                "metric": metric,
                "head_subset": subset,
                "epsilon": eps,
                "auroc_mean": float(aurocs.mean()),
                "auroc_std": float(aurocs.std()),  # population std
                "n_seeds": len({b["seed"] for b in bucket}),
                "adv_acc_mean": float(np.mean([b["adv_acc"] for b in bucket])),
                "clean_acc_mean": float(np.mean([b["clean_acc"] for b in bucket])),
            }
        )
    return series


def _write_summary(path: str, series: list[dict]) -> None:
    lines = ["detection summary (mean over seeds; spread = population std)", ""]
    by_pair: dict[tuple, list[dict]] = defaultdict(list)
    for s in series:
        by_pair[(s["metric"], s["head_subset"])].append(s)
    for (metric, subset), entries in sorted(by_pair.items()):
        entries = sorted(entries, key=lambda s: s["epsilon"])
        top = entries[-1]
        lines.append(
            f"metric={metric} heads={subset} seeds={top['n_seeds']}: "
            f"auroc@eps={fmt(top['epsilon'])} is {top['auroc_mean']:.4f} "
            f"(+/- {top['auroc_std']:.4f}), "
            f"final-head acc clean {top['clean_acc_mean']:.4f} -> "
            f"attacked {top['adv_acc_mean']:.4f}"
        )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _render_figures(report_dir: str, series: list[dict]) -> list[str]:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    written = []
    metrics = sorted({s["metric"] for s in series})
    for metric in metrics:
        fig, ax = plt.subplots(figsize=(6.4, 4.2))
        for subset in sorted({s["head_subset"] for s in series if s["metric"] == metric}):
            pts = sorted(
                (s for s in series if s["metric"] == metric and s["head_subset"] == subset),
                key=lambda s: s["epsilon"],
            )
            eps = [p["epsilon"] for p in pts]
            mean = np.array([p["auroc_mean"] for p in pts])
            std = np.array([p["auroc_std"] for p in pts])
            ax.plot(eps, mean, marker="o", markersize=3, label=f"heads {subset}")
            ax.fill_between(eps, mean - std, mean + std, alpha=0.2)
        ax.set_xlabel("attack step size")
        ax.set_ylabel("detection AUROC")
        ax.set_title(f"AUROC vs attack strength ({metric})")
        ax.set_ylim(0.0, 1.05)
        ax.grid(True, linestyle="--", alpha=0.4)
        ax.legend(fontsize=8)
        fig.tight_layout()
        path = os.path.join(report_dir, f"auroc_vs_epsilon_{metric}.png")
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)

    # Accuracy degradation uses any one metric's rows (accuracies repeat).
    metric = metrics[0]
    subsets = sorted({s["head_subset"] for s in series if s["metric"] == metric})
    pts = sorted(
        (s for s in series if s["metric"] == metric and s["head_subset"] == subsets[0]),
        key=lambda s: s["epsilon"],
    )
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    eps = [p["epsilon"] for p in pts]
    ax.plot(eps, [p["adv_acc_mean"] for p in pts], marker="o", markersize=3, label="attacked")
    ax.plot(eps, [p["clean_acc_mean"] for p in pts], linestyle="--", label="clean")
    ax.set_xlabel("attack step size")
    ax.set_ylabel("final-head accuracy")
    ax.set_title("Classifier degradation under attack")
    ax.set_ylim(0.0, 1.05)
    ax.grid(True, linestyle="--", alpha=0.4)
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = os.path.join(report_dir, "final_head_accuracy_vs_epsilon.png")
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)
    return written


def cmd_report(run_dir: str) -> str:
    """Aggregate a run directory into report/ (CSV, summary, figures)."""
    series = aggregate_series(collect_rows(run_dir))
    report_dir = os.path.join(run_dir, REPORT_DIR)
    os.makedirs(report_dir, exist_ok=True)
    write_csv(
        os.path.join(report_dir, SERIES_FILE),
        SERIES_HEADER,
        [
            [s["metric"], s["head_subset"], s["epsilon"], s["auroc_mean"], s["auroc_std"], s["n_seeds"]]
            for s in series
        ],
    )
    _write_summary(os.path.join(report_dir, SUMMARY_FILE), series)
    _render_figures(report_dir, series)
    return report_dir
