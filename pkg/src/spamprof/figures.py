"""Matplotlib renderings of report outputs.

Every CLI report that writes a delimited file also renders the matching
figure next to it (same stem, ``.png``). Rendering is headless and the PNG
metadata is pinned so repeated runs produce identical files.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

import numpy as np  # noqa: E402

from .forest import ImportanceReport  # noqa: E402
from .metrics import RocCurve  # noqa: E402

_SAVE_OPTS = {"dpi": 120, "metadata": {"Software": "spamprof"}}


def sibling_figure_path(csv_path: str | Path) -> Path:
    return Path(csv_path).with_suffix(".png")


def save_roc_figure(curve: RocCurve, path: str | Path, title: str = "ROC") -> Path:
    path = Path(path)
    fig, ax = plt.subplots(figsize=(5, 5))
    ax.plot(curve.fpr, curve.tpr, drawstyle="steps-post", color="tab:blue")
    ax.plot([0, 1], [0, 1], linestyle=":", color="0.6", linewidth=1)
    ax.set_xlabel("false positive rate")
    ax.set_ylabel("true positive rate")
    ax.set_title(f"{title}  (AUC = {curve.auc:.4f})")
    ax.set_xlim(-0.02, 1.02)
    ax.set_ylim(-0.02, 1.02)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_OPTS)
    plt.close(fig)
    return path


def save_header_histogram_figure(hists: dict[str, dict[int, int]],
                                 path: str | Path) -> Path:
    path = Path(path)
    fig, ax = plt.subplots(figsize=(6, 4))
    for cls in sorted(hists):
        hist = hists[cls]
        if not hist:
            continue
        xs = np.arange(min(hist), max(hist) + 1)
        ys = [hist.get(int(x), 0) for x in xs]
        ax.step(xs, ys, where="mid", label=cls)
    ax.set_xlabel("header lines")
    ax.set_ylabel("emails")
    ax.set_title("Header line count by class")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, **_SAVE_OPTS)
    plt.close(fig)
    return path


def save_importance_figure(report: ImportanceReport, path: str | Path,
                           feature_names: list[str] | None = None,
                           top: int = 20) -> Path:
    path = Path(path)
    top = min(top, len(report.ranking))
    order = report.ranking[:top][::-1]  # best at the top of the chart
    names = (
        [feature_names[i] for i in order]
        if feature_names is not None
        else [f"f{i}" for i in order]
    )
    fig, ax = plt.subplots(figsize=(6, max(2.5, 0.28 * top)))
    ax.barh(np.arange(top), report.importances[order], color="tab:blue")
    ax.set_yticks(np.arange(top))
    ax.set_yticklabels(names, fontsize=8)
    ax.set_xlabel("mean decrease of accuracy")
    ax.set_title(f"Top {top} features")
    fig.tight_layout()
    fig.savefig(path, **_SAVE_OPTS)
    plt.close(fig)
    return path


def save_confusion_figure(counts: np.ndarray, classes, path: str | Path) -> Path:
    path = Path(path)
    fig, ax = plt.subplots(figsize=(5, 4.5))
    im = ax.imshow(counts, cmap="Blues")
    ax.set_xticks(range(len(classes)))
    ax.set_xticklabels(classes, rotation=30, ha="right")
    ax.set_yticks(range(len(classes)))
    ax.set_yticklabels(classes)
    ax.set_xlabel("predicted")
    ax.set_ylabel("true")
    for i in range(len(classes)):
        for j in range(len(classes)):
            ax.text(j, i, str(int(counts[i, j])), ha="center", va="center",
                    color="black", fontsize=8)
    fig.colorbar(im, ax=ax, shrink=0.8)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_OPTS)
    plt.close(fig)
    return path


def save_reduction_figure(rows: list[dict], path: str | Path) -> Path:
    """Grouped bars: full-model vs reduced-model fnr at each target fpr."""
    path = Path(path)
    targets = [row["target_fpr"] for row in rows]
    full = [100.0 * row["fnr_full"] for row in rows]
    reduced = [100.0 * row["fnr_reduced"] for row in rows]
    x = np.arange(len(targets))
    width = 0.36
    fig, ax = plt.subplots(figsize=(5.5, 4))
    ax.bar(x - width / 2, full, width, label="all features")
    ax.bar(x + width / 2, reduced, width, label="top-k features")
    ax.set_xticks(x)
    ax.set_xticklabels([f"fpr {100 * t:g}%" for t in targets])
    ax.set_ylabel("fnr (%)")
    ax.set_title("Feature reduction")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, **_SAVE_OPTS)
    plt.close(fig)
    return path
