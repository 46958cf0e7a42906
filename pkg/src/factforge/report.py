"""Report emission: delimited metric files with matplotlib figures beside them.

Every reporting command writes a TSV (the machine-readable record) and, when
a report directory is given, renders the matching PNG figure into the same
directory. A JSON manifest ties each run's configuration, seed, input hashes,
and metric outputs together so any artifact can be reproduced.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

__all__ = [
    "write_tsv",
    "write_manifest",
    "config_hash",
    "save_loss_curves",
    "save_metric_bars",
    "save_similarity_histogram",
]


def write_tsv(path: str | Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\t".join(header) + "\n")
        for row in rows:
            fh.write("\t".join(str(v) for v in row) + "\n")


def config_hash(payload: dict) -> str:
    blob = json.dumps(payload, sort_keys=True, default=str).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:16]


def write_manifest(path: str | Path, payload: dict) -> None:
    """Stable, timestamp-free JSON so reruns produce identical bytes."""
    body = dict(payload)
    body["config_hash"] = config_hash(payload.get("config", {}))
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(body, fh, sort_keys=True, indent=2, default=str)
        fh.write("\n")


def save_loss_curves(
    curves: dict[str, list[float]], path: str | Path, ylabel: str = "loss"
) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, values in curves.items():
        ax.plot(range(1, len(values) + 1), values, marker="o", markersize=3, label=label)
    ax.set_xlabel("epoch")
    ax.set_ylabel(ylabel)
    if len(curves) > 1:
        ax.legend()
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_metric_bars(
    scores: dict[str, float], path: str | Path, ylabel: str = "BLEU-4"
) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    names = list(scores)
    values = [scores[n] for n in names]
    ax.bar(names, values, color="#4878a8")
    for i, v in enumerate(values):
        ax.text(i, v, f"{v:.3f}", ha="center", va="bottom", fontsize=9)
    ax.set_ylabel(ylabel)
    ax.grid(axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_similarity_histogram(
    scores: list[float], threshold: float, path: str | Path
) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(scores, bins=40, color="#4878a8", alpha=0.85)
    ax.axvline(threshold, color="#a84848", linestyle="--", label=f"threshold {threshold:.3f}")
    ax.set_xlabel("word best similarity")
    ax.set_ylabel("count")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
