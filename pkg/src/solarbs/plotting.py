"""Deterministic SVG line and bar charts, each with a CSV of its numbers."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# fixed salt and no date keep the SVG bytes reproducible
plt.rcParams["svg.hashsalt"] = "solarbs"
plt.rcParams["svg.fonttype"] = "none"


def _save(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)


def _cell(v):
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _write_csv(path, header, columns):
    rows = [",".join(header)]
    for vals in zip(*columns):
        rows.append(",".join(_cell(v) for v in vals))
    Path(path).write_text("\n".join(rows) + "\n", encoding="utf-8")


def line_chart(path, series, title="", xlabel="hour", ylabel="Wh"):
    """``series`` maps label to a 1-D array; writes ``path`` and ``path``.csv."""
    path = Path(path)
    labels = list(series)
    n = max(len(series[k]) for k in labels)
    fig, ax = plt.subplots(figsize=(9, 3.5))
    for k in labels:
        ax.plot(np.arange(len(series[k])), series[k], label=k, linewidth=1.0)
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.legend()
    fig.tight_layout()
    _save(fig, path)
    cols = [np.arange(n)] + [np.pad(np.asarray(series[k], float), (0, n - len(series[k])), constant_values=np.nan)
                             for k in labels]
    _write_csv(path.with_suffix(".csv"), [xlabel, *labels], cols)
    return path


def bar_chart(path, categories, groups, title="", ylabel=""):
    """Grouped bars: ``groups`` maps label to one value per category."""
    path = Path(path)
    labels = list(groups)
    x = np.arange(len(categories))
    w = 0.8 / max(1, len(labels))
    fig, ax = plt.subplots(figsize=(7, 3.5))
    for j, k in enumerate(labels):
        ax.bar(x + j * w, groups[k], w, label=k)
    ax.set_xticks(x + w * (len(labels) - 1) / 2, [str(c) for c in categories])
    ax.set_title(title)
    ax.set_ylabel(ylabel)
    ax.legend()
    fig.tight_layout()
    _save(fig, path)
    _write_csv(path.with_suffix(".csv"), ["category", *labels], [[str(c) for c in categories]] + [groups[k] for k in labels])
    return path
