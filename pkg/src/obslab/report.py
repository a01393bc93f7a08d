"""Deterministic report files: delimited tables and rendered figures.

Every writer here produces byte-identical output for identical inputs:
floats are formatted with repr-exact precision, metadata is serialized
with sorted keys, and nothing records a timestamp or hostname.  Figures
are rendered through the Agg backend so the report path works headless.
"""

from __future__ import annotations

import json
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["format_value", "write_table", "line_figure", "heatmap_figure"]


def format_value(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.17g" % float(value)
    if isinstance(value, complex):
        return "%.17g%+.17gj" % (value.real, value.imag)
    return str(value)


def write_table(path: str, rows: list, meta: dict | None = None, columns=None) -> None:
    """Write dict rows as CSV with an optional '#'-prefixed metadata line.

    The metadata line is a single JSON object with sorted keys, so reruns
    of the same configuration produce the same bytes.  An empty row list
    with explicit columns yields a header-only file.
    """
    if columns is None:
        if not rows:
            raise ValueError("empty table needs explicit columns")
        columns = list(rows[0].keys())
    lines = []
    if meta is not None:
        lines.append("# " + json.dumps(meta, sort_keys=True, default=format_value))
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(format_value(row[c]) for c in columns))
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _save(fig, path: str) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    fig.savefig(path, dpi=150, metadata={"Software": None})
    plt.close(fig)


def line_figure(
    path: str,
    xs,
    series: dict,
    xlabel: str,
    ylabel: str,
    title: str,
    logx: bool = False,
    logy: bool = False,
) -> None:
    """One set of line plots sharing an x axis; series maps label -> values."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for label in sorted(series):
        ax.plot(xs, series[label], marker="o", markersize=3.5, label=label)
    if logx:
        ax.set_xscale("log")
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    if len(series) > 1 or next(iter(series), "") != "":
        ax.legend()
    fig.tight_layout()
    _save(fig, path)


def heatmap_figure(
    path: str,
    values: np.ndarray,
    extent,
    xlabel: str,
    ylabel: str,
    title: str,
    log_abs: bool = True,
) -> None:
    """Render a kernel table |K(t, s)| (optionally log10) as an image."""
    data = np.abs(values)
    if log_abs:
        data = np.log10(np.maximum(data, 1e-300))
    fig, ax = plt.subplots(figsize=(6.4, 5.0))
    im = ax.imshow(
        data,
        origin="lower",
        aspect="auto",
        extent=extent,
        cmap="viridis",
    )
    fig.colorbar(im, ax=ax, label="log10 |K|" if log_abs else "|K|")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    fig.tight_layout()
    _save(fig, path)
