"""Figure rendering for sweep output.

Kept separate so matplotlib is only imported when a figure was asked for;
the Agg backend means this works headless.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt


def render_sweep_figure(rows: list[dict], csv_path: str) -> str:
    """Draw cost and measurement-shape curves for a finished sweep.

    Writes a PNG next to the CSV (same stem) and returns its path.
    """
    values = [row["q"] for row in rows]
    costs = [row["cost"] for row in rows]
    have_shape = any(row.get("a") is not None for row in rows)

    n_axes = 2 if have_shape else 1
    fig, axes = plt.subplots(n_axes, 1, sharex=True, figsize=(6.0, 3.0 * n_axes))
    if n_axes == 1:
        axes = [axes]

    axes[0].plot(values, costs, lw=1.5, label="average cost")
    errors = [row.get("error_prob") for row in rows]
    if all(e is not None for e in errors):
        axes[0].plot(values, errors, lw=1.0, ls="--", label="error probability")
    axes[0].set_ylabel("cost")
    axes[0].legend(loc="best", fontsize=8)
    axes[0].grid(alpha=0.3)

    if have_shape:
        a_vals = [row.get("a") for row in rows]
        t_vals = [row.get("theta") for row in rows]
        mask = [a is not None for a in a_vals]
        xs = [v for v, ok in zip(values, mask) if ok]
        axes[1].plot(xs, [a for a, ok in zip(a_vals, mask) if ok], lw=1.5, label="a")
        axes[1].plot(xs, [t for t, ok in zip(t_vals, mask) if ok], lw=1.5, label="theta")
        axes[1].set_ylabel("family parameters")
        axes[1].legend(loc="best", fontsize=8)
        axes[1].grid(alpha=0.3)

    axes[-1].set_xlabel("sweep parameter")
    fig.tight_layout()
    out = os.path.splitext(csv_path)[0] + ".png"
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out
