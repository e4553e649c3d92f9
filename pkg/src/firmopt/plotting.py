"""Figures for fold statistics."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .local_opt import ChangeSet  # noqa: E402

FIGSIZE = (6.4, 3.6)


def _style(ax):
    ax.spines["top"].set_visible(False)
    ax.spines["right"].set_visible(False)
    ax.grid(axis="y", alpha=0.3)


def plot_run_summary(summary, path, title: str = "") -> None:
    """Stacked bars of the change counts of every fold iteration."""
    names = list(ChangeSet().as_dict())
    rows = [cs.as_dict() for cs in summary.per_iteration]
    xs = list(range(1, len(rows) + 1))

    fig, (ax_bar, ax_size) = plt.subplots(1, 2, figsize=(FIGSIZE[0] * 1.6, FIGSIZE[1]),
                                          gridspec_kw={"width_ratios": [3, 2]})
    bottom = [0] * len(rows)
    for i, name in enumerate(names):
        heights = [r[name] for r in rows]
        if not any(heights):
            continue
        ax_bar.bar(xs, heights, bottom=bottom, label=name.replace("_", " "), color="C%d" % i)
        bottom = [b + h for b, h in zip(bottom, heights)]
    ax_bar.set_xlabel("iteration")
    ax_bar.set_ylabel("changes")
    ax_bar.set_xticks(xs)
    if any(bottom):
        ax_bar.legend(fontsize=7, frameon=False)
    _style(ax_bar)

    removed = [r["nodes_removed"] + r["edges_removed"] for r in rows]
    cumulative = [sum(removed[: i + 1]) for i in range(len(removed))]
    ax_size.plot(xs, cumulative, marker="o", color="C0")
    ax_size.set_xlabel("iteration")
    ax_size.set_ylabel("elements removed (cumulative)")
    ax_size.set_xticks(xs)
    _style(ax_size)

    status = "converged" if summary.converged else "not converged"
    fig.suptitle("%s %s after %d iterations" % (title, status, summary.iterations))
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
