"""Static figures for bench reports, rendered off-screen to image files."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .report import BOUND_NAMES, RunReport  # noqa: E402


def _slack(report: RunReport) -> list[tuple[str, float]]:
    """lhs / rhs for each bound with a positive right side."""
    return [(b.name, float(b.lhs / b.rhs)) for b in report.bounds if b.rhs > 0]


def plot_bound_slack(reports: list[RunReport], path) -> Path:
    """One strip per bound: every trial's lhs/rhs, with the pass line at 1."""
    names = [n for n in BOUND_NAMES if any(b.name == n and b.rhs > 0 for r in reports for b in r.bounds)]
    fig, ax = plt.subplots(figsize=(7, 1 + 0.5 * max(1, len(names))))
    for row, name in enumerate(names):
        xs = [v for r in reports for n, v in _slack(r) if n == name]
        ax.scatter(xs, [row] * len(xs), s=12, alpha=0.6)
    ax.axvline(1.0, color="black", linewidth=1, linestyle="--")
    ax.set_yticks(range(len(names)))
    ax.set_yticklabels(names)
    ax.set_xlabel("lhs / rhs (passes at or below 1)")
    ax.set_title(f"bound slack over {len(reports)} trials")
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=100)
    plt.close(fig)
    return path


def plot_costs(reports: list[RunReport], path) -> Path:
    """Stacked online cost per trial."""
    fig, ax = plt.subplots(figsize=(7, 3.5))
    xs = list(range(len(reports)))
    buy = [float(r.alg_buy) for r in reports]
    connect = [float(r.alg_connect) for r in reports]
    delay = [float(r.alg_delay) for r in reports]
    ax.bar(xs, buy, label="buy")
    ax.bar(xs, connect, bottom=buy, label="connect")
    ax.bar(xs, delay, bottom=[a + b for a, b in zip(buy, connect)], label="delay")
    feas = [(i, float(r.feas_total)) for i, r in enumerate(reports) if r.feas_total is not None]
    if feas:
        ax.scatter([i for i, _ in feas], [v for _, v in feas], color="black", marker="_", s=80, label="offline")
    ax.set_xlabel("trial")
    ax.set_ylabel("cost")
    ax.legend(loc="upper right", fontsize="small")
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=100)
    plt.close(fig)
    return path


def render_bench_figures(reports: list[RunReport], stem) -> list[Path]:
    """Write ``<stem>.slack.png`` and ``<stem>.costs.png``; returns the paths."""
    stem = Path(stem)
    if not reports:
        return []
    return [
        plot_bound_slack(reports, stem.with_name(stem.name + ".slack.png")),
        plot_costs(reports, stem.with_name(stem.name + ".costs.png")),
    ]
