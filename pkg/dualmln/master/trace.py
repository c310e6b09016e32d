"""Iteration trace: TSV rows and a convergence chart."""

from __future__ import annotations

import csv
import io
import logging
from collections.abc import Sequence
from pathlib import Path

from matplotlib.figure import Figure

from .engine import IterationRecord

logger = logging.getLogger(__name__)

TRACE_COLUMNS = ("k", "alpha", "rmse", "disagreement", "dual", "best_primal")


def trace_rows(records: Sequence[IterationRecord]) -> list[list[str]]:
    return [
        [
            str(r.k),
            f"{r.alpha:.6f}",
            f"{r.rmse:.6f}",
            f"{r.disagreement:.6f}",
            f"{r.dual:.6f}",
            f"{r.best_primal:.6f}",
        ]
        for r in records
    ]


def write_trace(path: str | Path, records: Sequence[IterationRecord]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, delimiter="\t", lineterminator="\n")
        writer.writerow(TRACE_COLUMNS)
        writer.writerows(trace_rows(records))
    logger.info("Wrote %d trace row(s) to %s", len(records), path)


def convergence_chart(
    records: Sequence[IterationRecord], fig_width: int = 600, fig_height: int = 300
) -> Figure:
    """RMSE and disagreement fraction per round."""
    fig = Figure(figsize=(fig_width / 100, fig_height / 100), dpi=100)
    ax = fig.add_subplot(111)
    if records:
        rounds = [r.k for r in records]
        ax.plot(rounds, [r.rmse for r in records], label="RMSE", color="#43aa8b")
        ax.plot(
            rounds,
            [r.disagreement for r in records],
            label="disagreement",
            color="#f94144",
            linestyle="--",
        )
        ax.set_xlabel("round")
        ax.set_ylim(bottom=0)
        ax.legend(loc="best", fontsize=8)
    else:
        ax.text(
            0.5,
            0.5,
            "No rounds recorded",
            horizontalalignment="center",
            verticalalignment="center",
        )
    fig.tight_layout()
    return fig


def render_png(fig: Figure) -> bytes:
    buf = io.BytesIO()
    fig.savefig(buf, format="png", bbox_inches="tight")
    return buf.getvalue()


def write_chart(path: str | Path, records: Sequence[IterationRecord]) -> None:
    Path(path).write_bytes(render_png(convergence_chart(records)))
    logger.info("Wrote convergence chart to %s", path)
