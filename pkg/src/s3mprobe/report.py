"""Deterministic delimited reports and the figures rendered beside them.

CSV bytes are a pure function of the rows: fixed column order, fixed float
formatting, "\n" line endings. Figures are rendered from the same rows
with matplotlib's Agg backend; they are a convenience view, the CSV is the
canonical output.
"""

from __future__ import annotations

import logging
from pathlib import Path

log = logging.getLogger(__name__)


def fmt(value, places: int = 6) -> str:
    """Fixed-precision rendering for metric cells."""
    if isinstance(value, float):
        return f"{value:.{places}f}"
    return str(value)


def fmt_g(value) -> str:
    """Compact rendering for grid parameters such as thresholds."""
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def write_csv(path, header: list[str], rows: list[list[str]]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(header)]
    lines.extend(",".join(row) for row in rows)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def render_layer_figure(
    out_png,
    rows: list[dict],
    y_field: str,
    ylabel: str,
    title: str,
    series_field: str = "model",
    x_field: str = "layer",
) -> None:
    """One metric-vs-layer curve per series, written as a PNG."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    series = sorted({r[series_field] for r in rows})
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for name in series:
        pts = sorted(
            ((r[x_field], r[y_field]) for r in rows if r[series_field] == name),
            key=lambda p: p[0],
        )
        if not pts:
            continue
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=str(name))
    ax.set_xlabel("layer")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    if len(series) > 1:
        ax.legend(fontsize=8)
    out_png = Path(out_png)
    out_png.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(out_png, dpi=150)
    plt.close(fig)
    log.info("wrote figure %s", out_png)
