"""Optional figure rendering for sweep tables.

matplotlib is imported lazily so the verification paths never pay for it;
the CLI only calls in here when a figure was explicitly requested.
"""

from __future__ import annotations

from typing import List, Optional

_RESIDUAL_COLUMNS = ("nijenhuis", "connection_oracle", "curvature_oracle",
                     "einstein", "holomorphic_k")


def render_sweep(rows: List[dict], path: str, title: Optional[str] = None) -> str:
    """Render a sweep table to an image file: residuals on a log axis
    against the varied parameter, failed rows flagged. Returns the path."""
    if not rows:
        raise ValueError("no sweep rows to plot")
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    param = rows[0]["param"]
    values = [row["value"] for row in rows]
    numeric = all(isinstance(v, (int, float)) for v in values)
    xs = values if numeric else list(range(len(values)))

    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    floor = 1e-16
    for col in _RESIDUAL_COLUMNS:
        pts = [(x, row[col]) for x, row in zip(xs, rows) if row.get(col) is not None]
        if not pts:
            continue
        ax.semilogy([p[0] for p in pts],
                    [max(p[1], floor) for p in pts],
                    marker="o", label=col.replace("_", " "))
    bad = [x for x, row in zip(xs, rows) if not row.get("passed")]
    for i, x in enumerate(bad):
        ax.axvline(x, color="crimson", linestyle=":", alpha=0.6,
                   label="failed" if i == 0 else None)
    ax.set_xlabel(param)
    ax.set_ylabel("max residual")
    ax.set_title(title or f"sweep over {param}")
    ax.grid(True, which="both", alpha=0.3)
    if not numeric:
        ax.set_xticks(xs)
        ax.set_xticklabels([str(v) for v in values])
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
