"""Human-readable run reports and the figures rendered next to the CSVs."""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .community import CharacteristicScale, SweepRecord
from .objectives import ObjectiveVector

_FIG_DPI = 150


def objective_lines(vector: ObjectiveVector) -> list[str]:
    return [
        f"regions        : {vector.n_regions}",
        f"f_sem          : {vector.f_sem:.6f}",
        f"f_pop          : {vector.f_pop:.6f}",
        f"f_traffic      : {vector.f_traffic:.6f}",
        f"f_od           : {vector.f_od:.6f}",
        f"f_prox         : {vector.f_prox:.6f}",
        f"g_semantics    : {vector.g_semantics:.6f}",
        f"g_quantity     : {vector.g_quantity:.6f}",
        f"g_interaction  : {vector.g_interaction:.6f}",
    ]


def params_lines(params: Mapping[str, object]) -> list[str]:
    return [f"  {k} = {params[k]}" for k in sorted(params)]


def band_label(n_regions: int, bands: Sequence[int]) -> str:
    """Region-count band for grouping schemes (e.g. bands [50, 100, 300])."""
    edges = list(bands)
    if not edges:
        return "all"
    if n_regions < edges[0]:
        return f"<{edges[0]}"
    for lo, hi in zip(edges, edges[1:]):
        if lo <= n_regions < hi:
            return f"{lo}-{hi}"
    return f">{edges[-1]}"


def write_report(path: str | Path, sections: Sequence[tuple[str, Sequence[str]]]) -> None:
    lines: list[str] = []
    for title, body in sections:
        lines.append(title)
        lines.append("=" * len(title))
        lines.extend(body)
        lines.append("")
    Path(path).write_text("\n".join(lines))


def render_sweep_figure(
    records: Sequence[SweepRecord],
    scales: Sequence[CharacteristicScale],
    path: str | Path,
) -> None:
    """Community count vs. resolution on a log-log plot, with the detected
    stable ranges shaded and labeled."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    xs = [r.resolution for r in records]
    ys = [r.n_communities for r in records]
    ax.plot(xs, ys, marker="o", markersize=3.5, lw=1.2, color="#1f4e87")
    for k, s in enumerate(scales):
        ax.axvspan(s.resolution_low, s.resolution_high, color="#d98f3e", alpha=0.18)
        ax.annotate(
            f"{s.label}\n(~{s.stable_count})",
            xy=((s.resolution_low * s.resolution_high) ** 0.5, max(ys)),
            ha="center",
            va="top",
            fontsize=8,
            color="#8a5317",
        )
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("resolution")
    ax.set_ylabel("number of communities")
    ax.set_title("Resolution sweep and stable ranges")
    ax.grid(True, which="both", alpha=0.25)
    fig.tight_layout()
    fig.savefig(path, dpi=_FIG_DPI)
    plt.close(fig)


def render_pareto_figure(
    vectors: Sequence[ObjectiveVector],
    front_flags: Sequence[bool],
    path: str | Path,
) -> None:
    """Pairwise scatter of the three group indicators; front members dark."""
    axes_pairs = [
        ("g_semantics", "g_quantity"),
        ("g_semantics", "g_interaction"),
        ("g_quantity", "g_interaction"),
    ]
    fig, axs = plt.subplots(1, 3, figsize=(12, 4))
    for ax, (xa, ya) in zip(axs, axes_pairs):
        xs = [getattr(v, xa) for v in vectors]
        ys = [getattr(v, ya) for v in vectors]
        others = [i for i, f in enumerate(front_flags) if not f]
        front = [i for i, f in enumerate(front_flags) if f]
        ax.scatter(
            [xs[i] for i in others], [ys[i] for i in others],
            s=18, c="#9db8d2", label="dominated",
        )
        ax.scatter(
            [xs[i] for i in front], [ys[i] for i in front],
            s=26, c="#b03a2e", label="Pareto front",
        )
        ax.set_xlabel(xa)
        ax.set_ylabel(ya)
        ax.grid(True, alpha=0.25)
    axs[0].legend(loc="best", fontsize=8)
    fig.suptitle("Objective trade-offs across the evaluated schemes")
    fig.tight_layout()
    fig.savefig(path, dpi=_FIG_DPI)
    plt.close(fig)
