"""Figure rendering for run reports.

Every renderer writes a file next to the delimited text output and never
opens a window (Agg backend); figures are a convenience layer, the
machine-readable truth stays in the traces and reports.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .boolnet import Attractor, BooleanNetwork
from .knowledge import Kind
from .netsim import Trace, World, step


def plot_kb_sizes(trace: Trace, path: str) -> None:
    """Per-node knowledge-base size over the run (facts solid, goals dashed)."""
    if trace.initial is None:
        raise ValueError("trace does not carry its initial world")
    world = trace.initial.copy()
    ticks = list(range(trace.horizon + 1))
    series: dict[str, list[tuple[int, int]]] = {}

    def snap(w: World):
        for nid, node in w.nodes.items():
            facts = sum(1 for it in node.kb if it.kind is Kind.FACT)
            goals = len(node.kb) - facts
            series.setdefault(nid, []).append((facts, goals))

    snap(world)
    for _ in range(trace.horizon):
        step(world, Trace())
        snap(world)

    fig, ax = plt.subplots(figsize=(7, 4))
    for i, (nid, points) in enumerate(sorted(series.items())):
        color = "C%d" % (i % 10)
        ax.plot(ticks[: len(points)], [p[0] for p in points], color=color, label="%s facts" % nid)
        ax.plot(ticks[: len(points)], [p[1] for p in points], color=color, linestyle="--", label="%s goals" % nid)
    ax.set_xlabel("tick")
    ax.set_ylabel("items held")
    ax.set_title("knowledge propagation")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_cell_counts(history, path: str) -> None:
    """Cell-type populations along a rewrite trace."""
    from .rewriting import BoundPair, CellObject, SystemState

    def census(state: SystemState) -> dict[str, int]:
        counts: dict[str, int] = {}
        for _, entities in state.compartments:
            for e in entities:
                cells = (
                    [e] if isinstance(e, CellObject)
                    else [e.left, e.right] if isinstance(e, BoundPair)
                    else []
                )
                for c in cells:
                    counts[c.ctype] = counts.get(c.ctype, 0) + 1
        return counts

    rows = [census(state) for _, state in history]
    ctypes = sorted({k for row in rows for k in row})
    fig, ax = plt.subplots(figsize=(7, 4))
    steps = list(range(1, len(rows) + 1))
    for i, ctype in enumerate(ctypes):
        ax.plot(steps, [row.get(ctype, 0) for row in rows], color="C%d" % (i % 10), label=ctype)
    ax.set_xlabel("rewrite step")
    ax.set_ylabel("cells")
    ax.set_title("cell populations")
    if ctypes:
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_basins(attractor_list: list[Attractor], path: str) -> None:
    """Basin sizes as a bar chart with percentages."""
    total = sum(a.basin for a in attractor_list) or 1
    labels = [
        "%s\nlen %d" % ("fixed" if a.kind == "fixed-point" else "cycle", a.length)
        for a in attractor_list
    ]
    sizes = [a.basin for a in attractor_list]
    fig, ax = plt.subplots(figsize=(max(4, len(sizes) * 1.2), 4))
    bars = ax.bar(range(len(sizes)), sizes, color="C0")
    for bar, size in zip(bars, sizes):
        ax.text(
            bar.get_x() + bar.get_width() / 2,
            bar.get_height(),
            "%.1f%%" % (100.0 * size / total),
            ha="center",
            va="bottom",
            fontsize=8,
        )
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, fontsize=8)
    ax.set_ylabel("basin size (states)")
    ax.set_title("attractor basins")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_influences(net: BooleanNetwork, path: str) -> None:
    """The signed influence graph on a circular layout; activation green,
    suppression red dashed."""
    import math

    names = net.variables
    n = len(names)
    coords = {
        v: (math.cos(2 * math.pi * i / n), math.sin(2 * math.pi * i / n))
        for i, v in enumerate(names)
    }
    fig, ax = plt.subplots(figsize=(6, 6))
    for src, dst, sign in net.influences():
        x0, y0 = coords[src]
        x1, y1 = coords[dst]
        color = "tab:green" if sign > 0 else "tab:red"
        style = "-" if sign > 0 else "--"
        if src == dst:
            ax.annotate(
                "",
                xy=(x0 * 1.12, y0 * 1.12),
                xytext=(x0 * 1.02, y0 * 1.02),
                arrowprops=dict(arrowstyle="->", color=color, linestyle=style,
                                connectionstyle="arc3,rad=1.2"),
            )
            continue
        ax.annotate(
            "",
            xy=(x1, y1),
            xytext=(x0, y0),
            arrowprops=dict(arrowstyle="->", color=color, linestyle=style, shrinkA=14, shrinkB=14,
                            connectionstyle="arc3,rad=0.08"),
        )
    for v, (x, y) in coords.items():
        ax.text(x, y, v, ha="center", va="center", fontsize=9,
                bbox=dict(boxstyle="round", facecolor="white", edgecolor="C0"))
    ax.set_xlim(-1.35, 1.35)
    ax.set_ylim(-1.35, 1.35)
    ax.set_aspect("equal")
    ax.axis("off")
    ax.set_title("signed influence graph")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
