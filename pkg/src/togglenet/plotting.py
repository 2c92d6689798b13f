"""Figure rendering for sweep and attack reports."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def plot_sweep(result, path: str, title: str = "") -> str:
    """Two panels: preparation time and energy vs message size."""
    designs = {}
    for row in result.rows:
        designs.setdefault(row.design, []).append(row)
    fig, (ax_t, ax_e) = plt.subplots(1, 2, figsize=(10, 4))
    for name, rows in designs.items():
        rows = sorted(rows, key=lambda r: r.msg_bytes)
        sizes = [r.msg_bytes for r in rows]
        ax_t.plot(sizes, [r.time_us for r in rows], marker="o", label=name)
        ax_e.plot(sizes, [r.energy for r in rows], marker="s", label=name)
    for ax, ylabel in ((ax_t, "preparation time (us)"), (ax_e, "energy (relative)")):
        ax.set_xscale("log", base=2)
        ax.set_yscale("log")
        ax.set_xlabel("message size (bytes)")
        ax.set_ylabel(ylabel)
        ax.grid(True, which="both", alpha=0.3)
        ax.legend()
    if result.crossover_bytes:
        ax_t.axvline(result.crossover_bytes, color="gray", linestyle="--", alpha=0.7)
        ax_t.annotate(f"crossover {result.crossover_bytes}B",
                      (result.crossover_bytes, ax_t.get_ylim()[0]),
                      rotation=90, va="bottom", fontsize=8, color="gray")
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_attack_report(reports: list[dict], path: str) -> str:
    """Iterations and wall time against network size, one line per kind."""
    kinds = {}
    for r in reports:
        kinds.setdefault(r["kind"], []).append(r)
    fig, (ax_i, ax_t) = plt.subplots(1, 2, figsize=(10, 4))
    for kind, rows in kinds.items():
        rows = sorted(rows, key=lambda r: r["size"])
        sizes = [r["size"] for r in rows]
        marks = ["^" if r["censored"] else "o" for r in rows]
        ax_i.plot(sizes, [r["iterations"] for r in rows], marker="o", label=kind)
        ax_t.plot(sizes, [max(r["seconds"], 1e-3) for r in rows], marker="o", label=kind)
        for s, r, mk in zip(sizes, rows, marks):
            if r["censored"]:
                ax_i.annotate("censored", (s, r["iterations"]), fontsize=7, rotation=45)
    for ax, ylabel in ((ax_i, "DIP iterations"), (ax_t, "attack time (s)")):
        ax.set_xscale("log", base=2)
        ax.set_xlabel("network width")
        ax.set_ylabel(ylabel)
        ax.grid(True, which="both", alpha=0.3)
        ax.legend()
    ax_t.set_yscale("log")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
