"""Vector-graphic panels for the experiment driver.

Everything renders through the Agg backend straight to SVG so runs are
headless and, for fixed inputs, byte-reproducible: the SVG hash salt is
pinned and the creation-date metadata is dropped.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "adascan"

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

_SVG_KW = dict(format="svg", metadata={"Date": None})
_CYCLE = ("tab:blue", "tab:orange", "tab:green", "tab:red", "tab:purple",
          "tab:brown", "tab:pink", "tab:gray", "tab:olive", "tab:cyan")


def save_line_panel(path, curves, *, xlabel: str, ylabel: str, title: str = "",
                    logx: bool = False, logy: bool = False) -> None:
    """One line per (label, x, y) triple; labels repeat to share a legend entry."""
    fig, ax = plt.subplots(figsize=(5.0, 3.4), constrained_layout=True)
    seen: dict[str, str] = {}
    for label, x, y in curves:
        color = seen.get(label)
        if color is None:
            color = _CYCLE[len(seen) % len(_CYCLE)]
            seen[label] = color
            ax.plot(x, y, color=color, linewidth=1.3, label=label)
        else:
            ax.plot(x, y, color=color, linewidth=1.3)
    if logx:
        ax.set_xscale("log")
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    ax.grid(True, alpha=0.3)
    if seen:
        ax.legend(fontsize=8)
    fig.savefig(path, **_SVG_KW)
    plt.close(fig)


def save_scatter_panel(path, X, labels, *, title: str = "") -> None:
    """2-d point cloud colored by integer label (first two coordinates)."""
    fig, ax = plt.subplots(figsize=(4.2, 4.0), constrained_layout=True)
    order = sorted(set(int(v) for v in labels))
    for i, lab in enumerate(order):
        mask = labels == lab
        ax.scatter(X[mask, 0], X[mask, 1], s=6,
                   color=_CYCLE[i % len(_CYCLE)], linewidths=0)
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
    if title:
        ax.set_title(f"{title} ({len(order)} clusters)")
    ax.set_aspect("equal")
    fig.savefig(path, **_SVG_KW)
    plt.close(fig)


def save_objective_panel(path, ms, objectives, m_star: int, *, title: str = "") -> None:
    """Objective f(m) against batch size on a log x axis, winner marked."""
    fig, ax = plt.subplots(figsize=(5.0, 3.4), constrained_layout=True)
    ax.plot(ms, objectives, marker="o", color="tab:blue", linewidth=1.3)
    if m_star in ms:
        ax.plot([m_star], [objectives[list(ms).index(m_star)]], marker="*",
                markersize=14, color="tab:red", linestyle="none",
                label=f"m* = {m_star}")
        ax.legend(fontsize=8)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("batch size m")
    ax.set_ylabel("f(m) = (m w_z + w_theta) tau_int")
    if title:
        ax.set_title(title)
    ax.grid(True, alpha=0.3)
    fig.savefig(path, **_SVG_KW)
    plt.close(fig)
