"""Optional figure rendering for command output.

Kept out of the core path: matplotlib is imported only when a figure is
actually requested, and every figure is written to a file (no interactive
backends).
"""

from __future__ import annotations

import os


def _pyplot():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def render_figures(command: str, payload: dict, outdir: str) -> list[str]:
    """Render the figure for one command's payload into ``outdir``.

    Returns the list of written file paths (one per command today).
    """
    plt = _pyplot()
    os.makedirs(outdir, exist_ok=True)
    stem = command.replace(" ", "-")
    path = os.path.join(outdir, f"{stem}.png")
    kind = payload.get("figure")
    fig = plt.figure(figsize=(7.0, 4.5))
    try:
        if kind in ("measures", "constants", "residuals"):
            _bars(fig, payload, kind)
        elif kind == "frontier":
            _frontier(fig, payload)
        elif kind == "simulation":
            _simulation(fig, payload)
        elif kind == "sandwich":
            _sandwich(fig, payload)
        else:
            return []
        fig.tight_layout()
        fig.savefig(path, dpi=120)
    finally:
        plt.close(fig)
    return [path]


def _bars(fig, payload, kind):
    ax = fig.add_subplot(111)
    if kind == "constants":
        rows = list(payload["constants"].items())
        ax.set_title(f"region constants: {payload.get('kind', '')}")
    else:
        rows = list(payload["rows"])
        ax.set_title("information measures" if kind == "measures"
                     else "chain residuals (bits)")
    names = [r[0] for r in rows]
    vals = [float(r[1]) for r in rows]
    ax.barh(range(len(rows)), vals, color="#4878d0")
    ax.set_yticks(range(len(rows)), names)
    ax.invert_yaxis()
    ax.set_xlabel("bits")


def _frontier(fig, payload):
    ax = fig.add_subplot(111)
    raw = payload.get("raw", [])
    if raw:
        r_a = [p[0] for p in raw]
        delta = [p[2] for p in raw]
        r_c = [p[1] for p in raw]
        sc = ax.scatter(r_a, delta, c=r_c, cmap="viridis", label="sampled")
        fig.colorbar(sc, ax=ax, label="helper rate (bits)")
    convex = payload.get("convex", [])
    if convex:
        pts = sorted((p[0], p[2]) for p in convex)
        ax.plot([p[0] for p in pts], [p[1] for p in pts],
                "r--", lw=1, label="time-shared")
    ax.set_xlabel("source rate (bits)")
    ax.set_ylabel("equivocation (bits)")
    ax.set_title(payload.get("kind", "frontier"))
    if raw or convex:
        ax.legend(loc="best")


def _simulation(fig, payload):
    rows = payload["rows"]
    ns = [r[0] for r in rows]
    ax1 = fig.add_subplot(121)
    lo = [r[1] - r[2] for r in rows]
    hi = [r[3] - r[1] for r in rows]
    ax1.errorbar(ns, [r[1] for r in rows], yerr=[lo, hi],
                 fmt="o-", capsize=3)
    ax1.set_xlabel("block length")
    ax1.set_ylabel("error probability")
    ax1.set_ylim(0, 1.05)
    ax2 = fig.add_subplot(122)
    ax2.plot(ns, [r[4] for r in rows], "o-", label="measured")
    ax2.plot(ns, [r[6] for r in rows], "s--", label="floor")
    ax2.plot(ns, [r[7] for r in rows], "^:", label="target")
    ax2.set_xlabel("block length")
    ax2.set_ylabel("equivocation per symbol (bits)")
    ax2.legend(loc="best")


def _sandwich(fig, payload):
    ax = fig.add_subplot(111)
    rows = payload["rows"]
    if rows:
        sc = ax.scatter([r[0] for r in rows], [r[1] for r in rows],
                        c=[r[4] for r in rows], cmap="coolwarm")
        fig.colorbar(sc, ax=ax, label="inner minus outer (bits)")
    ax.set_xlabel("source rate (bits)")
    ax.set_ylabel("helper rate (bits)")
    ax.set_title("sandwich gap (negative is healthy)")
