"""Matplotlib rendering for forests and corpus reports.

Figures are written straight to files; matplotlib is imported lazily with
the Agg backend so the CLI works headless.
"""

from __future__ import annotations


def _plt():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def render_forest(forest, path):
    """Draw a factorization forest as nested interval brackets."""
    plt = _plt()
    n = len(forest.word)
    fig, ax = plt.subplots(figsize=(max(4, n * 0.6), max(3, forest.height * 0.8)))

    def draw(node):
        y = node.height
        ax.plot([node.start - 0.4, node.end + 0.4], [y, y], lw=2, color="tab:blue")
        ax.plot([node.start - 0.4] * 2, [y - 0.12, y], lw=2, color="tab:blue")
        ax.plot([node.end + 0.4] * 2, [y - 0.12, y], lw=2, color="tab:blue")
        for c in node.children:
            draw(c)

    draw(forest.root)
    for i, ch in enumerate(forest.word, start=1):
        ax.text(i, 0.35, ch, ha="center", va="center", fontsize=14, family="monospace")
    ax.set_xlim(0.2, n + 0.8)
    ax.set_ylim(0, forest.height + 0.6)
    ax.set_yticks(range(1, forest.height + 1))
    ax.set_ylabel("height")
    ax.set_xticks(range(1, n + 1))
    ax.set_title(f"factorization forest of {forest.word!r}")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def render_corpus_report(rows, path):
    """Bar chart of per-fixture timings, colored by agreement."""
    plt = _plt()
    names = [r.fixture for r in rows]
    times = [r.seconds for r in rows]
    colors = ["tab:green" if r.agree and not r.fallback else "tab:red" for r in rows]
    fig, ax = plt.subplots(figsize=(max(5, len(rows) * 0.7), 4))
    ax.bar(range(len(rows)), times, color=colors)
    ax.set_xticks(range(len(rows)))
    ax.set_xticklabels(names, rotation=45, ha="right")
    ax.set_ylabel("seconds")
    agree = sum(1 for r in rows if r.agree)
    ax.set_title(f"corpus check: {agree}/{len(rows)} fixtures agree")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
