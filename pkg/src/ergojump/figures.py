"""Figure rendering for the report path; PNG files land next to the CSV/JSON."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .core import CEMETERY_INDEX


def _index_value(index):
    """Numeric height for an index: ints directly, configurations by size."""
    if index is CEMETERY_INDEX or index == "cemetery":
        return -1.0
    if isinstance(index, tuple):
        return float(sum(index))
    if isinstance(index, (int, float)):
        return float(index)
    return None


def save_index_paths(records, path, horizon=None, max_paths=20):
    """Step plot of a handful of index trajectories."""
    fig, ax = plt.subplots(figsize=(7, 4))
    categories = {}
    for rec in records[:max_paths]:
        ts = [0.0] + list(rec.jump_times) + [rec.final_time]
        idxs = [rec.start_index] + list(rec.post_jump_indices)
        ys = []
        for ix in idxs:
            v = _index_value(ix)
            if v is None:
                v = categories.setdefault(ix, float(len(categories)))
            ys.append(v)
        ys.append(ys[-1])
        ax.step(ts, ys, where="post", alpha=0.6, linewidth=1.0)
    ax.set_xlabel("time")
    ax.set_ylabel("index" + (" (ordinal)" if categories else ""))
    ax.set_title(f"index paths ({min(len(records), max_paths)} of {len(records)} replicas)")
    if horizon:
        ax.set_xlim(0, horizon)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def save_jump_histogram(jump_counts: dict, path):
    """Bar chart of the jump-count histogram from a run summary."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ks = sorted(int(k) for k in jump_counts)
    vs = [jump_counts[k] if k in jump_counts else jump_counts[str(k)] for k in ks]
    ax.bar(ks, vs, width=0.9, color="#4878a8")
    ax.set_xlabel("jumps per path")
    ax.set_ylabel("replicas")
    ax.set_title("jump-count histogram")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def save_ks_sweep(reports, path):
    """KS distance against acceleration, with per-point thresholds."""
    ns = [r.details.get("n") for r in reports]
    vals = [r.value for r in reports]
    thrs = [r.threshold for r in reports]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(ns, vals, "o-", label="KS distance")
    ax.plot(ns, thrs, "s--", color="gray", label="threshold")
    ax.set_xscale("log", base=2)
    ax.set_yscale("log")
    ax.set_xlabel("acceleration n")
    ax.set_ylabel("KS distance to limit law")
    ax.set_title("first-jump-time convergence")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def save_report_bars(reports, path, title="verification reports"):
    """Horizontal bars of statistic values against their thresholds."""
    fig, ax = plt.subplots(figsize=(8, 1.2 + 0.5 * len(reports)))
    ys = np.arange(len(reports))
    vals = [r.value for r in reports]
    thrs = [r.threshold for r in reports]
    colors = ["#3c8c3c" if r.passed else "#b04545" for r in reports]
    ax.barh(ys, vals, color=colors, height=0.55)
    for y, thr in zip(ys, thrs):
        ax.plot([thr, thr], [y - 0.35, y + 0.35], color="black", linewidth=1.2)
    ax.set_yticks(ys)
    ax.set_yticklabels([r.name for r in reports], fontsize=7)
    ax.invert_yaxis()
    ax.set_xlabel("statistic value (bar) vs threshold (tick)")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def save_fraction_pair(result: dict, path, labels=("prelimit", "limit"), title=""):
    """Two event fractions with their 99% intervals (explosion-gap view)."""
    fig, ax = plt.subplots(figsize=(5, 4))
    fracs = [result["prelimit_fraction"], result["limit_fraction"]]
    cis = [result["prelimit_ci99"], result["limit_ci99"]]
    xs = [0, 1]
    err = [[f - lo for f, (lo, _) in zip(fracs, cis)], [hi - f for f, (_, hi) in zip(fracs, cis)]]
    ax.bar(xs, fracs, color=["#4878a8", "#a85448"], width=0.6)
    ax.errorbar(xs, fracs, yerr=err, fmt="none", ecolor="black", capsize=4)
    ax.set_xticks(xs)
    ax.set_xticklabels(labels)
    ax.set_ylabel("fraction hitting the jump guard before T")
    ax.set_title(title or f"explosion evidence at T={result.get('T')}")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def save_extinction(result: dict, path, target: float | None = None):
    """Extinction estimate with its 99% interval, optional reference line."""
    fig, ax = plt.subplots(figsize=(4.2, 4))
    est = result["estimate"]
    lo, hi = result["ci99"]
    ax.errorbar([0], [est], yerr=[[est - lo], [hi - est]], fmt="o", capsize=6, color="#4878a8")
    if target is not None:
        ax.axhline(target, color="gray", linestyle="--", linewidth=1)
    ax.set_xlim(-0.8, 0.8)
    ax.set_xticks([])
    ax.set_ylabel("extinction probability")
    ax.set_title(f"extinction estimate ({result['replicas']} paths)")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
