"""Figures for reports and sweeps (headless, written straight to files)."""
from __future__ import annotations

from typing import List, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

PHASE_ORDER = ("setup", "signup", "pre-voting", "voting", "fault-recovery", "tally", "final-tally")

SWEEP_COLUMNS = {
    "mpc_batch": ("mpc_batch", ["per_voter_cost"], "MPC batch size", "cost per voter (units)"),
    "k": ("k", ["vote_cost"], "candidates", "cast-vote cost (units)"),
    "n": ("n", ["mpc_per_voter_cost"], "group size", "MPC cost per voter (units)"),
    "period": ("period_seconds", ["max_voters"], "voting period (days)", "max voters"),
}


def _finish(fig, path) -> None:
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_phase_costs(phase_totals: dict, path) -> None:
    phases = [p for p in PHASE_ORDER if p in phase_totals]
    phases += sorted(set(phase_totals) - set(phases))
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.bar(phases, [phase_totals[p] for p in phases], color="tab:blue")
    ax.set_ylabel("units")
    ax.set_title("cost per phase")
    ax.tick_params(axis="x", labelrotation=30)
    _finish(fig, path)


def plot_sweep(rows: List[dict], axis: str, path) -> None:
    x_key, y_keys, x_label, y_label = SWEEP_COLUMNS[axis]
    xs: Sequence[float] = [r[x_key] for r in rows]
    if axis == "period":
        xs = [x / 86400 for x in xs]
    fig, ax = plt.subplots(figsize=(6, 4))
    for key in y_keys:
        ax.plot(xs, [r[key] for r in rows], marker="o", markersize=3, label=key)
    if axis == "mpc_batch" and rows:
        best = min(rows, key=lambda r: r["per_voter_cost"])
        ax.axvline(best["mpc_batch"], color="grey", linestyle="--", linewidth=0.8)
    ax.set_xlabel(x_label)
    ax.set_ylabel(y_label)
    ax.grid(alpha=0.3)
    _finish(fig, path)
