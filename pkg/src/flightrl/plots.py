"""Figure rendering for the compare path.

SVG output so reports stay self-contained text. CSV remains the data
authority; figures are a convenience layer.
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def plot_learning_curves(curves, path):
    """curves: {run name: rows of (episode, steps, reward, avg30, sigma)}."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for name, rows in curves.items():
        if not rows:
            continue
        episodes = [r[0] for r in rows]
        avg30 = [r[3] for r in rows]
        ax.plot(episodes, avg30, label=name)
    ax.set_xlabel("episode")
    ax.set_ylabel("30-episode average reward")
    ax.legend(loc="best", fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def plot_trajectories(trajectories, path):
    """trajectories: {run name: trajectory rows}; plots a_z vs commands and fin."""
    fig, (ax_acc, ax_fin) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    first = True
    for name, rows in trajectories.items():
        if not rows:
            continue
        t = [r[0] for r in rows]
        ax_acc.plot(t, [r[3] for r in rows], label=name)
        ax_fin.plot(t, [r[9] for r in rows], label=name)
        if first:
            ax_acc.plot(t, [r[1] for r in rows], "k--", lw=0.8, label="command")
            ax_acc.plot(t, [r[2] for r in rows], "k:", lw=0.8, label="shaped command")
            first = False
    ax_acc.set_ylabel("lateral acceleration [m/s$^2$]")
    ax_acc.legend(loc="best", fontsize=8)
    ax_acc.grid(True, alpha=0.3)
    ax_fin.set_xlabel("time [s]")
    ax_fin.set_ylabel("fin deflection [rad]")
    ax_fin.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
