"""SVG figures for the command-line reports.

Figures are rendered off-screen and written with fixed metadata and id
salt so that identical data give identical files.
"""
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .curves import grid  # noqa: E402

_RC = {"svg.hashsalt": "tractalign", "svg.fonttype": "none"}


def _save(fig, path):
    with plt.rc_context(_RC):
        fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def plot_gammas(gammas, path, title="Warping functions", highlight=None):
    """Overlay of warping functions against the identity.

    ``highlight`` is an optional single warp drawn on top (e.g. the
    mean-to-mean warp).
    """
    gammas = np.atleast_2d(gammas)
    t = grid(gammas.shape[1])
    fig, ax = plt.subplots(figsize=(4, 4))
    for g in gammas:
        ax.plot(t, g, color="tab:blue", lw=0.6, alpha=0.5)
    if highlight is not None:
        ax.plot(t, highlight, color="tab:red", lw=2, label="mean warp")
        ax.legend(loc="upper left")
    ax.plot(t, t, "k--", lw=1)
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1)
    ax.set_aspect("equal")
    ax.set_xlabel("t")
    ax.set_ylabel("gamma(t)")
    ax.set_title(title)
    _save(fig, path)


def plot_profiles(before, after, path, label="FA"):
    """Heatmaps of per-fiber profiles before and after reparameterization."""
    from .metrics import profile_variability

    before, after = np.atleast_2d(before), np.atleast_2d(after)
    vmin = min(before.min(), after.min())
    vmax = max(before.max(), after.max())
    fig, axes = plt.subplots(1, 3, figsize=(12, 4),
                             gridspec_kw={"width_ratios": [1, 1, 1.2]})
    t = grid(before.shape[1])
    for ax, data, name in ((axes[0], before, "rigid"), (axes[1], after, "aligned")):
        im = ax.imshow(data, aspect="auto", cmap="viridis", vmin=vmin, vmax=vmax,
                       extent=(0, 1, data.shape[0], 0), interpolation="nearest")
        var = profile_variability(data) if len(data) > 1 else 0.0
        ax.set_title(f"{label} profiles, {name} (variability {var:.4f})")
        ax.set_xlabel("position along tract")
        ax.set_ylabel("fiber")
    fig.colorbar(im, ax=axes[:2], shrink=0.8)
    for data, name, color in ((before, "rigid", "tab:gray"),
                              (after, "aligned", "tab:red")):
        axes[2].plot(t, data.mean(axis=0), color=color, label=f"{name} mean")
        axes[2].fill_between(t, data.min(axis=0), data.max(axis=0),
                             color=color, alpha=0.2)
    axes[2].set_xlabel("position along tract")
    axes[2].set_ylabel(label)
    axes[2].legend()
    _save(fig, path)


def plot_hausdorff_bars(summary, path):
    """Grouped bars of mean rigid and soft Hausdorff distance per tract."""
    tracts = sorted(summary)
    x = np.arange(len(tracts))
    fig, ax = plt.subplots(figsize=(max(4, 1.2 * len(tracts) + 2), 4))
    for off, key, color in ((-0.2, "rigid", "tab:gray"), (0.2, "soft", "tab:blue")):
        means = [summary[t][f"{key}_mean"] for t in tracts]
        sds = [summary[t][f"{key}_sd"] for t in tracts]
        ax.bar(x + off, means, 0.4, yerr=sds, color=color, label=key, capsize=3)
    ax.set_xticks(x)
    ax.set_xticklabels(tracts, rotation=30, ha="right")
    ax.set_ylabel("Hausdorff distance")
    ax.legend()
    fig.tight_layout()
    _save(fig, path)
