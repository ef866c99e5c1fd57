"""Figures written next to the CSV output of a run."""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# at most this many points per curve; the 200 s runs have ~1.6e5 samples
MAX_POINTS = 20000


def _thin(n):
    return slice(None, None, max(1, n // MAX_POINTS))


def plot_timeseries(path, history, cfg):
    """Theta, y and theta1 against time with the optimizer marked."""
    t = history["t"]
    sl = _thin(len(t))
    fig, axes = plt.subplots(3, 1, figsize=(8, 7), sharex=True)
    panels = [
        ("Theta", r"$\Theta(t) = u(t,0)$", cfg.Theta_star),
        ("y", r"$y(t)$", cfg.y_star),
        ("theta1", r"$\theta_1(t) = u(t,1)$", cfg.Theta_star),
    ]
    for ax, (key, label, ref) in zip(axes, panels):
        ax.plot(t[sl], history[key][sl], lw=0.6, color="tab:blue")
        if key == "theta1" and "theta1_hat" in history:
            ax.plot(t[sl], history["theta1_hat"][sl], lw=1.2, color="tab:orange",
                    label=r"$\hat\theta_1$")
            ax.legend(loc="lower right", frameon=False)
        ax.axhline(ref, color="k", ls="--", lw=0.8)
        ax.set_ylabel(label)
        ax.grid(alpha=0.3)
    axes[-1].set_xlabel("t [s]")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_snapshots(path, x, snapshots):
    """Beam displacement profiles, coloured by time."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    if snapshots:
        times = np.array([s[0] for s in snapshots])
        cmap = plt.get_cmap("viridis")
        span = max(times[-1] - times[0], 1e-12)
        for t, u in snapshots:
            ax.plot(x, u, color=cmap((t - times[0]) / span), lw=0.8)
        sm = plt.cm.ScalarMappable(cmap=cmap, norm=plt.Normalize(times[0], times[-1]))
        fig.colorbar(sm, ax=ax, label="t [s]")
    ax.set_xlabel("x")
    ax.set_ylabel("u(t, x)")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_run(out_dir, history, x, snapshots, cfg):
    plot_timeseries(out_dir / "timeseries.png", history, cfg)
    plot_snapshots(out_dir / "snapshots.png", x, snapshots)


def plot_spectrum(path, report):
    fig, ax = plt.subplots(figsize=(6, 5))
    pred = np.array(report.predicted)
    comp = np.array([q for q in report.computed if q is not None])
    ax.plot(pred.real, pred.imag, "o", mfc="none", ms=9, label="closed form")
    if comp.size:
        ax.plot(comp.real, comp.imag, "x", label="FEM")
    ax.set_xlabel("Re")
    ax.set_ylabel("Im")
    ax.legend(frameon=False)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
