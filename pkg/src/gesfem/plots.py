"""Matplotlib figures written next to the delimited output files."""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def monitor_figure(rows, path, title=""):
    """Four-panel qualitative monitor: mass, extrema of u, energy, min H."""
    t = np.array([r.t for r in rows])
    fig, axes = plt.subplots(2, 2, figsize=(9, 6), sharex=True)
    (ax_mass, ax_u), (ax_energy, ax_h) = axes

    mass = np.array([r.mass for r in rows])
    ax_mass.plot(t, mass, "b-")
    ax_mass.set_ylabel("mass")
    ax_mass.ticklabel_format(useOffset=False)

    ax_u.plot(t, [r.u_min for r in rows], "g-", label="min u")
    ax_u.plot(t, [r.u_max for r in rows], "r-", label="max u")
    ax_u.axhline(0.0, color="k", lw=0.6)
    ax_u.set_ylabel("u extrema")
    ax_u.legend(loc="best", fontsize=8)

    ax_energy.plot(t, [r.energy for r in rows], "b-")
    ax_energy.set_ylabel("energy")
    ax_energy.set_xlabel("t")

    ax_h.plot(t, [r.H_min for r in rows], "m-")
    ax_h.axhline(0.0, color="k", lw=0.6)
    ax_h.set_ylabel("min H")
    ax_h.set_xlabel("t")

    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def convergence_figure(xs, errors_by_var, path, xlabel, order=2, title=""):
    """Log-log error plot with an order reference line."""
    fig, ax = plt.subplots(figsize=(6, 4.5))
    xs = np.asarray(xs, dtype=float)
    for name, errs in errors_by_var.items():
        ax.loglog(xs, errs, "o-", label=name)
    finite = [e for errs in errors_by_var.values() for e in errs if e > 0]
    if finite:
        anchor = max(finite)
        ref = anchor * (xs / xs[0]) ** order
        ax.loglog(xs, ref, "k--", lw=0.8, label=f"order {order}")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("max-in-time H1 error")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(loc="best", fontsize=8)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path
