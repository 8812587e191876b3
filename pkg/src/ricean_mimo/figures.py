"""Headless figure rendering for experiment results.

One PNG per experiment next to its CSV: sum rate against the sweep variable,
one curve per method, error bars where a Monte-Carlo standard error exists.
"""

import matplotlib

matplotlib.use("Agg")

import math

import matplotlib.pyplot as plt

_AXIS_LABELS = {
    "N": "BS antennas N",
    "kappa": "antenna correlation kappa",
    "ricean_db": "Ricean factor (dB)",
    "epsilon": "power-scaling exponent",
}

_STYLES = {
    "lmmse_mc": dict(marker="o", ls="none", color="C0"),
    "los_mc": dict(marker="s", ls="none", color="C1"),
    "lmmse_thm1": dict(ls="-", color="C0"),
    "los_thm4": dict(ls="-", color="C1"),
    "lmmse_thm2": dict(ls="--", color="C0"),
    "los_thm5": dict(ls="--", color="C1"),
    "lmmse_thm3": dict(ls=":", color="C0"),
    "los_thm6": dict(ls=":", color="C1"),
}


def render_experiment_figure(experiment, rows, path):
    """Plot the sum-rate rows of one experiment run and save to path.

    rows are the structured records produced by cli.run (before CSV
    formatting); only rows with user == "sum" are drawn.
    """
    fig, ax = plt.subplots(figsize=(5.2, 3.6), dpi=150)
    for method in experiment.methods:
        pts = [r for r in rows if r["method"] == method and r["user"] == "sum"
               and math.isfinite(r["rate"])]
        if not pts:
            continue
        x = [r["value"] for r in pts]
        y = [r["rate"] for r in pts]
        err = [r["std_error"] for r in pts]
        style = dict(_STYLES.get(method, {}))
        if any(e is not None for e in err):
            ax.errorbar(x, y, yerr=[e or 0.0 for e in err], label=method,
                        capsize=2, **style)
        else:
            ax.plot(x, y, label=method, **style)
    ax.set_xlabel(_AXIS_LABELS.get(experiment.sweep_var, experiment.sweep_var))
    ax.set_ylabel("sum rate (bit/s/Hz)")
    ax.set_title(experiment.name, fontsize=10)
    ax.grid(True, ls=":", lw=0.5)
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
