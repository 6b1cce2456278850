"""Mean-norm time series of all seven schemes on both discretizations.

A desk-scale version of the full comparison suite: cubic nonlinearity,
u0 = 0, tau = 0.1, a few hundred trials.  Writes one PNG per space if
matplotlib is available, always prints the stationary levels.
"""

import numpy as np

import spdelab as s
from spdelab.ensemble import RunConfig, run_ensemble
from spdelab.fem import FemSpace
from spdelab.schemes import SCHEME_NAMES
from spdelab.spectral import SpectralSpace

try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    plt = None

TRIALS, TAU, T = 256, 0.1, 30.0

for label, problem in (
    ("fem", s.Problem(s.cubic(), s.inverse_dirichlet_laplacian(), FemSpace(100),
                      s.Constant(0.0))),
    ("spectral", s.Problem(s.cubic(), s.inverse_periodic_helmholtz(),
                           SpectralSpace(256), s.Constant(0.0))),
):
    print(f"\n{label}: u0 = 0, tau = {TAU}, {TRIALS} trials")
    fig, ax = plt.subplots(figsize=(7, 4)) if plt else (None, None)
    for scheme in SCHEME_NAMES:
        res = run_ensemble(RunConfig(problem, scheme, TAU, T, TRIALS, seed=3))
        t = res.times()
        mean = res.column("mean_norm")
        std = res.column("std_norm")
        tail = np.mean(mean[t >= T / 2])
        print(f"  {scheme:15s} stationary E||u|| = {tail:.4f}")
        if ax is not None:
            ax.plot(t, mean, label=scheme, lw=1)
            ax.fill_between(t, mean - std, mean + std, alpha=0.08)
    if ax is not None:
        ax.set_xlabel("t"), ax.set_ylabel("E ||u||")
        ax.legend(fontsize=8), ax.set_title(f"{label}, zero data")
        fig.tight_layout()
        fig.savefig(f"schemes_{label}.png", dpi=130)
        print(f"  wrote schemes_{label}.png")
