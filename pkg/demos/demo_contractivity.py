"""Pathwise contraction: two solutions under the same noise merge exponentially.

With additive noise the difference of two solutions obeys the
deterministic dissipative flow, so log ||u - v|| decays at least at the
spectral-gap rate pi^2 (Dirichlet), plus whatever the cubic adds.
"""

import numpy as np

import spdelab as s
from spdelab.ensemble import run_contractivity_pair
from spdelab.fem import FemSpace

problem = s.Problem(s.cubic(), s.inverse_dirichlet_laplacian(), FemSpace(100),
                    s.Constant(0.0))

print("u0 = 5 sin(pi x), v0 = -3 sin(2 pi x), shared Q-Wiener increments")
for tau in (1e-2, 1e-3):
    t, d = run_contractivity_pair(problem, "tame-pointwise", tau, 0.5,
                                  s.SineDirichlet(5, 1), s.SineDirichlet(-3, 2),
                                  seed=7, trials=8, record_stride=max(1, int(0.01 / tau)))
    mask = d > 0
    slope = np.polyfit(t[mask], np.log(d[mask]), 1)[0]
    print(f"  tau = {tau:g}: ||u-v|| {d[0]:.3f} -> {d[-1]:.2e},  "
          f"log-slope {slope:.2f} (<= -pi^2 = {-np.pi**2:.2f} expected)")

# the difference series does not depend on the noise seed for linear f
linear = s.Problem(s.zero_nonlinearity(), s.inverse_dirichlet_laplacian(),
                   FemSpace(100), s.Constant(0.0))
series = []
for seed in (1, 2):
    _, d = run_contractivity_pair(linear, "sie", 1e-2, 0.5, s.SineDirichlet(1, 1),
                                  s.SineDirichlet(-1, 3), seed=seed)
    series.append(d)
gap = np.max(np.abs(series[0] - series[1]))
print(f"seed-independence of the difference (f = 0): max deviation {gap:.2e}")
