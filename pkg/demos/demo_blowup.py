"""Semi-implicit Euler explodes at large data; every tamed scheme survives.

Runs the Dirichlet cubic problem at u0 = 100 and compares SIE against
the tamed family, then reproduces the quantitative explosion bound:
started above the computed energy threshold a0, the SIE second moment
grows at least linearly in n, E||u^n||^2 >= E||u^0||^2 + n*tau.
"""

import numpy as np

import spdelab as s
from spdelab.analysis import blowup_threshold, verify_blowup_growth
from spdelab.ensemble import RunConfig, run_ensemble
from spdelab.fem import FemSpace, measured_inverse_constant
from spdelab.noise import QWienerSampler

TAU, TRIALS = 0.1, 128

problem = s.Problem(s.cubic(), s.inverse_dirichlet_laplacian(),
                    FemSpace(100), s.Constant(100.0))

print(f"u0 = 100, tau = {TAU}, {TRIALS} trials, T = 50")
for scheme in ("sie", "tame-pointwise", "fie"):
    res = run_ensemble(RunConfig(problem, scheme, TAU, 50.0, TRIALS, seed=1))
    alive = res.column("alive_count")
    if alive[-1] == 0:
        t_dead = res.times()[np.argmax(alive == 0)]
        print(f"  {scheme:15s} all {TRIALS} trials dead by t = {t_dead:g}")
    else:
        print(f"  {scheme:15s} alive = {alive[-1]}, stationary mean ||u|| = "
              f"{res.records[-1].mean_norm:.4f}")

# the explosion certificate: C0, the polynomial s, and the level a0
space = problem.space
c_inv = measured_inverse_constant(space)
trace = QWienerSampler(0, problem.covariance, space).effective_trace()
thr = blowup_threshold(TAU, space.h, c_inv, trace)
print(f"\ncalibrated C_inv = {c_inv:.4f}, C0 = {thr.c0:.3e}, a0 = {thr.a0:.3e}")

level = 1.05 * np.sqrt(thr.a0 / space.l2_sq(np.ones(space.dof)))
big = s.Problem(s.cubic(), s.inverse_dirichlet_laplacian(), FemSpace(100),
                s.Constant(level), noise_scale=np.sqrt(2.0))
res = run_ensemble(RunConfig(big, "sie", TAU, 0.5, TRIALS, seed=2,
                             record_stride=1, blowup_threshold=1e60))
print(f"started at E||u0||^2 = {res.records[0].mean_sq_norm:.3e} > a0:")
for rec in res.records[:4]:
    print(f"  t = {rec.t:3.1f}  E||u||^2 = {rec.mean_sq_norm:.3e}  alive = {rec.alive_count}")
print("growth bound E||u^n||^2 >= E||u^0||^2 + n*tau holds until detection:",
      verify_blowup_growth(res.records, TAU))
