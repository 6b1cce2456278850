"""spdelab: a laboratory for time discretizations of 1D semilinear SPDEs.

du = (Lap u + f(u)) dt + dW on (0,1) with Dirichlet P1 finite elements
or on the torus with a dealiased Fourier pseudo-spectral method, driven
by trace-class Q-Wiener noise.  Seven schemes (semi/fully implicit
Euler and five tamed variants), reproducible coupled-path Monte Carlo,
and the post-processing used to certify uniform-in-time accuracy and
semi-implicit blowup.
"""

from .core import (Problem, Field, Nonlinearity, Constant, SineDirichlet,
                   SinePeriodic, Custom, cubic, allen_cahn, power_law, polynomial,
                   zero_nonlinearity, eval_f, eval_fprime, norm_l2, norm_h1,
                   norm_inf, BasisMismatchError, RegularityWarning)
from .fem import FemSpace, assemble_mass, assemble_stiffness, solve_shifted, \
    interp_nonlinearity, gradnorm_sq_of_f, measured_inverse_constant
from .spectral import SpectralSpace, apply_nonlinearity_dealiased, \
    solve_implicit_diag, gradnorm_sq_of_f_spectral
from .noise import (CovarianceSpec, QWienerSampler, NoiseStream, make_stream,
                    sample_increment, coarsen_increments, represented_trace, trace,
                    inverse_dirichlet_laplacian, inverse_periodic_helmholtz,
                    diagonal, zero_covariance)
from .schemes import (SchemeKind, SchemeState, SCHEME_NAMES, make_stepper,
                      make_state, step, tamed_drift, NewtonDivergenceError)
from .ensemble import (RunConfig, EnsembleRecord, EnsembleResult, run_ensemble,
                       run_coupled_pair, run_contractivity_pair, CoupledErrorSeries)
from .analysis import (RateFit, fit_rate, UitCertificate, uit_certificate,
                       BlowupThreshold, blowup_threshold, verify_blowup_growth,
                       ou_coupled_gap_sq)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
