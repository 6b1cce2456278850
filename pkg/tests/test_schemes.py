import numpy as np
import pytest

from spdelab import core, noise
from spdelab.fem import FemSpace
from spdelab.spectral import SpectralSpace
from spdelab.schemes import (SchemeKind, SCHEME_NAMES, make_stepper, make_state,
                             step, step_sie, step_fie, step_gyongy, tamed_drift,
                             NewtonDivergenceError)


def fem_problem(nl=None, N=16, u0=0.0, **kw):
    return core.Problem(nl or core.cubic(), noise.zero_covariance(), FemSpace(N),
                        core.Constant(u0), **kw)


def spectral_problem(nl=None, N=16, u0=0.0, **kw):
    return core.Problem(nl or core.cubic(), noise.zero_covariance(), SpectralSpace(N),
                        core.Constant(u0), **kw)


# ---------------------------------------------------------------------------
# drift formulas


def brute_pointwise(name, nl, tau, u):
    """Independent spelling of the taming denominators."""
    f, fp = nl.f(u), nl.fprime(u)
    if name == "tame-pointwise":
        return f / (1 + tau * abs(fp))
    if name == "gtem":
        return f / (1 + tau * abs(fp) ** 2) ** 0.5
    if name == "gyongy":
        return f / (1 + tau * abs(f))
    raise AssertionError(name)


def test_drift_hand_values():
    ac = core.allen_cahn(1, 1)
    assert np.isclose(tamed_drift(ac, "tame-pointwise", 0.1, 2.0), -6 / 2.1, rtol=1e-14)
    assert np.isclose(tamed_drift(ac, "gtem", 0.1, 2.0), -6 / np.sqrt(13.1), rtol=1e-14)
    assert np.isclose(tamed_drift(ac, "gyongy", 0.1, 2.0), -3.75, rtol=1e-14)
    assert tamed_drift(core.cubic(), "tame-pointwise", 0.1, 0.0) == 0.0


@pytest.mark.parametrize("name", ["tame-pointwise", "gtem", "gyongy"])
def test_pointwise_drifts_match_bruteforce(name):
    for nl in (core.cubic(), core.allen_cahn(1, 1)):
        for tau in (0.1, 0.01):
            for u in (-2.0, -1.0, 0.0, 0.5, 2.0):
                got = float(tamed_drift(nl, name, tau, u))
                want = brute_pointwise(name, nl, tau, u)
                assert got == pytest.approx(want, rel=1e-14, abs=1e-300)


def test_tamed_drifts_never_exceed_f():
    rng = np.random.default_rng(0)
    u = rng.standard_normal(500) * 20
    for nl in (core.cubic(), core.allen_cahn(1, 1)):
        f = np.abs(nl.f(u))
        for name in ("tame-pointwise", "gtem", "gyongy"):
            assert np.all(np.abs(tamed_drift(nl, name, 0.05, u)) <= f + 1e-12)


def test_gtem_vs_pointwise_truncation_ordering():
    # sqrt(1 + tau*a^2) <= 1 + tau*a exactly when a*(1-tau) <= 2, so the
    # GTEM drift dominates for moderate |f'| and is the more strongly tamed
    # of the two in the far tail (its denominator grows like sqrt(tau)|f'|).
    rng = np.random.default_rng(1)
    u = rng.standard_normal(500) * 50
    for tau in (0.5, 0.01):
        g = np.abs(tamed_drift(core.cubic(), "gtem", tau, u))
        p = np.abs(tamed_drift(core.cubic(), "tame-pointwise", tau, u))
        a = np.abs(core.cubic().fprime(u))
        inside = a * (1 - tau) <= 2
        assert np.all(g[inside] >= p[inside] * (1 - 1e-12))
        assert np.all(g[~inside] <= p[~inside] * (1 + 1e-12))


def test_gyongy_drift_bounded_by_inverse_tau():
    u = np.linspace(-1e6, 1e6, 101)
    tau = 0.02
    d = np.abs(tamed_drift(core.cubic(), "gyongy", tau, u))
    assert np.all(d <= 1 / tau)  # floats land exactly on the asymptote
    assert np.all(d[np.abs(u) < 1e3] < 1 / tau)


def test_truncated_drift_linear_growth():
    tau = 0.1
    d = tamed_drift(core.cubic(), "tame-pointwise", tau, 1e6)
    assert abs(abs(d) * 3 * tau / 1e6 - 1.0) <= 1e-4


def test_global_taming_factor_on_constant_field():
    # single-node mesh: ||f'(u)|| = sqrt(f'(2)^2 / 3), drift = f(2)/(1 + tau*norm)
    prob = fem_problem(N=2, u0=2.0)
    st = make_stepper(prob, SchemeKind("tame-global"), 0.1)
    drift = st._drift(np.array([[2.0]]))[0, 0]
    norm = np.sqrt(144.0 / 3.0)
    assert np.isclose(norm, 6.9282, atol=1e-4)
    assert np.isclose(drift, -8.0 / (1 + 0.1 * norm), rtol=1e-12)
    assert np.isclose(drift, -4.7258, atol=1e-4)
    # scaling factor always in (0, 1]
    assert -8.0 <= drift < 0.0


def test_gradient_taming_pathology_periodic_vs_dirichlet():
    # periodic constant field: no gradient, no taming
    probs = spectral_problem(N=16, u0=3.0)
    sts = make_stepper(probs, SchemeKind("tame-gradient"), 0.1)
    drift_hat = sts._drift_hat(probs.initial_state()[None, :])
    assert np.isclose(drift_hat[0, 0].real, core.cubic().f(3.0), rtol=1e-10)
    # Dirichlet constant field: boundary gradient forces a factor < 1
    probf = fem_problem(N=16, u0=3.0)
    stf = make_stepper(probf, SchemeKind("tame-gradient"), 0.1)
    w = probf.space.stiffness.quadratic(core.cubic().f(probf.initial_state()))
    assert np.isclose(w, 2 * 27.0 ** 2 / probf.space.h, rtol=1e-10)
    drift = stf._drift(probf.initial_state()[None, :])[0]
    factor = drift[8] / core.cubic().f(3.0)
    assert factor < 0.01


def test_zero_field_zero_noise_fixed_point():
    for prob in (fem_problem(), spectral_problem()):
        for name in SCHEME_NAMES:
            state = make_state(prob, name, 0.1)
            new = step(state, np.zeros_like(state.field.values))
            assert np.all(new.field.values == 0.0)
            assert new.alive and new.step_index == 1


def test_sie_scalar_mean_map():
    # constant periodic data, zero noise: the mean follows u - tau*u^3 exactly
    prob = spectral_problem(N=32, u0=10.0)
    state = make_state(prob, "sie", 0.1, blowup_threshold=1e30)
    z = np.zeros(32, dtype=complex)
    s1 = step_sie(state, z)
    assert np.isclose(s1.field.values[0].real, -90.0, rtol=1e-12)
    s2 = step_sie(s1, z)
    assert np.isclose(s2.field.values[0].real, 72810.0, rtol=1e-12)


def test_fie_scalar_cubic_vs_bisection():
    # (1/3 + 0.4) v + 0.1*(1/3) v^3 = 1/3  for N=2, u0=1, tau=0.1
    prob = fem_problem(N=2, u0=1.0)
    state = make_state(prob, "fie", 0.1)
    new = step_fie(state, np.zeros(1))
    lo, hi = 0.0, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if (1 / 3 + 0.4) * mid + 0.1 / 3 * mid ** 3 < 1 / 3:
            lo = mid
        else:
            hi = mid
    assert np.isclose(new.field.values[0], lo, atol=1e-10)
    assert np.isclose(new.field.values[0], 0.450392, atol=1e-5)


@pytest.mark.parametrize("make", [fem_problem, spectral_problem])
def test_fie_monotone_dissipation(make):
    rng = np.random.default_rng(4)
    prob = make(N=32)
    st = make_stepper(prob, SchemeKind("fie"), 0.05)
    if isinstance(prob.space, FemSpace):
        U = rng.standard_normal((6, prob.space.dof)) * 3
    else:
        U = prob.space.forward(rng.standard_normal((6, prob.space.N)) * 3)
    new, failed = st.step_batch(U, np.zeros_like(U))
    assert failed is None
    assert np.all(prob.space.l2_sq(new) <= prob.space.l2_sq(U) + 1e-12)


@pytest.mark.parametrize("make", [fem_problem, spectral_problem])
def test_fie_residual_after_convergence(make):
    rng = np.random.default_rng(5)
    prob = make(N=32)
    st = make_stepper(prob, SchemeKind("fie"), 0.1)
    if isinstance(prob.space, FemSpace):
        U = rng.standard_normal((8, prob.space.dof)) * 2
        dW = rng.standard_normal((8, prob.space.dof)) * 0.05
        rhs = prob.space.mass.matvec(U + dW)
    else:
        U = prob.space.forward(rng.standard_normal((8, prob.space.N)) * 2)
        dW = prob.space.forward(rng.standard_normal((8, prob.space.N)) * 0.05)
        rhs = U + dW
    V, failed = st._newton(U, rhs)
    assert failed is None
    assert np.max(np.abs(st.residual(V, rhs))) <= 1e-9


def test_newton_divergence_reported():
    prob = fem_problem(N=8, u0=50.0)
    state = make_state(prob, SchemeKind("fie", newton_max_iter=1), 0.5)
    with pytest.raises(NewtonDivergenceError):
        step_fie(state, np.zeros(7))


def test_small_amplitude_equivalence_with_sie():
    tau = 1e-4
    for prob, datum in ((fem_problem(N=32), core.SineDirichlet(0.01, 1)),
                        (spectral_problem(N=32), core.SinePeriodic(0.01, 1))):
        u0 = datum.realize(prob.space)
        z = np.zeros_like(u0)
        ref = step(make_state(prob, "sie", tau, values=u0), z).field.values
        fmax = abs(core.eval_f(prob.nonlinearity, 0.01))
        fpmax = abs(core.eval_fprime(prob.nonlinearity, 0.01))
        for name in ("tame-pointwise", "tame-global", "gtem",
                     "tame-gradient", "gyongy"):
            out = step(make_state(prob, name, tau, values=u0), z).field.values
            gap = np.max(np.abs(out - ref))
            assert gap <= 2 * tau ** 2 * max(fmax * fpmax, fmax) + 1e-13


def test_blowup_detection_absorbs():
    prob = fem_problem(N=8, u0=1e5)
    state = make_state(prob, "sie", 0.1)
    s1 = step(state, np.zeros(7))
    assert not s1.alive
    s2 = step(s1, np.zeros(7))  # absorbing: no further stepping
    assert s2 is s1


def test_named_steppers_enforce_their_scheme():
    prob = fem_problem(N=8)
    state = make_state(prob, "sie", 0.1)
    with pytest.raises(ValueError):
        step_gyongy(state, np.zeros(7))


def test_scheme_names_are_the_seven_reference_rows():
    assert set(SCHEME_NAMES) == {"sie", "fie", "gyongy", "tame-pointwise",
                                 "tame-global", "gtem", "tame-gradient"}
    with pytest.raises(ValueError):
        SchemeKind("heun")
