import numpy as np
import pytest

from spdelab import analysis


def test_fit_rate_recovers_planted_power_laws():
    taus = [1e-1, 1e-2, 1e-3]
    fit = analysis.fit_rate([(t, 3.7 * t ** 0.5) for t in taus])
    assert abs(fit.slope - 0.5) <= 1e-12
    assert fit.residual <= 1e-12
    hs = [1 / 8, 1 / 16, 1 / 32, 1 / 64]
    assert abs(analysis.fit_rate([(h, 0.2 * h) for h in hs]).slope - 1.0) <= 1e-12


def test_fit_rate_input_validation():
    with pytest.raises(ValueError):
        analysis.fit_rate([(0.1, 1.0), (0.01, 0.5)])
    with pytest.raises(ValueError):
        analysis.fit_rate([(0.1, 1.0), (0.01, 0.0), (0.001, 0.1)])
    with pytest.raises(ValueError):
        analysis.fit_rate([(-0.1, 1.0), (0.01, 0.5), (0.001, 0.1)])


def test_uit_certificate_shapes():
    t = np.linspace(0, 100, 201)
    flat = analysis.uit_certificate(t, np.full_like(t, 0.3))
    assert flat.ratio == 1.0
    linear = analysis.uit_certificate(t, t.copy())
    assert np.isclose(linear.ratio, 2.0, rtol=1e-12)  # boundary case
    decay = analysis.uit_certificate(t, 1.0 + np.exp(-t / 5.0))
    assert decay.ratio < 1.0


def test_uit_certificate_scale_invariance():
    rng = np.random.default_rng(0)
    t = np.linspace(0, 10, 51)
    e = 0.1 + rng.random(51)
    base = analysis.uit_certificate(t, e)
    scaled = analysis.uit_certificate(t, 1e6 * e)
    assert np.isclose(base.ratio, scaled.ratio, rtol=1e-12)


def test_blowup_threshold_constants():
    thr = analysis.blowup_threshold(tau=0.1, h=0.1, c_inv=1.0, trace_q=1 / 6)
    assert np.isclose(thr.c0, 1 / 121, rtol=1e-12)
    assert np.isclose(thr.x_star,
                      ((4 * thr.c0 * 0.1 + 2 * (1 - thr.c0)) / (3 * thr.c0 * 0.01)) ** 2,
                      rtol=1e-12)
    assert thr.a0 >= 1.0
    # closed loop: the threshold satisfies its own defining inequality
    assert thr.s(thr.a0) >= -1e-9 * max(1.0, abs(thr.s(0.0)))
    assert thr.s(2 * thr.a0) > 0.0


def test_blowup_threshold_monotone_in_tau():
    prev = None
    for tau in (0.1, 0.05, 0.01, 0.005, 0.001):
        a0 = analysis.blowup_threshold(tau, 0.01, np.sqrt(12), 1 / 6).a0
        if prev is not None:
            assert a0 >= prev
        prev = a0


def test_blowup_threshold_input_validation():
    with pytest.raises(ValueError):
        analysis.blowup_threshold(0.0, 0.1, 1.0, 1.0)


class _Rec:
    def __init__(self, t, mean_sq, std_sq=0.0, alive=1):
        self.t = t
        self.mean_sq_norm = mean_sq
        self.std_sq_norm = std_sq
        self.alive_count = alive


def test_verify_blowup_growth_deterministic_series():
    tau = 0.1
    recs = [_Rec(0.0, 100.0), _Rec(0.1, 200.0), _Rec(0.2, 1e9)]
    assert analysis.verify_blowup_growth(recs, tau)
    flat = [_Rec(0.0, 100.0), _Rec(0.1, 100.0)]
    assert not analysis.verify_blowup_growth(flat, tau)


def test_verify_blowup_growth_stops_at_first_death():
    tau = 0.1
    recs = [_Rec(0.0, 100.0, alive=4), _Rec(0.1, 500.0, alive=4),
            _Rec(0.2, 0.0, alive=2)]  # post-blowup record is ignored
    assert analysis.verify_blowup_growth(recs, tau)


def test_verify_blowup_growth_statistical_slack():
    tau = 0.1
    recs = [_Rec(0.0, 100.0, std_sq=0.0, alive=100),
            _Rec(0.1, 100.05, std_sq=1.0, alive=100)]  # within 3 se of +tau
    assert analysis.verify_blowup_growth(recs, tau)
    recs[1].mean_sq_norm = 99.0
    assert not analysis.verify_blowup_growth(recs, tau)


def test_ou_gap_vanishes_at_ratio_one():
    out = analysis.ou_coupled_gap_sq(lam=4.0, gamma=0.5, u0=2.0,
                                     tau_coarse=0.1, ratio=1, n_coarse=20)
    assert np.allclose(out, 0.0, atol=1e-30)


def test_ou_gap_positive_and_stabilizes():
    out = analysis.ou_coupled_gap_sq(lam=9.0, gamma=1.0, u0=0.0,
                                     tau_coarse=0.05, ratio=8, n_coarse=400)
    assert np.all(out[1:] > 0)
    assert abs(out[-1] - out[-2]) < 1e-6 * out[-1]
