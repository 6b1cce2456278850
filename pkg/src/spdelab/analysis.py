"""Post-processing: rate fits, uniform-in-time certificates, blowup thresholds.

The blowup threshold reproduces the explicit constants of the
semi-implicit explosion argument: with
C0 = 1/(1 + 2 C_inv^2 tau h^-2 + C_inv^2 h^-4 tau^2) the polynomial

    s(x) = C0 tau^2 x^(3/2) - (2 tau C0 + (1-C0)) x + 2 Tr(Q) C0 tau - tau

is nonnegative beyond its root a0 >= 1, and second moments of the
semi-implicit scheme started above that level grow at least linearly,
E||u^n||^2 >= E||u^0||^2 + n*tau.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RateFit:
    """Least-squares power-law fit error ~ C * parameter^slope."""

    pairs: tuple
    slope: float
    intercept: float
    residual: float


def fit_rate(pairs):
    """Fit log(error) = slope*log(parameter) + intercept.

    Needs at least three strictly positive (parameter, error) pairs.
    """
    pairs = tuple((float(p), float(e)) for p, e in pairs)
    if len(pairs) < 3:
        raise ValueError("rate fit needs at least 3 points")
    if any(p <= 0 or e <= 0 for p, e in pairs):
        raise ValueError("rate fit needs strictly positive values")
    x = np.log([p for p, _ in pairs])
    y = np.log([e for _, e in pairs])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    return RateFit(pairs, float(slope), float(intercept),
                   float(np.sqrt(np.mean(resid ** 2))))


@dataclass(frozen=True)
class UitCertificate:
    early_max: float
    late_max: float
    ratio: float


def uit_certificate(times, errors):
    """Compare the worst error on [T/2, T] against the worst on [0, T/2].

    A scheme with a uniform-in-time bound keeps the ratio near 1;
    ratio <= 2 is the acceptance tolerance for statistical noise.
    """
    times = np.asarray(times, dtype=np.float64)
    errors = np.asarray(errors, dtype=np.float64)
    half = times[-1] / 2.0
    early = float(np.max(errors[times <= half]))
    late = float(np.max(errors[times >= half]))
    if early == 0.0:
        ratio = 1.0 if late == 0.0 else float("inf")
    else:
        ratio = late / early
    return UitCertificate(early, late, ratio)


@dataclass(frozen=True)
class BlowupThreshold:
    tau: float
    h: float
    c_inv: float
    trace_q: float
    c0: float
    x_star: float
    a0: float

    def s(self, x):
        """The explosion polynomial evaluated at x >= 0."""
        x = np.asarray(x, dtype=np.float64)
        return (self.c0 * self.tau ** 2 * x ** 1.5
                - (2.0 * self.tau * self.c0 + (1.0 - self.c0)) * x
                + 2.0 * self.trace_q * self.c0 * self.tau - self.tau)


def blowup_threshold(tau, h, c_inv, trace_q):
    """Initial-energy level a0 above which semi-implicit growth is forced.

    a0 = max(1, x0) with x0 the root of s on [x_star, inf), found by
    bisection to relative tolerance 1e-10; s(a0) >= -1e-9 is re-checked.
    """
    if min(tau, h, c_inv, trace_q) <= 0:
        raise ValueError("all blowup-threshold inputs must be positive")
    c0 = 1.0 / (1.0 + 2.0 * c_inv ** 2 * tau / h ** 2 + c_inv ** 2 * tau ** 2 / h ** 4)
    thr = BlowupThreshold(tau, h, c_inv, trace_q, c0,
                          ((4.0 * c0 * tau + 2.0 * (1.0 - c0)) / (3.0 * c0 * tau ** 2)) ** 2,
                          1.0)
    if thr.s(thr.x_star) >= 0.0:
        # s decreases to its minimum at x_star and is nonnegative there,
        # so it is nonnegative everywhere: the trivial level suffices
        a0 = 1.0
    else:
        lo = thr.x_star
        hi = max(2.0 * lo, 1.0)
        while thr.s(hi) <= 0.0:
            hi *= 2.0
            if hi > 1e30:
                raise ArithmeticError("no sign change of s below 1e30")
        while (hi - lo) > 1e-10 * hi:
            mid = 0.5 * (lo + hi)
            if thr.s(mid) <= 0.0:
                lo = mid
            else:
                hi = mid
        a0 = max(1.0, hi)
    out = BlowupThreshold(tau, h, c_inv, trace_q, c0, thr.x_star, a0)
    scale = max(abs(2.0 * trace_q * c0 * tau - tau), tau, 1.0)
    if out.s(a0) < -1e-9 * scale and a0 > 1.0:
        raise ArithmeticError("threshold failed its own defining equation")
    return out


def verify_blowup_growth(records, tau, sigmas=3.0):
    """Check E||u^n||^2 >= E||u^0||^2 + n*tau at every record before blowup.

    `records` is an ensemble record sequence; the check runs while the
    full ensemble is still alive and allows `sigmas` standard errors of
    statistical slack on each side.
    """
    records = list(records)
    if not records:
        return False
    full = records[0].alive_count
    if full == 0:
        return False
    base = records[0].mean_sq_norm
    se0 = records[0].std_sq_norm / np.sqrt(full)
    for rec in records[1:]:
        if rec.alive_count < full:
            break
        n = round(rec.t / tau)
        se = np.hypot(se0, rec.std_sq_norm / np.sqrt(rec.alive_count))
        if not rec.mean_sq_norm >= base + n * tau - sigmas * se:
            return False
    return True


def ou_coupled_gap_sq(lam, gamma, u0, tau_coarse, ratio, n_coarse):
    """Exact E|c_k - f_k|^2 for one linear mode advanced on a shared path.

    Both chains are semi-implicit (= fully implicit for f = 0) with the
    coarse chain using ratio-summed increments of the fine one;
    an independent oracle for the linear heat-plus-noise case.
    """
    tau_f = tau_coarse / ratio
    a_c = 1.0 / (1.0 + tau_coarse * lam)
    a_f = 1.0 / (1.0 + tau_f * lam)
    v = tau_f * gamma
    afr = a_f ** ratio
    sum_af = np.sum(a_f ** np.arange(1, ratio + 1))
    sum_af2 = np.sum(a_f ** (2 * np.arange(1, ratio + 1)))
    P = F = X = float(u0) ** 2
    out = np.empty(n_coarse + 1)
    out[0] = 0.0
    for k in range(1, n_coarse + 1):
        P = a_c ** 2 * P + a_c ** 2 * ratio * v
        F = afr ** 2 * F + v * sum_af2
        X = a_c * afr * X + a_c * v * sum_af
        out[k] = max(P + F - 2.0 * X, 0.0)
    return out
