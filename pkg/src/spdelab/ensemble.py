"""Monte Carlo drivers.

Trials are vectorized inside fixed blocks of 256 and blocks are
independent work units; partial sums are combined in block order, so
the reduced statistics are bit-identical for any worker count.  A trial
that blows up (or whose Newton solve diverges) is dropped from later
statistics but stays in ``alive_count`` bookkeeping; blowup is data
here, not an error.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .noise import QWienerSampler, check_h1_regularity
from .schemes import SchemeKind, make_stepper, DEFAULT_BLOWUP_THRESHOLD

BLOCK = 256  # fixed trial block size; part of the reduction contract


@dataclass(frozen=True)
class RunConfig:
    problem: object
    scheme: object  # SchemeKind or name
    tau: float
    T: float
    trials: int
    record_stride: int = None
    seed: int = 0
    blowup_threshold: float = DEFAULT_BLOWUP_THRESHOLD
    n_workers: int = 1

    def __post_init__(self):
        if isinstance(self.scheme, str):
            object.__setattr__(self, "scheme", SchemeKind(self.scheme))
        n = self.T / self.tau
        if self.trials < 1 or abs(n - round(n)) > 1e-9 * max(1.0, n):
            raise ValueError("need trials >= 1 and T an integer number of steps")

    @property
    def n_steps(self):
        return int(round(self.T / self.tau))

    @property
    def stride(self):
        if self.record_stride is not None:
            return int(self.record_stride)
        if self.T <= 10:
            return 1
        return max(1, math.ceil(self.n_steps / 2000))

    def record_steps(self):
        steps = list(range(0, self.n_steps + 1, self.stride))
        if steps[-1] != self.n_steps:
            steps.append(self.n_steps)
        return steps


@dataclass(frozen=True)
class EnsembleRecord:
    """Cross-trial statistics at one record time (alive trials only)."""

    t: float
    mean_norm: float
    std_norm: float
    mean_sq_norm: float
    mean_h1_sq: float
    mean_inf: float
    alive_count: int
    std_sq_norm: float = float("nan")  # kept for growth checks; not in the CSV


@dataclass(frozen=True)
class EnsembleResult:
    records: tuple
    newton_failures: int
    config: RunConfig = None

    def times(self):
        return np.array([r.t for r in self.records])

    def column(self, name):
        return np.array([getattr(r, name) for r in self.records])


def _block_ranges(trials):
    return [(lo, min(lo + BLOCK, trials)) for lo in range(0, trials, BLOCK)]


def _run_block(config, lo, hi):
    problem = config.problem
    space = problem.space
    stepper = make_stepper(problem, config.scheme, config.tau)
    sampler = QWienerSampler(config.seed, problem.covariance, space,
                             route=problem.fem_noise_route, scale=problem.noise_scale)
    trials = np.arange(lo, hi)
    B = len(trials)
    U = np.tile(problem.initial_state(), (B, 1))
    alive = np.ones(B, dtype=bool)
    rec_steps = config.record_steps()
    n_rec = len(rec_steps)
    sums = np.zeros((n_rec, 6))
    counts = np.zeros(n_rec, dtype=np.int64)
    newton_failures = 0
    rec_pos = {s: i for i, s in enumerate(rec_steps)}

    def record(i):
        act = np.nonzero(alive)[0]
        counts[i] = len(act)
        if len(act) == 0:
            return
        sq = space.l2_sq(U[act])
        nrm = np.sqrt(sq)
        h1 = sq + space.grad_sq(U[act])
        sums[i] = (nrm.sum(), np.sum(sq), np.sum(sq * sq), np.sum(h1),
                   np.sum(space.inf_norm(U[act])), 0.0)

    with np.errstate(over="ignore", invalid="ignore", under="ignore"):
        record(0)
        for k in range(1, config.n_steps + 1):
            act = np.nonzero(alive)[0]
            if len(act) == 0:
                break
            dW = sampler.increments(trials[act], k, config.tau)
            Unew, failed = stepper.step_batch(U[act], dW)
            U[act] = Unew
            if failed is not None:
                newton_failures += int(np.sum(failed))
                alive[act[failed]] = False
                act = act[~failed]
            sq = space.l2_sq(U[act])
            dead = ~np.isfinite(sq) | (sq > config.blowup_threshold)
            if np.any(dead):
                alive[act[dead]] = False
            if k in rec_pos:
                record(rec_pos[k])
    return sums, counts, newton_failures


def _reduce(config, partials):
    rec_steps = config.record_steps()
    sums = np.zeros((len(rec_steps), 6))
    counts = np.zeros(len(rec_steps), dtype=np.int64)
    failures = 0
    for s, c, f in partials:  # fixed block order
        sums += s
        counts += c
        failures += f
    records = []
    for i, step_i in enumerate(rec_steps):
        n = counts[i]
        if n == 0:
            vals = [float("nan")] * 5
            records.append(EnsembleRecord(step_i * config.tau, *vals, 0, float("nan")))
            continue
        s_n, s_sq, s_sq2, s_h1, s_inf, _ = sums[i]
        mean_n = s_n / n
        mean_sq = s_sq / n
        # one-pass variances; clamp the cancellation noise floor so a
        # degenerate (identical-trials) ensemble reports exactly zero
        var_n = max(s_sq / n - mean_n ** 2, 0.0)
        if var_n <= 1e-14 * mean_sq:
            var_n = 0.0
        var_sq = max(s_sq2 / n - mean_sq ** 2, 0.0)
        if var_sq <= 1e-14 * mean_sq ** 2:
            var_sq = 0.0
        records.append(EnsembleRecord(
            t=step_i * config.tau, mean_norm=mean_n, std_norm=math.sqrt(var_n),
            mean_sq_norm=mean_sq, mean_h1_sq=s_h1 / n, mean_inf=s_inf / n,
            alive_count=int(n), std_sq_norm=math.sqrt(var_sq)))
    return EnsembleResult(tuple(records), failures, config)


def run_ensemble(config):
    """Run config.trials independent trials and reduce to records."""
    check_h1_regularity(config.problem.covariance, config.problem.space)
    ranges = _block_ranges(config.trials)
    if config.n_workers <= 1 or len(ranges) == 1:
        partials = [_run_block(config, lo, hi) for lo, hi in ranges]
    else:
        with ProcessPoolExecutor(max_workers=config.n_workers) as pool:
            futures = [pool.submit(_run_block, config, lo, hi) for lo, hi in ranges]
            partials = [f.result() for f in futures]
    return _reduce(config, partials)


# ---------------------------------------------------------------------------
# coupled-path refinement studies


@dataclass(frozen=True)
class CoupledErrorSeries:
    """Per-time strong-error estimates between coupled discretizations."""

    t: np.ndarray
    mean_error: np.ndarray
    se_error: np.ndarray
    alive_count: np.ndarray

    def sup_error(self):
        return float(np.max(self.mean_error[1:])) if len(self.t) > 1 else 0.0


def _compatible_restriction(coarse_space, fine_space):
    if type(coarse_space) is not type(fine_space):
        raise ValueError("coupled runs need the same discretization family")
    if coarse_space.N == fine_space.N:
        return lambda vals: vals
    return lambda vals: coarse_space.restrict_from(fine_space, vals)


def run_coupled_pair(config_coarse, config_fine, ratio):
    """Advance coarse and fine discretizations on the same Brownian path.

    The fine configuration must use tau_coarse/ratio and the same seed;
    its spatial grid is either identical or a refinement (the coarse
    noise is then the mode truncation of the fine noise).  Returns the
    trial-mean of ||u_coarse - P(u_fine)|| at each coarse record time.
    """
    pc, pf = config_coarse.problem, config_fine.problem
    if config_coarse.seed != config_fine.seed or config_coarse.trials != config_fine.trials:
        raise ValueError("coupled runs must share seed and trial count")
    if abs(config_fine.tau * ratio - config_coarse.tau) > 1e-12 * config_coarse.tau:
        raise ValueError("fine tau must be coarse tau / ratio")
    if pc.noise_scale != pf.noise_scale:
        raise ValueError("coupled runs must share the noise scale")
    same_grid = type(pc.space) is type(pf.space) and pc.space.N == pf.space.N
    if not same_grid and pf.fem_noise_route != "eigen":
        raise ValueError("mesh-coupled noise needs the eigenfunction route")
    restrict = _compatible_restriction(pc.space, pf.space)

    stepper_c = make_stepper(pc, config_coarse.scheme, config_coarse.tau)
    stepper_f = make_stepper(pf, config_fine.scheme, config_fine.tau)
    sampler_f = QWienerSampler(config_fine.seed, pf.covariance, pf.space,
                               route=pf.fem_noise_route, scale=pf.noise_scale)
    rec_steps = config_coarse.record_steps()
    rec_pos = {s: i for i, s in enumerate(rec_steps)}
    n_rec = len(rec_steps)
    err_sum = np.zeros(n_rec)
    err_sq_sum = np.zeros(n_rec)
    counts = np.zeros(n_rec, dtype=np.int64)

    for lo, hi in _block_ranges(config_coarse.trials):
        trials = np.arange(lo, hi)
        B = len(trials)
        Uc = np.tile(pc.initial_state(), (B, 1))
        Uf = np.tile(pf.initial_state(), (B, 1))
        alive = np.ones(B, dtype=bool)
        counts[0] += B
        with np.errstate(over="ignore", invalid="ignore", under="ignore"):
            for kc in range(1, config_coarse.n_steps + 1):
                act = np.nonzero(alive)[0]
                if len(act) == 0:
                    break
                acc = None
                for s in range(1, ratio + 1):
                    kf = (kc - 1) * ratio + s
                    if same_grid:
                        piece = sampler_f.increments(trials[act], kf, config_fine.tau)
                        dwf = piece
                    else:
                        piece = sampler_f.mode_coeffs(trials[act], kf, config_fine.tau)
                        dwf = sampler_f.synthesize(pf.space, piece)
                    acc = piece if acc is None else acc + piece
                    Uf[act], failed_f = stepper_f.step_batch(Uf[act], dwf)
                    if failed_f is not None:
                        alive[act[failed_f]] = False
                        act = act[~failed_f]
                        acc = acc[~failed_f]
                        if len(act) == 0:
                            break
                if len(act) == 0:
                    continue
                if same_grid:
                    dwc = acc
                else:
                    dwc = sampler_f.synthesize(pc.space, sampler_f.truncate_coeffs(acc, pc.space))
                Uc[act], failed_c = stepper_c.step_batch(Uc[act], dwc)
                if failed_c is not None:
                    alive[act[failed_c]] = False
                    act = act[~failed_c]
                sq = np.maximum(pc.space.l2_sq(Uc[act]), pf.space.l2_sq(Uf[act]))
                dead = ~np.isfinite(sq) | (sq > config_coarse.blowup_threshold)
                if np.any(dead):
                    alive[act[dead]] = False
                    act = act[~dead]
                if kc in rec_pos and len(act) > 0:
                    i = rec_pos[kc]
                    diff = Uc[act] - restrict(Uf[act])
                    e = np.sqrt(pc.space.l2_sq(diff))
                    err_sum[i] += e.sum()
                    err_sq_sum[i] += np.sum(e * e)
                    counts[i] += len(act)

    mean = np.where(counts > 0, err_sum / np.maximum(counts, 1), np.nan)
    var = np.maximum(err_sq_sum / np.maximum(counts, 1) - mean ** 2, 0.0)
    se = np.where(counts > 0, np.sqrt(var / np.maximum(counts, 1)), np.nan)
    t = np.array(rec_steps) * config_coarse.tau
    return CoupledErrorSeries(t, mean, se, counts)


def run_contractivity_pair(problem, scheme, tau, T, u0_datum, v0_datum,
                           seed=0, trials=1, record_stride=1):
    """Evolve two initial data under the same increments; record E||u - v||."""
    config = RunConfig(problem, scheme, tau, T, trials, record_stride=record_stride,
                       seed=seed)
    space = problem.space
    stepper = make_stepper(problem, config.scheme, tau)
    sampler = QWienerSampler(seed, problem.covariance, space,
                             route=problem.fem_noise_route, scale=problem.noise_scale)
    rec_steps = config.record_steps()
    rec_pos = {s: i for i, s in enumerate(rec_steps)}
    diffs = np.zeros(len(rec_steps))
    for lo, hi in _block_ranges(trials):
        tr = np.arange(lo, hi)
        B = len(tr)
        U = np.tile(np.asarray(u0_datum.realize(space)), (B, 1))
        V = np.tile(np.asarray(v0_datum.realize(space)), (B, 1))
        diffs[0] += np.sum(np.sqrt(space.l2_sq(U - V)))
        for k in range(1, config.n_steps + 1):
            dW = sampler.increments(tr, k, tau)
            U, _ = stepper.step_batch(U, dW)
            V, _ = stepper.step_batch(V, dW)
            if k in rec_pos:
                diffs[rec_pos[k]] += np.sum(np.sqrt(space.l2_sq(U - V)))
    t = np.array(rec_steps) * tau
    return t, diffs / trials
