"""The seven time-stepping schemes.

Each scheme advances u^k to u^{k+1} by an implicit linear solve of
(I - tau*Lap) applied to (u^k + tau*drift(u^k) + dW), where the drift
is f itself (SIE), f evaluated at the new state (FIE, via Newton), or
one of five tamed modifications of f.  Steppers are pure functions of
(state, increment) and are vectorized over a leading trials axis.
"""

from dataclasses import dataclass, replace

import numpy as np

from .core import Field
from .fem import FemSpace, batch_tridiag_solve
from .spectral import SpectralSpace, apply_nonlinearity_dealiased

SCHEME_NAMES = ("sie", "fie", "gyongy", "tame-pointwise", "tame-global",
                "gtem", "tame-gradient")

DEFAULT_BLOWUP_THRESHOLD = 1.0e12


class NewtonDivergenceError(RuntimeError):
    """The implicit solve failed to converge within its iteration budget."""


@dataclass(frozen=True)
class SchemeKind:
    """Scheme selector plus the parameters some schemes carry."""

    name: str
    newton_tol: float = 1.0e-10
    newton_max_iter: int = 50
    alpha: float = None  # tame-gradient strength; problem default when None

    def __post_init__(self):
        if self.name not in SCHEME_NAMES:
            raise ValueError(f"unknown scheme {self.name!r}; pick one of {SCHEME_NAMES}")
        if self.newton_tol <= 0 or self.newton_max_iter < 1:
            raise ValueError("newton parameters out of range")


def tamed_drift(nl, kind_name, tau, u, alpha=1.0, norm_fprime=None, gradnorm_sq=None):
    """Pointwise drift value of each scheme at state u.

    For the two global schemes the caller supplies the step-constant
    scalars ||f'(u)|| / ||grad f(u)||^2.
    """
    fu = nl.f(u)
    if kind_name in ("sie", "fie"):
        return fu
    if kind_name == "tame-pointwise":
        return fu / (1.0 + tau * np.abs(nl.fprime(u)))
    if kind_name == "gtem":
        return fu / np.sqrt(1.0 + tau * nl.fprime(u) ** 2)
    if kind_name == "gyongy":
        return fu / (1.0 + tau * np.abs(fu))
    if kind_name == "tame-global":
        return fu / (1.0 + tau * norm_fprime)
    if kind_name == "tame-gradient":
        return fu / (1.0 + alpha * tau * gradnorm_sq)
    raise ValueError(f"unknown scheme {kind_name!r}")


# ---------------------------------------------------------------------------
# FEM steppers


class _FemStepper:
    def __init__(self, space, nl, kind, tau, alpha):
        self.space = space
        self.nl = nl
        self.kind = kind
        self.tau = tau
        self.alpha = alpha
        space.shifted_factor(tau)  # build the (M + tau*K) factor up front
        self.shifted = space.mass.shifted(tau, space.stiffness)

    def _drift(self, U):
        nl, tau = self.nl, self.tau
        name = self.kind.name
        if name == "tame-global":
            s = np.sqrt(self.space.mass.quadratic(nl.fprime(U)))
            return nl.f(U) / (1.0 + tau * s)[..., None]
        if name == "tame-gradient":
            w = self.space.stiffness.quadratic(nl.f(U))
            return nl.f(U) / (1.0 + self.alpha * tau * w)[..., None]
        return tamed_drift(nl, name, tau, U)

    def step_batch(self, U, dW):
        tau, space = self.tau, self.space
        if self.kind.name == "fie":
            return self._newton(U, space.mass.matvec(U + dW))
        Y = U + tau * self._drift(U) + dW
        return space.solve_shifted_batch(tau, space.mass.matvec(Y)), None

    def residual(self, V, rhs):
        """Weak-form residual (M+tau*K)v - tau*M f(v) - rhs of the FIE system."""
        return self.shifted.matvec(V) - self.tau * self.space.mass.matvec(self.nl.f(V)) - rhs

    def _newton(self, U, rhs):
        tau, M = self.tau, self.space.mass
        kind = self.kind
        V = U.astype(np.float64, copy=True)
        R = self.residual(V, rhs)
        rnorm = np.max(np.abs(R), axis=-1)
        active = rnorm > kind.newton_tol
        for _ in range(kind.newton_max_iter):
            if not np.any(active):
                break
            idx = np.nonzero(active)[0]
            v, r = V[idx], R[idx]
            g = self.nl.fprime(v)
            jd = self.shifted.diag - tau * (M.diag * g)
            jl = self.shifted.lower - tau * (M.lower * g[:, :-1])
            ju = self.shifted.upper - tau * (M.upper * g[:, 1:])
            delta = batch_tridiag_solve(jl, jd, ju, -r)
            # halve the step (up to 5 times) for trials whose residual grew
            s = np.ones(len(idx))
            vn = v + delta
            rn = self.residual(vn, rhs[idx])
            for _ in range(5):
                worse = np.max(np.abs(rn), axis=-1) > np.max(np.abs(r), axis=-1)
                if not np.any(worse):
                    break
                s[worse] *= 0.5
                vn[worse] = v[worse] + s[worse, None] * delta[worse]
                rn[worse] = self.residual(vn[worse], rhs[idx][worse])
            V[idx], R[idx] = vn, rn
            rnorm = np.max(np.abs(R), axis=-1)
            active = ~np.isfinite(rnorm) | (rnorm > kind.newton_tol)
        failed = active if np.any(active) else None
        return V, failed


# ---------------------------------------------------------------------------
# spectral steppers


class _SpectralStepper:
    def __init__(self, space, nl, kind, tau, alpha):
        self.space = space
        self.nl = nl
        self.kind = kind
        self.tau = tau
        self.alpha = alpha
        self.symbol = 1.0 + tau * space.jsq

    def _drift_hat(self, U):
        nl, tau, space = self.nl, self.tau, self.space
        name = self.kind.name
        if name in ("tame-pointwise", "gtem", "gyongy"):
            return space.from_fine_grid(
                tamed_drift(nl, name, tau, space.to_fine_grid(U)))
        fhat = apply_nonlinearity_dealiased(space, nl, U)
        if name in ("sie", "fie"):
            return fhat
        if name == "tame-global":
            s = np.sqrt(space.quadrature_l2_sq(nl.fprime(space.inverse(U))))
            return fhat / (1.0 + tau * s)[..., None]
        if name == "tame-gradient":
            w = space.grad_sq(fhat)
            return fhat / (1.0 + self.alpha * tau * w)[..., None]
        raise ValueError(name)

    def step_batch(self, U, dW):
        if self.kind.name == "fie":
            return self._newton(U, U + dW)
        Y = U + self.tau * self._drift_hat(U) + dW
        return self.space.solve_implicit(Y, self.tau), None

    def residual(self, V, rhs):
        """(1 + tau*j^2) v_j - tau*F[f(v)]_j - rhs_j."""
        return (self.symbol * V
                - self.tau * apply_nonlinearity_dealiased(self.space, self.nl, V) - rhs)

    def _jacobian_cg(self, gfine, R, kind_tol):
        """Solve (diag symbol - tau*P g P*) delta = -R by preconditioned CG.

        The operator is Hermitian, and positive definite whenever
        tau*max(f') < 1, which holds for every dissipative nonlinearity
        here; the diagonal preconditioner keeps iteration counts low
        once the transient has passed.
        """
        space, tau = self.space, self.tau

        def apply(d):
            return self.symbol * d - tau * space.from_fine_grid(gfine * space.to_fine_grid(d))

        x = np.zeros_like(R)
        r = -R
        z = r / self.symbol
        p = z.copy()
        rz = np.sum((np.conj(r) * z).real, axis=-1)
        # inexact Newton: a loose inner solve still gives fast outer decay
        tol = np.maximum(1e-8 * np.sum(np.abs(R) ** 2, axis=-1),
                         (0.01 * kind_tol) ** 2)
        for _ in range(200):
            Ap = apply(p)
            pAp = np.sum((np.conj(p) * Ap).real, axis=-1)
            alpha = rz / np.where(pAp == 0, 1.0, pAp)
            x += alpha[..., None] * p
            r -= alpha[..., None] * Ap
            if np.all(np.sum(np.abs(r) ** 2, axis=-1) <= tol):
                break
            z = r / self.symbol
            rz_new = np.sum((np.conj(r) * z).real, axis=-1)
            beta = rz_new / np.where(rz == 0, 1.0, rz)
            p = z + beta[..., None] * p
            rz = rz_new
        return x

    def _newton(self, U, rhs):
        kind, space = self.kind, self.space
        V = U.astype(np.complex128, copy=True)
        R = self.residual(V, rhs)
        rnorm = np.max(np.abs(R), axis=-1)
        active = rnorm > kind.newton_tol
        for _ in range(kind.newton_max_iter):
            if not np.any(active):
                break
            idx = np.nonzero(active)[0]
            v, r = V[idx], R[idx]
            gfine = self.nl.fprime(space.to_fine_grid(v))
            delta = self._jacobian_cg(gfine, r, kind.newton_tol)
            s = np.ones(len(idx))
            vn = v + delta
            rn = self.residual(vn, rhs[idx])
            for _ in range(5):
                worse = np.max(np.abs(rn), axis=-1) > np.max(np.abs(r), axis=-1)
                if not np.any(worse):
                    break
                s[worse] *= 0.5
                vn[worse] = v[worse] + s[worse, None] * delta[worse]
                rn[worse] = self.residual(vn[worse], rhs[idx][worse])
            V[idx], R[idx] = vn, rn
            rnorm = np.max(np.abs(R), axis=-1)
            active = ~np.isfinite(rnorm) | (rnorm > kind.newton_tol)
        failed = active if np.any(active) else None
        return V, failed


def make_stepper(problem, kind, tau):
    """Build the batched step kernel for one (problem, scheme, tau)."""
    if isinstance(kind, str):
        kind = SchemeKind(kind)
    alpha = kind.alpha if kind.alpha is not None else problem.taming_alpha
    cls = _FemStepper if isinstance(problem.space, FemSpace) else _SpectralStepper
    return cls(problem.space, problem.nonlinearity, kind, tau, alpha)


# ---------------------------------------------------------------------------
# single-trial scheme states


@dataclass(frozen=True)
class SchemeState:
    """Per-trial stepping state; alive=False is absorbing."""

    field: Field
    step_index: int
    tau: float
    stepper: object
    alive: bool = True
    blowup_threshold: float = DEFAULT_BLOWUP_THRESHOLD


def make_state(problem, kind, tau, values=None,
               blowup_threshold=DEFAULT_BLOWUP_THRESHOLD):
    vals = problem.initial_state() if values is None else np.asarray(values)
    return SchemeState(Field(problem.space, vals), 0, tau,
                       make_stepper(problem, kind, tau),
                       blowup_threshold=blowup_threshold)


def step(state, dw):
    """Advance one step; marks the state dead on blowup detection."""
    if not state.alive:
        return state
    U = state.field.values[None, ...]
    new, failed = state.stepper.step_batch(U, np.asarray(dw)[None, ...])
    if failed is not None and failed[0]:
        raise NewtonDivergenceError(
            f"Newton failed within {state.stepper.kind.newton_max_iter} iterations")
    vals = new[0]
    sq = state.field.space.l2_sq(vals)
    alive = bool(np.isfinite(sq) and sq <= state.blowup_threshold)
    return replace(state, field=Field(state.field.space, vals),
                   step_index=state.step_index + 1, alive=alive)


def _named(kind_name):
    def op(state, dw):
        if state.stepper.kind.name != kind_name:
            raise ValueError(f"state was built for {state.stepper.kind.name!r}")
        return step(state, dw)
    op.__name__ = "step_" + kind_name.replace("-", "_")
    return op


step_sie = _named("sie")
step_fie = _named("fie")
step_truncated_pointwise = _named("tame-pointwise")
step_truncated_global = _named("tame-global")
step_gtem = _named("gtem")
step_gradient_global = _named("tame-gradient")
step_gyongy = _named("gyongy")
