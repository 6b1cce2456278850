"""Shared domain types: nonlinearities, fields, problems, norms.

Everything here is an immutable value after construction and safe to
share across worker processes.
"""

import warnings
from dataclasses import dataclass, field as dc_field

import numpy as np


class BasisMismatchError(ValueError):
    """Field and space (or two fields) live in different bases."""


class RegularityWarning(UserWarning):
    """Configuration is outside the comfortable parameter regime."""


# ---------------------------------------------------------------------------
# nonlinearities


@dataclass(frozen=True)
class Nonlinearity:
    """Reaction term f(u) with pointwise evaluation of f and f'.

    kind: 'cubic', 'allen-cahn', 'power', or 'poly'.
    coeffs: ascending polynomial coefficients (empty for 'power').
    degree: growth degree p (for 'power' with exponent q this is q-1).
    leading: coefficient multiplying the top-degree term.
    """

    kind: str
    coeffs: tuple = ()
    degree: int = 2
    leading: float = 0.0
    power_q: float = 0.0

    def f(self, u):
        u = np.asarray(u, dtype=np.float64)
        if self.kind == "power":
            return -u * np.abs(u) ** (self.power_q - 2.0)
        return _horner(self.coeffs, u)

    def fprime(self, u):
        u = np.asarray(u, dtype=np.float64)
        if self.kind == "power":
            return -(self.power_q - 1.0) * np.abs(u) ** (self.power_q - 2.0)
        dcoeffs = tuple(k * c for k, c in enumerate(self.coeffs) if k > 0)
        return _horner(dcoeffs, u)

    @property
    def default_alpha(self):
        # taming strength p*|a_p|; 1.0 for (sub)linear f where no taming acts
        a = self.degree * abs(self.leading)
        return a if a > 0 else 1.0


def _horner(coeffs, u):
    acc = np.zeros_like(u)
    for c in reversed(coeffs):
        acc = acc * u + c
    return acc


def cubic():
    """f(u) = -u^3."""
    return Nonlinearity("cubic", coeffs=(0.0, 0.0, 0.0, -1.0), degree=3, leading=-1.0)


def allen_cahn(b2=1.0, b3=1.0):
    """f(u) = b2*u - b3*u^3 (b3 > 0)."""
    if b3 <= 0:
        raise ValueError("allen_cahn needs b3 > 0")
    if b2 >= 1.0:
        warnings.warn("allen-cahn with b2 >= 1 is outside the dissipative regime "
                      "covered by the error bounds; running anyway", RegularityWarning)
    return Nonlinearity("allen-cahn", coeffs=(0.0, b2, 0.0, -b3), degree=3, leading=-b3)


def power_law(q):
    """f(u) = -u|u|^(q-2), q >= 2."""
    if q < 2:
        raise ValueError("power_law needs q >= 2")
    return Nonlinearity("power", degree=max(int(round(q - 1)), 2), leading=-1.0, power_q=float(q))


def polynomial(coeffs):
    """f(u) = sum coeffs[k] * u^k."""
    coeffs = tuple(float(c) for c in coeffs)
    deg = max((k for k, c in enumerate(coeffs) if c != 0.0), default=0)
    lead = coeffs[deg] if coeffs else 0.0
    return Nonlinearity("poly", coeffs=coeffs, degree=deg, leading=lead)


def zero_nonlinearity():
    """f = 0 (linear heat equation); useful as an exactly solvable case."""
    return Nonlinearity("poly", coeffs=(), degree=0, leading=0.0)


def eval_f(nl, u):
    """f(u), scalar or elementwise."""
    return nl.f(u)


def eval_fprime(nl, u):
    """f'(u), scalar or elementwise."""
    return nl.fprime(u)


# ---------------------------------------------------------------------------
# fields


@dataclass(frozen=True)
class Field:
    """Spatial state in one discretization's coefficient basis.

    FEM: interior nodal values, length N-1 (boundary zeros are implied).
    Spectral: N complex Fourier coefficients, conjugate symmetric,
    Nyquist mode zero.
    """

    space: object
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values)
        if vals.shape[-1] != self.space.dof:
            raise BasisMismatchError(
                f"field length {vals.shape[-1]} != {self.space.dof} for {self.space}")
        object.__setattr__(self, "values", vals)


def _check_space(fld, space):
    if space is not None and space is not fld.space:
        if type(space) is not type(fld.space) or space.N != fld.space.N:
            raise BasisMismatchError(f"field on {fld.space}, norm requested on {space}")


def norm_l2(fld, space=None):
    """L2 norm: sqrt(u'Mu) on FEM, sqrt(2*pi*sum|u_j|^2) on Fourier modes."""
    _check_space(fld, space)
    return float(np.sqrt(fld.space.l2_sq(fld.values)))


def norm_h1(fld, space=None):
    """Full H1 norm sqrt(||u||^2 + ||grad u||^2)."""
    _check_space(fld, space)
    return float(np.sqrt(fld.space.l2_sq(fld.values) + fld.space.grad_sq(fld.values)))


def norm_inf(fld, space=None):
    """Max nodal value (FEM) / max collocation value (spectral)."""
    _check_space(fld, space)
    return float(fld.space.inf_norm(fld.values))


# ---------------------------------------------------------------------------
# initial data


@dataclass(frozen=True)
class Constant:
    value: float

    def realize(self, space):
        return np.asarray(space.constant_state(self.value))


@dataclass(frozen=True)
class SineDirichlet:
    """amplitude * sin(frequency * pi * x) on [0,1]; FEM only."""

    amplitude: float
    frequency: int

    def realize(self, space):
        if not hasattr(space, "nodes"):
            raise BasisMismatchError("SineDirichlet needs a Dirichlet FEM space")
        return self.amplitude * np.sin(self.frequency * np.pi * space.nodes)


@dataclass(frozen=True)
class SinePeriodic:
    """amplitude * sin(frequency * x) on [0,2pi]; spectral only."""

    amplitude: float
    frequency: int

    def realize(self, space):
        if not hasattr(space, "points"):
            raise BasisMismatchError("SinePeriodic needs a periodic spectral space")
        return space.forward(self.amplitude * np.sin(self.frequency * space.points))


@dataclass(frozen=True)
class Custom:
    values: tuple

    def realize(self, space):
        vals = np.asarray(self.values)
        if vals.shape[-1] != space.dof:
            raise BasisMismatchError("custom initial datum has wrong length")
        return vals.astype(space.dtype)


# ---------------------------------------------------------------------------
# problem


@dataclass(frozen=True)
class Problem:
    """One SPDE instance: du = (Lap u + f(u)) dt + noise_scale dW."""

    nonlinearity: Nonlinearity
    covariance: object
    space: object
    initial_datum: object = dc_field(default_factory=lambda: Constant(0.0))
    taming_alpha: float = None
    noise_scale: float = 1.0
    fem_noise_route: str = "eigen"  # or "cholesky" (stiffness-factorization route)

    def __post_init__(self):
        if self.taming_alpha is None:
            object.__setattr__(self, "taming_alpha", self.nonlinearity.default_alpha)
        if self.taming_alpha <= 0:
            raise ValueError("taming_alpha must be positive")
        if self.fem_noise_route not in ("eigen", "cholesky"):
            raise ValueError(f"unknown fem noise route {self.fem_noise_route!r}")
        # touch the initial datum so basis mismatches fail at build time
        self.initial_datum.realize(self.space)

    def initial_state(self):
        return self.initial_datum.realize(self.space)
