"""P1 finite elements on the uniform Dirichlet mesh of [0,1].

Interior nodal coefficients only; the boundary zeros are structural.
Mass and stiffness matrices are symmetric tridiagonal, so every linear
solve here is O(N): a plain Thomas sweep for one right-hand side, a
cached banded Cholesky factor of (M + tau*K) for ensembles, and one
block-concatenated LAPACK ``dgtsv`` call for the per-trial Newton
systems of the fully implicit scheme.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cholesky_banded, cho_solve_banded, get_lapack_funcs

_dgtsv = get_lapack_funcs("gtsv")


@dataclass(frozen=True)
class TridiagonalMatrix:
    """Symmetric tridiagonal matrix stored as its three diagonals."""

    lower: np.ndarray  # length n-1
    diag: np.ndarray   # length n
    upper: np.ndarray  # length n-1

    @property
    def n(self):
        return len(self.diag)

    def matvec(self, v):
        v = np.asarray(v)
        out = self.diag * v
        out[..., :-1] += self.upper * v[..., 1:]
        out[..., 1:] += self.lower * v[..., :-1]
        return out

    def quadratic(self, v):
        """v' A v along the last axis."""
        v = np.asarray(v)
        q = np.sum(self.diag * v * v, axis=-1)
        q += np.sum((self.lower + self.upper) * v[..., 1:] * v[..., :-1], axis=-1)
        return q

    def shifted(self, tau, other):
        """self + tau * other."""
        return TridiagonalMatrix(self.lower + tau * other.lower,
                                 self.diag + tau * other.diag,
                                 self.upper + tau * other.upper)

    def banded_upper(self):
        ab = np.zeros((2, self.n))
        ab[0, 1:] = self.upper
        ab[1, :] = self.diag
        return ab


def thomas_solve(tri, rhs):
    """Solve tri * x = rhs by the Thomas algorithm (no pivoting).

    Raises ArithmeticError on a nonpositive pivot, which cannot happen
    for the SPD matrices assembled here.
    """
    a, b, c = tri.lower, tri.diag, tri.upper
    n = tri.n
    d = np.asarray(rhs, dtype=np.float64).copy()
    cp = np.empty(n - 1) if n > 1 else np.empty(0)
    piv = b[0]
    if not piv > 0:
        raise ArithmeticError("nonpositive pivot in Thomas solve")
    pivots = np.empty(n)
    pivots[0] = piv
    for i in range(1, n):
        cp[i - 1] = c[i - 1] / pivots[i - 1]
        pivots[i] = b[i] - a[i - 1] * cp[i - 1]
        if not pivots[i] > 0:
            raise ArithmeticError("nonpositive pivot in Thomas solve")
        d[i] -= a[i - 1] / pivots[i - 1] * d[i - 1]
    x = d / pivots
    for i in range(n - 2, -1, -1):
        x[i] -= cp[i] * x[i + 1]
    return x


def thomas_pivots(tri):
    """Elimination pivots; all positive iff the matrix is SPD."""
    piv = np.empty(tri.n)
    piv[0] = tri.diag[0]
    for i in range(1, tri.n):
        piv[i] = tri.diag[i] - tri.lower[i - 1] * tri.upper[i - 1] / piv[i - 1]
    return piv


def batch_tridiag_solve(sub, diag, sup, rhs):
    """Solve T independent tridiagonal systems in one LAPACK call.

    sub/sup have shape (T, n-1), diag and rhs (T, n).  The systems are
    concatenated into one big tridiagonal matrix with zero coupling
    between blocks.
    """
    T, n = diag.shape
    if n == 1:
        return rhs / diag
    dl = np.zeros((T, n))
    du = np.zeros((T, n))
    dl[:, :-1] = sub
    du[:, :-1] = sup
    big_dl = dl.ravel()[: T * n - 1]
    big_du = du.ravel()[: T * n - 1]
    _, _, _, x, info = _dgtsv(big_dl, diag.ravel(), big_du, rhs.ravel(),
                              overwrite_dl=True, overwrite_d=True,
                              overwrite_du=True, overwrite_b=True)
    if info != 0:
        raise ArithmeticError(f"dgtsv failed with info={info}")
    return x.reshape(T, n)


class FemSpace:
    """Uniform P1 mesh with N cells on [0,1], Dirichlet boundary."""

    dtype = np.float64

    def __init__(self, N):
        if N < 2:
            raise ValueError("FEM mesh needs N >= 2")
        self.N = int(N)
        self.h = 1.0 / N
        self.nodes = np.arange(1, N) * self.h
        self.dof = N - 1
        self.mass = assemble_mass(self)
        self.stiffness = assemble_stiffness(self)
        self._factors = {}
        self._chol_K = None

    def __repr__(self):
        return f"FemSpace(N={self.N})"

    def __getstate__(self):
        return {"N": self.N}

    def __setstate__(self, state):
        self.__init__(state["N"])

    # -- norms ------------------------------------------------------------
    def l2_sq(self, v):
        return self.mass.quadratic(v)

    def grad_sq(self, v):
        return self.stiffness.quadratic(v)

    def inf_norm(self, v):
        return np.max(np.abs(v), axis=-1)

    def constant_state(self, c):
        return np.full(self.dof, float(c))

    # -- solves -----------------------------------------------------------
    def shifted_factor(self, tau):
        """Banded Cholesky of (M + tau*K), cached per tau."""
        cb = self._factors.get(tau)
        if cb is None:
            cb = cholesky_banded(self.mass.shifted(tau, self.stiffness).banded_upper())
            self._factors[tau] = cb
        return cb

    def solve_shifted_batch(self, tau, rhs):
        """(M + tau*K) x = rhs for rhs of shape (..., n)."""
        cb = self.shifted_factor(tau)
        rhs = np.asarray(rhs)
        if rhs.ndim == 1:
            return cho_solve_banded((cb, False), rhs)
        return cho_solve_banded((cb, False), rhs.T).T

    def stiffness_chol_upper(self):
        """Upper bidiagonal U with K = U'U, used by the stiffness-factor noise route."""
        if self._chol_K is None:
            self._chol_K = cholesky_banded(self.stiffness.banded_upper())
        return self._chol_K

    def restrict_from(self, fine, values):
        """Nodal restriction from a fine mesh whose N is a multiple of ours."""
        if not isinstance(fine, FemSpace) or fine.N % self.N:
            raise ValueError("fine mesh must refine this one by an integer factor")
        r = fine.N // self.N
        return np.asarray(values)[..., r - 1::r][..., : self.dof]


def assemble_mass(space):
    """P1 mass matrix: diagonal 2h/3, off-diagonals h/6."""
    n, h = space.N - 1, space.h
    return TridiagonalMatrix(np.full(n - 1, h / 6.0), np.full(n, 2.0 * h / 3.0),
                             np.full(n - 1, h / 6.0))


def assemble_stiffness(space):
    """P1 stiffness matrix: diagonal 2/h, off-diagonals -1/h."""
    n, h = space.N - 1, space.h
    return TridiagonalMatrix(np.full(n - 1, -1.0 / h), np.full(n, 2.0 / h),
                             np.full(n - 1, -1.0 / h))


def solve_shifted(space, tau, rhs):
    """Solve (M + tau*K) u = rhs by the Thomas algorithm (tau >= 0)."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    return thomas_solve(space.mass.shifted(tau, space.stiffness), rhs)


def interp_nonlinearity(nl, values):
    """Nodal interpolation I_h f(u): apply f at each interior node."""
    return nl.f(values)


def gradnorm_sq_of_f(space, nl, values, variant):
    """Squared norms of the reaction term used by the global tamings.

    variant='fprime': ||f'(u)||^2 = f'(u)' M f'(u)  (nodal interpolation)
    variant='grad':   ||grad f(u)||^2 = f(u)' K f(u)
    """
    if variant == "fprime":
        g = nl.fprime(values)
        return space.mass.quadratic(g)
    if variant == "grad":
        g = nl.f(values)
        return space.stiffness.quadratic(g)
    raise ValueError(f"unknown variant {variant!r}")


def measured_inverse_constant(space, samples=256, seed=0, polish=30):
    """Calibrate C_inv in ||grad v|| <= C_inv/h ||v|| over random P1 fields.

    The worst random field is polished by a few generalized power
    iterations on (K, M), so the result approaches the exact supremum
    for uniform P1, sqrt(12) ~ 3.464, from below.
    """
    rng = np.random.default_rng(seed)
    v = rng.standard_normal((samples, space.dof))
    ratio = space.stiffness.quadratic(v) / space.mass.quadratic(v)
    best = v[np.argmax(ratio)]
    for _ in range(polish):
        best = thomas_solve(space.mass, space.stiffness.matvec(best))
        best /= np.sqrt(space.mass.quadratic(best))
    top = space.stiffness.quadratic(best) / space.mass.quadratic(best)
    return float(np.sqrt(space.h ** 2 * max(np.max(ratio), top)))


def smallest_eigenvalue(space, iters=200, seed=3):
    """Smallest generalized eigenvalue of (K, M) by inverse power iteration.

    Approximates pi^2 from above; the discrete Poincare constant.
    """
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(space.dof)
    K, M = space.stiffness, space.mass
    for _ in range(iters):
        v = thomas_solve(K, M.matvec(v))
        v /= np.sqrt(M.quadratic(v))
    return float(K.quadratic(v) / M.quadratic(v))
