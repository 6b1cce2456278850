"""Dealiased Fourier pseudo-spectral machinery on [0, 2pi].

Convention: u(x) = sum_j uhat(j) e^{ijx} with j in {-N/2+1,...,N/2-1},
stored in numpy fft layout of length N; a constant c has uhat(0) = c.
The Nyquist mode is held at zero everywhere.  Nonlinearities are
evaluated pointwise on a 2N grid (zero padding), which removes all
aliasing for cubic terms.
"""

import numpy as np


class SpectralSpace:
    """Power-of-two Fourier grid with 2x zero-padding for products."""

    dtype = np.complex128

    def __init__(self, N):
        if N < 4 or N & (N - 1):
            raise ValueError("spectral grid needs N a power of two, N >= 4")
        self.N = int(N)
        self.dof = int(N)
        self.points = 2.0 * np.pi * np.arange(N) / N
        self.modes = np.fft.fftfreq(N, d=1.0 / N).astype(np.int64)  # fft layout
        self.resolved = N // 2 - 1
        self.jsq = (self.modes.astype(np.float64)) ** 2
        # index map into the length-2N padded spectrum (Nyquist dropped)
        keep = np.abs(self.modes) <= self.resolved
        self._keep = keep
        pad_idx = np.where(self.modes >= 0, self.modes, 2 * N + self.modes)
        self._pad_idx = pad_idx[keep]
        self._keep_pos = np.nonzero(keep)[0]

    def __repr__(self):
        return f"SpectralSpace(N={self.N})"

    # -- transforms ---------------------------------------------------------
    def forward(self, values):
        """Collocation values (length N) -> Fourier coefficients."""
        values = np.asarray(values)
        if values.shape[-1] != self.N:
            raise ValueError(f"expected {self.N} collocation values")
        modes = np.fft.fft(values, axis=-1) / self.N
        modes[..., self.N // 2] = 0.0
        return modes

    def inverse(self, modes):
        """Fourier coefficients -> real collocation values."""
        return np.fft.ifft(np.asarray(modes) * self.N, axis=-1).real

    def to_fine_grid(self, modes):
        """Real-space samples on the 2N dealiasing grid."""
        modes = np.asarray(modes)
        padded = np.zeros(modes.shape[:-1] + (2 * self.N,), dtype=np.complex128)
        padded[..., self._pad_idx] = modes[..., self._keep_pos]
        return np.fft.ifft(padded * (2 * self.N), axis=-1).real

    def from_fine_grid(self, values):
        """Transform 2N-grid samples and truncate back to N modes."""
        values = np.asarray(values)
        spec = np.fft.fft(values, axis=-1) / (2 * self.N)
        modes = np.zeros(values.shape[:-1] + (self.N,), dtype=np.complex128)
        modes[..., self._keep_pos] = spec[..., self._pad_idx]
        return modes

    # -- operators ------------------------------------------------------------
    def apply_pointwise_dealiased(self, func, modes):
        """Pointwise func on the padded grid, projected back to N modes."""
        return self.from_fine_grid(func(self.to_fine_grid(modes)))

    def solve_implicit(self, modes, tau):
        """(I - tau*Laplacian)^{-1}: divide mode j by (1 + tau*j^2)."""
        out = np.asarray(modes) / (1.0 + tau * self.jsq)
        out[..., self.N // 2] = 0.0
        return out

    # -- norms ----------------------------------------------------------------
    def l2_sq(self, modes):
        return 2.0 * np.pi * np.sum(np.abs(modes) ** 2, axis=-1)

    def grad_sq(self, modes):
        return 2.0 * np.pi * np.sum(self.jsq * np.abs(modes) ** 2, axis=-1)

    def inf_norm(self, modes):
        return np.max(np.abs(self.inverse(modes)), axis=-1)

    def quadrature_l2_sq(self, values):
        """(2pi/N) * sum of squared collocation values."""
        return (2.0 * np.pi / self.N) * np.sum(np.asarray(values) ** 2, axis=-1)

    def constant_state(self, c):
        modes = np.zeros(self.N, dtype=np.complex128)
        modes[0] = c
        return modes

    # -- refinement -----------------------------------------------------------
    def restrict_from(self, fine, fine_modes):
        """Mode truncation from a finer grid (shared coefficients)."""
        if not isinstance(fine, SpectralSpace) or fine.N < self.N:
            raise ValueError("restriction needs a finer spectral grid")
        fine_modes = np.asarray(fine_modes)
        out = np.zeros(fine_modes.shape[:-1] + (self.N,), dtype=np.complex128)
        for k, j in enumerate(self.modes):
            if abs(j) <= self.resolved:
                out[..., k] = fine_modes[..., int(j) % fine.N]
        return out


def forward(space, values):
    """Module-level alias for SpectralSpace.forward."""
    return space.forward(values)


def apply_nonlinearity_dealiased(space, nl, modes):
    """P_N f(u) with 2x zero-padded pointwise evaluation of f."""
    return space.apply_pointwise_dealiased(nl.f, modes)


def apply_nonlinearity_aliased(space, nl, modes):
    """f(u) evaluated on the N grid without padding (for comparison only)."""
    return space.forward(nl.f(space.inverse(modes)))


def solve_implicit_diag(space, modes, tau):
    """Divide mode j by (1 + tau*j^2)."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    return space.solve_implicit(modes, tau)


def gradnorm_sq_of_f_spectral(space, nl, modes, variant):
    """Quadrature / Parseval values of the taming norms.

    variant='fprime': (2pi/N) sum_i f'(u_i)^2 on the collocation grid
    variant='grad':   2pi sum_j j^2 |F[f(u)](j)|^2 (dealiased transform)
    """
    if variant == "fprime":
        return space.quadrature_l2_sq(nl.fprime(space.inverse(modes)))
    if variant == "grad":
        fhat = apply_nonlinearity_dealiased(space, nl, modes)
        return space.grad_sq(fhat)
    raise ValueError(f"unknown variant {variant!r}")
