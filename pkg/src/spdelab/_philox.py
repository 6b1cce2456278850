"""Counter-based Gaussian draws (Philox4x64-10).

Every value returned by ``standard_normals`` is a pure function of
(seed, trial, step, position): the generator state is never advanced,
it is *indexed*.  This is what makes Monte Carlo trials independent of
scheduling and lets refinement studies share Brownian paths exactly
(the first k draws of a step never change when more modes are drawn).

The block function is bit-identical to numpy's ``np.random.Philox``
(same Random123 constants, 10 rounds); the test suite pins that.
"""

import numpy as np
from scipy.special import ndtri

# Random123 philox4x64 multipliers and Weyl constants
_M0 = np.uint64(0xD2E7470EE14C6C93)
_M1 = np.uint64(0xCA5A826395121157)
_W0 = np.uint64(0x9E3779B97F4A7C15)
_W1 = np.uint64(0xBB67AE8584CAA73B)
_MASK32 = np.uint64(0xFFFFFFFF)
_MASK64 = (1 << 64) - 1


def _mulhilo(a, b):
    # full 64x64 -> 128 bit product from 32-bit limbs
    ah = a >> np.uint64(32)
    al = a & _MASK32
    bh = b >> np.uint64(32)
    bl = b & _MASK32
    lo = a * b
    ahbl = ah * bl
    albh = al * bh
    mid = ((al * bl) >> np.uint64(32)) + (ahbl & _MASK32) + (albh & _MASK32)
    hi = ah * bh + (ahbl >> np.uint64(32)) + (albh >> np.uint64(32)) + (mid >> np.uint64(32))
    return hi, lo


def philox4x64(c0, c1, c2, c3, k0, k1):
    """One Philox4x64-10 block per counter entry; returns 4 uint64 arrays."""
    x0, x1, x2, x3 = c0, c1, c2, c3
    k0 = np.asarray(k0, dtype=np.uint64)
    k1 = np.asarray(k1, dtype=np.uint64)
    with np.errstate(over="ignore"):  # uint64 arithmetic is modular by design
        for _ in range(10):
            hi0, lo0 = _mulhilo(_M0, x0)
            hi1, lo1 = _mulhilo(_M1, x2)
            x0, x1, x2, x3 = hi1 ^ x1 ^ k0, lo1, hi0 ^ x3 ^ k1, lo0
            k0 = k0 + _W0
            k1 = k1 + _W1
    return x0, x1, x2, x3


def _uniforms(words):
    # open interval (0, 1): keeps ndtri finite
    return ((words >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0 ** -53


def raw_block(seed, trial, step, block):
    """The four uint64 words of one (seed, trial, step, block) cell."""
    out = philox4x64(
        np.asarray([block], dtype=np.uint64),
        np.asarray([step], dtype=np.uint64),
        np.asarray([trial], dtype=np.uint64),
        np.zeros(1, dtype=np.uint64),
        np.uint64(seed & _MASK64),
        np.uint64((seed >> 64) & _MASK64),
    )
    return np.stack(out, axis=-1)[0]


def standard_normals(seed, trials, step, count):
    """N(0,1) draws for each listed trial at one time step.

    Parameters
    ----------
    seed : int (any size; low 128 bits used)
    trials : 1d int array of trial indices
    step : int, time-step index
    count : draws per trial

    Returns array of shape (len(trials), count).  Entry [t, j] depends
    only on (seed, trials[t], step, j).
    """
    trials = np.asarray(trials, dtype=np.uint64)
    nblocks = (count + 3) // 4
    blocks = np.arange(nblocks, dtype=np.uint64)
    c0 = np.broadcast_to(blocks, (len(trials), nblocks))
    c2 = np.broadcast_to(trials[:, None], (len(trials), nblocks))
    c1 = np.full((len(trials), nblocks), np.uint64(step), dtype=np.uint64)
    c3 = np.zeros((len(trials), nblocks), dtype=np.uint64)
    words = philox4x64(np.ascontiguousarray(c0), c1, np.ascontiguousarray(c2), c3,
                       np.uint64(seed & _MASK64), np.uint64((seed >> 64) & _MASK64))
    flat = np.stack(words, axis=-1).reshape(len(trials), 4 * nblocks)
    return ndtri(_uniforms(flat[:, :count]))
