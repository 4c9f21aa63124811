"""Generalized Bloch vectors for distributions over n classical bits.

Conventions
-----------
Bit strings are enumerated big-endian with +1 before -1, so index 0 is
``(+1, ..., +1)`` and the last index is ``(-1, ..., -1)``.

Frame vector components are the nontrivial monomials of the bits divided
by sqrt(2^n - 1). For n != 3 the monomials are ordered by degree, then
lexicographically by bit position. For n == 3 with bits ``(alpha, a, a')``
the qubit-meter ordering ``(a, a', aa', alpha a, alpha a', alpha aa', alpha)``
is used instead, so that the qubit, correlation and meter blocks are
contiguous. ``ORDERING_TAG`` names this convention in serialized output.
"""

import itertools
from functools import lru_cache

import numpy as np

MAX_BITS = 12
ENTRY_TOL = 1e-12
ORDERING_TAG = "deglex-v1+meter3"

# bit positions for n == 3: 0 = alpha, 1 = a, 2 = a'
_METER_ORDER = ((1,), (2,), (1, 2), (0, 1), (0, 2), (0, 1, 2), (0,))


def _check_bits(n_bits):
    if not isinstance(n_bits, (int, np.integer)) or not 1 <= n_bits <= MAX_BITS:
        raise ValueError(f"n_bits must be an integer in [1, {MAX_BITS}], got {n_bits!r}")
    return int(n_bits)


@lru_cache(maxsize=None)
def monomials(n_bits):
    """Bit-position tuples for each frame component, in component order."""
    n_bits = _check_bits(n_bits)
    if n_bits == 3:
        return _METER_ORDER
    return tuple(
        combo
        for degree in range(1, n_bits + 1)
        for combo in itertools.combinations(range(n_bits), degree)
    )


@lru_cache(maxsize=None)
def bit_table(n_bits):
    """(2^n, n) array of +-1 values, row i is the i-th bit string."""
    n_bits = _check_bits(n_bits)
    idx = np.arange(2**n_bits)[:, None]
    shifts = np.arange(n_bits - 1, -1, -1)[None, :]
    table = 1 - 2 * ((idx >> shifts) & 1)
    table.setflags(write=False)
    return table


def index_of(bits):
    """Position of a +-1 bit tuple in the big-endian enumeration."""
    out = 0
    for b in bits:
        if b not in (1, -1):
            raise ValueError(f"bits must be +1 or -1, got {bits!r}")
        out = 2 * out + (b == -1)
    return out


@lru_cache(maxsize=None)
def frame_matrix(n_bits):
    """(2^n, 2^n - 1) array whose rows are the frame vectors n_x."""
    table = bit_table(n_bits)
    cols = [np.prod(table[:, list(mono)], axis=1) for mono in monomials(n_bits)]
    frame = np.column_stack(cols) / np.sqrt(2**n_bits - 1)
    frame.setflags(write=False)
    return frame


def frame_vector(n_bits, index):
    """Frame vector for one bit string; `index` is a tuple of +-1 values."""
    n_bits = _check_bits(n_bits)
    if len(index) != n_bits:
        raise ValueError(f"index {index!r} does not have {n_bits} bits")
    return frame_matrix(n_bits)[index_of(index)].copy()


def n_bits_of(length, offset):
    n_bits = int(round(np.log2(length + offset)))
    if 2**n_bits != length + offset:
        raise ValueError(f"length {length} does not match any bit count")
    return _check_bits(n_bits)


def gbv_from_dist(p):
    """w = (2^n - 1)/2^n * sum_x (2^n p(x) - 1) n_x."""
    p = np.asarray(p, dtype=float)
    n_bits = n_bits_of(p.shape[-1], 0)
    dim = 2**n_bits
    return (dim - 1) / dim * (dim * p - 1) @ frame_matrix(n_bits)


def dist_from_gbv(w):
    """p(x) = 2^-n (1 + w.n_x). Negative entries are returned as they are.

    Use :func:`is_quasi` to test whether the result is a proper distribution.
    """
    w = np.asarray(w, dtype=float)
    n_bits = n_bits_of(w.shape[-1], 1)
    return (1 + w @ frame_matrix(n_bits).T) / 2**n_bits


def is_quasi(p, tol=ENTRY_TOL):
    """True when some entry is below -tol, i.e. `p` is only a quasi-distribution."""
    return bool(np.min(p) < -tol)


def affine_from_process(t):
    """Affine action w' = A w + t_vec induced by a column-normalised process.

    Builds c(b) = 2^-n sum_a T(b|a) and M_b = 2^-n sum_a T(b|a) n_a, then
    inverts w'.n_b = 2^n (c(b) + M_b.w) - 1 with the frame identity.
    """
    t = np.asarray(t, dtype=float)
    if t.ndim != 2 or t.shape[0] != t.shape[1]:
        raise ValueError(f"process must be a square matrix, got shape {t.shape}")
    n_bits = n_bits_of(t.shape[0], 0)
    if not np.allclose(t.sum(axis=0), 1, atol=ENTRY_TOL, rtol=0):
        raise ValueError("process columns do not sum to one")
    dim = 2**n_bits
    frame = frame_matrix(n_bits)
    c = t.sum(axis=1) / dim
    m = t @ frame / dim
    shift = (dim - 1) / dim * (dim * c - 1) @ frame
    a = (dim - 1) * frame.T @ m
    return a, shift


def collision_entropy(w):
    """Renyi-2 entropy in bits, -log2(2^-n (1 + |w|^2 / (2^n - 1)))."""
    w = np.asarray(w, dtype=float)
    n_bits = n_bits_of(w.shape[-1], 1)
    dim = 2**n_bits
    return -np.log2((1 + np.sum(w * w, axis=-1) / (dim - 1)) / dim)


def collision_entropy_of_dist(p):
    """Direct definition -log2 sum p^2, for cross-checks."""
    p = np.asarray(p, dtype=float)
    return -np.log2(np.sum(p * p, axis=-1))
