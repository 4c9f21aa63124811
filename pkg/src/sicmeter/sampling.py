"""Seeded random inputs shared by the tests and the experiment runner."""

import numpy as np

DEFAULT_SEED = 20251016


def rng(seed=DEFAULT_SEED):
    """64-bit PCG generator; every random experiment goes through this."""
    return np.random.Generator(np.random.PCG64(seed))


def random_bloch(gen, size=None):
    """Uniform in the unit ball, by rejection from the enclosing cube."""
    count = 1 if size is None else size
    out = np.empty((count, 3))
    filled = 0
    while filled < count:
        cand = gen.uniform(-1.0, 1.0, size=(2 * (count - filled) + 8, 3))
        cand = cand[np.einsum("ij,ij->i", cand, cand) <= 1.0]
        take = min(len(cand), count - filled)
        out[filled:filled + take] = cand[:take]
        filled += take
    return out[0] if size is None else out


def random_direction(gen, size=None):
    count = 1 if size is None else size
    v = gen.normal(size=(count, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return v[0] if size is None else v


def random_pure_bloch(gen, size=None):
    return random_direction(gen, size)


def random_unitary(gen):
    """Haar-random SU(2) element from a normalised Gaussian quaternion."""
    q = gen.normal(size=4)
    q /= np.linalg.norm(q)
    w, x, y, z = q
    return np.array(
        [[w - 1j * z, -y - 1j * x], [y - 1j * x, w + 1j * z]], dtype=np.complex128
    )


def random_rotation(gen):
    """Haar-random element of SO(3), built directly from a unit quaternion."""
    q = gen.normal(size=4)
    q /= np.linalg.norm(q)
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def random_pure_state(gen, dim):
    psi = gen.normal(size=dim) + 1j * gen.normal(size=dim)
    return psi / np.linalg.norm(psi)


def random_two_qubit_density(gen, n_mix=3):
    """Convex mixture of `n_mix` Haar pure states with Dirichlet weights."""
    weights = gen.dirichlet(np.ones(n_mix))
    rho = np.zeros((4, 4), dtype=np.complex128)
    for w in weights:
        psi = random_pure_state(gen, 4)
        rho += w * np.outer(psi, psi.conj())
    return rho


def random_distribution(gen, n_outcomes, size=None):
    return gen.dirichlet(np.ones(n_outcomes), size=size)


def fibonacci_directions(count):
    """Near-uniform deterministic grid of unit vectors on the sphere."""
    i = np.arange(count) + 0.5
    polar = np.arccos(1 - 2 * i / count)
    azimuth = np.pi * (1 + 5**0.5) * i
    return np.column_stack(
        [np.cos(azimuth) * np.sin(polar), np.sin(azimuth) * np.sin(polar), np.cos(polar)]
    )
