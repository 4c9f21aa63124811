"""Textbook density-matrix quantum mechanics used as ground truth.

Nothing in here imports the frame modules; every frame-side result in the
package is cross-checked against these functions.
"""

import numpy as np

ENTRY_TOL = 1e-12
DERIVED_TOL = 1e-9

I2 = np.eye(2, dtype=np.complex128)
SX = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SY = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
SZ = np.array([[1, 0], [0, -1]], dtype=np.complex128)
PAULIS = np.stack([SX, SY, SZ])

HADAMARD = np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2)


def validate_density(rho, atol=ENTRY_TOL):
    """Raise ValueError unless `rho` is a 2x2 or 4x4 density matrix."""
    rho = np.asarray(rho, dtype=np.complex128)
    if rho.shape not in ((2, 2), (4, 4)):
        raise ValueError(f"density matrix must be 2x2 or 4x4, got {rho.shape}")
    if not np.allclose(rho, rho.conj().T, atol=atol, rtol=0):
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > atol:
        raise ValueError(f"density matrix trace {np.trace(rho).real!r} != 1")
    if np.linalg.eigvalsh(rho).min() < -1e-10:
        raise ValueError("density matrix has a negative eigenvalue")
    return rho


def validate_unitary(u, atol=ENTRY_TOL):
    u = np.asarray(u, dtype=np.complex128)
    if u.shape != (2, 2):
        raise ValueError(f"unitary must be 2x2, got {u.shape}")
    if not np.allclose(u.conj().T @ u, I2, atol=atol, rtol=0):
        raise ValueError("matrix is not unitary")
    return u


def validate_direction(m, atol=ENTRY_TOL):
    m = np.asarray(m, dtype=float)
    if m.shape != (3,):
        raise ValueError(f"direction must be a 3-vector, got shape {m.shape}")
    if abs(np.linalg.norm(m) - 1) > atol:
        raise ValueError(f"direction {m.tolist()} is not a unit vector")
    return m


def density_from_bloch(s):
    """Return rho = (I + s.sigma) / 2."""
    s = np.asarray(s, dtype=float)
    if s.shape != (3,):
        raise ValueError(f"Bloch vector must have 3 components, got shape {s.shape}")
    if np.linalg.norm(s) > 1 + 1e-9:
        raise ValueError(f"unphysical Bloch vector, |s| = {float(np.linalg.norm(s))!r}")
    return 0.5 * (I2 + np.einsum("k,kij->ij", s, PAULIS))


def bloch_from_density(rho):
    rho = np.asarray(rho, dtype=np.complex128)
    if rho.shape != (2, 2):
        raise ValueError(f"expected a single-qubit density matrix, got shape {rho.shape}")
    return np.real(np.einsum("ij,kji->k", rho, PAULIS))


def apply_unitary(rho, u):
    u = np.asarray(u, dtype=np.complex128)
    return u @ rho @ u.conj().T


def projector(m, beta):
    """Projector onto outcome `beta` of the observable m.sigma."""
    if beta not in (1, -1):
        raise ValueError(f"outcome must be +1 or -1, got {beta!r}")
    return 0.5 * (I2 + beta * np.einsum("k,kij->ij", np.asarray(m, dtype=float), PAULIS))


def born_probability(rho, m, beta):
    return float(np.real(np.trace(rho @ projector(m, beta))))


def luders_collapse(rho, m, beta, threshold=1e-12):
    """Post-measurement state for outcome `beta`; raises if that outcome cannot occur."""
    proj = projector(m, beta)
    prob = float(np.real(np.trace(proj @ rho)))
    if prob <= threshold:
        raise ValueError(f"outcome {beta:+d} along {list(m)} has probability {prob!r}")
    return proj @ rho @ proj / prob


def luders_channel(rho, m):
    """Non-selective projective measurement: sum over outcomes of P rho P."""
    return sum(projector(m, b) @ rho @ projector(m, b) for b in (1, -1))


def singlet_density():
    psi = np.array([0, 1, -1, 0], dtype=np.complex128) / np.sqrt(2)
    return np.outer(psi, psi.conj())


def partial_trace(rho, keep):
    """Reduce a two-qubit state to qubit `keep` (0 = first factor, 1 = second)."""
    r = np.asarray(rho).reshape(2, 2, 2, 2)
    if keep == 0:
        return np.einsum("ijkj->ik", r)
    if keep == 1:
        return np.einsum("ijil->jl", r)
    raise ValueError("keep must be 0 or 1")


def correlator(rho, a, b):
    """E(a, b) = Tr[rho (a.sigma) x (b.sigma)]."""
    oa = np.einsum("k,kij->ij", np.asarray(a, dtype=float), PAULIS)
    ob = np.einsum("k,kij->ij", np.asarray(b, dtype=float), PAULIS)
    return float(np.real(np.trace(rho @ np.kron(oa, ob))))


def chsh_value(rho, a1, a2, b1, b2):
    return (
        correlator(rho, a1, b1)
        + correlator(rho, a1, b2)
        + correlator(rho, a2, b1)
        - correlator(rho, a2, b2)
    )


def sequential_outcome_correlation(rho, m1, m2):
    """<beta1 beta2> for two successive projective measurements."""
    total = 0.0
    for b1 in (1, -1):
        p1 = born_probability(rho, m1, b1)
        if p1 <= 1e-12:
            continue
        post = luders_collapse(rho, m1, b1)
        for b2 in (1, -1):
            total += b1 * b2 * p1 * born_probability(post, m2, b2)
    return total
