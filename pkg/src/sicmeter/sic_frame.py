"""Single-qubit SIC frame: tetrahedral vectors, state maps and channel matrices.

Four-vectors are indexed by the bit pair (a, a') in the fixed order
``(++, +-, -+, --)``. Transition matrices are indexed ``T[out, in]`` so a
channel acts as ``T @ p`` and every column sums to one.
"""

import itertools

import numpy as np

ENTRY_TOL = 1e-12
PERMUTATION_TOL = 1e-9

SIC_LABELS = ("++", "+-", "-+", "--")
BIT_PAIRS = np.array([(1, 1), (1, -1), (-1, 1), (-1, -1)])

# n_{aa'} = (a, a', aa') / sqrt(3)
TETRA = np.column_stack(
    [BIT_PAIRS[:, 0], BIT_PAIRS[:, 1], BIT_PAIRS[:, 0] * BIT_PAIRS[:, 1]]
) / np.sqrt(3)

_PAULIS = np.array(
    [[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]], dtype=np.complex128
)


def tetra_vector(a, a_prime):
    return np.array([a, a_prime, a * a_prime]) / np.sqrt(3)


def _check_bloch(s):
    s = np.asarray(s, dtype=float)
    if s.shape[-1] != 3:
        raise ValueError(f"Bloch vector must have 3 components, got shape {s.shape}")
    norms = np.linalg.norm(s, axis=-1)
    if np.any(norms > 1 + 1e-9):
        raise ValueError(f"unphysical Bloch vector, |s| = {float(np.max(norms))!r}")
    return s


def sic_from_bloch(s):
    """p(aa') = (1 + s.n_{aa'}) / 4. Accepts a single vector or a stack of them."""
    s = _check_bloch(s)
    return 0.25 * (1 + s @ TETRA.T)


def bloch_from_sic(p):
    """s = 3 sum_{aa'} p(aa') n_{aa'}."""
    p = np.asarray(p, dtype=float)
    if p.shape[-1] != 4:
        raise ValueError(f"SIC distribution must have 4 entries, got shape {p.shape}")
    return 3 * p @ TETRA


def validate_sic(p, atol=ENTRY_TOL):
    p = np.asarray(p, dtype=float)
    if p.shape != (4,):
        raise ValueError(f"SIC distribution must have 4 entries, got shape {p.shape}")
    if abs(p.sum() - 1) > atol:
        raise ValueError(f"SIC distribution sums to {p.sum()!r}")
    if np.linalg.norm(bloch_from_sic(p)) > 1 + 1e-9:
        raise ValueError("SIC vector lies outside the Bloch ball")
    return p


def sic_projectors():
    """The four rank-one frame operators (1 + n.sigma) / 4, as complex 2x2 arrays."""
    return 0.25 * (np.eye(2) + np.einsum("lk,kij->lij", TETRA, _PAULIS))


def is_rotation(o, atol=1e-9):
    o = np.asarray(o, dtype=float)
    return (
        o.shape == (3, 3)
        and np.allclose(o.T @ o, np.eye(3), atol=atol, rtol=0)
        and abs(np.linalg.det(o) - 1) <= atol
    )


def channel_from_rotation(o):
    """T(bb'|aa') = (1 + 3 n_{aa'} . O^T n_{bb'}) / 4."""
    o = np.asarray(o, dtype=float)
    if not is_rotation(o):
        raise ValueError("channel_from_rotation needs a proper rotation matrix")
    return 0.25 * (1 + 3 * TETRA @ o @ TETRA.T)


def rotation_from_unitary(u):
    """Adjoint action O_jk = Tr[sigma_j U sigma_k U^dagger] / 2."""
    u = np.asarray(u, dtype=np.complex128)
    rotated = np.einsum("ab,kbc,dc->kad", u, _PAULIS, u.conj())
    return 0.5 * np.real(np.einsum("jab,kba->jk", _PAULIS, rotated))


def luders_channel(m):
    """Non-selective projective measurement along m in SIC form.

    V(bb'|aa') = (1 + 3 n_{bb'} . (m m^T) n_{aa'}) / 4. The induced Bloch map
    s -> (s.m) m has rank one, so V is singular.
    """
    m = np.asarray(m, dtype=float)
    if m.shape != (3,) or abs(np.linalg.norm(m) - 1) > ENTRY_TOL:
        raise ValueError(f"measurement direction must be a unit 3-vector, got {m!r}")
    proj = TETRA @ m
    return 0.25 * (1 + 3 * np.outer(proj, proj))


def apply_channel(t, p):
    t = np.asarray(t, dtype=float)
    if not np.allclose(t.sum(axis=0), 1, atol=ENTRY_TOL, rtol=0):
        raise ValueError("transition matrix columns do not sum to one")
    return t @ np.asarray(p, dtype=float)


def negativity(t):
    """Total negative mass, sum of max(0, -t) over entries."""
    return float(np.clip(-np.asarray(t), 0, None).sum())


def is_permutation_channel(t, atol=PERMUTATION_TOL):
    t = np.asarray(t)
    zero_one = np.all((np.abs(t) <= atol) | (np.abs(t - 1) <= atol))
    return bool(zero_one and np.allclose(t.sum(axis=0), 1) and np.allclose(t.sum(axis=1), 1))


def affine_bloch_map(t):
    """Recover (A, t) with s' = A s + t from a 4x4 column-normalised matrix."""
    t = np.asarray(t, dtype=float)
    shift = bloch_from_sic(t @ np.full(4, 0.25))
    cols = [bloch_from_sic(t @ sic_from_bloch(e)) - shift for e in np.eye(3)]
    return np.column_stack(cols), shift


def tetrahedral_rotations():
    """The 12 proper rotations that permute the tetrahedron vertices."""
    vertices = {tuple(np.rint(np.sqrt(3) * v).astype(int)) for v in TETRA}
    found = []
    for perm in itertools.permutations(range(3)):
        for signs in itertools.product((1, -1), repeat=3):
            o = np.zeros((3, 3))
            for row, (col, sgn) in enumerate(zip(perm, signs)):
                o[row, col] = sgn
            if np.linalg.det(o) < 0:
                continue
            image = {tuple(np.rint(np.sqrt(3) * o @ v).astype(int)) for v in TETRA}
            if image == vertices:
                found.append(o)
    return found


def singlet_sic():
    """Joint SIC distribution of the singlet, p(aa', bb') = (1 - n_{aa'}.n_{bb'}) / 16.

    Returned as a 4x4 array, rows Alice's (aa'), columns Bob's (bb').
    """
    overlap = TETRA @ TETRA.T
    np.fill_diagonal(overlap, 1.0)  # exact zeros on the diagonal
    return (1 - overlap) / 16


def rotation_to_z(direction):
    """A rotation O with O @ direction = e_z (Rodrigues form)."""
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    ez = np.array([0.0, 0.0, 1.0])
    axis = np.cross(d, ez)
    sin = np.linalg.norm(axis)
    cos = d @ ez
    if sin < 1e-12:
        return np.eye(3) if cos > 0 else np.diag([1.0, -1.0, -1.0])
    k = axis / sin
    kx = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + sin * kx + (1 - cos) * kx @ kx


# Response of sigma_z in the frame: sum_l p(l) * 3 n_l.e_z = s_z.
_Z_RESPONSE = 3 * TETRA[:, 2]


def sic_correlator(joint, a, b):
    """E(a, b) from a joint SIC distribution via local rotation channels.

    Each side's setting is rotated onto z with a quasi-stochastic channel;
    the rotated distribution is then contracted with the z-response
    sqrt(3) * (aa') on both sides.
    """
    ta = channel_from_rotation(rotation_to_z(a))
    tb = channel_from_rotation(rotation_to_z(b))
    rotated = ta @ np.asarray(joint) @ tb.T
    return float(_Z_RESPONSE @ rotated @ _Z_RESPONSE)


def chsh_from_sic(a1, a2, b1, b2, joint=None):
    joint = singlet_sic() if joint is None else joint
    return (
        sic_correlator(joint, a1, b1)
        + sic_correlator(joint, a1, b2)
        + sic_correlator(joint, a2, b1)
        - sic_correlator(joint, a2, b2)
    )


def tsirelson_settings():
    """(a1, a2, b1, b2) reaching 2*sqrt(2) on the singlet."""
    x = np.array([1.0, 0.0, 0.0])
    z = np.array([0.0, 0.0, 1.0])
    return z, x, -(z + x) / np.sqrt(2), (x - z) / np.sqrt(2)
