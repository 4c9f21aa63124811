"""Qubit-meter measurement as a quasi-bistochastic process on three bits.

The joint state is a distribution over ``(alpha, a, a')`` laid out
big-endian with +1 before -1 (see :mod:`sicmeter.gbv`): entries 0-3 hold the
meter value +1, entries 4-7 the value -1, and within each block the qubit
bits follow the SIC order ``(++, +-, -+, --)``. Processes are 8x8 matrices
``S[(beta b b'), (alpha a a')]`` acting as ``S @ p``.
"""

from dataclasses import dataclass, field

import numpy as np

from . import gbv, sic_frame
from .sampling import fibonacci_directions

POSITIVITY_TOL = 1e-12
UNIT_TOL = 1e-12
CANONICAL = (1.0, 0.0, 0.0)
SQRT3 = np.sqrt(3)


class PositivityError(ValueError):
    """A process produced entries below -POSITIVITY_TOL where none are allowed."""

    def __init__(self, message, dump):
        super().__init__(message)
        self.dump = dump


# -- meter frame -------------------------------------------------------------

def block1(v):
    """Embed a 3-vector in the qubit subspace (components 0-2) of R^7."""
    out = np.zeros(7)
    out[0:3] = v
    return out


def block2(v):
    """Embed a 3-vector in the qubit-meter correlation subspace (components 3-5)."""
    out = np.zeros(7)
    out[3:6] = v
    return out


E3 = np.eye(7)[6]


def frame_decomposition(alpha, a, a_prime):
    """sqrt(3/7) (n1 + alpha n2) + alpha/sqrt(7) e3 for one bit triple."""
    n = sic_frame.tetra_vector(a, a_prime)
    return np.sqrt(3 / 7) * (block1(n) + alpha * block2(n)) + alpha / np.sqrt(7) * E3


def initial_gbv(s, meter=1.0):
    """w = sqrt(7/3)(s1 + <alpha> s2) + <alpha> sqrt(7) e3."""
    s = np.asarray(s, dtype=float)
    return np.sqrt(7 / 3) * (block1(s) + meter * block2(s)) + meter * np.sqrt(7) * E3


# -- processes ---------------------------------------------------------------

def _check_unit(m):
    m = np.asarray(m, dtype=float)
    if m.shape != (3,) or abs(np.linalg.norm(m) - 1) > UNIT_TOL:
        raise ValueError(f"measurement direction must be a unit 3-vector, got {m.tolist()}")
    return m


def _affine_generator(m, x, y, z):
    m1, m2 = block1(m), block2(m)
    r1 = x * m1 + (1 - x) * m2
    r2 = y * (m1 - m2) + E3 / SQRT3
    r3 = z * m1 + (SQRT3 - z) * m2
    return np.outer(m1, r1) + np.outer(m2, r2) + np.outer(E3, r3)


def build_A(m, x=1.0, y=0.0, z=0.0):
    """7x7 affine generator A_m(x, y, z) acting on the qubit-meter GBV.

    A = m1 r1(x)^T + m2 r2(y)^T + e3 r3(z)^T with
    r1 = x m1 + (1-x) m2, r2 = y (m1 - m2) + e3/sqrt(3), r3 = z m1 + (sqrt(3)-z) m2.
    """
    return _affine_generator(_check_unit(m), x, y, z)


def _process_matrix(m, x, y, z):
    frame = gbv.frame_matrix(3)
    return (1 + 7 * frame @ _affine_generator(m, x, y, z) @ frame.T) / 8


@dataclass(frozen=True)
class MeasProcess:
    m: np.ndarray
    x: float
    y: float
    z: float
    matrix: np.ndarray = field(repr=False)

    @property
    def is_canonical(self):
        return (self.x, self.y, self.z) == CANONICAL

    @property
    def min_entry(self):
        return float(self.matrix.min())


def build_S(m, x=1.0, y=0.0, z=0.0):
    """S[beta b b' | alpha a a'] = (1 + 7 n_{beta b b'} . A n_{alpha a a'}) / 8."""
    m = _check_unit(m)
    return MeasProcess(m, float(x), float(y), float(z), _process_matrix(m, x, y, z))


def _index_signs():
    table = gbv.bit_table(3)
    return table[:, 0], sic_frame.TETRA[np.tile(np.arange(4), 2)]


def explicit_process(m, x=1.0, y=0.0, z=0.0):
    """The expanded closed form of S_xyz, evaluated entry by entry.

    Kept separate from :func:`build_S` so the two can be compared.
    """
    m = np.asarray(m, dtype=float)
    signs, tetra = _index_signs()
    mn = tetra @ m
    beta, mnb = signs[:, None], mn[:, None]
    alpha, mna = signs[None, :], mn[None, :]
    return (
        1
        + SQRT3 * beta * (z + (SQRT3 - z) * alpha) * mna
        + alpha * beta * mnb
        + 3 * (x + (1 - x) * alpha + beta * y * (1 - alpha)) * mnb * mna
    ) / 8


def factorized_process(m):
    """(1 + alpha beta m.n_{bb'})(1 + 3 alpha beta m.n_{aa'}) / 8."""
    m = np.asarray(m, dtype=float)
    signs, tetra = _index_signs()
    mn = tetra @ m
    ab = signs[:, None] * signs[None, :]
    return (1 + ab * mn[:, None]) * (1 + 3 * ab * mn[None, :]) / 8


def correction_term(x, y, z, m):
    """Bracketed term separating S_xyz from the product form, per (out, in) entry."""
    m = np.asarray(m, dtype=float)
    signs, tetra = _index_signs()
    mn = tetra @ m
    beta, alpha = signs[:, None], signs[None, :]
    bracket = 3 * (x + (1 - x) * alpha + beta * y * (1 - alpha)) - SQRT3 * alpha * (
        z + (SQRT3 - z) * alpha
    )
    return bracket * mn[None, :] * mn[:, None]


def uniqueness_residual(x, y, z, m):
    """Max-abs deviation of S_xyz from the canonical process, scaled by 8.

    The correction term alone vanishes on the whole line y = 0,
    x = 1 - z/sqrt(3); the linear (m.n_{aa'}) coefficient differs from the
    canonical one unless z = 0. Together they vanish only at (1, 0, 0).
    """
    m = _check_unit(m)
    return float(8 * np.abs(explicit_process(m, x, y, z) - factorized_process(m)).max())


def uniqueness_scan(m, lo=-2.0, hi=2.0, points=41, tol=1e-9):
    """Grid points in [lo, hi]^3 where :func:`uniqueness_residual` is below `tol`.

    Returns (zeros, smallest nonzero residual), zeros in grid order.
    """
    m = _check_unit(m)
    axis = np.linspace(lo, hi, points)
    grid = np.stack(np.meshgrid(axis, axis, axis, indexing="ij"), axis=-1).reshape(-1, 3)
    canon = factorized_process(m)
    residuals = np.empty(len(grid))
    # chunks keep the (chunk, 8, 8) intermediates small
    for start in range(0, len(grid), 4096):
        x, y, z = (grid[start:start + 4096, i, None, None] for i in range(3))
        dev = np.abs(explicit_process(m, x, y, z) - canon)
        residuals[start:start + 4096] = 8 * dev.max(axis=(1, 2))
    hit = residuals <= tol
    zeros = [tuple(float(c) for c in point) for point in grid[hit]]
    smallest = float(residuals[~hit].min()) if (~hit).any() else float("inf")
    return zeros, smallest


# -- states ------------------------------------------------------------------

def initial_state(qubit, meter=1):
    """p(alpha) p(aa') with a deterministic meter; `qubit` is a Bloch or SIC vector."""
    qubit = np.asarray(qubit, dtype=float)
    p = sic_frame.sic_from_bloch(qubit) if qubit.shape == (3,) else sic_frame.validate_sic(qubit)
    if meter not in (1, -1):
        raise ValueError("the meter must start deterministic at +1 or -1")
    p_alpha = np.array([1.0, 0.0]) if meter == 1 else np.array([0.0, 1.0])
    return np.kron(p_alpha, p)


def qubit_marginal(state):
    return np.asarray(state).reshape(2, 4).sum(axis=0)


def meter_marginal(state):
    """(p(+1), p(-1)) of the meter bit."""
    return np.asarray(state).reshape(2, 4).sum(axis=1)


def meter_expectation(state):
    p = meter_marginal(state)
    return float(p[0] - p[1])


@dataclass
class Telemetry:
    """Per-step minimum entries and the count of clamped rounding dust."""

    min_entries: list = field(default_factory=list)
    clamped: int = 0
    negative_steps: list = field(default_factory=list)

    @property
    def min_entry(self):
        return min(self.min_entries) if self.min_entries else np.nan


def _step(process, state, telemetry, strict):
    out = process.matrix @ state
    low = float(out.min())
    telemetry.min_entries.append(low)
    if low < -POSITIVITY_TOL:
        step = len(telemetry.min_entries)
        telemetry.negative_steps.append(step)
        if strict:
            raise PositivityError(
                f"step {step} produced entry {low!r} below -{POSITIVITY_TOL}",
                {
                    "step": step,
                    "m": process.m.tolist(),
                    "xyz": [process.x, process.y, process.z],
                    "input": state.tolist(),
                    "output": out.tolist(),
                },
            )
        return out
    dust = (out < 0) & (out >= -POSITIVITY_TOL)
    telemetry.clamped += int(dust.sum())
    out[dust] = 0.0
    return out


def _check_state(state):
    state = np.asarray(state, dtype=float)
    if state.shape != (8,):
        raise ValueError(f"qubit-meter state must have 8 entries, got shape {state.shape}")
    if state.min() < -POSITIVITY_TOL or abs(state.sum() - 1) > 1e-12:
        raise ValueError("qubit-meter state must be a normalised nonnegative distribution")
    return state


def _reset_meter(state):
    return np.kron([1.0, 0.0], qubit_marginal(state))


@dataclass
class MeasurementResult:
    state: np.ndarray
    outcome_probs: np.ndarray  # (p(beta=+1), p(beta=-1))
    conditional: dict  # beta -> SIC 4-vector, absent for zero-probability outcomes
    telemetry: Telemetry

    def post_bloch(self, beta):
        if beta not in self.conditional:
            raise ValueError(f"outcome {beta:+d} has zero probability; no post-measurement state")
        return sic_frame.bloch_from_sic(self.conditional[beta])


def measure_once(state, process):
    """Apply the process once to a qubit-meter state with a deterministic meter.

    Returns the joint output, the meter outcome marginal and the qubit SIC
    distribution conditioned on each outcome that can occur.
    """
    state = _check_state(state)
    meter = meter_marginal(state)
    if min(abs(meter[0]), abs(meter[1])) > POSITIVITY_TOL:
        raise ValueError(f"meter is not deterministic (p(alpha) = {meter.tolist()}), noisy meters are not modelled")
    telemetry = Telemetry()
    out = _step(process, state, telemetry, strict=True)
    blocks = out.reshape(2, 4)
    probs = blocks.sum(axis=1)
    conditional = {}
    for beta, row, prob in zip((1, -1), blocks, probs):
        if prob > POSITIVITY_TOL:
            conditional[beta] = row / prob
    return MeasurementResult(out, probs, conditional, telemetry)


@dataclass
class RepeatResult:
    state: np.ndarray
    history: list
    telemetry: Telemetry


def measure_repeat(state, process, k, reset_meter=False, strict=None):
    """Apply the same process `k` times.

    By default the meter is left as it is between shots. With
    ``reset_meter=True`` it is re-initialised to +1 before every shot after
    the first. Negative intermediate entries raise for the canonical process
    and are recorded in the telemetry otherwise (override with `strict`).
    """
    if k < 0:
        raise ValueError("repeat count must be nonnegative")
    state = _check_state(state)
    strict = process.is_canonical if strict is None else strict
    telemetry = Telemetry()
    history = [state]
    for i in range(k):
        if reset_meter and i > 0:
            state = _reset_meter(state)
        state = _step(process, state, telemetry, strict)
        history.append(state)
    return RepeatResult(state, history, telemetry)


def measure_chain(state, directions, reset_meter=False):
    """Successive canonical measurements along each direction in turn."""
    state = _check_state(state)
    telemetry = Telemetry()
    history = [state]
    for i, m in enumerate(directions):
        if reset_meter and i > 0:
            state = _reset_meter(state)
        state = _step(build_S(m), state, telemetry, strict=True)
        history.append(state)
    return RepeatResult(state, history, telemetry)


def marginalize_to_luders(process, meter=1):
    """4x4 qubit channel left after discarding the meter, for a deterministic meter."""
    col = 0 if meter == 1 else 1
    return np.asarray(process.matrix).reshape(2, 4, 2, 4)[:, :, col, :].sum(axis=0)


# -- positivity and comparators ---------------------------------------------

@dataclass
class NecessityVerdict:
    scale: float
    directions: int
    min_entry: float
    negative_directions: int

    @property
    def nonnegative(self):
        return self.min_entry >= -POSITIVITY_TOL

    @property
    def negative_everywhere(self):
        return self.negative_directions == self.directions


def positivity_necessity_check(scale, directions=1000):
    """Minimum entry of the canonical process with m shrunk to `scale` * unit vector.

    `directions` is a count (Fibonacci grid) or an explicit array of unit vectors.
    """
    if scale < 0:
        raise ValueError("scale must be nonnegative")
    grid = fibonacci_directions(directions) if np.isscalar(directions) else np.asarray(directions)
    minima = np.array([_process_matrix(scale * u, *CANONICAL).min() for u in grid])
    return NecessityVerdict(
        float(scale), len(grid), float(minima.min()), int(np.sum(minima < -POSITIVITY_TOL))
    )


def _bit_permutation(n_bits, rule):
    """Permutation matrix sending bit string x to rule(x), as T[out, in]."""
    table = gbv.bit_table(n_bits)
    t = np.zeros((2**n_bits, 2**n_bits))
    for i, bits in enumerate(table):
        t[gbv.index_of(rule(tuple(bits))), i] = 1.0
    return t


def classical_convex_process(r1, r2, r3):
    """Mixture of the three copy processes alpha -> a alpha, a' alpha, aa' alpha."""
    weights = np.array([r1, r2, r3], dtype=float)
    if np.any(weights < 0) or abs(weights.sum() - 1) > 1e-12:
        raise ValueError(f"mixture weights must be nonnegative and sum to one, got {weights.tolist()}")
    copies = (
        _bit_permutation(3, lambda b: (b[1] * b[0], b[1], b[2])),
        _bit_permutation(3, lambda b: (b[2] * b[0], b[1], b[2])),
        _bit_permutation(3, lambda b: (b[1] * b[2] * b[0], b[1], b[2])),
    )
    return sum(w * c for w, c in zip(weights, copies))


def two_meter_copy_process():
    """16x16 permutation on (a, a', alpha, alpha'): alpha -> a alpha, alpha' -> a' alpha'."""
    return _bit_permutation(4, lambda b: (b[0], b[1], b[0] * b[2], b[1] * b[3]))


def two_meter_initial(qubit):
    qubit = np.asarray(qubit, dtype=float)
    p = sic_frame.sic_from_bloch(qubit) if qubit.shape == (3,) else sic_frame.validate_sic(qubit)
    return np.kron(p, [1.0, 0.0, 0.0, 0.0])


def two_meter_copy(state):
    """Copy the qubit's (a, a') statistics onto two meters, both starting at +1."""
    state = np.asarray(state, dtype=float)
    if state.shape != (16,):
        raise ValueError(f"expected a 16-entry state over (a, a', alpha, alpha'), got {state.shape}")
    if np.abs(state.reshape(4, 4)[:, 1:]).max() > POSITIVITY_TOL:
        raise ValueError("both meters must start deterministic at +1")
    return two_meter_copy_process() @ state


def observer_coupling_matrix(observers, i):
    """R(gamma_i | beta) on the joint (beta, b, b', gamma_1..gamma_M) space."""
    def rule(b):
        out = list(b)
        out[3 + i] = b[0] * b[3 + i]
        return tuple(out)

    return _bit_permutation(3 + observers, rule)


def broadcast(state, process, observers, order=None):
    """Measure, then let each of `observers` bits copy the outcome beta.

    Returns the joint distribution over (beta, b, b', gamma_1..gamma_M),
    big-endian. Observer bits start deterministic at +1 and are coupled
    one at a time in `order` (default 0..M-1).
    """
    if observers < 0:
        raise ValueError("observer count must be nonnegative")
    out = measure_once(state, process).state
    joint = np.zeros((8, 2**observers))
    joint[:, 0] = out
    joint = joint.reshape((2, 4) + (2,) * observers)
    for i in range(observers) if order is None else order:
        joint[1] = np.flip(joint[1], axis=1 + i).copy()
    return joint.reshape(-1)


# -- entropy -----------------------------------------------------------------

@dataclass
class EntropyDelta:
    before: float
    after: float
    closed_form: float

    @property
    def direct(self):
        return self.after - self.before


def entropy_delta_closed_form(s, m):
    """-1 + log2((3 + |s|^2) / (1 + (m.s)^2))."""
    s = np.asarray(s, dtype=float)
    ms = np.dot(m, s)
    return -1 + np.log2((3 + s @ s) / (1 + ms * ms))


def entropy_delta(s, m):
    """Collision entropy change of the qubit-meter state under one canonical shot."""
    before = initial_state(s)
    after = measure_once(before, build_S(m)).state
    return EntropyDelta(
        float(gbv.collision_entropy(gbv.gbv_from_dist(before))),
        float(gbv.collision_entropy(gbv.gbv_from_dist(after))),
        float(entropy_delta_closed_form(s, m)),
    )


@dataclass
class Realizability:
    target: float
    bound: float
    realizable: bool
    required_sx: float


def meter_realizability_check(target):
    """Can a qubit's SIC bit marginal reach meter expectation `target`?

    For any qubit <alpha> = s_x / sqrt(3) with |s_x| <= 1, so the bound is
    1/sqrt(3) and a deterministic meter (|target| = 1) is out of reach.
    """
    bound = 1 / SQRT3
    required = SQRT3 * target
    return Realizability(float(target), bound, bool(abs(required) <= 1 + 1e-12), float(required))
