"""Exact quantum mechanics of spin-1/2 measurements.

Pure states, projective measurement with collapse, sequential correlators on
one particle and joint correlators on an entangled pair.  Everything is
explicit complex-amplitude arithmetic; randomness enters only through the
uniform variates the caller passes in, so all functions are pure.

The brute-force correlators enumerate outcome branches with the same
projector arithmetic and serve as independent oracles for the closed-form
values (d1.d2 for two consecutive measurements, -dA.dB for the singlet).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .directions import Direction3
from .errors import ValidationError
from .selector import ContextSet

NORM_TOL = 1e-12
# squared-norm floor below which a projected branch counts as empty
_DEGENERATE_TOL = 1e-24

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
IDENT2 = np.eye(2, dtype=complex)


@dataclass(frozen=True)
class QubitState:
    """Normalized spin-1/2 state: amplitudes on |up_z> and |down_z>."""

    amp_up: complex
    amp_down: complex

    def __post_init__(self):
        n2 = abs(self.amp_up) ** 2 + abs(self.amp_down) ** 2
        if abs(n2 - 1.0) > NORM_TOL:
            raise ValidationError(f"qubit state not normalized: |amp|^2 = {n2!r}")

    @classmethod
    def up(cls) -> "QubitState":
        return cls(1.0 + 0.0j, 0.0j)

    @classmethod
    def down(cls) -> "QubitState":
        return cls(0.0j, 1.0 + 0.0j)

    def vector(self) -> np.ndarray:
        return np.array([self.amp_up, self.amp_down], dtype=complex)


@dataclass(frozen=True)
class TwoQubitState:
    """Normalized two-spin state in the z(x)z product basis |uu>,|ud>,|du>,|dd>."""

    amp_uu: complex
    amp_ud: complex
    amp_du: complex
    amp_dd: complex

    def __post_init__(self):
        n2 = sum(abs(a) ** 2 for a in self._amps())
        if abs(n2 - 1.0) > NORM_TOL:
            raise ValidationError(f"two-qubit state not normalized: |amp|^2 = {n2!r}")

    def _amps(self) -> tuple[complex, complex, complex, complex]:
        return (self.amp_uu, self.amp_ud, self.amp_du, self.amp_dd)

    @classmethod
    def singlet(cls) -> "TwoQubitState":
        """The antisymmetric pair state (0, 1/sqrt(2), -1/sqrt(2), 0)."""
        s = 1.0 / math.sqrt(2.0)
        return cls(0.0j, s + 0.0j, -s + 0.0j, 0.0j)

    def vector(self) -> np.ndarray:
        return np.array(self._amps(), dtype=complex)


def pauli_dot(n: Direction3) -> np.ndarray:
    """The 2x2 observable n . sigma."""
    return n.x * SIGMA_X + n.y * SIGMA_Y + n.z * SIGMA_Z


def _projector(n: Direction3, outcome: int) -> np.ndarray:
    return (IDENT2 + outcome * pauli_dot(n)) / 2.0


def _check_u(u: float) -> None:
    if not 0.0 <= u < 1.0:
        raise ValidationError(f"uniform variate must lie in [0, 1), got {u!r}")


def _eigenstate(n: Direction3, outcome: int) -> QubitState:
    # closed-form eigenvector of n.sigma; only used when the projected
    # branch has zero weight and cannot be normalized
    rxy = math.hypot(n.x, n.y)
    phase = complex(n.x / rxy, n.y / rxy) if rxy > 1e-15 else 1.0 + 0.0j
    if outcome == 1:
        return QubitState(math.sqrt((1.0 + n.z) / 2.0), math.sqrt((1.0 - n.z) / 2.0) * phase)
    return QubitState(math.sqrt((1.0 - n.z) / 2.0), -math.sqrt((1.0 + n.z) / 2.0) * phase)


def prob_plus(state: QubitState, n: Direction3) -> float:
    """Probability of outcome +1 when measuring n.sigma, clipped to [0, 1]."""
    psi = state.vector()
    p = float(np.real(np.vdot(psi, _projector(n, +1) @ psi)))
    return min(1.0, max(0.0, p))


def collapse(state: QubitState, n: Direction3, outcome: int) -> QubitState:
    """Post-measurement state for the given outcome of n.sigma."""
    if outcome not in (-1, 1):
        raise ValidationError(f"outcome must be +1 or -1, got {outcome!r}")
    v = _projector(n, outcome) @ state.vector()
    n2 = float(np.real(np.vdot(v, v)))
    if n2 < _DEGENERATE_TOL:
        return _eigenstate(n, outcome)
    s = math.sqrt(n2)
    return QubitState(complex(v[0]) / s, complex(v[1]) / s)


def measure_spin(state: QubitState, n: Direction3, u: float) -> tuple[int, QubitState]:
    """Projective spin measurement along n.

    The outcome is +1 iff u < P(+1); the returned post-state is the
    eigenstate of n.sigma belonging to that outcome (projected and
    renormalized, so repeating the measurement reproduces the outcome).
    """
    _check_u(u)
    p_plus = prob_plus(state, n)
    outcome = 1 if u < p_plus else -1
    return outcome, collapse(state, n, outcome)


def sequential_trial(
    state0: QubitState, d1: Direction3, d2: Direction3, u1: float, u2: float
) -> tuple[int, int]:
    """Two consecutive measurements on one particle: along d1, then d2."""
    s1, after = measure_spin(state0, d1, u1)
    s2, _ = measure_spin(after, d2, u2)
    return s1, s2


def analytic_sequential_correlator(d1: Direction3, d2: Direction3) -> float:
    """E[s1*s2] for two consecutive measurements: d1.d2, for any initial state."""
    return d1.dot(d2)


def brute_force_sequential_correlator(
    state0: QubitState, d1: Direction3, d2: Direction3
) -> float:
    """E[s1*s2] by explicit enumeration of the four outcome branches.

    Sums s1*s2 * p(s1) * p(s2|s1) using projector arithmetic only; agrees
    with d1.d2 to machine precision for every initial state.
    """
    total = 0.0
    p_plus1 = prob_plus(state0, d1)
    for s1 in (+1, -1):
        p1 = p_plus1 if s1 == 1 else 1.0 - p_plus1
        if p1 <= 0.0:
            continue
        after = collapse(state0, d1, s1)
        p_plus2 = prob_plus(after, d2)
        for s2 in (+1, -1):
            p2 = p_plus2 if s2 == 1 else 1.0 - p_plus2
            total += s1 * s2 * p1 * p2
    return total


# --- entangled pair -----------------------------------------------------------


def _pair_projector(n: Direction3, outcome: int, particle: int) -> np.ndarray:
    p = _projector(n, outcome)
    return np.kron(p, IDENT2) if particle == 0 else np.kron(IDENT2, p)


def prob_plus_pair(state: TwoQubitState, n: Direction3, particle: int) -> float:
    """Probability that measuring particle 0 or 1 of the pair along n gives +1."""
    psi = state.vector()
    p = float(np.real(np.vdot(psi, _pair_projector(n, +1, particle) @ psi)))
    return min(1.0, max(0.0, p))


def collapse_pair(state: TwoQubitState, n: Direction3, outcome: int, particle: int) -> TwoQubitState:
    """Post-measurement pair state after one particle is measured along n."""
    if outcome not in (-1, 1):
        raise ValidationError(f"outcome must be +1 or -1, got {outcome!r}")
    v = _pair_projector(n, outcome, particle) @ state.vector()
    n2 = float(np.real(np.vdot(v, v)))
    if n2 < _DEGENERATE_TOL:
        raise ValidationError("cannot collapse onto a zero-probability branch of the pair")
    s = math.sqrt(n2)
    return TwoQubitState(*(complex(a) / s for a in v))


def singlet_joint_trial(
    dA: Direction3, dB: Direction3, u1: float, u2: float
) -> tuple[int, int]:
    """Joint measurement of a singlet pair: particle A along dA, B along dB.

    A's outcome is sampled from its marginal (1/2 each) with u1, B's from
    the conditional distribution of the collapsed pair state with u2, so
    E[sA*sB] = -dA.dB.
    """
    _check_u(u1)
    _check_u(u2)
    state = TwoQubitState.singlet()
    pA = prob_plus_pair(state, dA, 0)
    sA = 1 if u1 < pA else -1
    collapsed = collapse_pair(state, dA, sA, 0)
    pB = prob_plus_pair(collapsed, dB, 1)
    sB = 1 if u2 < pB else -1
    return sA, sB


def singlet_analytic_correlator(dA: Direction3, dB: Direction3) -> float:
    """E[sA*sB] for the singlet: -dA.dB."""
    return -dA.dot(dB)


def brute_force_singlet_correlator(dA: Direction3, dB: Direction3) -> float:
    """<singlet| (dA.sigma)(x)(dB.sigma) |singlet> by explicit 4x4 arithmetic."""
    psi = TwoQubitState.singlet().vector()
    op = np.kron(pauli_dot(dA), pauli_dot(dB))
    return float(np.real(np.vdot(psi, op @ psi)))


# --- per-context samplers used by the experiment runner -----------------------


def balanced_preparation(contexts: ContextSet) -> QubitState:
    """Initial state whose outcome marginals are unbiased in every context.

    The sequential correlator E[s1*s2] = d1.d2 holds for any preparation,
    but the individual outcomes are only 50/50 when the initial Bloch
    vector is orthogonal to every direction that can be measured first.
    For the temporal contexts those are the slot-1 and slot-2 directions,
    so their (normalized) cross product does it; if they are parallel any
    perpendicular axis works.
    """
    firsts: list[Direction3] = []
    for ctx in contexts.contexts:
        if all(ctx.dir_x.dot(d) < 1.0 - 1e-9 for d in firsts):
            firsts.append(ctx.dir_x)
    d0 = firsts[0]
    if len(firsts) > 1:
        d1 = firsts[1]
        cx = d0.y * d1.z - d0.z * d1.y
        cy = d0.z * d1.x - d0.x * d1.z
        cz = d0.x * d1.y - d0.y * d1.x
        if math.sqrt(cx * cx + cy * cy + cz * cz) > 1e-9:
            return _eigenstate(Direction3.normalized(cx, cy, cz), +1)
    helper = Direction3(0.0, 0.0, 1.0) if abs(d0.z) < 0.9 else Direction3(1.0, 0.0, 0.0)
    cx = d0.y * helper.z - d0.z * helper.y
    cy = d0.z * helper.x - d0.x * helper.z
    cz = d0.x * helper.y - d0.y * helper.x
    return _eigenstate(Direction3.normalized(cx, cy, cz), +1)


def _sample_two_step(p1, p2, codes, u1, u2):
    # p1: (nctx,) first-step +1 probability; p2: (nctx, 2) second-step +1
    # probability indexed by [code, (s1+1)/2]
    s1 = np.where(u1 < p1[codes], 1, -1).astype(np.int8)
    p2_sel = p2[codes, (s1 + 1) >> 1]
    s2 = np.where(u2 < p2_sel, 1, -1).astype(np.int8)
    return s1, s2


class SequentialSampler:
    """Trial sampler for consecutive measurements on one freshly prepared particle.

    Because the initial state is fixed, the first-step probability and both
    conditional second-step probabilities are precomputed per context with
    the same projector arithmetic :func:`sequential_trial` uses, which makes
    the vectorized run bit-identical to per-trial calls.

    The default preparation is :func:`balanced_preparation`, which leaves
    every correlator unchanged but keeps outcome marginals unbiased (the
    property the bit-extraction pipeline relies on).
    """

    def __init__(self, contexts: ContextSet, state0: QubitState | None = None):
        self.contexts = contexts
        self.state0 = state0 if state0 is not None else balanced_preparation(contexts)
        nctx = len(contexts)
        self._p1 = np.empty(nctx)
        self._p2 = np.empty((nctx, 2))
        for code, ctx in enumerate(contexts.contexts):
            self._p1[code] = prob_plus(self.state0, ctx.dir_x)
            for s1 in (-1, 1):
                after = collapse(self.state0, ctx.dir_x, s1)
                self._p2[code, (s1 + 1) >> 1] = prob_plus(after, ctx.dir_y)

    def trial(self, code: int, u1: float, u2: float) -> tuple[int, int]:
        ctx = self.contexts[code]
        return sequential_trial(self.state0, ctx.dir_x, ctx.dir_y, u1, u2)

    def run(self, codes: np.ndarray, u1: np.ndarray, u2: np.ndarray):
        return _sample_two_step(self._p1, self._p2, codes, u1, u2)

    def analytic_correlator(self, code: int) -> float:
        ctx = self.contexts[code]
        return analytic_sequential_correlator(ctx.dir_x, ctx.dir_y)


class SingletSampler:
    """Trial sampler for joint measurements on a singlet pair, one pair per trial."""

    def __init__(self, contexts: ContextSet):
        self.contexts = contexts
        state = TwoQubitState.singlet()
        nctx = len(contexts)
        self._pA = np.empty(nctx)
        self._pB = np.empty((nctx, 2))
        for code, ctx in enumerate(contexts.contexts):
            self._pA[code] = prob_plus_pair(state, ctx.dir_x, 0)
            for sA in (-1, 1):
                collapsed = collapse_pair(state, ctx.dir_x, sA, 0)
                self._pB[code, (sA + 1) >> 1] = prob_plus_pair(collapsed, ctx.dir_y, 1)

    def trial(self, code: int, u1: float, u2: float) -> tuple[int, int]:
        ctx = self.contexts[code]
        return singlet_joint_trial(ctx.dir_x, ctx.dir_y, u1, u2)

    def run(self, codes: np.ndarray, u1: np.ndarray, u2: np.ndarray):
        return _sample_two_step(self._pA, self._pB, codes, u1, u2)

    def analytic_correlator(self, code: int) -> float:
        ctx = self.contexts[code]
        return singlet_analytic_correlator(ctx.dir_x, ctx.dir_y)
