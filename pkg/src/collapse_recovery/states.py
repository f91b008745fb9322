"""Qubit states, Bloch geometry, leakage channels and heralded recovery.

The physical picture: a qubit lives in the two-dimensional space spanned by
|0> and |1>; an unstable |1> leaks into a third level |2| with probability p
(the channel ``apply_Cp``). Projecting back into the qubit space and keeping
only the no-leak outcomes is a heralded partial measurement
(``partial_measure_Mp``). Sandwiching two such rounds between pi-pulses
undoes the partial collapse exactly whenever both heralds succeed
(``recover_Rp``), with success probability 1 - p independent of the state.
``apply_Dp`` / ``recover_Rp_prime`` add the experimentally relevant
imperfection: a deshelving event returns population to |0> instead of
leaving the qubit space with branching ratio epsilon.

Bloch convention used throughout (and by the tomography module):
z(|0>) = +1, x = 2 Re rho_01, y = 2 Im rho_10. Any self-consistent
convention works, but round-tripping through tomography requires freezing
one; this is it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .errors import DegenerateHeraldError, DimensionError, ValidationError
from .linalg import ASSERT_TOL, EQ_TOL, VALIDATION_TOL, dagger, frobenius

# Branching ratio of the experimental deshelving pulse.
EPSILON_BRANCHING = 0.0355

# Herald probabilities at or below this are treated as degenerate.
HERALD_TOL = 1e-12

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)

_PAULIS = {"x": SIGMA_X, "y": SIGMA_Y, "z": SIGMA_Z}


# ---------------------------------------------------------------------------
# density matrices
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Validated density matrix of dimension 2, 3 or 4.

    Hermitian within 1e-10, unit trace within 1e-10, eigenvalues >= -1e-10.
    The underlying array is made read-only so instances can be shared freely.
    """

    mat: np.ndarray

    def __post_init__(self):
        m = linalg.as_matrix(self.mat, "density matrix")
        if frobenius(m - dagger(m)) > ASSERT_TOL:
            raise ValidationError("density matrix is not Hermitian within 1e-10")
        tr = np.trace(m)
        if abs(tr - 1.0) > ASSERT_TOL:
            raise ValidationError(f"density matrix trace {tr} is not 1 within 1e-10")
        if linalg.min_eigenvalue(m) < -ASSERT_TOL:
            raise ValidationError("density matrix has an eigenvalue below -1e-10")
        m = m.copy()
        m.flags.writeable = False
        object.__setattr__(self, "mat", m)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def entry(self, j: int, k: int) -> complex:
        return complex(self.mat[j, k])

    def close_to(self, other: "DensityMatrix", tol: float = EQ_TOL) -> bool:
        return linalg.matrices_close(self.mat, other.mat, tol)

    @staticmethod
    def from_pure(amplitudes) -> "DensityMatrix":
        v = np.asarray(amplitudes, dtype=complex)
        norm = np.linalg.norm(v)
        if abs(norm - 1.0) > ASSERT_TOL:
            raise ValidationError(f"state vector norm {norm} is not 1 within 1e-10")
        return DensityMatrix(np.outer(v, v.conj()))

    @staticmethod
    def basis_state(index: int, dim: int = 2) -> "DensityMatrix":
        v = np.zeros(dim, dtype=complex)
        v[index] = 1.0
        return DensityMatrix.from_pure(v)

    @staticmethod
    def maximally_mixed(dim: int = 2) -> "DensityMatrix":
        return DensityMatrix(np.eye(dim, dtype=complex) / dim)

    def embed(self, dim: int) -> "DensityMatrix":
        """Embed into a larger space, padding with zero rows/columns."""
        if dim < self.dim:
            raise DimensionError("cannot embed into a smaller space")
        out = np.zeros((dim, dim), dtype=complex)
        out[: self.dim, : self.dim] = self.mat
        return DensityMatrix(out)


def qubit_state(label: str) -> DensityMatrix:
    """The four standard inputs: |0>, |1>, |x> = (|0>+|1>)/sqrt2, |y>."""
    if label == "0":
        return DensityMatrix.basis_state(0)
    if label == "1":
        return DensityMatrix.basis_state(1)
    if label == "x":
        return DensityMatrix.from_pure([1.0 / np.sqrt(2.0), 1.0 / np.sqrt(2.0)])
    if label == "y":
        return DensityMatrix.from_pure([1.0 / np.sqrt(2.0), 1.0j / np.sqrt(2.0)])
    raise ValidationError(f"unknown state label {label!r}; expected one of 0, 1, x, y")


# ---------------------------------------------------------------------------
# Bloch geometry
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BlochVector:
    x: float
    y: float
    z: float

    def __post_init__(self):
        if self.norm() > 1.0 + 1e-9:
            raise ValidationError(f"Bloch vector norm {self.norm():.12f} exceeds 1")

    def norm(self) -> float:
        return float(np.sqrt(self.x**2 + self.y**2 + self.z**2))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])


def bloch_from_rho(rho: DensityMatrix) -> BlochVector:
    if rho.dim != 2:
        raise DimensionError("Bloch coordinates are defined for qubit states only")
    m = rho.mat
    return BlochVector(
        x=float(2.0 * m[0, 1].real),
        y=float(2.0 * m[1, 0].imag),
        z=float(m[0, 0].real - m[1, 1].real),
    )


def rho_from_bloch(b: BlochVector) -> DensityMatrix:
    m = 0.5 * (IDENTITY_2 + b.x * SIGMA_X + b.y * SIGMA_Y + b.z * SIGMA_Z)
    # A norm within rounding of 1 may push the small eigenvalue a hair below
    # -1e-10; nudge exactly-on-sphere inputs back inside.
    n = b.norm()
    if n > 1.0:
        m = 0.5 * (IDENTITY_2 + (b.x / n) * SIGMA_X + (b.y / n) * SIGMA_Y + (b.z / n) * SIGMA_Z)
    return DensityMatrix(m)


def bloch_sphere_state(direction) -> DensityMatrix:
    """Pure state with Bloch vector along the given unit direction."""
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    return rho_from_bloch(BlochVector(*d))


# ---------------------------------------------------------------------------
# unitaries
# ---------------------------------------------------------------------------


def ry(theta: float) -> np.ndarray:
    """Rotation by theta about y-hat."""
    c, s = np.cos(theta / 2.0), np.sin(theta / 2.0)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rz(phi: float) -> np.ndarray:
    """Rotation by phi about z-hat."""
    return np.diag([np.exp(-0.5j * phi), np.exp(0.5j * phi)])


def rx(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2.0), np.sin(theta / 2.0)
    return np.array([[c, -1.0j * s], [-1.0j * s, c]], dtype=complex)


def pi_pulse_y() -> np.ndarray:
    """180-degree rotation about y-hat (the experimenter's pi-pulse)."""
    return ry(np.pi)


def dephase(phi: float) -> np.ndarray:
    """exp(i phi sigma_z): the uncontrolled quasi-static spin rotation."""
    return np.diag([np.exp(1.0j * phi), np.exp(-1.0j * phi)])


def embed_qubit_unitary(u: np.ndarray, dim: int = 3) -> np.ndarray:
    """Extend a qubit unitary to act as the identity on the extra levels."""
    out = np.eye(dim, dtype=complex)
    out[:2, :2] = u
    return out


def is_unitary(u: np.ndarray, tol: float = VALIDATION_TOL) -> bool:
    u = np.asarray(u, dtype=complex)
    return frobenius(dagger(u) @ u - np.eye(u.shape[0])) <= tol


def apply_unitary(rho: DensityMatrix, u) -> DensityMatrix:
    u = linalg.as_matrix(u, "unitary")
    if u.shape[0] != rho.dim:
        raise DimensionError("unitary dimension does not match state dimension")
    if not is_unitary(u):
        raise ValidationError("matrix is not unitary within 1e-9")
    return DensityMatrix(u @ rho.mat @ dagger(u))


# ---------------------------------------------------------------------------
# heralded channels
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HeraldedResult:
    """Renormalized accepted state plus the probability of acceptance."""

    state: DensityMatrix
    success_prob: float


@dataclass(frozen=True, eq=False)
class HeraldedChannel:
    """Kraus operators partitioned into accept and reject outcomes.

    The same object drives both the deterministic channel action (sum over
    the accept set, renormalized) and shot-by-shot Monte Carlo sampling.
    Completeness over accept + reject is enforced at construction.
    """

    dim: int
    kraus_accept: tuple
    kraus_reject: tuple = field(default_factory=tuple)

    def __post_init__(self):
        total = np.zeros((self.dim, self.dim), dtype=complex)
        for _, k in tuple(self.kraus_accept) + tuple(self.kraus_reject):
            if k.shape != (self.dim, self.dim):
                raise DimensionError("Kraus operator shape does not match channel dim")
            total += dagger(k) @ k
        if frobenius(total - np.eye(self.dim)) > ASSERT_TOL:
            raise ValidationError("Kraus completeness violated: sum K+K != I within 1e-10")

    def operators(self) -> tuple:
        return tuple(self.kraus_accept) + tuple(self.kraus_reject)

    def unnormalized_accept(self, rho: DensityMatrix) -> np.ndarray:
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for _, k in self.kraus_accept:
            out += k @ rho.mat @ dagger(k)
        return out

    def apply_total(self, rho: DensityMatrix) -> DensityMatrix:
        """Trace-preserving action: sum over all outcomes."""
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for _, k in self.operators():
            out += k @ rho.mat @ dagger(k)
        return DensityMatrix(out)

    def apply_accepted(self, rho: DensityMatrix) -> HeraldedResult:
        """Condition on the accept herald and renormalize."""
        out = self.unnormalized_accept(rho)
        success = float(np.real(np.trace(out)))
        if success <= HERALD_TOL:
            raise DegenerateHeraldError("herald success probability vanishes")
        return HeraldedResult(state=DensityMatrix(out / success), success_prob=success)


def _check_probability(value: float, name: str):
    if not 0.0 <= value <= 1.0:
        raise ValidationError(f"{name} = {value} is outside [0, 1]")


def measurement_operator(p: float) -> np.ndarray:
    """M = |0><0| + sqrt(1-p) |1><1|: survival Kraus operator of strength p."""
    _check_probability(p, "p")
    return np.diag([1.0, np.sqrt(1.0 - p)]).astype(complex)


def partial_measure_channel(p: float) -> HeraldedChannel:
    """Partial measurement on the qubit space: accept M, reject the leak."""
    _check_probability(p, "p")
    leak = np.zeros((2, 2), dtype=complex)
    leak[1, 1] = np.sqrt(p)
    return HeraldedChannel(
        dim=2,
        kraus_accept=(("survive", measurement_operator(p)),),
        kraus_reject=(("leak", leak),),
    )


def deshelve_channel(p: float, epsilon: float = EPSILON_BRANCHING) -> HeraldedChannel:
    """Three-level deshelving pulse of strength p with branching ratio epsilon.

    Accept outcomes: survival (|1> amplitude shrinks by sqrt(1-p)) and the
    branching jump |0><1| with weight epsilon*p, which stays inside the qubit
    space and therefore passes the fluorescence herald. Reject outcome: the
    leak jump |2><1| with weight (1-epsilon)*p. Summed over all three this
    reproduces the deterministic channel action of ``apply_Dp`` exactly.
    """
    _check_probability(p, "p")
    _check_probability(epsilon, "epsilon")
    survive = np.diag([1.0, np.sqrt(1.0 - p), 1.0]).astype(complex)
    branch = np.zeros((3, 3), dtype=complex)
    branch[0, 1] = np.sqrt(epsilon * p)
    leak = np.zeros((3, 3), dtype=complex)
    leak[2, 1] = np.sqrt((1.0 - epsilon) * p)
    accept = [("survive", survive)]
    if epsilon * p > 0.0:
        accept.append(("branch", branch))
    reject = []
    if (1.0 - epsilon) * p > 0.0:
        reject.append(("leak", leak))
    return HeraldedChannel(dim=3, kraus_accept=tuple(accept), kraus_reject=tuple(reject))


# ---------------------------------------------------------------------------
# the channels, written entrywise
# ---------------------------------------------------------------------------


def apply_Cp(rho: DensityMatrix, p: float) -> DensityMatrix:
    """Leakage error: incoherent transfer |1> -> |2> with probability p."""
    if rho.dim != 3:
        raise DimensionError("leakage channel acts on the three-level space")
    _check_probability(p, "p")
    return apply_Dp(rho, p, epsilon=0.0)


def apply_Dp(rho: DensityMatrix, p: float, epsilon: float = EPSILON_BRANCHING) -> DensityMatrix:
    """Leakage with branching: a fraction epsilon of decays lands in |0>."""
    if rho.dim != 3:
        raise DimensionError("leakage channel acts on the three-level space")
    _check_probability(p, "p")
    _check_probability(epsilon, "epsilon")
    m = rho.mat
    s = np.sqrt(1.0 - p)
    out = np.array(
        [
            [m[0, 0] + epsilon * p * m[1, 1], m[0, 1] * s, m[0, 2]],
            [m[1, 0] * s, m[1, 1] * (1.0 - p), m[1, 2] * s],
            [m[2, 0], m[2, 1] * s, m[2, 2] + (1.0 - epsilon) * p * m[1, 1]],
        ],
        dtype=complex,
    )
    return DensityMatrix(out)


def partial_measure_Mp(rho: DensityMatrix, p: float) -> HeraldedResult:
    """Partial collapse: one leakage interval followed by a heralded
    projection back into the qubit space.

    success = 1 - rho_11 * p; the accepted state is M rho M+ renormalized.
    """
    if rho.dim != 2:
        raise DimensionError("partial measurement is defined on the qubit space")
    _check_probability(p, "p")
    return partial_measure_channel(p).apply_accepted(rho)


def recover_Rp(rho: DensityMatrix, p: float) -> HeraldedResult:
    """Heralded recovery: measure, pi-pulse, measure, pi-pulse.

    Conditioned on both heralds the output equals the input exactly for
    p < 1, and the joint success probability is 1 - p for every input state.
    """
    if rho.dim != 2:
        raise DimensionError("recovery is defined on the qubit space")
    _check_probability(p, "p")
    if p >= 1.0:
        raise DegenerateHeraldError("recovery is undefined at p = 1")
    first = partial_measure_Mp(rho, p)
    flipped = apply_unitary(first.state, SIGMA_Y)
    second = partial_measure_Mp(flipped, p)
    out = apply_unitary(second.state, SIGMA_Y)
    return HeraldedResult(state=out, success_prob=first.success_prob * second.success_prob)


def recover_Rp_prime(
    rho: DensityMatrix, p: float, epsilon: float = EPSILON_BRANCHING
) -> HeraldedResult:
    """Recovery as implemented, with the deshelving branching ratio.

    Embed in the three-level space, apply the imperfect leakage channel,
    pi-pulse, channel, pi-pulse, then project onto the qubit space and
    renormalize. Reduces to ``recover_Rp`` at epsilon = 0.
    """
    if rho.dim != 2:
        raise DimensionError("recovery is defined on the qubit space")
    _check_probability(p, "p")
    _check_probability(epsilon, "epsilon")
    y3 = embed_qubit_unitary(SIGMA_Y)
    r = rho.embed(3)
    r = apply_Dp(r, p, epsilon)
    r = apply_unitary(r, y3)
    r = apply_Dp(r, p, epsilon)
    r = apply_unitary(r, y3)
    block = r.mat[:2, :2]
    success = float(np.real(np.trace(block)))
    if success <= HERALD_TOL:
        raise DegenerateHeraldError("herald success probability vanishes")
    return HeraldedResult(state=DensityMatrix(block / success), success_prob=success)


# ---------------------------------------------------------------------------
# fidelities and distances
# ---------------------------------------------------------------------------


def fidelity(rho_i: DensityMatrix, rho_f: DensityMatrix) -> float:
    """Mixed-state fidelity F = tr[(sqrt(rho_i) rho_f sqrt(rho_i))^(1/2)].

    Amplitude convention: for pure inputs this is |<i|d>|, matching
    ``pure_fidelity_FM``.
    """
    if rho_i.dim != rho_f.dim:
        raise DimensionError("fidelity requires states of equal dimension")
    root = linalg.psd_sqrt(rho_i.mat)
    inner = root @ rho_f.mat @ root
    inner = 0.5 * (inner + dagger(inner))
    w = linalg.hermitian_eig(inner).eigenvalues
    w = np.clip(w, 0.0, None)
    return float(np.sum(np.sqrt(w)))


def trace_distance(rho_a: DensityMatrix, rho_b: DensityMatrix) -> float:
    """Half the trace norm of the difference."""
    if rho_a.dim != rho_b.dim:
        raise DimensionError("trace distance requires states of equal dimension")
    w = linalg.hermitian_eig(rho_a.mat - rho_b.mat).eigenvalues
    return float(0.5 * np.sum(np.abs(w)))


def pure_fidelity_FM(a: complex, b: complex, p: float) -> float:
    """Closed-form fidelity of the accepted partial-measurement state.

    For |i> = a|0> + b|1>:  F = (|a|^2 + |b|^2 sqrt(1-p)) / sqrt(1 - |b|^2 p).
    """
    _check_probability(p, "p")
    wa, wb = abs(a) ** 2, abs(b) ** 2
    if abs(wa + wb - 1.0) > ASSERT_TOL:
        raise ValidationError("input amplitudes are not normalized within 1e-10")
    denom = 1.0 - wb * p
    if denom <= HERALD_TOL:
        raise DegenerateHeraldError("accepted state does not exist: |b|^2 p = 1")
    return float((wa + wb * np.sqrt(1.0 - p)) / np.sqrt(denom))


def kraus_identity_check(rho: DensityMatrix, p: float, phi: float) -> float:
    """Deviation of the normalized double measurement-echo from the identity.

    Builds (N1 N2)^(-1/2) (M e^{i phi sigma_z} sigma_y)^2 for the given
    state's normalization factors and returns its Frobenius distance from I.
    The echo identity makes this vanish for every state, p < 1 and phi.
    """
    if rho.dim != 2:
        raise DimensionError("identity check is defined on the qubit space")
    _check_probability(p, "p")
    if p >= 1.0:
        raise DegenerateHeraldError("normalization degenerates at p = 1")
    m = measurement_operator(p)
    n1 = float(np.real(np.trace(m @ rho.mat @ dagger(m))))
    rho1 = SIGMA_Y @ (m @ rho.mat @ dagger(m)) @ dagger(SIGMA_Y) / n1
    n2 = 1.0 - p * float(np.real(rho1[1, 1]))
    step = m @ dephase(phi) @ SIGMA_Y
    total = (step @ step) / np.sqrt(n1 * n2)
    return frobenius(total - IDENTITY_2)
