"""Monte Carlo single-shot simulation of the heralded-recovery pulse sequence.

A shot carries a pure three-level state through the sequence: deshelving
pulses sample one Kraus outcome with Born-rule probabilities, detection
intervals herald whether the state stayed in the qubit space (rejected shots
collapse to the leaked level), a quasi-static dephasing angle phi is drawn
once per shot, and pi-pulses (optionally with a deterministic angle error)
provide the echo / CPMG dynamical decoupling. Fluorescence detection itself
is modeled as ideal.

All randomness comes from counter-based streams (see ``rng``): variate =
f(seed, shot index, slot), so batches are reproducible and order-independent
regardless of chunking or worker count.

The module also contains a deterministic twin, ``evaluate_deterministic``,
which pushes a density matrix through the same sequence using the channel
maps; Monte Carlo estimates are tested against it throughout the suite.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import rng
from .errors import ValidationError
from .states import (
    EPSILON_BRANCHING,
    DensityMatrix,
    apply_Dp,
    dephase,  # noqa: F401  (re-exported convenience for sequence users)
    embed_qubit_unitary,
    qubit_state,
    ry,
    rx,
    rz,
)

_PHI_KINDS = ("none", "gaussian", "uniform")
_AXES = ("x", "y", "z")

# Nominal wait weight of one CPMG inter-pulse interval; detection windows are
# modeled as instantaneous, so only Wait elements accrue dephasing.
_TAU = 1.0


# ---------------------------------------------------------------------------
# sequence elements
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Prepare:
    """Set the shot to a pure qubit state (ideal preparation)."""

    amplitudes: tuple


@dataclass(frozen=True)
class PiPulse:
    """Echo pi-pulse; its angle picks up the noise model's offset error."""


@dataclass(frozen=True, eq=False)
class Unitary:
    matrix: np.ndarray
    label: str = ""


@dataclass(frozen=True)
class Deshelve:
    p: float
    epsilon: float

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValidationError(f"deshelve strength p = {self.p} outside [0, 1]")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValidationError(f"branching ratio {self.epsilon} outside [0, 1]")


@dataclass(frozen=True)
class Detect:
    label: str


@dataclass(frozen=True)
class Wait:
    weight: float

    def __post_init__(self):
        if self.weight < 0.0:
            raise ValidationError("wait weight must be nonnegative")


@dataclass(frozen=True)
class NoiseModel:
    """Quasi-static dephasing plus a deterministic pi-pulse angle error.

    One phi is drawn per shot: phi_offset plus a Gaussian or uniform spread.
    A Wait element of weight w rotates the Bloch vector by w * phi about z.
    """

    phi_kind: str = "none"
    phi_scale: float = 0.0
    phi_offset: float = 0.0
    pi_pulse_angle_error: float = 0.0

    def __post_init__(self):
        if self.phi_kind not in _PHI_KINDS:
            raise ValidationError(f"phi_kind must be one of {_PHI_KINDS}")
        if self.phi_scale < 0.0:
            raise ValidationError("phi_scale must be nonnegative")

    @staticmethod
    def none() -> "NoiseModel":
        return NoiseModel()

    def sample_phi(self, seed: int, shot_indices: np.ndarray) -> np.ndarray:
        base = np.full(len(shot_indices), self.phi_offset)
        if self.phi_kind == "gaussian" and self.phi_scale > 0.0:
            base = base + self.phi_scale * rng.counter_normals(seed, shot_indices, 0)
        elif self.phi_kind == "uniform" and self.phi_scale > 0.0:
            u = rng.counter_uniforms(seed, shot_indices, 0)
            base = base + self.phi_scale * (2.0 * u - 1.0)
        return base


@dataclass(frozen=True)
class TrajectoryOutcome:
    herald_A: int
    herald_B: int
    detect_C: int
    sampled_phi: float


@dataclass(frozen=True, eq=False)
class BatchStats:
    """Order-independent aggregate of a batch of shots."""

    n_shots: int
    axis: str
    accept_count: int
    c_up_count: int
    mean_accept_state: np.ndarray | None = None
    collected_count: int = 0

    @property
    def acceptance_fraction(self) -> float:
        return self.accept_count / self.n_shots

    @property
    def acceptance_sigma(self) -> float:
        f = self.acceptance_fraction
        return float(np.sqrt(f * (1.0 - f) / self.n_shots))

    @property
    def c_up_fraction(self) -> float:
        if self.accept_count == 0:
            return 0.0
        return self.c_up_count / self.accept_count


@dataclass(frozen=True, eq=False)
class PulseSequence:
    """Ordered pulse elements plus bookkeeping for analysis and sampling."""

    elements: tuple
    analysis_axis: str
    initial_label: str
    p: float
    epsilon: float
    cpmg: bool
    stage: str
    analysis_index: int = field(init=False)

    def __post_init__(self):
        idx = [
            i
            for i, el in enumerate(self.elements)
            if isinstance(el, Unitary) and el.label == "analysis"
        ]
        if len(idx) != 1:
            raise ValidationError("sequence must contain exactly one analysis rotation")
        object.__setattr__(self, "analysis_index", idx[0])

    def random_slots(self) -> int:
        """Slots consumed per shot: two reserved for phi, one per sample."""
        n = sum(1 for el in self.elements if isinstance(el, (Deshelve, Detect)))
        return 2 + n

    def net_dephasing_weight(self) -> float:
        """Signed sum of wait weights with sign flipped at each pi-pulse.

        Zero means a quasi-static phi cancels exactly (echo condition).
        """
        sign, total = 1.0, 0.0
        for el in self.elements:
            if isinstance(el, Wait):
                total += sign * el.weight
            elif isinstance(el, PiPulse):
                sign = -sign
        return total

    def pi_pulse_count(self) -> int:
        return sum(1 for el in self.elements if isinstance(el, PiPulse))


def analysis_rotation(axis: str) -> np.ndarray:
    """Qubit rotation mapping the measurement axis onto +z."""
    if axis == "z":
        return np.eye(2, dtype=complex)
    if axis == "x":
        return ry(-np.pi / 2.0)
    if axis == "y":
        return rx(np.pi / 2.0)
    raise ValidationError(f"analysis axis must be one of {_AXES}, got {axis!r}")


def _initial_amplitudes(initial) -> tuple:
    if isinstance(initial, str):
        m = qubit_state(initial).mat
        # pure by construction; recover amplitudes from the projector
        w, v = np.linalg.eigh(m)
        vec = v[:, int(np.argmax(w))]
        return (complex(vec[0]), complex(vec[1]))
    a, b = initial
    norm = np.sqrt(abs(a) ** 2 + abs(b) ** 2)
    if abs(norm - 1.0) > 1e-10:
        raise ValidationError("initial amplitudes are not normalized")
    return (complex(a), complex(b))


def build_recovery_sequence(
    initial="x",
    p: float = 0.5,
    epsilon: float = EPSILON_BRANCHING,
    analysis_axis: str = "z",
    cpmg: bool = True,
    stage: str = "full",
) -> PulseSequence:
    """Assemble the experimental cycle.

    ``stage="full"`` is the complete heralded-recovery run: deshelve, herald
    A, pi-pulse, deshelve, herald B, the decoupling block, analysis rotation,
    final detection. With ``cpmg=True`` the decoupling block holds three
    further pi-pulses with symmetric wait weights, so the four pi-pulses form
    a CPMG train whose net dephasing weight is exactly zero; with
    ``cpmg=False`` the waits remain but the extra pulses are absent, leaving
    a nonzero net weight that exposes quasi-static dephasing.

    ``stage="collapse"`` truncates after herald A plus the single pi-pulse
    (an odd pulse count), which is the mid-sequence point used to observe the
    bare partial collapse before any recovery.
    """
    amps = _initial_amplitudes(initial)
    label = initial if isinstance(initial, str) else "custom"
    els: list = [Prepare(amps), Deshelve(p, epsilon), Detect("A"), Wait(_TAU / 2), PiPulse()]
    if stage == "collapse":
        els.append(Unitary(embed_qubit_unitary(analysis_rotation(analysis_axis)), "analysis"))
        els.append(Detect("C"))
    elif stage == "full":
        els += [Deshelve(p, epsilon), Detect("B")]
        if cpmg:
            els += [Wait(_TAU), PiPulse(), Wait(_TAU), PiPulse(), Wait(_TAU), PiPulse(), Wait(_TAU / 2)]
        else:
            els += [Wait(_TAU), Wait(_TAU), Wait(_TAU), Wait(_TAU / 2)]
        els.append(Unitary(embed_qubit_unitary(analysis_rotation(analysis_axis)), "analysis"))
        els.append(Detect("C"))
    else:
        raise ValidationError(f"stage must be 'full' or 'collapse', got {stage!r}")
    return PulseSequence(
        elements=tuple(els),
        analysis_axis=analysis_axis,
        initial_label=label,
        p=p,
        epsilon=epsilon,
        cpmg=cpmg,
        stage=stage,
    )


def build_repeated_recovery_sequence(
    initial="x",
    p_segment: float = 0.1,
    n_blocks: int = 1,
    analysis_axis: str = "z",
) -> PulseSequence:
    """n back-to-back ideal recovery blocks (epsilon = 0), heralded at every
    detection; used for the repeated-recovery asymptotics."""
    if n_blocks < 1:
        raise ValidationError("n_blocks must be at least 1")
    amps = _initial_amplitudes(initial)
    els: list = [Prepare(amps)]
    for _ in range(n_blocks):
        els += [
            Deshelve(p_segment, 0.0),
            Detect("A"),
            PiPulse(),
            Deshelve(p_segment, 0.0),
            Detect("B"),
            PiPulse(),
        ]
    els.append(Unitary(embed_qubit_unitary(analysis_rotation(analysis_axis)), "analysis"))
    els.append(Detect("C"))
    return PulseSequence(
        elements=tuple(els),
        analysis_axis=analysis_axis,
        initial_label=initial if isinstance(initial, str) else "custom",
        p=p_segment,
        epsilon=0.0,
        cpmg=False,
        stage="repeated",
    )


# ---------------------------------------------------------------------------
# the sampler
# ---------------------------------------------------------------------------


def _normalize_rows(psi: np.ndarray):
    norms = np.sqrt(np.sum(np.abs(psi) ** 2, axis=1))
    psi /= norms[:, None]


def _unit_phase(z: np.ndarray) -> np.ndarray:
    mag = np.abs(z)
    out = np.ones_like(z)
    nz = mag > 0.0
    out[nz] = z[nz] / mag[nz]
    return out


def _simulate_range(seq, noise, seed, lo, hi, collect_state=False):
    shots = np.arange(lo, hi, dtype=np.uint64)
    n = hi - lo
    psi = np.zeros((n, 3), dtype=complex)
    phi = noise.sample_phi(seed, shots)
    herald_a = np.ones(n, dtype=bool)
    herald_b = np.ones(n, dtype=bool)
    accepted = np.ones(n, dtype=bool)
    det_c = np.zeros(n, dtype=bool)
    state_sum = np.zeros((2, 2), dtype=complex) if collect_state else None
    collected = 0
    slot = 2
    pi_matrix = embed_qubit_unitary(ry(np.pi + noise.pi_pulse_angle_error))

    for i, el in enumerate(seq.elements):
        if isinstance(el, Prepare):
            psi[:, 0] = el.amplitudes[0]
            psi[:, 1] = el.amplitudes[1]
            psi[:, 2] = 0.0
        elif isinstance(el, PiPulse):
            psi = psi @ pi_matrix.T
        elif isinstance(el, Unitary):
            if el.label == "analysis" and collect_state:
                mask = accepted
                state_sum += np.einsum("si,sj->ij", psi[mask, :2], psi[mask, :2].conj())
                collected += int(np.count_nonzero(mask))
            psi = psi @ el.matrix.T
        elif isinstance(el, Wait):
            ang = 0.5 * el.weight * phi
            psi[:, 0] *= np.exp(-1.0j * ang)
            psi[:, 1] *= np.exp(1.0j * ang)
        elif isinstance(el, Deshelve):
            u = rng.counter_uniforms(seed, shots, slot)
            slot += 1
            p1 = np.abs(psi[:, 1]) ** 2
            p_leak = (1.0 - el.epsilon) * el.p * p1
            p_branch = el.epsilon * el.p * p1
            leak = u < p_leak
            branch = ~leak & (u < p_leak + p_branch)
            survive = ~leak & ~branch
            if np.any(leak):
                ph = _unit_phase(psi[leak, 1])
                psi[leak] = 0.0
                psi[leak, 2] = ph
            if np.any(branch):
                ph = _unit_phase(psi[branch, 1])
                psi[branch] = 0.0
                psi[branch, 0] = ph
            psi[survive, 1] *= np.sqrt(1.0 - el.p)
            _normalize_rows(psi)
        elif isinstance(el, Detect):
            u = rng.counter_uniforms(seed, shots, slot)
            slot += 1
            if el.label == "C":
                det_c = u < np.abs(psi[:, 0]) ** 2
            else:
                fluor = u < np.abs(psi[:, 2]) ** 2
                if np.any(fluor):
                    psi[fluor] = 0.0
                    psi[fluor, 2] = 1.0
                keep = ~fluor
                psi[keep, 2] = 0.0
                _normalize_rows(psi)
                if el.label == "A":
                    herald_a &= keep
                else:
                    herald_b &= keep
                accepted &= keep
        else:  # pragma: no cover - guarded by builders
            raise ValidationError(f"unknown sequence element {el!r}")

    return {
        "herald_a": herald_a,
        "herald_b": herald_b,
        "accepted": accepted,
        "det_c": det_c,
        "phi": phi,
        "state_sum": state_sum,
        "collected": collected,
    }


def sample_shot(
    seq: PulseSequence, noise: NoiseModel, seed: int, shot_index: int = 0
) -> TrajectoryOutcome:
    """Simulate one shot; shots are addressed by (seed, shot_index)."""
    r = _simulate_range(seq, noise, seed, shot_index, shot_index + 1)
    return TrajectoryOutcome(
        herald_A=int(r["herald_a"][0]),
        herald_B=int(r["herald_b"][0]),
        detect_C=int(r["det_c"][0]),
        sampled_phi=float(r["phi"][0]),
    )


def run_batch(
    seq: PulseSequence,
    noise: NoiseModel,
    n_shots: int,
    seed: int,
    chunk_size: int = 65536,
    collect_state: bool = False,
) -> BatchStats:
    """Simulate shots [0, n_shots) and reduce to order-independent counts.

    ``collect_state=True`` additionally averages the exact per-shot pure
    states of herald-accepted shots at the point just before the analysis
    rotation (the Monte Carlo estimate of the protocol's output state).
    """
    if n_shots < 1:
        raise ValidationError("n_shots must be at least 1")
    accept = 0
    c_up = 0
    state_sum = np.zeros((2, 2), dtype=complex)
    collected = 0
    for lo in range(0, n_shots, chunk_size):
        hi = min(lo + chunk_size, n_shots)
        r = _simulate_range(seq, noise, seed, lo, hi, collect_state=collect_state)
        accept += int(np.count_nonzero(r["accepted"]))
        c_up += int(np.count_nonzero(r["accepted"] & r["det_c"]))
        if collect_state:
            state_sum += r["state_sum"]
            collected += r["collected"]
    mean_state = None
    if collect_state and collected > 0:
        mean_state = state_sum / collected
    return BatchStats(
        n_shots=n_shots,
        axis=seq.analysis_axis,
        accept_count=accept,
        c_up_count=c_up,
        mean_accept_state=mean_state,
        collected_count=collected,
    )


# ---------------------------------------------------------------------------
# deterministic twin
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DeterministicOutcome:
    mid_state: DensityMatrix
    success_prob: float
    p_up: float


def evaluate_deterministic(
    seq: PulseSequence, noise: NoiseModel = NoiseModel(), phi: float = 0.0
) -> DeterministicOutcome:
    """Push a density matrix through the sequence with the channel maps.

    ``phi`` is the (fixed) quasi-static angle; heralded detections project
    onto the qubit space and multiply into the success probability. Returns
    the state just before the analysis rotation, the herald probability, and
    the Born probability of the + outcome at the final detection.
    """
    rho = None
    success = 1.0
    mid = None
    p_up = 0.0
    pi2 = ry(np.pi + noise.pi_pulse_angle_error)
    for el in seq.elements:
        if isinstance(el, Prepare):
            v = np.zeros(3, dtype=complex)
            v[0], v[1] = el.amplitudes
            rho = np.outer(v, v.conj())
        elif isinstance(el, PiPulse):
            u = embed_qubit_unitary(pi2)
            rho = u @ rho @ u.conj().T
        elif isinstance(el, Unitary):
            if el.label == "analysis":
                block = rho[:2, :2]
                mid = DensityMatrix(block / np.trace(block))
            rho = el.matrix @ rho @ el.matrix.conj().T
        elif isinstance(el, Wait):
            u = embed_qubit_unitary(rz(el.weight * phi))
            rho = u @ rho @ u.conj().T
        elif isinstance(el, Deshelve):
            rho = apply_Dp(DensityMatrix(rho), el.p, el.epsilon).mat.copy()
        elif isinstance(el, Detect):
            if el.label == "C":
                p_up = float(np.real(rho[0, 0]) / np.real(np.trace(rho[:2, :2])))
            else:
                block = rho[:2, :2]
                tr = float(np.real(np.trace(block)))
                success *= tr
                rho = np.zeros((3, 3), dtype=complex)
                rho[:2, :2] = block / tr
    return DeterministicOutcome(mid_state=mid, success_prob=success, p_up=p_up)
