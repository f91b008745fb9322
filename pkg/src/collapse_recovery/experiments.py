"""End-to-end experiment harness: p-sweeps, sphere-averaged fidelities,
repeated recovery asymptotics and the two-qubit protected encoding.

The sweep mirrors the real measurement campaign: for each input state the
reference state is taken from tomography at p = 0 (so the reported fidelity
is 1 at p = 0 by construction and isolates the collapse/recovery process from
preparation errors), then each (state, p) cell runs the full Monte Carlo
sequence, tomographs the output, and is compared against the closed-form
prediction of the imperfect recovery channel with no free parameters.

Sphere averages pool accepted repetitions: input states are drawn uniformly
on the Bloch sphere and each contributes in proportion to its herald success
probability, which is the number an experiment pooling all accepted shots
would report.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from . import rng
from .errors import AccuracyError, DegenerateHeraldError, ValidationError
from .states import (
    EPSILON_BRANCHING,
    fidelity,
    pure_fidelity_FM,
    qubit_state,
    recover_Rp_prime,
)
from .tomography import CountRecord, fidelity_with_errorbars, reconstruct_state
from .trajectories import (
    NoiseModel,
    build_recovery_sequence,
    build_repeated_recovery_sequence,
    run_batch,
)

STATE_LABELS = ("0", "1", "x", "y")
_EXPERIMENTS = ("sweep", "average", "repeat", "dfs", "tomo-demo")

SWEEP_CSV_HEADER = ("state", "p", "predicted_F", "predicted_F_M", "mc_F", "mc_sigma_F", "acceptance")


def default_p_grid(n: int = 10) -> tuple:
    """The sweep grid: n points evenly spaced on [0.01, 0.94]."""
    return tuple(np.linspace(0.01, 0.94, n))


def shots_schedule(p: float) -> int:
    """Per-point repetitions: 5,000 at p = 0.1 rising linearly to 12,000 at
    p = 0.9, clamped outside that range."""
    raw = 5000.0 + (12000.0 - 5000.0) * (p - 0.1) / 0.8
    return int(round(min(12000.0, max(5000.0, raw))))


@dataclass(frozen=True)
class ExperimentConfig:
    """Flat configuration for all CLI experiments (JSON-serializable)."""

    experiment: str = "sweep"
    p_values: tuple = field(default_factory=default_p_grid)
    epsilon: float = EPSILON_BRANCHING
    shots: int | None = None
    seed: int = 20260810
    states: tuple = STATE_LABELS
    cpmg: bool = True
    n_bootstrap: int = 200
    phi_kind: str = "none"
    phi_scale: float = 0.0
    phi_offset: float = 0.0
    pi_pulse_angle_error: float = 0.0
    output_path: str = ""
    # average
    protocol: str = "Rprime"
    p: float = 0.8
    quadrature: str = "fibonacci"
    nodes: int = 20000
    # repeat
    gamma_t: float = 1.0
    n_repeats: int = 1000
    # dfs
    a_re: float = 0.7071067811865476
    a_im: float = 0.0
    b_re: float = -0.7071067811865476
    b_im: float = 0.0

    def __post_init__(self):
        if self.experiment not in _EXPERIMENTS:
            raise ValidationError(f"experiment must be one of {_EXPERIMENTS}")
        for p in self.p_values:
            if not 0.0 <= p <= 1.0:
                raise ValidationError(f"p value {p} outside [0, 1]")
        if self.shots is not None and self.shots < 1:
            raise ValidationError("shots must be at least 1")
        for s in self.states:
            if s not in STATE_LABELS:
                raise ValidationError(f"unknown input state {s!r}")
        object.__setattr__(self, "p_values", tuple(float(p) for p in self.p_values))
        object.__setattr__(self, "states", tuple(self.states))

    def noise_model(self) -> NoiseModel:
        return NoiseModel(
            phi_kind=self.phi_kind,
            phi_scale=self.phi_scale,
            phi_offset=self.phi_offset,
            pi_pulse_angle_error=self.pi_pulse_angle_error,
        )

    def shots_for(self, p: float) -> int:
        return self.shots if self.shots is not None else shots_schedule(p)

    @staticmethod
    def from_dict(data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(ExperimentConfig)}
        unknown = set(data) - known
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        data = dict(data)
        for key in ("p_values", "states"):
            if key in data and data[key] is not None:
                data[key] = tuple(data[key])
        return ExperimentConfig(**data)

    @staticmethod
    def from_file(path) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise ValidationError("config file must hold a flat JSON object")
        return ExperimentConfig.from_dict(data)

    def with_overrides(self, **kwargs) -> "ExperimentConfig":
        kwargs = {k: v for k, v in kwargs.items() if v is not None}
        return replace(self, **kwargs) if kwargs else self

    def to_json(self) -> str:
        data = asdict(self)
        data["p_values"] = list(self.p_values)
        data["states"] = list(self.states)
        return json.dumps(data, sort_keys=True, indent=2)


def _quantize(x: float) -> float:
    """Round to the 12 significant digits that the CSV schema carries."""
    return float(f"{x:.12g}")


@dataclass(frozen=True)
class SweepRow:
    state: str
    p: float
    predicted_F: float
    predicted_F_M: float
    mc_F: float
    mc_sigma_F: float
    acceptance: float

    def as_csv_fields(self) -> tuple:
        return (
            self.state,
            f"{self.p:.12g}",
            f"{self.predicted_F:.12g}",
            f"{self.predicted_F_M:.12g}",
            f"{self.mc_F:.12g}",
            f"{self.mc_sigma_F:.12g}",
            f"{self.acceptance:.12g}",
        )


def _ideal_amplitudes(label: str) -> tuple:
    vec = {
        "0": (1.0, 0.0),
        "1": (0.0, 1.0),
        "x": (1.0 / np.sqrt(2.0), 1.0 / np.sqrt(2.0)),
        "y": (1.0 / np.sqrt(2.0), 1.0j / np.sqrt(2.0)),
    }[label]
    return vec


def _tomography_records(cfg: ExperimentConfig, label: str, p: float, p_index: int):
    """Run the full sequence along all three axes and return count records."""
    shots_axis = max(1, cfg.shots_for(p) // 3)
    noise = cfg.noise_model()
    records = []
    total_shots = 0
    total_accept = 0
    for axis_index, axis in enumerate(("x", "y", "z")):
        seq = build_recovery_sequence(
            initial=label, p=p, epsilon=cfg.epsilon, analysis_axis=axis, cpmg=cfg.cpmg
        )
        state_index = STATE_LABELS.index(label)
        batch = run_batch(
            seq,
            noise,
            shots_axis,
            rng.derive_seed(cfg.seed, state_index, p_index, axis_index),
        )
        if batch.accept_count == 0:
            raise DegenerateHeraldError(
                f"no accepted shots for state {label} at p = {p}; increase shots"
            )
        records.append(CountRecord(axis=axis, n_up=batch.c_up_count, n_total=batch.accept_count))
        total_shots += batch.n_shots
        total_accept += batch.accept_count
    return records, total_accept / total_shots


# Index tag for the p = 0 reference tomography in seed derivation.
_REFERENCE_TAG = 1_000_003


def sweep_p(cfg: ExperimentConfig):
    """Fidelity sweep over (input state, p) with Monte Carlo tomography.

    Returns the list of ``SweepRow``; writing to disk is the caller's choice
    via ``write_sweep_csv``.
    """
    rows = []
    for label in cfg.states:
        ref_records, _ = _tomography_records(cfg, label, 0.0, _REFERENCE_TAG)
        rho_ref = reconstruct_state(ref_records)
        ideal = qubit_state(label)
        a, b = _ideal_amplitudes(label)
        for p_index, p in enumerate(cfg.p_values):
            predicted = fidelity(ideal, recover_Rp_prime(ideal, p, cfg.epsilon).state)
            predicted_m = pure_fidelity_FM(a, b, p)
            records, acceptance = _tomography_records(cfg, label, p, p_index)
            boot_seed = rng.derive_seed(cfg.seed, STATE_LABELS.index(label), p_index, 777)
            mc_f, mc_sigma = fidelity_with_errorbars(
                rho_ref, records, cfg.n_bootstrap, boot_seed
            )
            rows.append(
                SweepRow(
                    state=label,
                    p=_quantize(p),
                    predicted_F=_quantize(predicted),
                    predicted_F_M=_quantize(predicted_m),
                    mc_F=_quantize(mc_f),
                    mc_sigma_F=_quantize(mc_sigma),
                    acceptance=_quantize(acceptance),
                )
            )
    return rows


def sweep_csv_text(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_CSV_HEADER)
    for row in rows:
        writer.writerow(row.as_csv_fields())
    return buf.getvalue()


def parse_sweep_csv(text: str):
    reader = csv.reader(io.StringIO(text))
    header = tuple(next(reader))
    if header != SWEEP_CSV_HEADER:
        raise ValidationError(f"unexpected sweep CSV header: {header}")
    rows = []
    for rec in reader:
        rows.append(
            SweepRow(
                state=rec[0],
                p=float(rec[1]),
                predicted_F=float(rec[2]),
                predicted_F_M=float(rec[3]),
                mc_F=float(rec[4]),
                mc_sigma_F=float(rec[5]),
                acceptance=float(rec[6]),
            )
        )
    return rows


# ---------------------------------------------------------------------------
# sphere-averaged fidelity
# ---------------------------------------------------------------------------


def fibonacci_sphere(n: int) -> np.ndarray:
    """Deterministic, nearly-uniform unit vectors (golden-angle lattice)."""
    k = np.arange(n)
    z = 1.0 - (2.0 * k + 1.0) / n
    azimuth = np.pi * (3.0 - np.sqrt(5.0)) * k
    r = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    return np.column_stack([r * np.cos(azimuth), r * np.sin(azimuth), z])


def random_sphere(n: int, seed: int) -> np.ndarray:
    gen = np.random.default_rng(seed)
    z = gen.uniform(-1.0, 1.0, n)
    azimuth = gen.uniform(0.0, 2.0 * np.pi, n)
    r = np.sqrt(1.0 - z * z)
    return np.column_stack([r * np.cos(azimuth), r * np.sin(azimuth), z])


def _pure_blocks(directions: np.ndarray) -> np.ndarray:
    """(n, 2, 2) stack of pure density matrices for unit Bloch vectors."""
    x, y, z = directions[:, 0], directions[:, 1], directions[:, 2]
    out = np.empty((len(directions), 2, 2), dtype=complex)
    out[:, 0, 0] = 0.5 * (1.0 + z)
    out[:, 1, 1] = 0.5 * (1.0 - z)
    out[:, 0, 1] = 0.5 * (x - 1.0j * y)
    out[:, 1, 0] = 0.5 * (x + 1.0j * y)
    return out


def _dp_blocks(blocks: np.ndarray, p: float, epsilon: float) -> np.ndarray:
    """Qubit-block action of the leakage channel, vectorized over states."""
    s = np.sqrt(1.0 - p)
    out = np.empty_like(blocks)
    out[:, 0, 0] = blocks[:, 0, 0] + epsilon * p * blocks[:, 1, 1]
    out[:, 0, 1] = s * blocks[:, 0, 1]
    out[:, 1, 0] = s * blocks[:, 1, 0]
    out[:, 1, 1] = (1.0 - p) * blocks[:, 1, 1]
    return out


def _pi_conjugate(blocks: np.ndarray) -> np.ndarray:
    """sigma_y rho sigma_y, vectorized."""
    out = np.empty_like(blocks)
    out[:, 0, 0] = blocks[:, 1, 1]
    out[:, 1, 1] = blocks[:, 0, 0]
    out[:, 0, 1] = -blocks[:, 1, 0]
    out[:, 1, 0] = -blocks[:, 0, 1]
    return out


def _protocol_outputs(blocks: np.ndarray, protocol: str, p: float, epsilon: float):
    """Unnormalized accepted output blocks and herald probabilities."""
    if protocol == "M":
        s = np.sqrt(1.0 - p)
        out = np.empty_like(blocks)
        out[:, 0, 0] = blocks[:, 0, 0]
        out[:, 0, 1] = s * blocks[:, 0, 1]
        out[:, 1, 0] = s * blocks[:, 1, 0]
        out[:, 1, 1] = (1.0 - p) * blocks[:, 1, 1]
    elif protocol == "Rprime":
        out = _pi_conjugate(_dp_blocks(_pi_conjugate(_dp_blocks(blocks, p, epsilon)), p, epsilon))
    else:
        raise ValidationError(f"protocol must be 'M' or 'Rprime', got {protocol!r}")
    weights = np.real(out[:, 0, 0] + out[:, 1, 1])
    return out, weights


def average_fidelity(
    p: float,
    protocol: str = "Rprime",
    epsilon: float = EPSILON_BRANCHING,
    quadrature: str = "fibonacci",
    nodes: int = 20000,
    seed: int = 0,
) -> float:
    """Herald-weighted mean fidelity over pure states uniform on the sphere.

    Each input state contributes its accepted-output fidelity weighted by its
    herald probability, i.e. the average an experiment would measure after
    pooling all accepted repetitions of uniformly drawn input states.
    """
    if not 0.0 <= p < 1.0:
        raise ValidationError("average fidelity requires p in [0, 1)")
    if nodes < 100:
        raise ValidationError("quadrature needs at least 100 nodes")
    if quadrature == "fibonacci":
        directions = fibonacci_sphere(nodes)
    elif quadrature == "random":
        directions = random_sphere(nodes, seed)
    else:
        raise ValidationError(f"quadrature must be 'fibonacci' or 'random', got {quadrature!r}")
    blocks = _pure_blocks(directions)
    out, weights = _protocol_outputs(blocks, protocol, p, epsilon)
    # overlap of the pure input with the renormalized accepted output;
    # fidelity of a pure reference reduces to sqrt(<psi|rho|psi>)
    overlap = np.real(np.einsum("nij,nji->n", blocks, out))
    fvals = np.sqrt(np.clip(overlap / weights, 0.0, None))
    return float(np.sum(weights * fvals) / np.sum(weights))


def average_fidelity_converged(
    p: float,
    protocol: str = "Rprime",
    epsilon: float = EPSILON_BRANCHING,
    quadrature: str = "fibonacci",
    nodes: int = 10000,
    tol: float = 1e-4,
    seed: int = 0,
) -> tuple:
    """Average fidelity with a node-doubling convergence check.

    Returns (value at 4n nodes, |difference to n nodes|); raises
    ``AccuracyError`` when the two disagree beyond ``tol``.
    """
    coarse = average_fidelity(p, protocol, epsilon, quadrature, nodes, seed)
    fine = average_fidelity(p, protocol, epsilon, quadrature, 4 * nodes, seed + 1)
    delta = abs(fine - coarse)
    if delta > tol:
        raise AccuracyError(
            f"sphere average not converged: |F(4n) - F(n)| = {delta:.2e} > {tol:.0e}"
        )
    return fine, delta


# ---------------------------------------------------------------------------
# repeated recovery
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RepeatedRecoveryResult:
    n: int
    p_segment: float
    success_prob: float
    asymptote: float


def repeated_recovery(gamma_t: float, n: int) -> RepeatedRecoveryResult:
    """Ideal recovery applied n times against exponential leakage decay.

    The decay runs for total (dimensionless) time gamma_t, split into 2n
    equal intervals; one recovery spans two intervals with per-interval
    strength p_seg = 1 - exp(-gamma_t / 2n) and succeeds with probability
    1 - p_seg, so the overall success is exp(-gamma_t / 2) for every n.
    """
    if gamma_t < 0.0:
        raise ValidationError("gamma_t must be nonnegative")
    if n < 1:
        raise ValidationError("n must be at least 1")
    p_seg = 1.0 - np.exp(-gamma_t / (2.0 * n))
    success = (1.0 - p_seg) ** n
    return RepeatedRecoveryResult(
        n=n, p_segment=float(p_seg), success_prob=float(success), asymptote=float(np.exp(-gamma_t / 2.0))
    )


def mc_repeated_recovery(gamma_t: float, n: int, shots: int, seed: int) -> tuple:
    """Monte Carlo acceptance fraction of n chained recoveries (and its
    binomial sigma)."""
    result = repeated_recovery(gamma_t, n)
    seq = build_repeated_recovery_sequence(initial="x", p_segment=result.p_segment, n_blocks=n)
    batch = run_batch(seq, NoiseModel.none(), shots, seed)
    return batch.acceptance_fraction, batch.acceptance_sigma


# ---------------------------------------------------------------------------
# two-qubit protected encoding
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DfsResult:
    post_selected_fidelity: float
    survival_prob: float


def dfs_two_qubit(p: float, a: complex, b: complex) -> DfsResult:
    """Leakage acting on both halves of a|01> + b|10>, post-selected on the
    joint qubit space.

    Both branches carry exactly one unstable excitation, so the accepted
    state is unchanged (fidelity 1) and the survival probability is 1 - p.
    """
    if not 0.0 <= p <= 1.0:
        raise ValidationError(f"p = {p} outside [0, 1]")
    norm = abs(a) ** 2 + abs(b) ** 2
    if abs(norm - 1.0) > 1e-10:
        raise ValidationError("logical amplitudes are not normalized")
    survive = np.diag([1.0, np.sqrt(1.0 - p), 1.0]).astype(complex)
    leak = np.zeros((3, 3), dtype=complex)
    leak[2, 1] = np.sqrt(p)
    psi = np.zeros(9, dtype=complex)
    psi[1] = a  # |0>|1>
    psi[3] = b  # |1>|0>
    rho9 = np.outer(psi, psi.conj())
    out9 = np.zeros_like(rho9)
    for k1 in (survive, leak):
        for k2 in (survive, leak):
            k = np.kron(k1, k2)
            out9 += k @ rho9 @ k.conj().T
    qubit_idx = [0, 1, 3, 4]  # |00>, |01>, |10>, |11> within the 3x3 product
    block = out9[np.ix_(qubit_idx, qubit_idx)]
    survival = float(np.real(np.trace(block)))
    if survival <= 1e-12:
        raise DegenerateHeraldError("no population remains in the protected space")
    logical = np.array([0.0, a, b, 0.0], dtype=complex)
    post = block / survival
    overlap = float(np.real(logical.conj() @ post @ logical))
    return DfsResult(
        post_selected_fidelity=float(np.sqrt(max(0.0, overlap))), survival_prob=survival
    )
