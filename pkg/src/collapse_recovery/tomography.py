"""Single-qubit state tomography from finite counts, and process maps.

Estimator: linear inversion of the three Bloch components from per-axis
up-counts, followed by a radial physicality projection (an estimate outside
the Bloch ball is rescaled onto its surface). Deterministic, dependency-free
and accurate at the shot counts used here; maximum-likelihood fitting is
deliberately out of scope.

Processes are represented as affine Bloch maps b_out = A b_in + c, fitted by
least squares from the action on a spanning set of input states; the four
canonical inputs |0>, |1>, |x>, |y> determine the map exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .states import BlochVector, DensityMatrix, bloch_from_rho, fidelity, rho_from_bloch

_AXES = ("x", "y", "z")


@dataclass(frozen=True)
class CountRecord:
    """Up-counts along one measurement axis.

    ``n_up`` is an integer in real use; the infinite-statistics limit may be
    represented by passing exact expected counts as floats.
    """

    axis: str
    n_up: float
    n_total: float

    def __post_init__(self):
        if self.axis not in _AXES:
            raise ValidationError(f"axis must be one of {_AXES}, got {self.axis!r}")
        if self.n_total < 1:
            raise ValidationError("n_total must be at least 1")
        if not 0 <= self.n_up <= self.n_total:
            raise ValidationError("n_up must lie in [0, n_total]")

    @property
    def fraction(self) -> float:
        return self.n_up / self.n_total


def measurement_probability(rho: DensityMatrix, axis: str) -> float:
    """Born probability of the + outcome along the given axis."""
    b = bloch_from_rho(rho)
    component = {"x": b.x, "y": b.y, "z": b.z}
    if axis not in component:
        raise ValidationError(f"axis must be one of {_AXES}, got {axis!r}")
    return 0.5 * (1.0 + component[axis])


def simulate_counts(rho: DensityMatrix, axis: str, n: int, rng_stream) -> CountRecord:
    """Binomial draw of up-counts for n ideal measurements along axis."""
    if n < 1:
        raise ValidationError("count n must be at least 1")
    gen = np.random.default_rng(rng_stream) if isinstance(rng_stream, int) else rng_stream
    prob = measurement_probability(rho, axis)
    return CountRecord(axis=axis, n_up=int(gen.binomial(n, prob)), n_total=n)


def exact_counts(rho: DensityMatrix, axis: str, n: float = 1.0) -> CountRecord:
    """Infinite-statistics pseudo-counts (expected values, no sampling)."""
    return CountRecord(axis=axis, n_up=measurement_probability(rho, axis) * n, n_total=n)


def reconstruct_bloch(records) -> BlochVector:
    """Linear inversion plus radial physicality projection."""
    got = {r.axis: r for r in records}
    if set(got) != set(_AXES) or len(list(records)) != 3:
        raise ValidationError("reconstruction needs exactly one record per axis x, y, z")
    b = np.array([2.0 * got[ax].fraction - 1.0 for ax in _AXES])
    norm = float(np.linalg.norm(b))
    if norm > 1.0:
        b = b / norm
    return BlochVector(*b)


def reconstruct_state(records) -> DensityMatrix:
    return rho_from_bloch(reconstruct_bloch(records))


@dataclass(frozen=True, eq=False)
class ProcessMap:
    """Affine Bloch-space action of a qubit process: b -> A b + c."""

    matrix: np.ndarray
    offset: np.ndarray

    def apply(self, b: BlochVector) -> BlochVector:
        out = self.matrix @ b.as_array() + self.offset
        return BlochVector(*out)

    def apply_state(self, rho: DensityMatrix) -> DensityMatrix:
        return rho_from_bloch(self.apply(bloch_from_rho(rho)))


def reconstruct_process(inputs, outputs) -> ProcessMap:
    """Least-squares affine fit from input states to reconstructed outputs.

    ``inputs`` must span the Bloch ball affinely (the four canonical states
    do, and then the fit is exact).
    """
    ins = [bloch_from_rho(r).as_array() for r in inputs]
    outs = [bloch_from_rho(r).as_array() for r in outputs]
    if len(ins) != len(outs) or len(ins) < 4:
        raise ValidationError("process reconstruction needs >= 4 paired states")
    design = np.array([np.concatenate([v, [1.0]]) for v in ins])
    if np.linalg.matrix_rank(design, tol=1e-9) < 4:
        raise ValidationError("input states do not span the Bloch ball affinely")
    sol, *_ = np.linalg.lstsq(design, np.array(outs), rcond=None)
    return ProcessMap(matrix=sol[:3].T.copy(), offset=sol[3].copy())


def resample_record(record: CountRecord, gen: np.random.Generator) -> CountRecord:
    n = int(round(record.n_total))
    return CountRecord(
        axis=record.axis,
        n_up=int(gen.binomial(n, record.fraction)),
        n_total=n,
    )


def fidelity_with_errorbars(
    truth: DensityMatrix, records, n_bootstrap: int, rng_stream
) -> tuple:
    """Bootstrap fidelity of a tomographic reconstruction against a target.

    Resamples the counts binomially, reconstructs, and evaluates the
    mixed-state fidelity against ``truth``; returns (mean, std) over the
    bootstrap replicas.
    """
    if n_bootstrap < 100:
        raise ValidationError("n_bootstrap must be at least 100")
    gen = np.random.default_rng(rng_stream) if isinstance(rng_stream, int) else rng_stream
    records = list(records)
    values = np.empty(n_bootstrap)
    for i in range(n_bootstrap):
        replica = [resample_record(r, gen) for r in records]
        values[i] = fidelity(truth, reconstruct_state(replica))
    return float(values.mean()), float(values.std())
