"""Dense complex linear algebra for 2x2 .. 4x4 matrices.

Everything downstream (states, channels, tomography) runs on matrices of
dimension 2, 3 or 4, so this module implements the one nontrivial kernel we
need directly: a cyclic Jacobi eigensolver for Hermitian matrices. At these
sizes Jacobi is unconditionally stable and fast enough that asymptotics are
irrelevant; it also gives us an eigensolver whose output we can cross-check
against numpy's in the tests without either side depending on the other.

Tolerances are module-level constants rather than magic numbers:

* ``VALIDATION_TOL`` (1e-9): how far an input may drift from its contract
  (Hermiticity, unitarity) before we refuse it.
* ``ASSERT_TOL`` (1e-10): internal reconstruction accuracy we guarantee.
* ``EQ_TOL`` (1e-12): absolute tolerance for equality comparisons; float
  equality is never used on matrix entries.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, NotPSDError, ValidationError

SUPPORTED_DIMS = (2, 3, 4)

VALIDATION_TOL = 1e-9
ASSERT_TOL = 1e-10
EQ_TOL = 1e-12

# Off-diagonal mass at which the Jacobi sweep loop stops; well below
# ASSERT_TOL so reconstruction always lands inside the guarantee.
_JACOBI_TOL = 1e-14
_JACOBI_MAX_SWEEPS = 60


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce to a complex square ndarray of supported dimension."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {m.shape}")
    if m.shape[0] not in SUPPORTED_DIMS:
        raise DimensionError(
            f"{name} has dimension {m.shape[0]}; supported dimensions are {SUPPORTED_DIMS}"
        )
    return m


def dagger(a: np.ndarray) -> np.ndarray:
    return a.conj().T


def frobenius(a: np.ndarray) -> float:
    return float(np.linalg.norm(a))


def matrices_close(a, b, tol: float = EQ_TOL) -> bool:
    """Entrywise equality with an explicit absolute tolerance."""
    return bool(np.max(np.abs(np.asarray(a) - np.asarray(b))) <= tol)


def is_hermitian(a: np.ndarray, tol: float = VALIDATION_TOL) -> bool:
    return frobenius(a - dagger(a)) <= tol


@dataclass(frozen=True)
class HermitianEigen:
    """Eigendecomposition of a Hermitian matrix.

    ``eigenvalues`` are real and ascending; ``eigenvectors[:, k]`` is the
    unit-norm column for ``eigenvalues[k]``; V diag(w) V+ reconstructs the
    (symmetrized) input to within ASSERT_TOL.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ dagger(v)


def hermitian_eig(h, validation_tol: float = VALIDATION_TOL) -> HermitianEigen:
    """Diagonalize a Hermitian matrix by cyclic Jacobi rotations.

    The caller guarantees Hermiticity up to ``validation_tol``; the matrix is
    symmetrized as (H + H+)/2 before sweeping, so the tiny anti-Hermitian
    residue never reaches the rotations.
    """
    m = as_matrix(h, "hermitian matrix")
    if not is_hermitian(m, validation_tol):
        raise ValidationError(
            f"matrix is not Hermitian within {validation_tol}: "
            f"deviation {frobenius(m - dagger(m)):.3e}"
        )
    a = 0.5 * (m + dagger(m))
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    scale = max(1.0, frobenius(a))

    if n == 2:
        # one Jacobi rotation diagonalizes a 2x2 exactly
        return _jacobi_2x2(a, scale)

    for _ in range(_JACOBI_MAX_SWEEPS):
        off = 0.0
        for i in range(n - 1):
            for j in range(i + 1, n):
                off += abs(a[i, j]) ** 2
        if np.sqrt(off) <= _JACOBI_TOL * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= _JACOBI_TOL * scale / (n * n):
                    continue
                # Phase out a_pq, then a real 2x2 rotation annihilates it.
                phase = apq / abs(apq)
                app = a[p, p].real
                aqq = a[q, q].real
                tau = (aqq - app) / (2.0 * abs(apq))
                if tau >= 0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                g = np.eye(n, dtype=complex)
                g[p, p] = c
                g[p, q] = s
                g[q, p] = -s * np.conj(phase)
                g[q, q] = c * np.conj(phase)
                a = dagger(g) @ a @ g
                v = v @ g

    w = np.real(np.diag(a))
    order = np.argsort(w, kind="stable")
    return HermitianEigen(eigenvalues=w[order], eigenvectors=v[:, order])


def _jacobi_2x2(a: np.ndarray, scale: float) -> HermitianEigen:
    app = a[0, 0].real
    aqq = a[1, 1].real
    apq = a[0, 1]
    if abs(apq) <= _JACOBI_TOL * scale:
        w = np.array([app, aqq])
        v = np.eye(2, dtype=complex)
    else:
        phase = apq / abs(apq)
        tau = (aqq - app) / (2.0 * abs(apq))
        if tau >= 0:
            t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
        else:
            t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
        c = 1.0 / np.sqrt(1.0 + t * t)
        s = t * c
        w = np.array([app - t * abs(apq), aqq + t * abs(apq)])
        v = np.array([[c, s], [-s * np.conj(phase), c * np.conj(phase)]])
    if w[0] <= w[1]:
        return HermitianEigen(eigenvalues=w, eigenvectors=v)
    return HermitianEigen(eigenvalues=w[::-1].copy(), eigenvectors=v[:, ::-1].copy())


def min_eigenvalue(h) -> float:
    """Smallest eigenvalue of a Hermitian matrix."""
    return float(hermitian_eig(h).eigenvalues[0])


def psd_sqrt(p, clamp_tol: float = ASSERT_TOL) -> np.ndarray:
    """Hermitian PSD square root S of P with S @ S = P.

    Eigenvalues in [-clamp_tol, 0) are treated as rounding debris from
    channel compositions and clamped to zero; anything below -clamp_tol is a
    genuine PSD violation and raises. Positive eigenvalues below the
    solver's own resolution are zeroed as well: square-rooting them would
    amplify representation noise (sqrt(1e-17) ~ 3e-9) into the result.
    """
    eig = hermitian_eig(p)
    w = eig.eigenvalues.copy()
    if w[0] < -clamp_tol:
        raise NotPSDError(f"matrix is not PSD: min eigenvalue {w[0]:.3e}")
    w[w < _JACOBI_TOL * max(1.0, w[-1])] = 0.0
    root = (eig.eigenvectors * np.sqrt(w)) @ dagger(eig.eigenvectors)
    return 0.5 * (root + dagger(root))
