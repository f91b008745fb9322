import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from collapse_recovery import linalg
from collapse_recovery.errors import DimensionError, NotPSDError, ValidationError
from collapse_recovery.states import SIGMA_Z


def test_sigma_z_spectrum():
    eig = linalg.hermitian_eig(SIGMA_Z)
    assert np.allclose(eig.eigenvalues, [-1.0, 1.0], atol=1e-12)


def test_identity_dim3_spectrum():
    eig = linalg.hermitian_eig(np.eye(3))
    assert np.allclose(eig.eigenvalues, [1.0, 1.0, 1.0], atol=1e-12)
    v = eig.eigenvectors
    assert np.max(np.abs(v.conj().T @ v - np.eye(3))) <= 1e-10


@pytest.mark.parametrize("dim", [2, 3, 4])
def test_reconstruction_and_orthonormality(states, dim):
    for _ in range(300):
        h = states.hermitian(dim)
        eig = linalg.hermitian_eig(h)
        assert np.max(np.abs(eig.reconstruct() - h)) <= 1e-10
        v = eig.eigenvectors
        assert np.max(np.abs(v.conj().T @ v - np.eye(dim))) <= 1e-10
        assert np.all(np.diff(eig.eigenvalues) >= -1e-13)


@pytest.mark.parametrize("dim", [2, 3, 4])
def test_eigenvalues_match_numpy_oracle(states, dim):
    for _ in range(200):
        h = states.hermitian(dim)
        ours = linalg.hermitian_eig(h).eigenvalues
        ref = np.linalg.eigvalsh(h)
        scale = max(1.0, np.max(np.abs(ref)))
        assert np.max(np.abs(ours - ref)) <= 1e-10 * scale


def test_dimension_errors():
    with pytest.raises(DimensionError):
        linalg.hermitian_eig(np.eye(5))
    with pytest.raises(DimensionError):
        linalg.hermitian_eig(np.ones((2, 3)))
    with pytest.raises(ValidationError):
        linalg.hermitian_eig(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_hermiticity_tolerance_edge():
    h = np.eye(2, dtype=complex)
    h[0, 1] = 1e-10  # within the 1e-9 allowance, symmetrized internally
    eig = linalg.hermitian_eig(h)
    assert np.allclose(eig.eigenvalues, [1.0, 1.0], atol=1e-9)


def test_psd_sqrt_diagonal():
    s = linalg.psd_sqrt(np.diag([4.0, 9.0]))
    assert np.max(np.abs(s - np.diag([2.0, 3.0]))) <= 1e-12


def test_psd_sqrt_identity():
    assert np.max(np.abs(linalg.psd_sqrt(np.eye(3)) - np.eye(3))) <= 1e-12


def test_psd_sqrt_projector_idempotent(states):
    rho = states.pure(3)
    s = linalg.psd_sqrt(rho.mat)
    assert np.max(np.abs(s - rho.mat)) <= 1e-10


@pytest.mark.parametrize("dim", [2, 3])
def test_psd_sqrt_squares_back(states, dim):
    for _ in range(500):
        a = states.hermitian(dim)
        p = a @ a.conj().T / dim
        s = linalg.psd_sqrt(p)
        assert np.linalg.norm(s @ s - p) <= 1e-9
        assert np.linalg.norm(s - s.conj().T) <= 1e-10


def test_psd_sqrt_clamps_rounding_noise():
    p = np.diag([1.0, -5e-11])
    s = linalg.psd_sqrt(p)
    assert np.max(np.abs(s - np.diag([1.0, 0.0]))) <= 1e-5


def test_psd_sqrt_rejects_negative():
    with pytest.raises(NotPSDError):
        linalg.psd_sqrt(np.diag([1.0, -1e-6]))


def test_trace_cyclicity(states):
    for dim in (2, 3, 4):
        for _ in range(100):
            a = states.hermitian(dim)
            b = states.hermitian(dim)
            assert abs(np.trace(a @ b) - np.trace(b @ a)) <= 1e-12 * max(
                1.0, abs(np.trace(a @ b))
            )


@given(st.floats(-10, 10), st.floats(-10, 10), st.floats(-10, 10), st.floats(-10, 10))
def test_two_by_two_real_symmetric(a, b, c, d):
    h = np.array([[a, b + 1j * c], [b - 1j * c, d]])
    eig = linalg.hermitian_eig(h)
    assert np.max(np.abs(eig.reconstruct() - h)) <= 1e-10 * max(1.0, abs(a), abs(b), abs(c), abs(d))


def test_matrices_close_uses_tolerance():
    a = np.eye(2)
    b = a + 5e-13
    assert linalg.matrices_close(a, b)
    assert not linalg.matrices_close(a, a + 1e-11)
