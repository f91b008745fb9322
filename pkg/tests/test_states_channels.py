import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import collapse_recovery as cr
from collapse_recovery.errors import (
    DegenerateHeraldError,
    DimensionError,
    ValidationError,
)
from collapse_recovery.states import (
    EPSILON_BRANCHING,
    SIGMA_Y,
    HeraldedChannel,
    deshelve_channel,
    measurement_operator,
    partial_measure_channel,
)

SQ2 = 1.0 / np.sqrt(2.0)


# ---------------------------------------------------------------------------
# density matrices and Bloch geometry
# ---------------------------------------------------------------------------


def test_density_matrix_validation():
    with pytest.raises(ValidationError):
        cr.DensityMatrix(np.array([[0.5, 0.5], [0.1, 0.5]]))  # not Hermitian
    with pytest.raises(ValidationError):
        cr.DensityMatrix(np.diag([0.7, 0.7]))  # trace 1.4
    with pytest.raises(ValidationError):
        cr.DensityMatrix(np.diag([1.5, -0.5]))  # negative eigenvalue


def test_bloch_pole_convention():
    b = cr.bloch_from_rho(cr.qubit_state("0"))
    assert (b.x, b.y, b.z) == pytest.approx((0.0, 0.0, 1.0), abs=1e-12)


def test_bloch_center():
    b = cr.bloch_from_rho(cr.DensityMatrix.maximally_mixed(2))
    assert (b.x, b.y, b.z) == pytest.approx((0.0, 0.0, 0.0), abs=1e-12)


def test_bloch_x_state():
    b = cr.bloch_from_rho(cr.qubit_state("x"))
    assert (b.x, b.y, b.z) == pytest.approx((1.0, 0.0, 0.0), abs=1e-12)


def test_bloch_y_state():
    b = cr.bloch_from_rho(cr.qubit_state("y"))
    assert (b.x, b.y, b.z) == pytest.approx((0.0, 1.0, 0.0), abs=1e-12)


def test_bloch_round_trip(states):
    for _ in range(500):
        rho = states.any_state(2)
        back = cr.rho_from_bloch(cr.bloch_from_rho(rho))
        assert np.max(np.abs(back.mat - rho.mat)) <= 1e-12


def test_bloch_norm_validation():
    with pytest.raises(ValidationError):
        cr.BlochVector(1.0, 1.0, 1.0)


# ---------------------------------------------------------------------------
# leakage channels
# ---------------------------------------------------------------------------


def test_cp_full_decay():
    out = cr.apply_Cp(cr.DensityMatrix.basis_state(1, 3), 1.0)
    assert np.max(np.abs(out.mat - np.diag([0.0, 0.0, 1.0]))) <= 1e-12


def test_cp_identity_at_p_zero(states):
    for _ in range(200):
        rho = states.any_state(3)
        out = cr.apply_Cp(rho, 0.0)
        assert np.max(np.abs(out.mat - rho.mat)) <= 1e-12


def test_cp_plus_state_entries():
    rho = cr.qubit_state("x").embed(3)
    out = cr.apply_Cp(rho, 0.5)
    assert out.entry(0, 1) == pytest.approx(np.sqrt(0.5) / 2.0, abs=1e-12)
    assert out.entry(1, 1).real == pytest.approx(0.25, abs=1e-12)
    assert out.entry(2, 2).real == pytest.approx(0.25, abs=1e-12)


def test_cp_rejects_bad_p():
    rho = cr.DensityMatrix.maximally_mixed(3)
    with pytest.raises(ValidationError):
        cr.apply_Cp(rho, 1.5)
    with pytest.raises(ValidationError):
        cr.apply_Cp(rho, -0.1)


def test_dp_limits_to_cp(states):
    for _ in range(200):
        rho = states.any_state(3)
        p = states.gen.uniform(0.0, 1.0)
        a = cr.apply_Dp(rho, p, 0.0)
        b = cr.apply_Cp(rho, p)
        assert np.max(np.abs(a.mat - b.mat)) <= 1e-14


def test_dp_branching_example():
    out = cr.apply_Dp(cr.DensityMatrix.basis_state(1, 3), 1.0, 0.0355)
    assert np.max(np.abs(out.mat - np.diag([0.0355, 0.0, 0.9645]))) <= 1e-12


def test_dp_identity_at_p_zero(states):
    rho = states.any_state(3)
    out = cr.apply_Dp(rho, 0.0, 0.0355)
    assert np.max(np.abs(out.mat - rho.mat)) <= 1e-12


def test_channels_preserve_trace_and_psd(states):
    for _ in range(1000):
        rho = states.any_state(3)
        p = states.gen.uniform(0.0, 1.0)
        eps = states.gen.uniform(0.0, 1.0)
        out = cr.apply_Dp(rho, p, eps)
        assert abs(np.trace(out.mat) - 1.0) <= 1e-12
        # DensityMatrix construction already asserts eigenvalues >= -1e-10;
        # check explicitly all the same
        from collapse_recovery.linalg import min_eigenvalue

        assert min_eigenvalue(out.mat) >= -1e-10


def test_deshelve_kraus_unraveling_matches_entrywise_map(states):
    for p in (0.0, 0.3, 0.8, 1.0):
        for eps in (0.0, 0.0355, 0.4):
            chan = deshelve_channel(p, eps)
            for _ in range(25):
                rho = states.any_state(3)
                via_kraus = chan.apply_total(rho)
                direct = cr.apply_Dp(rho, p, eps)
                assert np.max(np.abs(via_kraus.mat - direct.mat)) <= 1e-12


def test_channel_completeness_enforced():
    bad = np.diag([0.5, 0.5]).astype(complex)
    with pytest.raises(ValidationError):
        HeraldedChannel(dim=2, kraus_accept=(("only", bad),))
    # every channel the module builds is complete
    for p in (0.0, 0.2, 0.9, 1.0):
        partial_measure_channel(p)
        for eps in (0.0, 0.0355, 1.0):
            deshelve_channel(p, eps)


# ---------------------------------------------------------------------------
# partial measurement
# ---------------------------------------------------------------------------


def test_mp_leaves_ground_state():
    for p in (0.0, 0.5, 0.99):
        res = cr.partial_measure_Mp(cr.qubit_state("0"), p)
        assert res.success_prob == pytest.approx(1.0, abs=1e-12)
        assert np.max(np.abs(res.state.mat - cr.qubit_state("0").mat)) <= 1e-12


def test_mp_plus_state():
    res = cr.partial_measure_Mp(cr.qubit_state("x"), 0.8)
    assert res.success_prob == pytest.approx(0.6, abs=1e-12)
    # accepted state stays pure
    from collapse_recovery.linalg import hermitian_eig

    w = hermitian_eig(res.state.mat).eigenvalues
    assert w[-1] == pytest.approx(1.0, abs=1e-10)
    f = cr.fidelity(cr.qubit_state("x"), res.state)
    expected = (0.5 + 0.5 * np.sqrt(0.2)) / np.sqrt(0.6)
    assert f == pytest.approx(expected, abs=1e-12)
    assert f == pytest.approx(0.93417, abs=5e-6)


def test_mp_excited_eigenstate():
    res = cr.partial_measure_Mp(cr.qubit_state("1"), 0.3)
    assert res.success_prob == pytest.approx(0.7, abs=1e-12)
    assert np.max(np.abs(res.state.mat - cr.qubit_state("1").mat)) <= 1e-12


def test_mp_degenerate_herald():
    with pytest.raises(DegenerateHeraldError):
        cr.partial_measure_Mp(cr.qubit_state("1"), 1.0)


# ---------------------------------------------------------------------------
# recovery
# ---------------------------------------------------------------------------


def test_recovery_identity_and_herald_law(states):
    for _ in range(1000):
        rho = states.any_state(2)
        p = states.gen.uniform(0.0, 0.99)
        res = cr.recover_Rp(rho, p)
        assert cr.trace_distance(res.state, rho) <= 1e-10
        assert abs(res.success_prob - (1.0 - p)) <= 1e-12


def test_recovery_examples():
    res = cr.recover_Rp(cr.DensityMatrix.maximally_mixed(2), 0.5)
    assert res.success_prob == pytest.approx(0.5, abs=1e-12)
    assert np.max(np.abs(res.state.mat - 0.5 * np.eye(2))) <= 1e-12

    rho = cr.qubit_state("y")
    res = cr.recover_Rp(rho, 0.0)
    assert res.success_prob == pytest.approx(1.0, abs=1e-12)
    assert cr.trace_distance(res.state, rho) <= 1e-12


def test_recovery_rejects_p_one():
    with pytest.raises(DegenerateHeraldError):
        cr.recover_Rp(cr.qubit_state("x"), 1.0)


def test_rprime_matches_ideal_at_zero_epsilon(states):
    for _ in range(100):
        rho = states.any_state(2)
        p = states.gen.uniform(0.0, 0.99)
        a = cr.recover_Rp_prime(rho, p, 0.0)
        b = cr.recover_Rp(rho, p)
        assert np.max(np.abs(a.state.mat - b.state.mat)) <= 1e-12
        assert abs(a.success_prob - b.success_prob) <= 1e-12


def test_rprime_ground_state_populations():
    res = cr.recover_Rp_prime(cr.qubit_state("0"), 0.8, 0.0355)
    total = 0.2 + 0.0355 * 0.8
    expected = np.diag([0.2 / total, 0.0355 * 0.8 / total])
    assert np.max(np.abs(res.state.mat - expected)) <= 1e-12
    assert res.state.entry(0, 0).real == pytest.approx(0.87566, abs=5e-6)
    assert res.success_prob == pytest.approx(total, abs=1e-12)


def test_rprime_axis_crossing():
    p_cross = 1.0 / (1.0 + EPSILON_BRANCHING)
    res = cr.recover_Rp_prime(cr.qubit_state("0"), p_cross, EPSILON_BRANCHING)
    assert cr.bloch_from_rho(res.state).z == pytest.approx(0.0, abs=1e-12)
    assert p_cross == pytest.approx(0.96571, abs=1e-5)


def test_rprime_epsilon_continuity(states):
    # empirical constant: worst observed ratio is ~1.0 over 2000 draws
    bound_constant = 1.5
    for _ in range(500):
        rho = states.any_state(2)
        p = states.gen.uniform(0.01, 0.9)
        eps = states.gen.uniform(0.0, 0.05)
        gap = cr.trace_distance(
            cr.recover_Rp_prime(rho, p, eps).state, cr.recover_Rp(rho, p).state
        )
        assert gap <= bound_constant * eps * p / (1.0 - p) + 1e-12


def test_rprime_degenerate():
    with pytest.raises(DegenerateHeraldError):
        cr.recover_Rp_prime(cr.qubit_state("1"), 1.0, 0.0)


# ---------------------------------------------------------------------------
# unitaries
# ---------------------------------------------------------------------------


@given(st.floats(-10.0, 10.0))
def test_spin_echo_identity(phi):
    step = cr.dephase(phi) @ SIGMA_Y
    assert np.max(np.abs(step @ step - np.eye(2))) <= 1e-12


def test_pi_pulse_flips_pole():
    out = cr.apply_unitary(cr.qubit_state("0"), cr.ry(np.pi))
    assert np.max(np.abs(out.mat - cr.qubit_state("1").mat)) <= 1e-12


def test_dephase_fixes_maximally_mixed():
    rho = cr.DensityMatrix.maximally_mixed(2)
    out = cr.apply_unitary(rho, cr.dephase(1.234))
    assert np.max(np.abs(out.mat - rho.mat)) <= 1e-12


def test_apply_unitary_validates():
    with pytest.raises(ValidationError):
        cr.apply_unitary(cr.qubit_state("0"), np.array([[1.0, 0.0], [0.0, 2.0]]))
    with pytest.raises(DimensionError):
        cr.apply_unitary(cr.qubit_state("0"), np.eye(3))


def test_unitary_preserves_spectrum(states):
    rho = states.mixed(2)
    out = cr.apply_unitary(rho, cr.ry(0.7) @ cr.rz(1.1))
    from collapse_recovery.linalg import hermitian_eig

    w1 = hermitian_eig(rho.mat).eigenvalues
    w2 = hermitian_eig(out.mat).eigenvalues
    assert np.max(np.abs(w1 - w2)) <= 1e-12


# ---------------------------------------------------------------------------
# fidelities
# ---------------------------------------------------------------------------


def test_self_fidelity(states):
    for _ in range(50):
        rho = states.any_state(2)
        assert cr.fidelity(rho, rho) == pytest.approx(1.0, abs=1e-10)


def test_orthogonal_fidelity():
    assert cr.fidelity(cr.qubit_state("0"), cr.qubit_state("1")) <= 1e-12


def test_fidelity_symmetry(states):
    for _ in range(100):
        a, b = states.any_state(2), states.any_state(2)
        assert abs(cr.fidelity(a, b) - cr.fidelity(b, a)) <= 1e-9


def test_fidelity_dimension_mismatch():
    with pytest.raises(DimensionError):
        cr.fidelity(cr.qubit_state("0"), cr.DensityMatrix.maximally_mixed(3))


def test_fidelity_matches_closed_form(states):
    """General mixed-state fidelity vs the closed-form pure expression."""
    for _ in range(200):
        a, b = states.amplitudes()
        p = states.gen.uniform(0.0, 0.95)
        rho = cr.DensityMatrix.from_pure([a, b])
        accepted = cr.partial_measure_Mp(rho, p)
        assert abs(
            cr.fidelity(rho, accepted.state) - cr.pure_fidelity_FM(a, b, p)
        ) <= 1e-12


def test_pure_fidelity_ground():
    for p in (0.0, 0.3, 0.9):
        assert cr.pure_fidelity_FM(1.0, 0.0, p) == pytest.approx(1.0, abs=1e-12)


def test_pure_fidelity_balanced():
    f = cr.pure_fidelity_FM(SQ2, SQ2, 0.8)
    assert f == pytest.approx((0.5 + 0.5 * np.sqrt(0.2)) / np.sqrt(0.6), abs=1e-12)
    assert f == pytest.approx(0.93417, abs=5e-6)


def test_pure_fidelity_small_p_series():
    # (1 - F) / p^2 -> |a|^2 |b|^2 / 8 = 1/32 for the balanced state
    for p in (1e-4, 1e-5):
        ratio = (1.0 - cr.pure_fidelity_FM(SQ2, SQ2, p)) / p**2
        assert ratio == pytest.approx(1.0 / 32.0, rel=2e-3)


def test_pure_fidelity_validates_normalization():
    with pytest.raises(ValidationError):
        cr.pure_fidelity_FM(1.0, 0.5, 0.3)


# ---------------------------------------------------------------------------
# measurement-operator identity
# ---------------------------------------------------------------------------


def test_kraus_identity_reduces_to_spin_echo():
    assert cr.kraus_identity_check(cr.qubit_state("x"), 0.0, 0.0) <= 1e-12


def test_kraus_identity_at_strong_measurement():
    assert cr.kraus_identity_check(cr.qubit_state("x"), 0.8, 1.3) <= 1e-10


def test_kraus_identity_random(states):
    for _ in range(100):
        rho = states.any_state(2)
        p = states.gen.uniform(0.0, 0.99)
        phi = states.gen.uniform(-np.pi, np.pi)
        assert cr.kraus_identity_check(rho, p, phi) <= 1e-10


def test_normalization_product_is_one_minus_p(states):
    for _ in range(100):
        rho = states.any_state(2)
        p = states.gen.uniform(0.0, 0.99)
        m = measurement_operator(p)
        n1 = float(np.real(np.trace(m @ rho.mat @ m.conj().T)))
        rho1 = SIGMA_Y @ (m @ rho.mat @ m.conj().T) @ SIGMA_Y.conj().T / n1
        n2 = 1.0 - p * float(np.real(rho1[1, 1]))
        assert abs(n1 * n2 - (1.0 - p)) <= 1e-12


def test_kraus_identity_rejects_p_one():
    with pytest.raises(DegenerateHeraldError):
        cr.kraus_identity_check(cr.qubit_state("x"), 1.0, 0.3)
