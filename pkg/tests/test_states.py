import numpy as np
import pytest
from hypothesis import given, strategies as st

from mesoparity.states import (
    DENSE_STATE_DIM_CAP,
    LABEL_MS,
    LABEL_Q1,
    LABEL_Q2,
    DensityOperator,
    LayoutError,
    PureState,
    SubsystemLayout,
    ValidationError,
    apply,
    hermitian_eig,
    partial_trace,
    qubit_pair_layout,
    tensor,
    validate_density,
)

from helpers import kron_chain, random_density_matrix, random_unit_vector


def three_slot_layout(ms_dim=4):
    return SubsystemLayout((2, 2, ms_dim), (LABEL_Q1, LABEL_Q2, LABEL_MS))


class TestSubsystemLayout:
    def test_basic_accessors(self):
        lay = three_slot_layout(8)
        assert lay.total_dim == 32
        assert lay.n_slots == 3
        assert lay.slot(LABEL_MS) == 2
        assert lay.slots(LABEL_Q1) == (0,)

    def test_ambiguous_label_resolution_rejected(self):
        lay = SubsystemLayout((2, 2), (LABEL_Q1, LABEL_Q1))
        assert lay.slots(LABEL_Q1) == (0, 1)
        with pytest.raises(LayoutError):
            lay.slot(LABEL_Q1)

    def test_mismatched_lengths_rejected(self):
        with pytest.raises(LayoutError):
            SubsystemLayout((2, 2, 4), (LABEL_Q1, LABEL_Q2))

    def test_nonpositive_dims_rejected(self):
        with pytest.raises(LayoutError):
            SubsystemLayout((2, 0), (LABEL_Q1, LABEL_Q2))

    def test_concat_and_keep(self):
        lay = qubit_pair_layout().concat(SubsystemLayout((8,), (LABEL_MS,)))
        assert lay.dims == (2, 2, 8)
        kept = lay.keep((0, 1))
        assert kept.labels == (LABEL_Q1, LABEL_Q2)

    def test_require_target_qubits(self):
        assert three_slot_layout().require_target_qubits() == (0, 1)
        with pytest.raises(LayoutError):
            SubsystemLayout((4,), (LABEL_MS,)).require_target_qubits()


class TestStateValidation:
    def test_pure_state_norm_enforced(self):
        lay = qubit_pair_layout()
        with pytest.raises(ValidationError):
            PureState(np.array([1.0, 1.0, 0.0, 0.0]), lay)

    def test_pure_state_length_enforced(self):
        with pytest.raises(LayoutError):
            PureState(np.zeros(3), qubit_pair_layout())

    def test_density_hermiticity_enforced(self):
        lay = qubit_pair_layout()
        m = np.eye(4) / 4.0
        m[0, 1] = 0.5
        with pytest.raises(ValidationError):
            DensityOperator(m, lay)

    def test_density_trace_enforced(self):
        with pytest.raises(ValidationError):
            DensityOperator(np.eye(4), qubit_pair_layout())

    def test_validate_density_flags_negative_eigenvalues(self):
        lay = SubsystemLayout((2,), (LABEL_MS,))
        rho = DensityOperator(np.diag([1.5, -0.5]), lay)
        with pytest.raises(ValidationError):
            validate_density(rho)

    def test_dimension_cap(self):
        with pytest.raises(LayoutError):
            dim = DENSE_STATE_DIM_CAP * 2
            PureState(np.zeros(dim), SubsystemLayout((dim,), (LABEL_MS,)))


class TestTensorAndApply:
    def test_tensor_matches_kron(self, rng):
        a = PureState(random_unit_vector(rng, 4), qubit_pair_layout())
        b = PureState(random_unit_vector(rng, 8), SubsystemLayout((8,), (LABEL_MS,)))
        joint = tensor(a, b)
        np.testing.assert_allclose(
            joint.amplitudes, np.kron(a.amplitudes, b.amplitudes), atol=1e-15
        )
        assert joint.layout.dims == (2, 2, 8)

    def test_apply_single_slot_matches_kron_oracle(self, rng):
        lay = three_slot_layout(4)
        psi = PureState(random_unit_vector(rng, 16), lay)
        u = np.linalg.qr(rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4)))[0]
        got = apply(u, psi, [2])
        want = kron_chain([np.eye(2), np.eye(2), u]) @ psi.amplitudes
        np.testing.assert_allclose(got.amplitudes, want, atol=1e-12)

    def test_apply_two_slots_matches_kron_oracle(self, rng):
        lay = three_slot_layout(4)
        psi = PureState(random_unit_vector(rng, 16), lay)
        u = np.linalg.qr(rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8)))[0]
        got = apply(u, psi, [1, 2])
        want = np.kron(np.eye(2), u) @ psi.amplitudes
        np.testing.assert_allclose(got.amplitudes, want, atol=1e-12)

    def test_apply_on_density_conjugates(self, rng):
        lay = three_slot_layout(2)
        rho = DensityOperator(random_density_matrix(rng, 8), lay)
        u = np.linalg.qr(rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)))[0]
        got = apply(u, rho, [2])
        full = kron_chain([np.eye(2), np.eye(2), u])
        np.testing.assert_allclose(got.matrix, full @ rho.matrix @ full.conj().T, atol=1e-12)

    @given(seed=st.integers(0, 2**32 - 1))
    def test_unitary_application_preserves_norm(self, seed):
        rng = np.random.default_rng(seed)
        lay = three_slot_layout(4)
        psi = PureState(random_unit_vector(rng, 16), lay)
        z = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        u = np.linalg.qr(z)[0]
        assert abs(apply(u, psi, [2]).norm() - 1.0) < 1e-12


class TestPartialTrace:
    def test_against_loop_oracle(self, rng):
        lay = three_slot_layout(3)
        rho = DensityOperator(random_density_matrix(rng, 12), lay)
        got = partial_trace(rho, keep=(0, 1))
        t = rho.matrix.reshape(2, 2, 3, 2, 2, 3)
        want = np.zeros((4, 4), dtype=complex)
        for j in range(2):
            for k in range(2):
                for j2 in range(2):
                    for k2 in range(2):
                        want[2 * j + k, 2 * j2 + k2] = sum(
                            t[j, k, m, j2, k2, m] for m in range(3)
                        )
        np.testing.assert_allclose(got.matrix, want, atol=1e-13)
        assert got.layout.labels == (LABEL_Q1, LABEL_Q2)

    def test_trace_of_product_state_recovers_factor(self, rng):
        a = PureState(random_unit_vector(rng, 4), qubit_pair_layout())
        b = PureState(random_unit_vector(rng, 5), SubsystemLayout((5,), (LABEL_MS,)))
        joint = tensor(a, b).to_density()
        reduced = partial_trace(joint, keep=(0, 1))
        np.testing.assert_allclose(
            reduced.matrix, np.outer(a.amplitudes, a.amplitudes.conj()), atol=1e-13
        )

    @given(seed=st.integers(0, 2**32 - 1))
    def test_reduced_state_is_a_density(self, seed):
        rng = np.random.default_rng(seed)
        lay = three_slot_layout(4)
        rho = DensityOperator(random_density_matrix(rng, 16, rank=3), lay)
        reduced = partial_trace(rho, keep=(2,))
        validate_density(reduced)


def test_hermitian_eig_reconstructs(rng):
    m = random_density_matrix(rng, 6)
    evals, vecs = hermitian_eig(m)
    np.testing.assert_allclose((vecs * evals) @ vecs.conj().T, m, atol=1e-12)
    assert np.all(np.diff(evals) >= 0)
