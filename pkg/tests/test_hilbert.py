import numpy as np
import pytest

from oam_memory.hilbert import (
    HilbertError,
    ModeSpace,
    OperatorMatrix,
    StateMatrix,
    annihilation,
    creation,
    expectation,
    fock_ket,
    identity,
    number_op,
    partial_trace,
    partial_transpose,
    quadrature_x,
    space,
    superpose,
    tensor_state,
    trace_norm,
)
from conftest import random_density

SQ2 = np.sqrt(2.0)


class TestSpaces:
    def test_cutoff_must_be_at_least_two(self):
        with pytest.raises(HilbertError):
            ModeSpace("a", 1)

    def test_duplicate_labels_rejected(self):
        with pytest.raises(HilbertError):
            space(("a", 2), ("a", 3))

    def test_dim_is_product_of_cutoffs(self):
        sp = space(("a", 2), ("b", 3), ("c", 4))
        assert sp.dim == 24

    def test_basis_index_is_slowest_first(self):
        sp = space(("a", 2), ("b", 2))
        assert [sp.basis_index(o) for o in ((0, 0), (0, 1), (1, 0), (1, 1))] == [0, 1, 2, 3]

    def test_occupation_out_of_range(self):
        sp = space(("a", 2), ("b", 2))
        with pytest.raises(HilbertError):
            sp.basis_index((0, 2))


class TestAnnihilation:
    def test_sqrt_n_matrix_element(self):
        a = annihilation(space(("a", 3)), "a")
        assert a.data[1, 2] == pytest.approx(SQ2, abs=1e-12)

    def test_vacuum_annihilation(self):
        a = annihilation(space(("a", 3)), "a")
        assert np.all(a.data[:, 0] == 0)

    def test_two_mode_action_matches_kron_oracle(self):
        sp = space(("a", 2), ("b", 2))
        op = annihilation(sp, "b")
        low = np.array([[0, 1], [0, 0]], dtype=complex)
        assert np.array_equal(op.data, np.kron(np.eye(2), low))
        vec11 = np.zeros(4, dtype=complex)
        vec11[sp.basis_index((1, 1))] = 1.0
        out = op.data @ vec11
        assert out[sp.basis_index((1, 0))] == pytest.approx(1.0)
        assert np.linalg.norm(out) == pytest.approx(1.0)

    def test_unknown_label(self):
        with pytest.raises(HilbertError):
            annihilation(space(("a", 2)), "zz")

    def test_commutator_anomaly_only_at_top_level(self):
        for cutoff in (2, 3, 5):
            sp = space(("a", cutoff))
            a = annihilation(sp, "a")
            comm = a.data @ a.dag().data - a.dag().data @ a.data
            expected = np.diag([1.0] * (cutoff - 1) + [1.0 - cutoff])
            assert np.max(np.abs(comm - expected)) < 1e-12

    def test_disjoint_mode_operators_commute_exactly(self):
        sp = space(("a", 3), ("b", 2), ("c", 2))
        x = annihilation(sp, "a").data
        y = creation(sp, "c").data
        assert np.array_equal(x @ y, y @ x)


class TestQuadrature:
    def test_cutoff_two_matrix(self):
        x = quadrature_x(space(("a", 2)), "a")
        assert np.allclose(x.data, [[0, 1 / SQ2], [1 / SQ2, 0]], atol=1e-15)

    def test_vacuum_mean_is_zero(self):
        sp = space(("a", 3))
        x = quadrature_x(sp, "a")
        assert expectation(x, fock_ket(sp, [0])) == pytest.approx(0.0, abs=1e-15)

    def test_vacuum_variance_is_half(self):
        sp = space(("a", 4))
        x = quadrature_x(sp, "a")
        x2 = OperatorMatrix(sp, x.data @ x.data)
        assert expectation(x2, fock_ket(sp, [0])).real == pytest.approx(0.5, abs=1e-12)


class TestFockStates:
    def test_vacuum_density_matrix(self):
        rho = fock_ket(space(("a", 3)), [0])
        assert np.array_equal(np.diag(rho.data).real, [1, 0, 0])

    def test_index_arithmetic_two_modes(self):
        rho = fock_ket(space(("a", 2), ("b", 2)), [1, 0])
        expected = np.zeros((4, 4))
        expected[2, 2] = 1.0
        assert np.array_equal(rho.data.real, expected)

    @pytest.mark.parametrize("occs", [[0, 0], [1, 1], [0, 1]])
    def test_unit_trace(self, occs):
        assert fock_ket(space(("a", 2), ("b", 2)), occs).trace == pytest.approx(1.0)

    def test_occupation_at_cutoff_rejected(self):
        with pytest.raises(HilbertError):
            fock_ket(space(("a", 2)), [2])


class TestSuperpose:
    def test_equal_superposition_coherence(self):
        sp = space(("a", 2), ("b", 2))
        rho = superpose(sp, [(1 / SQ2, (1, 0)), (1 / SQ2, (0, 1))])
        assert rho.data[2, 1] == pytest.approx(0.5)
        assert rho.data[1, 2] == pytest.approx(0.5)

    def test_single_term_equals_fock(self):
        sp = space(("a", 3))
        assert np.allclose(
            superpose(sp, [(2.0, (1,))]).data, fock_ket(sp, [1]).data, atol=1e-15
        )

    def test_normalization_of_unnormalized_amplitudes(self):
        sp = space(("a", 2), ("b", 2))
        rho = superpose(sp, [(2.0, (1, 0)), (2j, (0, 1))])
        assert rho.trace == pytest.approx(1.0, abs=1e-12)
        assert rho.purity == pytest.approx(1.0, abs=1e-12)

    def test_zero_amplitudes_rejected(self):
        with pytest.raises(HilbertError):
            superpose(space(("a", 2)), [(0.0, (0,))])


class TestPartialTrace:
    def test_product_state_reduction(self):
        sp = space(("a", 2), ("b", 2))
        rho = fock_ket(sp, [1, 0])
        red = partial_trace(rho, ["a"])
        assert np.allclose(red.data.real, [[0, 0], [0, 1]], atol=1e-15)

    def test_bell_marginal_is_maximally_mixed(self):
        sp = space(("a", 2), ("b", 2))
        bell = superpose(sp, [(1, (1, 0)), (1, (0, 1))])
        red = partial_trace(bell, ["a"])
        assert np.allclose(red.data.real, np.eye(2) / 2, atol=1e-14)

    def test_three_mode_random_state_preserves_trace(self, rng):
        sp = space(("a", 2), ("b", 3), ("c", 2))
        for _ in range(5):
            rho = StateMatrix(sp, random_density(rng, sp.dim))
            red = partial_trace(rho, ["a", "c"])
            assert abs(red.trace - rho.trace) < 1e-12
            assert red.min_eigenvalue() > -1e-8
            assert np.max(np.abs(red.data - red.data.conj().T)) < 1e-12

    def test_keeps_original_mode_order(self, rng):
        sp = space(("a", 2), ("b", 2), ("c", 2))
        rho = StateMatrix(sp, random_density(rng, 8))
        red = partial_trace(rho, ["c", "a"])
        assert red.space.labels == ("a", "c")

    def test_embedding_roundtrip_is_identity(self, rng):
        sp_a = space(("a", 3))
        sp_b = space(("b", 2), ("c", 2))
        rho_a = StateMatrix(sp_a, random_density(rng, 3))
        rho_b = StateMatrix(sp_b, random_density(rng, 4))
        joint = tensor_state(rho_a, rho_b)
        back = partial_trace(joint, ["a"])
        assert np.max(np.abs(back.data - rho_a.data)) < 1e-14

    def test_empty_keep_rejected(self):
        rho = fock_ket(space(("a", 2), ("b", 2)), [0, 0])
        with pytest.raises(HilbertError):
            partial_trace(rho, [])


class TestPartialTranspose:
    def _bell(self):
        sp = space(("a", 2), ("b", 2))
        return superpose(sp, [(1, (1, 0)), (0 + 1, (0, 1))])

    def test_product_state_spectrum_unchanged(self, rng):
        sp = space(("a", 2), ("b", 3))
        rho_a = random_density(rng, 2)
        rho_b = random_density(rng, 3)
        joint = StateMatrix(sp, np.kron(rho_a, rho_b))
        pt = partial_transpose(joint, ["a"])
        before = np.sort(np.linalg.eigvalsh(joint.data))
        after = np.sort(np.linalg.eigvalsh(pt.data))
        assert np.max(np.abs(before - after)) < 1e-12

    def test_bell_state_negative_eigenvalue(self):
        pt = partial_transpose(self._bell(), ["a"])
        eigs = np.sort(np.linalg.eigvalsh(pt.data))
        assert eigs[0] == pytest.approx(-0.5, abs=1e-12)
        assert np.allclose(eigs, [-0.5, 0.5, 0.5, 0.5], atol=1e-12)

    def test_involution(self, rng):
        sp = space(("a", 2), ("b", 2), ("c", 3))
        rho = StateMatrix(sp, random_density(rng, 12))
        pt = partial_transpose(rho, ["b"])
        back = partial_transpose(StateMatrix(sp, pt.data), ["b"])
        assert np.max(np.abs(back.data - rho.data)) <= 1e-14

    def test_preserves_trace_and_hermiticity(self, rng):
        sp = space(("a", 2), ("b", 2))
        rho = StateMatrix(sp, random_density(rng, 4))
        pt = partial_transpose(rho, ["b"])
        assert np.trace(pt.data).real == pytest.approx(1.0, abs=1e-12)
        assert pt.is_hermitian()

    def test_trivial_subsystem_rejected(self):
        bell = self._bell()
        with pytest.raises(HilbertError):
            partial_transpose(bell, [])
        with pytest.raises(HilbertError):
            partial_transpose(bell, ["a", "b"])


class TestTraceNorm:
    def test_density_matrix_norm_is_one(self, rng):
        sp = space(("a", 4))
        rho = StateMatrix(sp, random_density(rng, 4))
        assert trace_norm(OperatorMatrix(sp, rho.data)) == pytest.approx(1.0, abs=1e-12)

    def test_bell_partial_transpose_norm(self):
        sp = space(("a", 2), ("b", 2))
        bell = superpose(sp, [(1, (1, 0)), (1, (0, 1))])
        assert trace_norm(partial_transpose(bell, ["a"])) == pytest.approx(2.0, abs=1e-12)

    def test_zero_matrix(self):
        sp = space(("a", 3))
        assert trace_norm(OperatorMatrix(sp, np.zeros((3, 3)))) == 0.0

    def test_non_hermitian_rejected(self):
        sp = space(("a", 2))
        with pytest.raises(HilbertError):
            trace_norm(annihilation(sp, "a"))


class TestStateValidation:
    def test_non_hermitian_data_rejected(self):
        sp = space(("a", 2))
        with pytest.raises(HilbertError):
            StateMatrix(sp, np.array([[1, 1], [0, 0]], dtype=complex))

    def test_negative_eigenvalue_raises_instead_of_clipping(self):
        sp = space(("a", 2))
        bad = StateMatrix(sp, np.diag([1.1, -0.1]).astype(complex))
        with pytest.raises(HilbertError, match="negative eigenvalue"):
            bad.validate()

    def test_trace_violation_raises(self):
        sp = space(("a", 2))
        bad = StateMatrix(sp, np.diag([0.7, 0.2]).astype(complex))
        with pytest.raises(HilbertError, match="trace"):
            bad.validate()

    def test_number_operator_expectation(self):
        sp = space(("a", 4))
        rho = fock_ket(sp, [3])
        assert expectation(number_op(sp, "a"), rho).real == pytest.approx(3.0)

    def test_identity_behaves(self):
        sp = space(("a", 2), ("b", 3))
        assert np.array_equal(identity(sp).data, np.eye(6))
