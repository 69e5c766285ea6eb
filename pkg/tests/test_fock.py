import math

import numpy as np
import pytest

from nla.core.fock import (DensityOperator, FockBasis, PovmElement, apply_beam_splitter, apply_loss,
                           apply_phase, fidelity, get_basis, loss_channel, measure_povm, partial_trace,
                           photon_sector, purity, subspace_populations, tensor_product)
from nla.errors import BasisMismatchError, ConfigError, PhysicalityError, TruncationOverflowError

D_STATE = {(1, 0): 1 / math.sqrt(2), (0, 1): 1 / math.sqrt(2)}


def random_state(basis, rng, rank=3):
    kets = rng.normal(size=(basis.dim, rank)) + 1j * rng.normal(size=(basis.dim, rank))
    matrix = kets @ kets.conj().T
    return DensityOperator(basis, matrix / np.trace(matrix))


def random_pure(basis, rng):
    ket = rng.normal(size=basis.dim) + 1j * rng.normal(size=basis.dim)
    return DensityOperator.from_ket(basis, ket / np.linalg.norm(ket))


class TestFockBasis:

    def test_dimension_counts_bounded_occupations(self):
        assert FockBasis(2, 3).dim == 10
        assert FockBasis(4, 3).dim == 35
        assert FockBasis(6, 3).dim == 84

    def test_documented_order(self):
        basis = FockBasis(2, 2)
        assert basis.occupations == ((0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2))

    def test_index_is_a_bijection(self):
        basis = FockBasis(3, 3)
        assert sorted(basis.index.values()) == list(range(basis.dim))
        for i, occ in enumerate(basis.occupations):
            assert basis.index_of(occ) == i

    def test_unknown_occupation(self):
        with pytest.raises(BasisMismatchError):
            FockBasis(2, 1).index_of((1, 1))

    def test_invalid_basis(self):
        with pytest.raises(ConfigError):
            FockBasis(0, 3)


class TestTensorProduct:

    def test_vacuum_identity(self):
        rho = tensor_product(DensityOperator.vacuum(1), DensityOperator.vacuum(1))
        assert rho.allclose(DensityOperator.vacuum(2))

    def test_single_photons(self):
        one = DensityOperator.from_occupation((1,))
        rho = tensor_product(one, one)
        assert rho.allclose(DensityOperator.from_occupation((1, 1)))
        assert rho.trace_weight == pytest.approx(1.0, abs=1e-12)

    def test_trace_is_multiplicative(self):
        half_vacuum = DensityOperator.from_occupation((0,), weight=0.5)
        rho = tensor_product(half_vacuum, DensityOperator.from_occupation((1,)))
        assert rho.trace_weight == pytest.approx(0.5, abs=1e-12)

    def test_truncation_overflow(self):
        two = DensityOperator.from_occupation((2,), photon_cutoff=3)
        with pytest.raises(TruncationOverflowError):
            tensor_product(two, two)

    def test_mismatched_cutoffs(self):
        with pytest.raises(BasisMismatchError):
            tensor_product(DensityOperator.vacuum(1, 2), DensityOperator.vacuum(1, 3))

    def test_mode_limit(self):
        with pytest.raises(BasisMismatchError):
            tensor_product(DensityOperator.vacuum(4), DensityOperator.vacuum(3))


class TestBeamSplitter:

    def test_unit_transmissivity_is_identity(self):
        rho = DensityOperator.from_occupation((1, 0))
        assert apply_beam_splitter(rho, (0, 1), 1.0).allclose(rho)

    @pytest.mark.parametrize('t', [0.2, 0.5, 0.8])
    def test_single_photon_split(self, t):
        rho = apply_beam_splitter(DensityOperator.from_occupation((1, 0)), (0, 1), t)
        expected = DensityOperator.from_amplitudes({(1, 0): math.sqrt(t), (0, 1): math.sqrt(1 - t)})
        assert rho.allclose(expected)

    def test_hong_ou_mandel_bunching(self):
        rho = apply_beam_splitter(DensityOperator.from_occupation((1, 1)), (0, 1), 0.5)
        expected = DensityOperator.from_amplitudes({(2, 0): 1 / math.sqrt(2), (0, 2): -1 / math.sqrt(2)})
        assert rho.allclose(expected)
        assert rho.matrix[rho.basis.index_of((1, 1)), rho.basis.index_of((1, 1))] == pytest.approx(0, abs=1e-12)

    def test_random_states_keep_physicality_and_photon_number(self):
        rng = np.random.default_rng(7)
        basis = get_basis(3, 3)
        totals = basis.total_photons
        for _ in range(5):
            rho = random_state(basis, rng)
            out = apply_beam_splitter(rho, (0, 2), rng.uniform())
            out.validate()
            assert out.trace_weight == pytest.approx(1.0, abs=1e-10)
            for n in range(4):
                block = totals == n
                assert np.trace(out.matrix[np.ix_(block, block)]).real == pytest.approx(
                    np.trace(rho.matrix[np.ix_(block, block)]).real, abs=1e-10)

    def test_block_diagonal_on_sector_states(self):
        rng = np.random.default_rng(11)
        basis = get_basis(2, 3)
        sector = photon_sector(random_state(basis, rng), 2).normalized()
        out = apply_beam_splitter(sector, (0, 1), 0.3)
        assert np.allclose(out.matrix, photon_sector(out, 2).matrix, atol=1e-10)

    def test_transmissivity_out_of_range(self):
        with pytest.raises(ConfigError):
            apply_beam_splitter(DensityOperator.vacuum(2), (0, 1), 1.2)

    def test_same_mode_twice(self):
        with pytest.raises(ConfigError):
            apply_beam_splitter(DensityOperator.vacuum(2), (1, 1), 0.5)


class TestLoss:

    def test_unit_transmissivity(self):
        rng = np.random.default_rng(3)
        rho = random_state(get_basis(2, 3), rng)
        assert apply_loss(rho, 1, 1.0).allclose(rho)

    @pytest.mark.parametrize('eta', [0.0, 0.3, 0.9])
    def test_single_photon_damping(self, eta):
        rho = apply_loss(DensityOperator.from_occupation((1,)), 0, eta)
        expected = np.diag([1 - eta, eta, 0, 0])
        assert np.allclose(rho.matrix, expected, atol=1e-12)

    def test_mixture_of_two_components(self):
        eta = 0.3
        alice = apply_beam_splitter(DensityOperator.from_occupation((1, 0)), (0, 1), 0.5)
        rho = apply_loss(alice, 1, eta)
        assert subspace_populations(rho).pop_vac == pytest.approx((1 - eta) / 2, abs=1e-12)
        assert rho.trace_weight == pytest.approx(1.0, abs=1e-12)

    def test_loss_composition(self):
        rng = np.random.default_rng(5)
        rho = random_state(get_basis(2, 3), rng)
        twice = apply_loss(apply_loss(rho, 0, 0.6), 0, 0.7)
        assert twice.allclose(apply_loss(rho, 0, 0.42))

    def test_kraus_completeness(self):
        for eta in (0.0, 0.25, 0.5, 0.99):
            assert loss_channel(get_basis(3, 3), 1, eta).completeness_error() < 1e-12

    def test_out_of_range(self):
        with pytest.raises(ConfigError):
            apply_loss(DensityOperator.vacuum(1), 0, -0.1)


class TestPhase:

    def test_pi_phase_flips_relative_sign(self):
        rho = apply_phase(DensityOperator.from_amplitudes(D_STATE), 1, math.pi)
        anti = DensityOperator.from_amplitudes({(1, 0): 1 / math.sqrt(2), (0, 1): -1 / math.sqrt(2)})
        assert rho.allclose(anti)


class TestMeasurement:

    def test_identity_element(self):
        rho = DensityOperator.from_occupation((1, 0))
        p, conditional = measure_povm(rho, 0, PovmElement.from_diagonal(np.ones(4), 'all'))
        assert p == pytest.approx(1.0)
        assert conditional.allclose(DensityOperator.vacuum(1))

    def test_vacuum_never_clicks(self):
        click = PovmElement.from_diagonal([0, 1, 1, 1], 'click')
        p, _ = measure_povm(DensityOperator.vacuum(2), 1, click)
        assert p == 0.0

    def test_inefficient_click(self):
        delta = 0.7
        click = PovmElement.from_diagonal([1 - (1 - delta) ** n for n in range(4)], 'click')
        p, conditional = measure_povm(DensityOperator.from_occupation((1,)), 0, click)
        assert p == pytest.approx(delta, abs=1e-12)
        assert conditional.trace_weight == pytest.approx(delta, abs=1e-12)

    def test_grouped_modes_add_counts(self):
        one = PovmElement.from_diagonal([0, 1, 0, 0], 'one')
        p, conditional = measure_povm(DensityOperator.from_occupation((1, 1, 0)), (0, 1), one)
        assert p == 0.0
        p, conditional = measure_povm(DensityOperator.from_occupation((1, 0, 1)), (0, 1), one)
        assert p == pytest.approx(1.0)
        assert conditional.allclose(DensityOperator.from_occupation((1,)))

    def test_conditional_trace_is_probability(self):
        rng = np.random.default_rng(13)
        rho = random_state(get_basis(2, 3), rng)
        element = PovmElement.from_diagonal([0.1, 0.5, 0.7, 0.9], 'partial')
        p, conditional = measure_povm(rho, 1, element)
        assert conditional.trace_weight == pytest.approx(p, abs=1e-12)
        assert 0.0 <= p <= 1.0

    def test_element_above_identity(self):
        with pytest.raises(PhysicalityError):
            PovmElement.from_diagonal([1.5, 0, 0, 0], 'bad')


class TestPartialTrace:

    def test_trace_second_mode(self):
        rho = partial_trace(DensityOperator.from_occupation((1, 0)), [1])
        assert rho.allclose(DensityOperator.from_occupation((1,)))

    def test_entangled_state_reduces_to_mixture(self):
        rho = partial_trace(DensityOperator.from_amplitudes(D_STATE), [1])
        assert np.allclose(rho.matrix, np.diag([0.5, 0.5, 0, 0]), atol=1e-12)

    def test_nothing_to_trace(self):
        rho = DensityOperator.from_amplitudes(D_STATE)
        assert partial_trace(rho, ()) is rho

    def test_preserves_trace_and_hermiticity(self):
        rng = np.random.default_rng(17)
        rho = random_state(get_basis(3, 3), rng)
        reduced = partial_trace(rho, [0, 2])
        reduced.validate()
        assert reduced.trace_weight == pytest.approx(1.0, abs=1e-12)

    def test_cannot_remove_every_mode(self):
        with pytest.raises(BasisMismatchError):
            partial_trace(DensityOperator.vacuum(2), [0, 1])


class TestFidelity:

    def test_self_fidelity(self):
        rng = np.random.default_rng(19)
        rho = random_state(get_basis(2, 3), rng)
        assert fidelity(rho, rho) == pytest.approx(1.0, abs=1e-9)

    def test_orthogonal_states(self):
        assert fidelity(DensityOperator.from_occupation((1, 0)),
                        DensityOperator.from_occupation((0, 1))) == pytest.approx(0.0, abs=1e-12)

    def test_mixed_against_bell_like(self):
        mixed = 0.5 * DensityOperator.from_occupation((1, 0)) + 0.5 * DensityOperator.from_occupation((0, 1))
        assert fidelity(mixed, DensityOperator.from_amplitudes(D_STATE)) == pytest.approx(0.5, abs=1e-10)

    def test_random_properties(self):
        rng = np.random.default_rng(23)
        basis = get_basis(2, 2)
        for _ in range(10):
            psi, phi = random_pure(basis, rng), random_pure(basis, rng)
            rho, sigma = random_state(basis, rng), random_state(basis, rng)
            overlap = abs(np.vdot(psi.eigen_components()[0][1], phi.eigen_components()[0][1])) ** 2
            assert fidelity(psi, phi) == pytest.approx(overlap, abs=1e-10)
            assert fidelity(rho, sigma) == pytest.approx(fidelity(sigma, rho), abs=1e-10)
            assert 0.0 <= fidelity(rho, sigma) <= 1.0

    def test_rank_deficient_states_in_rotated_frame(self):
        rng = np.random.default_rng(31)
        basis = get_basis(2, 2)
        unitary, _ = np.linalg.qr(rng.normal(size=(basis.dim, basis.dim))
                                  + 1j * rng.normal(size=(basis.dim, basis.dim)))
        p = np.array([0.7, 0.3, 0, 0, 0, 0])
        q = np.array([0.2, 0.8, 0, 0, 0, 0])
        rho = DensityOperator(basis, unitary @ np.diag(p) @ unitary.conj().T)
        sigma = DensityOperator(basis, unitary @ np.diag(q) @ unitary.conj().T)
        expected = (math.sqrt(0.7 * 0.2) + math.sqrt(0.3 * 0.8)) ** 2
        assert fidelity(rho, sigma) == pytest.approx(expected, abs=1e-10)
        assert fidelity(sigma, rho) == pytest.approx(expected, abs=1e-10)

    def test_pure_target_in_rotated_frame(self):
        rng = np.random.default_rng(37)
        basis = get_basis(2, 2)
        unitary, _ = np.linalg.qr(rng.normal(size=(basis.dim, basis.dim))
                                  + 1j * rng.normal(size=(basis.dim, basis.dim)))
        rho = DensityOperator(basis, unitary @ np.diag([0.6, 0.4, 0, 0, 0, 0]) @ unitary.conj().T)
        target = DensityOperator.from_ket(basis, unitary[:, 0])
        assert fidelity(rho, target) == pytest.approx(0.6, abs=1e-12)

    def test_unnormalized_input(self):
        rho = DensityOperator.from_occupation((1, 0), weight=0.5)
        with pytest.raises(PhysicalityError):
            fidelity(rho, DensityOperator.from_occupation((1, 0)))


class TestPopulations:

    def test_vacuum(self):
        pops = subspace_populations(DensityOperator.vacuum(2))
        assert (pops.pop_vac, pops.pop_one, pops.pop_two) == (1.0, 0.0, 0.0)

    def test_bell_like(self):
        pops = subspace_populations(DensityOperator.from_amplitudes(D_STATE))
        assert pops.pop_one == pytest.approx(1.0)
        assert pops.pop_vac == pytest.approx(0.0)

    def test_mixture(self):
        rho = 0.4 * DensityOperator.vacuum(2) + 0.6 * DensityOperator.from_amplitudes(D_STATE)
        pops = subspace_populations(rho)
        assert pops.pop_vac == pytest.approx(0.4)
        assert pops.pop_one == pytest.approx(0.6)
        assert pops.pop_two == pytest.approx(0.0)

    def test_purity(self):
        rho = 0.4 * DensityOperator.vacuum(2) + 0.6 * DensityOperator.from_amplitudes(D_STATE)
        assert purity(rho) == pytest.approx(0.16 + 0.36)
