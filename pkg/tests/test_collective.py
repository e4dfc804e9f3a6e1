import math
from fractions import Fraction

import numpy as np
import pytest
import scipy.stats
from hypothesis import given, strategies as st

from mesoparity.collective import (
    CollectiveBlockState,
    DickeLadder,
    MsConfig,
    RepresentationError,
    SectorMixture,
    SectorProjector,
    binomial_pmf,
    block_ground_state,
    collective_flip,
    collective_rotation,
    dicke_basis,
    dicke_vector,
    edge_phase_gate,
    expand_to_dense,
    ghz_entangler,
    ladder_generator,
    ladder_ground,
    mixture_conditional,
    mixture_prepare,
    mixture_to_dense,
    popcounts,
    rotation_matrix,
    sector_probabilities,
    thermal_ms_dense,
    total_excitation_grid,
)
from mesoparity.states import (
    LABEL_MS,
    LABEL_Q1,
    LABEL_Q2,
    LayoutError,
    PureState,
    SubsystemLayout,
    ValidationError,
)

import helpers
from helpers import (
    dense_flip,
    dicke_columns,
    joint_controlled,
    kron_chain,
    ladder_rotation_oracle,
    thermal_matrix,
)


# ---------------------------------------------------------------------------
# counting and binomials


def test_popcounts_matches_bin():
    for n in (1, 3, 6):
        got = popcounts(n)
        want = [helpers.popcount(b) for b in range(1 << n)]
        np.testing.assert_array_equal(got, want)


def test_total_excitation_grid_two_blocks():
    grid = total_excitation_grid((2, 2))
    want = np.add.outer(np.arange(3), np.arange(3))
    np.testing.assert_array_equal(grid, want)


def test_binomial_pmf_exact_small():
    pmf = binomial_pmf(3, 0.25)
    want = [Fraction(27, 64), Fraction(27, 64), Fraction(9, 64), Fraction(1, 64)]
    np.testing.assert_allclose(pmf, [float(w) for w in want], atol=1e-16)


def test_binomial_pmf_against_scipy_large():
    # beyond the exact-product range the log-space path must stay accurate
    for n, p in ((120, 0.3), (200, 0.55), (500, 0.04)):
        got = binomial_pmf(n, p)
        want = scipy.stats.binom.pmf(np.arange(n + 1), n, p)
        np.testing.assert_allclose(got, want, atol=1e-14, rtol=1e-11)
        assert abs(math.fsum(got) - 1.0) < 1e-12


def test_binomial_pmf_degenerate_edges():
    np.testing.assert_array_equal(binomial_pmf(4, 0.0), [1, 0, 0, 0, 0])
    np.testing.assert_array_equal(binomial_pmf(4, 1.0), [0, 0, 0, 0, 1])


@given(n=st.integers(1, 300), p=st.floats(0.0, 1.0))
def test_binomial_pmf_normalized_and_nonnegative(n, p):
    pmf = binomial_pmf(n, p)
    assert pmf.min() >= 0.0
    assert abs(math.fsum(pmf) - 1.0) < 1e-11


# ---------------------------------------------------------------------------
# MS configuration


class TestMsConfig:
    def test_polarization_roundtrip(self):
        cfg = MsConfig(4, 0.3)
        assert cfg.polarization == pytest.approx(0.7)
        assert MsConfig.from_polarization(4, 0.7).epsilon == pytest.approx(0.3)
        assert cfg.ground_probability == pytest.approx(0.85)

    def test_sector_weights_frozen_example(self):
        np.testing.assert_allclose(
            MsConfig(2, 0.5).sector_weights(), [0.5625, 0.375, 0.0625], atol=1e-15
        )

    @pytest.mark.parametrize("bad", [-0.1, 1.0, 1.5, float("nan")])
    def test_epsilon_range_enforced(self, bad):
        with pytest.raises(ValidationError):
            MsConfig(3, bad)

    def test_positive_size_enforced(self):
        with pytest.raises(ValidationError):
            MsConfig(0)


def test_thermal_ms_dense_matches_kron_oracle():
    for n, eps in ((1, 0.4), (3, 0.5), (4, 0.22)):
        rho = thermal_ms_dense(MsConfig(n, eps))
        np.testing.assert_allclose(rho.matrix, thermal_matrix(n, eps), atol=1e-15)


def test_thermal_ms_dense_respects_density_cap():
    with pytest.raises(LayoutError):
        thermal_ms_dense(MsConfig(12, 0.5))


def test_sector_projector_expectation():
    rho = thermal_ms_dense(MsConfig(2, 0.5))
    assert SectorProjector(1).expectation(rho) == pytest.approx(0.375)
    np.testing.assert_array_equal(SectorProjector(1).dense_mask(2), [0, 1, 1, 0])


# ---------------------------------------------------------------------------
# Dicke ladder machinery


def test_dicke_vectors_match_independent_construction():
    for n in (1, 2, 4):
        want = dicke_columns(n)
        for m in range(n + 1):
            np.testing.assert_allclose(dicke_vector(n, m), want[:, m], atol=1e-15)
        np.testing.assert_allclose(dicke_basis(n), want, atol=1e-15)


def test_ladder_generator_is_compressed_sum_sigma_x():
    for n in (1, 2, 5):
        d = dicke_columns(n)
        want = d.T @ helpers.sum_sigma_x(n) @ d
        np.testing.assert_allclose(ladder_generator(n), want, atol=1e-12)


@given(n=st.integers(1, 6), theta=st.floats(-7.0, 7.0))
def test_rotation_matrix_matches_expm_oracle(n, theta):
    got = rotation_matrix(n, theta)
    want = ladder_rotation_oracle(n, theta)
    np.testing.assert_allclose(got, want, atol=1e-10)


def test_half_turn_reverses_the_ladder():
    # exp(-i*(pi/2)*sum sigma_x) acts as (-i)^n times m -> n-m
    for n in (1, 2, 3, 6):
        u = rotation_matrix(n, math.pi / 2.0)
        want = (-1j) ** n * np.eye(n + 1)[::-1]
        np.testing.assert_allclose(u, want, atol=1e-12)


def test_collective_rotation_moves_ground_to_top():
    for n in (2, 5):
        rotated = collective_rotation(math.pi / 2.0, ladder_ground(n))
        amp = rotated.amplitudes
        assert abs(abs(amp[-1]) - 1.0) < 1e-12
        np.testing.assert_allclose(amp[:-1], 0.0, atol=1e-12)


def test_ladder_normalization_enforced():
    with pytest.raises(ValidationError):
        DickeLadder(2, np.array([1.0, 1.0, 0.0]))


# ---------------------------------------------------------------------------
# collective flip across representations


def _joint_pure(rng, n):
    lay = SubsystemLayout((2, 2, 1 << n), (LABEL_Q1, LABEL_Q2, LABEL_MS))
    return PureState(helpers.random_unit_vector(rng, lay.total_dim), lay)


def test_unconditional_flip_matches_kron_oracle(rng):
    for n in (1, 3):
        psi = _joint_pure(rng, n)
        got = collective_flip(psi)
        want = kron_chain([np.eye(2), np.eye(2), dense_flip(n)]) @ psi.amplitudes
        np.testing.assert_allclose(got.amplitudes, want, atol=1e-13)


def test_controlled_flip_matches_kron_oracle(rng):
    for n in (1, 2, 4):
        for control in (LABEL_Q1, LABEL_Q2):
            psi = _joint_pure(rng, n)
            got = collective_flip(psi, controlled_on=control)
            name = "q1" if control == LABEL_Q1 else "q2"
            want = joint_controlled(n, name, dense_flip(n)) @ psi.amplitudes
            np.testing.assert_allclose(got.amplitudes, want, atol=1e-13)


def test_flip_is_involutive(rng):
    psi = _joint_pure(rng, 3)
    twice = collective_flip(collective_flip(psi, controlled_on=LABEL_Q1),
                            controlled_on=LABEL_Q1)
    np.testing.assert_allclose(twice.amplitudes, psi.amplitudes, atol=1e-13)


def test_block_flip_acts_on_named_half(rng):
    # flip only the first half of a 4-site register, controlled on q1
    n = 4
    psi = _joint_pure(rng, n)
    got = collective_flip(psi, controlled_on=LABEL_Q1, blocks=(0,), block_sizes=(2, 2))
    half = np.kron(dense_flip(2), np.eye(4))
    want = joint_controlled(n, "q1", half) @ psi.amplitudes
    np.testing.assert_allclose(got.amplitudes, want, atol=1e-13)


def test_block_state_flip_agrees_with_dense():
    amps = np.zeros((2, 2))
    amps[0, 0] = amps[1, 1] = amps[0, 1] = amps[1, 0] = 0.5
    block = block_ground_state(amps, (3,))
    flipped = collective_flip(block, controlled_on=LABEL_Q1)
    dense = expand_to_dense(flipped)
    start = expand_to_dense(block_ground_state(amps, (3,)))
    want = joint_controlled(3, "q1", dense_flip(3)) @ start.amplitudes
    np.testing.assert_allclose(dense.amplitudes, want, atol=1e-13)


def test_mixture_only_supports_unconditional_flip():
    mix = mixture_prepare(MsConfig(3, 0.4))
    with pytest.raises(RepresentationError):
        collective_flip(mix, controlled_on=LABEL_Q1)


# ---------------------------------------------------------------------------
# local entangler pieces


def test_ghz_entangler_matrix_form(rng):
    # A = (I - i*flip)/sqrt(2) on the MS register, identity on the qubits
    n = 3
    psi = _joint_pure(rng, n)
    got = ghz_entangler(psi)
    a = (np.eye(1 << n) - 1j * dense_flip(n)) / math.sqrt(2.0)
    want = kron_chain([np.eye(2), np.eye(2), a]) @ psi.amplitudes
    np.testing.assert_allclose(got.amplitudes, want, atol=1e-13)
    back = ghz_entangler(got, inverse=True)
    np.testing.assert_allclose(back.amplitudes, psi.amplitudes, atol=1e-12)


def test_edge_phase_gate_matches_cz_oracle(rng):
    # q1 couples to the first (most significant) site, q2 to the last
    n = 3
    psi = _joint_pure(rng, n)
    z_first = np.diag([(-1.0) ** ((b >> (n - 1)) & 1) for b in range(1 << n)])
    z_last = np.diag([(-1.0) ** (b & 1) for b in range(1 << n)])
    got1 = edge_phase_gate(psi, LABEL_Q1)
    want1 = joint_controlled(n, "q1", z_first) @ psi.amplitudes
    np.testing.assert_allclose(got1.amplitudes, want1, atol=1e-13)
    got2 = edge_phase_gate(psi, LABEL_Q2)
    want2 = joint_controlled(n, "q2", z_last) @ psi.amplitudes
    np.testing.assert_allclose(got2.amplitudes, want2, atol=1e-13)


def test_edge_phase_gate_needs_extremal_sectors():
    # when the control branch occupies an interior sector there is no
    # single-site phase inside the symmetric subspace
    amps = np.zeros((2, 2, 4), dtype=complex)
    amps[1, 0] = [0.0, 1.0, 0.0, 0.0]
    state = CollectiveBlockState(amps, (3,))
    with pytest.raises(RepresentationError):
        edge_phase_gate(state, LABEL_Q1)

    # an empty control branch imposes no constraint
    quiet = np.zeros((2, 2, 4), dtype=complex)
    quiet[0, 0] = [0.0, 1.0, 0.0, 0.0]
    out = edge_phase_gate(CollectiveBlockState(quiet, (3,)), LABEL_Q1)
    np.testing.assert_allclose(out.amplitudes, quiet, atol=1e-15)


# ---------------------------------------------------------------------------
# sector probabilities


def test_sector_probabilities_consistency(rng):
    n = 3
    psi = _joint_pure(rng, n)
    probs = sector_probabilities(psi)
    pops = popcounts(n)
    t = np.abs(psi.as_tensor()) ** 2
    want = np.array([t[:, :, pops == m].sum() for m in range(n + 1)])
    np.testing.assert_allclose(probs, want, atol=1e-13)
    rho = psi.to_density()
    np.testing.assert_allclose(sector_probabilities(rho), want, atol=1e-13)


def test_sector_probabilities_mixture_matches_dense():
    mix = mixture_prepare(MsConfig(3, 0.4))
    np.testing.assert_allclose(
        sector_probabilities(mix),
        sector_probabilities(mixture_to_dense(mix)),
        atol=1e-13,
    )


# ---------------------------------------------------------------------------
# sector-resolved mixtures


class TestSectorMixture:
    def test_prepare_expands_to_product_state(self):
        for n, eps in ((2, 0.5), (3, 0.2)):
            mix = mixture_prepare(MsConfig(n, eps))
            rho = mixture_to_dense(mix)
            plus = np.full(4, 0.5)
            want = np.kron(np.outer(plus, plus), thermal_matrix(n, eps))
            np.testing.assert_allclose(rho.matrix, want, atol=1e-14)

    @pytest.mark.parametrize("odd_flip,even_flip", [
        (False, False), (True, False), (False, True), (True, True),
    ])
    def test_conditional_matches_dense_conjugation(self, odd_flip, even_flip):
        n, eps = 3, 0.45
        mix = mixture_conditional(mixture_prepare(MsConfig(n, eps)), odd_flip, even_flip)
        got = mixture_to_dense(mix).matrix
        eye = np.eye(1 << n)
        flip = dense_flip(n)
        u = helpers.parity_conditioned_unitary(
            n, flip if odd_flip else eye, flip if even_flip else eye
        )
        plus = np.full(4, 0.5)
        start = np.kron(np.outer(plus, plus), thermal_matrix(n, eps))
        want = u @ start @ u.conj().T
        np.testing.assert_allclose(got, want, atol=1e-14)

    def test_conditional_is_involutive(self):
        mix = mixture_prepare(MsConfig(4, 0.3))
        once = mixture_conditional(mix, True, False)
        twice = mixture_conditional(once, True, False)
        np.testing.assert_allclose(twice.weight_odd, mix.weight_odd, atol=1e-15)
        np.testing.assert_allclose(twice.cross, mix.cross, atol=1e-15)
        assert twice.cross_flipped == mix.cross_flipped

    def test_branch_fidelities_sum_to_one(self):
        mix = mixture_conditional(mixture_prepare(MsConfig(5, 0.6)), True, False)
        assert mix.fidelity_odd + mix.fidelity_even == pytest.approx(1.0, abs=1e-12)

    def test_weight_normalization_enforced(self):
        w = binomial_pmf(2, 0.25)
        with pytest.raises(ValidationError):
            SectorMixture(2, 2.0 * w, w, np.zeros(3))

    def test_cross_block_bounded_by_weights(self):
        w = binomial_pmf(2, 0.25)
        too_big = np.full(3, 1.0)
        with pytest.raises(ValidationError):
            SectorMixture(2, w, w, too_big)

    def test_to_dense_respects_cap(self):
        with pytest.raises(LayoutError):
            mixture_to_dense(mixture_prepare(MsConfig(16, 0.5)))


def test_expand_to_dense_of_ladder_ground():
    amps = np.zeros((2, 2, 4), dtype=complex)
    amps[0, 0, 0] = 1.0
    dense = expand_to_dense(CollectiveBlockState(amps, (3,)))
    want = np.zeros(32)
    want[0] = 1.0
    np.testing.assert_allclose(dense.amplitudes, want, atol=1e-15)
    assert dense.layout.dims == (2, 2, 8)
