import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ergoflow.core import BETA_INF, DiagonalState, DomainError, Spectrum, entropy, free_energy, gibbs_state, state_from
from ergoflow.ergotropy import (
    beta_star,
    bound_single_system,
    bound_with_bath,
    decompose,
    ergotropy,
    extraction_bound,
    passive_state,
)
from ergoflow.thermomaj import enumerate_extremal_states

import oracles


def random_state(rng, d, alpha=0.8):
    s = Spectrum(np.concatenate([[0], np.sort(rng.uniform(0, 5, d - 1))]))
    return DiagonalState(rng.dirichlet(np.full(d, alpha)), s)


@st.composite
def states(draw, max_dim=6):
    d = draw(st.integers(2, max_dim))
    # gaps below 1e-9 become exact degeneracies; denormal spacings have no resolvable beta*
    raw = draw(st.lists(st.floats(0.0, 8.0), min_size=d - 1, max_size=d - 1))
    e = sorted(x if x >= 1e-9 else 0.0 for x in raw)
    w = draw(st.lists(st.floats(0.0, 1.0), min_size=d, max_size=d).filter(lambda v: sum(v) > 1e-3))
    return DiagonalState(np.array(w) / np.sum(w), Spectrum([0.0] + e))


class TestPassive:
    def test_gibbs_is_passive(self):
        g = gibbs_state([0, 1, 3], 0.7)
        assert passive_state(g) == g
        assert ergotropy(g) == 0.0

    def test_swap(self):
        assert passive_state(state_from([0.1, 0.9], [0, 1])).probs.tolist() == [0.9, 0.1]

    def test_full_inversion(self):
        assert ergotropy(state_from([0, 1], [0, 2.5])) == 2.5

    def test_random_d5_matches_brute_force(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            s = random_state(rng, 5)
            brute, emin, _ = oracles.brute_passive(s.probs, s.energies)
            assert np.array_equal(passive_state(s).probs, brute)

    def test_random_d6_ergotropy_matches_brute_force(self):
        rng = np.random.default_rng(6)
        for _ in range(200):
            s = random_state(rng, 6)
            assert ergotropy(s) == pytest.approx(oracles.brute_ergotropy(s.probs, s.energies), abs=1e-12)

    def test_ties_keep_level_order(self):
        assert passive_state(state_from([0.2, 0.4, 0.4], [0, 1, 2])).probs.tolist() == [0.4, 0.4, 0.2]

    @given(states())
    @settings(max_examples=300, deadline=None)
    def test_zero_iff_passive(self, s):
        r = ergotropy(s)
        assert r >= 0.0
        p = s.probs
        e = s.energies

        def violation(gap):
            # largest population excess of a level over one at least ``gap`` below it
            return max([p[j] - p[i] for i in range(s.dim) for j in range(i + 1, s.dim)
                        if e[j] - e[i] > gap] + [0.0])

        if violation(0.0) <= 0.0:
            assert r == pytest.approx(0.0, abs=1e-14)
        if violation(1e-3) > 1e-9:
            assert r > 0.0

    def test_convexity(self):
        rng = np.random.default_rng(7)
        for _ in range(1000):
            d = int(rng.integers(2, 7))
            a = random_state(rng, d)
            b = DiagonalState(rng.dirichlet(np.ones(d)), a.spectrum)
            t = rng.uniform()
            mix = DiagonalState(t * a.probs + (1 - t) * b.probs, a.spectrum)
            assert ergotropy(mix) <= t * ergotropy(a) + (1 - t) * ergotropy(b) + 1e-12

    @given(states(), st.lists(st.floats(0.05, 20.0), min_size=5, max_size=5, unique=True))
    @settings(max_examples=100, deadline=None)
    def test_free_energy_difference_identity(self, s, betas):
        for beta in betas:
            diff = free_energy(s, beta) - free_energy(passive_state(s), beta)
            assert diff == pytest.approx(ergotropy(s), abs=1e-10)


class TestBetaStar:
    def test_gibbs_fixed_point(self):
        assert beta_star(gibbs_state([0, 1, 2.5], 2.0)) == pytest.approx(2.0, abs=1e-9)

    def test_uniform(self):
        assert beta_star(state_from([1 / 3] * 3, [0, 1, 2])) == 0.0

    def test_pure(self):
        assert beta_star(state_from([0, 1], [0, 1])) is BETA_INF

    def test_two_level_self_consistent(self):
        s = state_from([0.7, 0.3], [0, 1])
        b = beta_star(s)
        assert abs(entropy(gibbs_state(s.spectrum, b)) - entropy(s)) < 1e-10

    @given(states())
    @settings(max_examples=200, deadline=None)
    def test_entropy_match(self, s):
        b = beta_star(s)
        if b is BETA_INF or b == 0.0:
            return
        assert abs(entropy(gibbs_state(s.spectrum, b)) - entropy(s)) < 1e-10


class TestBounds:
    def test_single_system_examples(self):
        assert bound_single_system(gibbs_state([0, 1, 2], 1.3)) == pytest.approx(0.0, abs=1e-10)
        assert bound_single_system(state_from([0, 1], [0, 1])) == 1.0
        # a qubit with matching entropy shares the Gibbs spectrum: no gap
        s = state_from([0.3, 0.7], [0, 1])
        assert bound_single_system(s) == pytest.approx(ergotropy(s), abs=1e-10)
        s3 = state_from([0.3, 0.1, 0.6], [0, 1, 2])
        assert bound_single_system(s3) > ergotropy(s3) + 1e-3

    def test_degenerate_ground(self):
        s = state_from([0.0, 0.5, 0.5], [0, 0, 0])
        assert beta_star(s) is BETA_INF
        assert bound_single_system(s) == 0.0

    def test_unresolvable_spacing_raises(self):
        with pytest.raises(DomainError):
            beta_star(state_from([2 / 3, 1 / 3], [0, 1e-308]))

    def test_single_system_pure_is_limit(self):
        # large finite-beta Gibbs neighbours approach the pure-state value
        e = [0, 1, 2]
        exact = bound_single_system(state_from([0, 0, 1], e))
        assert exact == 2.0
        near = bound_single_system(state_from([1e-9, 1e-9, 1 - 2e-9], e))
        assert near == pytest.approx(exact, abs=1e-6)

    @given(states())
    @settings(max_examples=300, deadline=None)
    def test_single_system_dominates_ergotropy(self, s):
        assert bound_single_system(s) >= ergotropy(s) - 1e-10

    def test_bound_with_bath_examples(self):
        assert bound_with_bath(gibbs_state([0, 1], 0.8), 0.8) == pytest.approx(0.0, abs=1e-15)
        for w, beta in ((1.0, 1.0), (2.0, 0.3), (0.5, 4.0)):
            expected = math.log(1 + math.exp(-beta * w)) / beta
            assert bound_with_bath(state_from([1, 0], [0, w]), beta) == pytest.approx(expected, rel=1e-14)

    @given(states(), st.floats(0.05, 10.0))
    @settings(max_examples=300, deadline=None)
    def test_bound_ordering(self, s, beta):
        assert extraction_bound(s, beta) <= bound_with_bath(s, beta) + 1e-12

    def test_extraction_bound_examples(self):
        g = gibbs_state([0, 1, 2], 0.4)
        assert extraction_bound(g, 0.4) == pytest.approx(0.0, abs=1e-15)
        passive = state_from([0.6, 0.3, 0.1], [0, 1, 2])
        assert extraction_bound(passive, 1.1) == bound_with_bath(passive, 1.1)

    def test_bound_chain_over_polytope(self):
        rng = np.random.default_rng(8)
        checked = 0
        while checked < 1000:
            d = int(rng.integers(2, 5))
            init = random_state(rng, d)
            beta = rng.uniform(0.1, 3.0)
            finals = enumerate_extremal_states(init, beta)
            final = finals[rng.integers(len(finals))]
            gain = ergotropy(final) - ergotropy(init)
            assert gain <= extraction_bound(init, beta) + 1e-9
            assert extraction_bound(init, beta) <= bound_with_bath(init, beta) + 1e-12
            checked += 1


class TestDecompose:
    def test_gibbs_trivial(self):
        g = gibbs_state([0, 1, 2], 1.0)
        dec = decompose(g, g, 1.0)
        assert dec.free_energy_resource == pytest.approx(0, abs=1e-15)
        assert dec.passivity_gap == pytest.approx(0, abs=1e-15)
        assert dec.entropy_production == pytest.approx(0, abs=1e-15)

    def test_gibbs_spectrum_final_has_no_gap(self):
        g = gibbs_state([0, 1, 2], 1.0)
        init = state_from([0.1, 0.2, 0.7], [0, 1, 2])
        final = DiagonalState(g.probs[[2, 0, 1]], g.spectrum)
        assert decompose(init, final, 1.0).passivity_gap == pytest.approx(0.0, abs=1e-14)

    def test_identity_random_pairs(self):
        rng = np.random.default_rng(9)
        for _ in range(1000):
            d = int(rng.integers(2, 6))
            init = random_state(rng, d)
            final = DiagonalState(rng.dirichlet(np.ones(d)), init.spectrum)
            beta = rng.uniform(0.1, 5.0)
            dec = decompose(init, final, beta)
            assert dec.ergotropy == pytest.approx(oracles.brute_ergotropy(final.probs, final.energies), abs=1e-10)
            assert dec.passivity_gap >= -1e-12

    def test_entropy_production_nonnegative_for_thermal_maps(self):
        rng = np.random.default_rng(10)
        for _ in range(300):
            d = int(rng.integers(2, 5))
            init = random_state(rng, d)
            beta = rng.uniform(0.1, 3.0)
            a = oracles.random_gibbs_matrix(oracles.gibbs_np(init.energies, beta), rng)
            final = DiagonalState(a @ init.probs, init.spectrum)
            assert decompose(init, final, beta).entropy_production >= -1e-12
