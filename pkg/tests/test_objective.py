import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ascvar.objective import (
    EnergySamples,
    ObjectiveSpec,
    cvar_from_histogram,
    cvar_from_samples,
    evaluate,
    exact_cvar,
    expectation,
    sample_energies,
    shots_for_alpha,
    tail_size,
)
from ascvar.problems import DiagonalHamiltonian
from ascvar.statevector import RandomSource, StateVector, new_plus_state, sample_histogram

H4 = DiagonalHamiltonian.from_energies([0.0, 1.0, 2.0, 3.0])


def state_from_probs(p):
    p = np.asarray(p, dtype=float)
    return StateVector(int(p.size).bit_length() - 1, np.sqrt(p / p.sum()).astype(complex))


def random_state(n, g):
    a = g.standard_normal(1 << n) + 1j * g.standard_normal(1 << n)
    return StateVector(n, a / np.linalg.norm(a))


def bootstrap_se(counts, sorted_energies, alpha, g, reps=200):
    total = int(counts.sum())
    p = counts / total
    vals = [cvar_from_histogram(g.multinomial(total, p), sorted_energies, alpha) for _ in range(reps)]
    return float(np.std(vals, ddof=1))


class TestCvarFromSamples:
    def test_alpha_one_is_mean(self):
        assert cvar_from_samples(EnergySamples([1, 2, 3, 4]), 1.0) == 2.5

    def test_half(self):
        assert cvar_from_samples(EnergySamples([4, 3, 2, 1]), 0.5) == 1.5

    def test_constant(self):
        assert cvar_from_samples(EnergySamples([5, 5, 5]), 0.01) == 5

    @pytest.mark.parametrize("alpha", [0.0, -0.1, 1.5, math.nan])
    def test_bad_alpha(self, alpha):
        with pytest.raises(ValueError):
            cvar_from_samples(EnergySamples([1.0]), alpha)

    def test_empty(self):
        with pytest.raises(ValueError):
            EnergySamples([])


class TestShots:
    @pytest.mark.parametrize("k,alpha,expect", [(1000, 0.1, 10000), (1000, 1.0, 1000), (1000, 0.03, 33334)])
    def test_examples(self, k, alpha, expect):
        assert shots_for_alpha(k, alpha) == expect

    def test_tail_size_robust_to_float_noise(self):
        assert tail_size(0.1, 10000) == 1000
        assert tail_size(0.07, 100) == 7

    def test_bad_alpha(self):
        with pytest.raises(ValueError):
            shots_for_alpha(1000, 0.0)


class TestExactCvar:
    def test_quarter(self):
        assert exact_cvar(new_plus_state(2), H4, 0.25) == pytest.approx(0.0, abs=1e-15)

    def test_three_eighths(self):
        assert exact_cvar(new_plus_state(2), H4, 0.375) == pytest.approx(1 / 3, abs=1e-15)

    def test_alpha_one_is_expectation(self):
        s = random_state(3, np.random.default_rng(0))
        h = DiagonalHamiltonian.from_energies(np.random.default_rng(1).normal(size=8))
        assert exact_cvar(s, h, 1.0) == pytest.approx(expectation(s, h), abs=1e-12)

    def test_ties_use_index_order(self):
        h = DiagonalHamiltonian.from_energies([1.0, 0.0, 0.0, 2.0])
        np.testing.assert_array_equal(h.order, [1, 2, 0, 3])

    def test_size_mismatch(self):
        with pytest.raises(ValueError):
            exact_cvar(new_plus_state(3), H4, 0.5)

    def test_ground_mass_plateau(self):
        # probability 0.3 on the unique ground state
        e = np.array([-3.0, -1.0, 0.0, 0.5, 1.0, 2.0, 2.5, 4.0])
        p = np.array([0.3, 0.2, 0.1, 0.1, 0.1, 0.1, 0.05, 0.05])
        h = DiagonalHamiltonian.from_energies(e)
        s = state_from_probs(p)
        for a in (0.05, 0.1, 0.2, 0.3):
            assert abs(exact_cvar(s, h, a) - (-3.0)) < 1e-12
        assert exact_cvar(s, h, 0.5) > -3.0

    def test_low_alpha_minimiser_need_not_minimise_high_alpha(self):
        # half the mass on the ground state already minimises CVaR_0.5 ...
        s = state_from_probs([0.5, 0.0, 0.0, 0.5])
        ground = state_from_probs([1.0, 0.0, 0.0, 0.0])
        assert exact_cvar(s, H4, 0.5) == pytest.approx(exact_cvar(ground, H4, 0.5), abs=1e-15)
        # ... but not CVaR_0.9
        assert exact_cvar(s, H4, 0.9) > exact_cvar(ground, H4, 0.9) + 1.0


class TestSampling:
    def test_point_mass(self):
        s = state_from_probs([0, 0, 1, 0])
        samples = sample_energies(s, H4, 50, RandomSource(0))
        np.testing.assert_array_equal(samples.energies, np.full(50, 2.0))

    def test_uniform_mean_clt(self):
        shots = 10**5
        samples = sample_energies(new_plus_state(2), H4, shots, RandomSource(3))
        sigma = math.sqrt(np.var([0, 1, 2, 3]) / shots)
        assert abs(samples.energies.mean() - 1.5) < 3 * sigma

    def test_determinism(self):
        s = random_state(3, np.random.default_rng(4))
        h = DiagonalHamiltonian.from_energies(np.arange(8.0))
        a = sample_energies(s, h, 500, RandomSource(9)).energies
        b = sample_energies(s, h, 500, RandomSource(9)).energies
        np.testing.assert_array_equal(a, b)


class TestEvaluate:
    def test_exact_uniform(self):
        assert evaluate(ObjectiveSpec(1.0, 1000, "exact"), new_plus_state(2), H4, RandomSource(0)) == (1.5, 0)

    def test_sampled_point_mass(self):
        s = state_from_probs([1, 0, 0, 0])
        assert evaluate(ObjectiveSpec(0.3, 1000), s, H4, RandomSource(0)) == (0.0, 3334)

    def test_bad_spec(self):
        with pytest.raises(ValueError):
            ObjectiveSpec(alpha=0.0)
        with pytest.raises(ValueError):
            ObjectiveSpec(mode="analytic")
        with pytest.raises(ValueError):
            ObjectiveSpec(base_shots=0)

    def test_histogram_path_equals_sample_path(self):
        # both paths consume the same multinomial draw
        g = np.random.default_rng(5)
        h = DiagonalHamiltonian.from_energies(g.integers(-3, 4, 16).astype(float))
        s = random_state(4, g)
        for alpha in (0.01, 0.2, 0.5, 1.0):
            counts = sample_histogram(s, 777, RandomSource(1))
            samples = EnergySamples(np.repeat(h.energies, counts))
            hist = cvar_from_histogram(counts[h.order], h.sorted_energies, alpha)
            assert hist == pytest.approx(cvar_from_samples(samples, alpha), abs=1e-12)

    def test_sampled_matches_exact_within_bootstrap(self):
        g = np.random.default_rng(11)
        s = random_state(4, g)
        h = DiagonalHamiltonian.from_energies(g.normal(size=16))
        spec = ObjectiveSpec(0.2, 10**5)
        rng = RandomSource(2)
        counts = sample_histogram(s, shots_for_alpha(spec.base_shots, spec.alpha), rng)[h.order]
        value = cvar_from_histogram(counts, h.sorted_energies, spec.alpha)
        se = bootstrap_se(counts, h.sorted_energies, spec.alpha, g)
        assert abs(value - exact_cvar(s, h, spec.alpha)) < 3 * se


energy_lists = st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=1, max_size=60)
alphas = st.floats(1e-3, 1.0)


@settings(max_examples=200, deadline=None)
@given(energy_lists, alphas, alphas)
def test_sample_cvar_monotone_and_bounded(energies, a1, a2):
    a1, a2 = sorted((a1, a2))
    s = EnergySamples(energies)
    c1, c2 = cvar_from_samples(s, a1), cvar_from_samples(s, a2)
    tol = 1e-9 * (1 + max(abs(e) for e in energies))
    assert c1 <= c2 + tol
    assert min(energies) - tol <= c1 <= np.mean(energies) + tol


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2**32 - 1), alphas, alphas)
def test_exact_cvar_monotone_and_bounded(n, seed, a1, a2):
    a1, a2 = sorted((a1, a2))
    g = np.random.default_rng(seed)
    s = random_state(n, g)
    h = DiagonalHamiltonian.from_energies(g.normal(size=1 << n))
    c1, c2 = exact_cvar(s, h, a1), exact_cvar(s, h, a2)
    mean = expectation(s, h)
    assert c1 <= c2 + 1e-12
    assert h.energies.min() - 1e-12 <= c1 <= mean + 1e-12
    assert exact_cvar(s, h, 1.0) == pytest.approx(mean, abs=1e-10)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 50), min_size=2, max_size=16), alphas)
def test_histogram_matches_expanded_samples(counts, alpha):
    counts = np.array(counts)
    if counts.sum() == 0:
        counts[0] = 1
    levels = np.arange(counts.size, dtype=float) * 0.5 - 2
    assert cvar_from_histogram(counts, levels, alpha) == pytest.approx(
        cvar_from_samples(EnergySamples(np.repeat(levels, counts)), alpha), abs=1e-12
    )
