import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm
from scipy.optimize import minimize as scipy_minimize

from ascvar.ansatz import (
    HardwareEfficientAnsatz,
    QaoaAnsatz,
    all_pairs_cz_signs,
    apply_cz_all_pairs,
    param_count,
    qaoa_gamma_bound,
)
from ascvar.problems import (
    MaxCutInstance,
    NumberPartitionInstance,
    generate_maxcut_instance,
    generate_numpart_instance,
    maxcut_hamiltonian,
    numpart_hamiltonian,
)
from ascvar.statevector import RandomSource, StateVector, probabilities

I2 = np.eye(2)
X = np.array([[0, 1], [1, 0]], dtype=complex)


def ry(t):
    return np.array([[math.cos(t / 2), -math.sin(t / 2)], [math.sin(t / 2), math.cos(t / 2)]])


def embed(n, q, m):
    # qubit 0 is the least significant bit, so it sits rightmost in the kron chain
    out = np.array([[1.0]])
    for k in reversed(range(n)):
        out = np.kron(out, m if k == q else I2)
    return out


def dense_cz(n, i, j):
    d = np.ones(1 << n)
    for b in range(1 << n):
        if (b >> i) & 1 and (b >> j) & 1:
            d[b] = -1
    return np.diag(d)


def dense_hea(n, p, theta):
    theta = np.reshape(theta, (p + 1, n))
    psi = np.zeros(1 << n)
    psi[0] = 1
    for q in range(n):
        psi = embed(n, q, ry(theta[0, q])) @ psi
    for layer in range(1, p + 1):
        for i in range(n):
            for j in range(i + 1, n):
                psi = dense_cz(n, i, j) @ psi
        for q in range(n):
            psi = embed(n, q, ry(theta[layer, q])) @ psi
    return psi


def dense_qaoa(energies, n, params):
    hc = np.diag(energies)
    hb = sum(embed(n, q, X) for q in range(n))
    psi = np.full(1 << n, 1 / math.sqrt(1 << n), dtype=complex)
    for g, b in np.reshape(params, (-1, 2)):
        psi = expm(-1j * b * hb) @ (expm(-1j * g * hc) @ psi)
    return psi


EDGE = maxcut_hamiltonian(MaxCutInstance(2, ((0, 1),)))


class TestHea:
    def test_param_counts(self):
        assert param_count(HardwareEfficientAnsatz(15, 1)) == 30
        assert param_count(HardwareEfficientAnsatz(3, 1)) == 6

    def test_zero_angles(self):
        s = HardwareEfficientAnsatz(4, 2).prepare(np.zeros(12))
        np.testing.assert_allclose(probabilities(s), np.eye(16)[0])

    def test_single_qubit_pi(self):
        s = HardwareEfficientAnsatz(1, 1).prepare([math.pi, 0.0])
        np.testing.assert_allclose(s.amplitudes, [0, 1], atol=1e-15)

    def test_three_qubit_hand_example(self):
        # Ry(pi/2) on qubit 0 only: (|000> + |001>)/sqrt2, untouched by the CZs
        s = HardwareEfficientAnsatz(3, 1).prepare([math.pi / 2, 0, 0, 0, 0, 0])
        expect = np.zeros(8)
        expect[0] = expect[1] = 1 / math.sqrt(2)
        np.testing.assert_allclose(s.amplitudes, expect, atol=1e-15)

    @pytest.mark.parametrize("n,p,seed", [(3, 1, 0), (3, 2, 1), (4, 1, 2), (2, 3, 3)])
    def test_matches_dense_oracle(self, n, p, seed):
        theta = np.random.default_rng(seed).uniform(0, 2 * math.pi, n * (p + 1))
        s = HardwareEfficientAnsatz(n, p).prepare(theta)
        np.testing.assert_allclose(s.amplitudes, dense_hea(n, p, theta), atol=1e-12)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            HardwareEfficientAnsatz(3, 1).prepare(np.zeros(5))

    def test_layer_order_matters(self):
        a = HardwareEfficientAnsatz(2, 2)
        theta = np.array([0.3, 1.1, 0.7, 2.0, 1.4, 0.2])
        swapped = theta.reshape(3, 2)[[0, 2, 1]].reshape(-1)
        assert not np.allclose(a.prepare(theta).amplitudes, a.prepare(swapped).amplitudes)

    @pytest.mark.parametrize("n", [1, 2, 3, 5])
    def test_all_pairs_signs_match_gatewise(self, n):
        a = np.random.default_rng(n).normal(size=1 << n) + 0j
        s1 = StateVector(n, a / np.linalg.norm(a))
        s2 = s1.copy()
        apply_cz_all_pairs(s1)
        apply_cz_all_pairs(s2, gatewise=True)
        np.testing.assert_allclose(s1.amplitudes, s2.amplitudes)
        assert all_pairs_cz_signs(n).shape == (1 << n,)

    @pytest.mark.parametrize("target", range(4))
    def test_reaches_every_basis_state(self, target):
        a = HardwareEfficientAnsatz(2, 1)
        res = scipy_minimize(lambda t: -probabilities(a.prepare(t))[target], np.full(4, 0.4), method="COBYLA")
        assert -res.fun >= 0.99


class TestQaoa:
    def test_param_count(self):
        assert param_count(QaoaAnsatz(EDGE, 6)) == 12

    def test_zero_angles_uniform(self):
        h = maxcut_hamiltonian(generate_maxcut_instance(5, rng=RandomSource(0)))
        p = probabilities(QaoaAnsatz(h, 1).prepare([0, 0]))
        # every entry bit-identical; 1/sqrt(2^n) squared is within one ulp of 2^-n for odd n
        assert (p == p[0]).all()
        assert p[0] == pytest.approx(1 / 32, rel=2.3e-16)

    def test_beta_zero_keeps_uniform(self):
        h = maxcut_hamiltonian(generate_maxcut_instance(4, rng=RandomSource(1)))
        s = QaoaAnsatz(h, 2).prepare([1.3, 0.0, -0.4, 0.0])
        np.testing.assert_allclose(probabilities(s), np.full(16, 1 / 16), atol=1e-15)

    def test_two_qubit_grid_against_dense(self):
        a = QaoaAnsatz(EDGE, 1)
        for g in np.linspace(0, 2 * math.pi, 20):
            for b in np.linspace(0, math.pi, 20):
                psi = dense_qaoa(EDGE.energies, 2, [g, b])
                ours = a.prepare([g, b])
                np.testing.assert_allclose(ours.amplitudes, psi, atol=1e-9)
                cut_ours = -np.dot(probabilities(ours), EDGE.energies)
                cut_dense = -np.dot(np.abs(psi) ** 2, EDGE.energies)
                assert abs(cut_ours - cut_dense) < 1e-9

    def test_deeper_against_dense(self):
        h = numpart_hamiltonian(NumberPartitionInstance((2, 3, 4)))
        params = [0.11, 0.7, 0.05, 1.9, 0.2, 0.4]
        np.testing.assert_allclose(QaoaAnsatz(h, 3).prepare(params).amplitudes, dense_qaoa(h.energies, 3, params), atol=1e-10)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            QaoaAnsatz(EDGE, 2).prepare([0.1, 0.2, 0.3])

    def test_layer_order_matters(self):
        h = maxcut_hamiltonian(generate_maxcut_instance(4, rng=RandomSource(2)))
        a = QaoaAnsatz(h, 2)
        p1 = probabilities(a.prepare([0.3, 0.9, 1.2, 0.1]))
        p2 = probabilities(a.prepare([1.2, 0.1, 0.3, 0.9]))
        assert not np.allclose(p1, p2)


class TestGammaBound:
    def test_examples(self):
        assert qaoa_gamma_bound(NumberPartitionInstance((2, 3, 10))) == pytest.approx(2 * math.pi / 6)
        assert qaoa_gamma_bound(NumberPartitionInstance((1, 1, 50))) == pytest.approx(2 * math.pi)

    def test_single_number(self):
        with pytest.raises(ValueError):
            qaoa_gamma_bound(NumberPartitionInstance((50,)))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 5), st.integers(1, 3), st.integers(0, 10**6))
def test_hea_unit_norm(n, p, seed):
    theta = np.random.default_rng(seed).uniform(-10, 10, n * (p + 1))
    assert abs(HardwareEfficientAnsatz(n, p).prepare(theta).norm() - 1) < 1e-10


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.integers(-3, 3))
def test_qaoa_gamma_period(seed, shift):
    g = np.random.default_rng(seed)
    inst = generate_numpart_instance(5, 9, RandomSource(seed))
    a = QaoaAnsatz(numpart_hamiltonian(inst), 2)
    params = g.uniform(0, 2 * math.pi, 4)
    shifted = params.copy()
    shifted[0] += 2 * math.pi * shift
    shifted[2] -= 2 * math.pi * shift
    s = a.prepare(params)
    assert abs(s.norm() - 1) < 1e-10
    np.testing.assert_allclose(probabilities(a.prepare(shifted)), probabilities(s), atol=1e-10)
