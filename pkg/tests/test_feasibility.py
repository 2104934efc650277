import numpy as np
import pytest

from reverse_ising.feasibility import RhoCache, aux_key, is_feasible, rho
from reverse_ising.functions import AuxiliaryFunction, ThresholdFunction, and_function
from reverse_ising.oracle import reference_feasibility, verify_hamiltonian
from reverse_ising.spincore import and_circuit, mul_circuit, or_circuit, parity_circuit, xor_circuit


def test_and_or_feasible_without_aux():
    for c in (and_circuit(), or_circuit()):
        res = is_feasible(c)
        assert res.feasible
        assert verify_hamiltonian(c, res.hamiltonian(), 0).passed
        assert (res.matrix.csc @ res.u).min() >= 1 - 1e-6


def test_xor_needs_aux():
    c = xor_circuit()
    assert not is_feasible(c).feasible
    assert rho(c) > 0.5
    g = AuxiliaryFunction(3, [and_function(3, 0, 1)])
    res = is_feasible(c, g)
    assert res.feasible
    # S alone only beats wrong states whose auxiliary bits follow g
    S = res.hamiltonian()
    for sigma in range(4):
        right = sigma | (c.table[sigma] << 2)
        right |= int(g.evaluate_words(np.array([right]))[0]) << 3
        wrong = sigma | ((1 - c.table[sigma]) << 2)
        wrong |= int(g.evaluate_words(np.array([wrong]))[0]) << 3
        assert S.energies(np.array([wrong]))[0] - S.energies(np.array([right]))[0] >= 2 - 1e-6


def test_agrees_with_reference(rng):
    c = mul_circuit(2, 2)
    for _ in range(10):
        A = int(rng.integers(0, 3))
        g = AuxiliaryFunction(8, [ThresholdFunction(rng.normal(size=8 + k), rng.normal()) for k in range(A)])
        assert is_feasible(c, g).feasible == reference_feasibility(c, g)


def test_gluing_is_monotone(rng):
    """Appending auxiliary components never increases rho."""
    c = mul_circuit(2, 2)
    g = AuxiliaryFunction(8, [])
    prev = rho(c, g)
    for k in range(4):
        g = g.appended(ThresholdFunction(rng.normal(size=8 + k), rng.normal()))
        cur = rho(c, g)
        assert cur <= prev + 1e-6
        prev = cur


def test_radius_filtration(rng):
    c = mul_circuit(2, 2)
    g = AuxiliaryFunction(8, [ThresholdFunction(rng.normal(size=8), 0.3)])
    vals = [rho(c, g, r) for r in (1, 2, 3, "full")]
    assert all(a <= b + 1e-6 for a, b in zip(vals, vals[1:]))
    assert abs(vals[-1] - rho(c, g, 4)) < 1e-9


def test_cache_coherence(rng):
    c = mul_circuit(2, 2)
    cache = RhoCache(max_entries=8)
    gs = [AuxiliaryFunction(8, [ThresholdFunction(rng.normal(size=8), rng.normal())]) for _ in range(12)]
    for g in gs:
        assert rho(c, g, 2, cache) == rho(c, g, 2)
    assert len(cache) == 8
    assert cache.misses == 12
    for g in gs[-8:]:
        rho(c, g, 2, cache)
    assert cache.hits == 8


def test_aux_key_negation_invariant(rng):
    c = mul_circuit(2, 2)
    t = ThresholdFunction(rng.normal(size=8), 0.1)
    g = AuxiliaryFunction(8, [t])
    neg = AuxiliaryFunction(8, [ThresholdFunction(-t.weights, -t.bias)])
    if np.all(t.margins(np.eye(8)) != 0):
        assert aux_key(c, g) == aux_key(c, neg)
    assert abs(rho(c, g) - rho(c, neg)) < 1e-6


def test_parity3_with_two_aux():
    c = parity_circuit(3)
    assert not is_feasible(c).feasible
    g = AuxiliaryFunction(4, [and_function(4, 0, 1), and_function(5, 2, 4)])
    assert rho(c, g) >= 0


def test_dimension_checked():
    with pytest.raises(ValueError):
        is_feasible(and_circuit(), AuxiliaryFunction(5, [and_function(5, 0, 1)]))
