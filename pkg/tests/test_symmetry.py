import itertools

import numpy as np
import pytest

from reverse_ising.compose import compose_solution
from reverse_ising.feasibility import rho
from reverse_ising.functions import AuxiliaryFunction, ThresholdFunction, and_function
from reverse_ising.oracle import verify_hamiltonian
from reverse_ising.pseudobool import ZERO_ONE
from reverse_ising.spincore import SpinState, and_circuit, mul_circuit, xor_circuit
from reverse_ising.symmetry import (
    CoordPermutation,
    Group,
    SpinAction,
    act_auxiliary,
    act_coefficients,
    act_function,
    act_state,
    act_table,
    act_threshold,
    canonical_form,
    orbit,
    permute_words,
)
from reverse_ising.thresholds import is_threshold


def random_aux(rng, base, A):
    return AuxiliaryFunction(base, [ThresholdFunction(rng.normal(size=base + k), rng.normal()) for k in range(A)])


def test_spin_action_group_laws(rng):
    for _ in range(20):
        a, b, c = (SpinAction.random(6, rng) for _ in range(3))
        e = SpinAction.identity(6)
        assert a.compose(b).compose(c) == a.compose(b.compose(c))
        assert a.compose(e) == a
        assert a.compose(a) == e
        assert SpinAction.from_mask(a.mask, 6) == a
        s = SpinState(int(rng.integers(64)), 6)
        assert act_state(a, act_state(b, s)).bits == act_state(a.compose(b), s).bits
    assert np.array_equal(SpinAction((1, -1)).virtual(), [1, -1, -1])
    with pytest.raises(ValueError):
        SpinAction((1, 0))


def test_permutation_group_laws(rng):
    c = mul_circuit(2, 3)
    for _ in range(10):
        p, q = CoordPermutation.random(5, 5, rng), CoordPermutation.random(5, 5, rng)
        lhs = act_function(p, act_function(q, c))
        rhs = act_function(p.compose(q), c)
        assert np.array_equal(lhs.table, rhs.table)
    e = CoordPermutation.identity(5, 5)
    assert np.array_equal(act_function(e, c).table, c.table)


def test_permute_words_inverse(rng):
    perm = rng.permutation(7)
    w = np.arange(128)
    assert np.array_equal(permute_words(permute_words(w, perm), np.argsort(perm)), w)


def test_spin_action_transports_solutions(rng):
    c = xor_circuit()
    sol = compose_solution(c, AuxiliaryFunction(3, [and_function(3, 0, 1)]))
    for mask in range(16):
        a = SpinAction.from_mask(mask, 4)
        a_base = SpinAction(a.signs[:3])
        Hc = act_coefficients(a, sol.H)
        assert verify_hamiltonian(act_function(a_base, c), Hc, 1).passed
        Hz = act_coefficients(a, sol.H.converted(ZERO_ONE))
        assert verify_hamiltonian(act_function(a_base, c), Hz, 1).passed


def test_permutation_transports_solutions(rng):
    c = mul_circuit(2, 2)
    from reverse_ising.search import SearchOptions, greedy, strong_pool

    out = greedy(c, strong_pool(8), SearchOptions(max_aux=3))
    sol = compose_solution(c, out.g)
    for _ in range(8):
        p = CoordPermutation.random(4, 4, rng)
        cp = act_function(p, c)
        assert verify_hamiltonian(cp, act_coefficients(p, sol.H), len(out.g)).passed


def test_threshold_and_table_actions_agree(rng):
    for _ in range(50):
        d = int(rng.integers(1, 6))
        t = ThresholdFunction(rng.normal(size=d), rng.normal())
        perm = tuple(rng.permutation(d))
        mask = int(rng.integers(1 << d))
        neg = bool(rng.integers(2))
        lhs = act_threshold(t, perm, mask, neg).table
        assert np.array_equal(lhs, act_table(t.table, perm, mask, neg))
        assert abs(act_threshold(t, perm, mask, neg).min_margin() - t.min_margin()) < 1e-9


def test_auxiliary_action(rng):
    g = random_aux(rng, 4, 3)
    for _ in range(10):
        a = SpinAction.random(7, rng)
        ga = act_auxiliary(a, g)
        w = np.arange(16)
        assert np.array_equal(ga.evaluate_words(w), g.evaluate_words(w ^ a.part(0, 4)) ^ a.part(4, 7))


def test_rho_invariance_under_joint_action(rng):
    c = mul_circuit(2, 2)
    for _ in range(6):
        g = random_aux(rng, 8, 2)
        a = SpinAction.random(10, rng)
        ca = act_function(SpinAction(a.signs[:8]), c)
        assert abs(rho(ca, act_auxiliary(a, g)) - rho(c, g)) < 1e-6


def test_rho_invariance_under_aux_negation(rng):
    c = mul_circuit(2, 2)
    g = random_aux(rng, 8, 3)
    for mask in range(8):
        a = SpinAction.from_mask(mask << 8, 11)
        assert abs(rho(c, act_auxiliary(a, g)) - rho(c, g)) < 1e-6


def test_canonical_forms(rng):
    and_t = and_function(2, 0, 1).table
    or_t = np.array([0, 1, 1, 1], dtype=np.uint8)
    assert np.array_equal(canonical_form(and_t, Group.FULL), canonical_form(or_t, Group.FULL))
    assert np.array_equal(canonical_form(and_t, "SpinActionsOnly"), canonical_form(or_t, "SpinActionsOnly"))
    assert orbit(and_t, Group.FULL).shape[0] == 8
    for _ in range(20):
        d = int(rng.integers(1, 5))
        T = rng.integers(0, 2, size=1 << d).astype(np.uint8)
        for group in Group:
            cf = canonical_form(T, group)
            assert cf[0] == 0
            assert np.array_equal(canonical_form(cf, group), cf)
            for img in orbit(T, group)[:10]:
                assert np.array_equal(canonical_form(img, group), cf)
    with pytest.raises(ValueError):
        canonical_form(np.zeros(3, dtype=np.uint8))
    with pytest.raises(ValueError):
        canonical_form(np.zeros(1 << 9, dtype=np.uint8), Group.FULL)


def test_orbits_preserve_thresholdness(rng):
    t = ThresholdFunction([2.0, 1.0, 1.0], 1.5)
    for img in orbit(t.table, Group.FULL):
        assert is_threshold(img) is not None
