from math import comb

import numpy as np
import pytest

from reverse_ising.constraints import (
    build_augmented,
    build_full,
    build_local,
    column_layout,
    local_row_count,
    n_columns,
)
from reverse_ising.functions import AuxiliaryFunction, ThresholdFunction, and_function
from reverse_ising.spincore import and_circuit, mul_circuit, pm_matrix, virtual_spins, xor_circuit


def random_aux(rng, base, A):
    return AuxiliaryFunction(base, [ThresholdFunction(rng.normal(size=base + k), rng.normal()) for k in range(A)])


def test_mul33_shape(rng):
    B = build_augmented(mul_circuit(3, 3), random_aux(rng, 12, 3))
    assert B.shape == (4032, 99)
    assert n_columns(6, 6, 3) == 6 + 3 + comb(15, 2) - comb(6, 2) == 99


def test_mul44_counts():
    c = mul_circuit(4, 4)
    assert (1 << c.n_in) * ((1 << c.n_out) - 1) == 65280
    assert local_row_count(c, 2) == 9216
    assert local_row_count(c, 8) == 65280


def test_and_circuit_rows():
    B = build_augmented(and_circuit())
    assert B.shape == (4, 3)
    assert B.column_map == [2, (0, 2), (1, 2)]
    # sigma = (1, 1): correct output 1, wrong 0 -> halved difference of (s2, s0 s2, s1 s2)
    row = B.dense()[list(map(tuple, B.provenance)).index((3, 0))]
    assert list(row) == [-1, -1, -1]


def test_rows_are_halved_virtual_differences(rng):
    c = mul_circuit(2, 2)
    g = random_aux(rng, 8, 2)
    B = build_augmented(c, g)
    N, M, n = 2 + 0, 4, 10
    n = c.n_spins + len(g)
    D = B.dense()
    col_i, col_j = column_layout(c.n_in, n)
    for r in rng.choice(B.n_rows, size=100):
        sigma, omega = B.provenance[r]
        base_w = sigma | (omega << c.n_in)
        base_r = sigma | (int(c.table[sigma]) << c.n_in)
        aux = g.evaluate_words(np.array([base_w, base_r]))
        words = np.array([base_w | (aux[0] << c.n_spins), base_r | (aux[1] << c.n_spins)])
        v = virtual_spins(pm_matrix(words, n, dtype=np.int64))
        diff = (v[0] - v[1]) / 2
        full = np.zeros(v.shape[1])
        full[:] = diff
        i_all, j_all = np.triu_indices(n, k=1)
        pos = {(int(a), int(b)): n + k for k, (a, b) in enumerate(zip(i_all, j_all))}
        expect = [full[a] if b < 0 else full[pos[(a, b)]] for a, b in zip(col_i, col_j)]
        assert np.array_equal(D[r], expect)


def test_no_zero_rows_and_sign_values(rng):
    B = build_augmented(mul_circuit(2, 3), random_aux(rng, 10, 2))
    assert set(np.unique(B.data)) <= {-1, 1}
    assert np.all(np.abs(B.dense()).sum(axis=1) > 0)


def test_build_full_counts():
    c = and_circuit()
    B = build_full(c, [0, 1, 1, 0], 1)
    assert B.n_rows == 4 * (4 - 2) == 8
    assert build_full(mul_circuit(2, 2), np.zeros(16, dtype=int), 2).n_rows == 16 * (64 - 4) == 960
    B0 = build_full(xor_circuit(), np.zeros(4, dtype=int), 0)
    assert B0.row_keys() == build_augmented(xor_circuit()).row_keys()
    assert np.array_equal(B0.dense(), build_augmented(xor_circuit()).dense())
    with pytest.raises(ValueError):
        build_full(c, np.zeros(4, dtype=int), 13)


def test_local_counts_and_nesting(rng):
    c = mul_circuit(3, 3)
    g = random_aux(rng, 12, 1)
    assert build_local(c, g, 1).n_rows == 384
    prev = set()
    for r in range(1, 7):
        B = build_local(c, g, r)
        assert B.n_rows == local_row_count(c, r)
        keys = B.row_keys()
        assert prev <= keys
        prev = keys
    assert prev == build_augmented(c, g).row_keys()
    with pytest.raises(ValueError):
        build_local(c, g, 0)
    with pytest.raises(ValueError):
        build_local(c, g, 7)


def test_local_matrix_orders_by_radius(rng):
    c = mul_circuit(2, 2)
    B = build_local(c, None, 2)
    dist = [bin(int(w) ^ int(c.table[s])).count("1") for s, w in B.provenance]
    assert dist == sorted(dist)


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        build_augmented(and_circuit(), AuxiliaryFunction(4, [and_function(4, 0, 1)]))


def test_coo_text():
    text = build_augmented(and_circuit()).to_coo_text().splitlines()
    assert text[0] == "4 3 12"
    assert len(text) == 13


def test_sparsity_reported(rng):
    B = build_augmented(mul_circuit(3, 3), random_aux(rng, 12, 3))
    assert 0.2 < B.sparsity() < 0.8
