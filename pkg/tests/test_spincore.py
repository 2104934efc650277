import itertools

import numpy as np
import pytest

from reverse_ising.spincore import (
    Circuit,
    Convention,
    SpinState,
    and_circuit,
    build_circuit,
    decode_state,
    encode_state,
    hamming_distance,
    input_level,
    mul_circuit,
    parity_circuit,
    read_table,
    virtual_spin,
    virtual_spins,
    write_table,
    xor_circuit,
)

PM = Convention.PLUS_MINUS
ZO = Convention.ZERO_ONE


def test_encode_examples():
    assert list(encode_state(6, 3, ZO).to_array()) == [0, 1, 1]
    assert list(encode_state(0, 4, PM).to_array()) == [-1, -1, -1, -1]


def test_encode_decode_round_trip():
    for n in range(0, 11):
        for k in range(1 << n):
            assert decode_state(encode_state(k, n)) == k


def test_encode_rejects_out_of_range():
    with pytest.raises(ValueError):
        encode_state(8, 3)
    with pytest.raises(ValueError):
        encode_state(-1, 3)


def test_convert_round_trip(rng):
    for _ in range(50):
        n = int(rng.integers(1, 12))
        s = encode_state(int(rng.integers(1 << n)), n, ZO)
        assert s.convert(PM).convert(ZO) == s
        back = SpinState.from_array(s.convert(PM).to_array(), PM)
        assert back.bits == s.bits


def test_virtual_spin_examples():
    s = SpinState.from_array([1, -1, 1], PM)
    assert list(virtual_spin(s)) == [1, -1, 1, -1, 1, -1]
    ones = SpinState.from_array([1, 1, 1, 1], PM)
    assert list(virtual_spin(ones)) == [1] * 10


def test_virtual_spin_squares_to_ones(rng):
    for _ in range(50):
        n = int(rng.integers(1, 9))
        v = virtual_spin(encode_state(int(rng.integers(1 << n)), n, PM))
        assert v.shape[0] == n + n * (n - 1) // 2
        assert np.all(v * v == 1)


def test_virtual_spin_needs_plus_minus():
    with pytest.raises(ValueError):
        virtual_spin(encode_state(1, 2, ZO))


def test_virtual_spins_pairs_are_products(rng):
    pm = rng.choice([-1, 1], size=(20, 6))
    V = virtual_spins(pm)
    k = 6
    for i, j in itertools.combinations(range(6), 2):
        assert np.array_equal(V[:, k], pm[:, i] * pm[:, j])
        k += 1


def test_mul_circuit():
    c = mul_circuit(2, 2)
    assert c(2 | (3 << 2)) == 6
    assert list(encode_state(c(2 | (3 << 2)), 4).to_array()) == [0, 1, 1, 0]
    c33 = mul_circuit(3, 3)
    assert c33.table.shape == (64,) and c33.n_out == 6
    for a in range(8):
        for b in range(8):
            assert c33(a | (b << 3)) == a * b


def test_small_gates():
    c = and_circuit()
    assert c(0b11) == 1 and c(0b01) == 0
    assert list(xor_circuit().table) == [0, 1, 1, 0]
    assert list(parity_circuit(3).table) == [bin(k).count("1") % 2 for k in range(8)]


def test_build_circuit_kinds(tmp_path):
    assert build_circuit("mul:2x3") == mul_circuit(2, 3)
    assert build_circuit("and") == and_circuit()
    assert build_circuit("parity:4") == parity_circuit(4)
    path = tmp_path / "c.tt"
    write_table(mul_circuit(2, 2), path)
    assert build_circuit(f"table:{path}") == mul_circuit(2, 2)
    with pytest.raises(ValueError):
        build_circuit("nand")


def test_table_file_errors(tmp_path):
    p = tmp_path / "bad.tt"
    p.write_text("N=2 M=1\n0\n1\n1\n")
    with pytest.raises(ValueError):
        read_table(p)
    p.write_text("N=2 M=1\n0\n1\nzz\n0\n")
    with pytest.raises(ValueError):
        read_table(p)
    p.write_text("garbage\n")
    with pytest.raises(ValueError):
        read_table(p)


def test_circuit_validation():
    with pytest.raises(ValueError):
        Circuit(2, 1, [0, 1, 1])
    with pytest.raises(ValueError):
        Circuit(1, 1, [0, 2])


def test_input_levels_partition():
    c = mul_circuit(2, 2)
    assert len(list(input_level(c, 0, 5))) == 16
    assert len(list(input_level(and_circuit(), 1, 0))) == 4
    seen = set()
    for sigma in range(16):
        for s in input_level(c, 1, sigma):
            assert s.bits & 0xF == sigma
            seen.add(s.bits)
    assert seen == set(range(1 << 9))


def test_hamming_metric(rng):
    for _ in range(100):
        n = int(rng.integers(1, 9))
        a, b, c = (encode_state(int(x), n) for x in rng.integers(0, 1 << n, size=3))
        assert hamming_distance(a, b) == hamming_distance(b, a)
        assert hamming_distance(a, a) == 0
        assert hamming_distance(a, c) <= hamming_distance(a, b) + hamming_distance(b, c)
