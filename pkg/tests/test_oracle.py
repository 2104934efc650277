import numpy as np
import pytest

from reverse_ising.functions import AuxiliaryFunction, and_function
from reverse_ising.oracle import (
    exhaustive_aux_search,
    level_energies,
    reference_feasibility,
    verify_hamiltonian,
)
from reverse_ising.pseudobool import PLUS_MINUS, ZERO_ONE, QuadraticHamiltonian, rosenberg_penalty

QH = QuadraticHamiltonian
from reverse_ising.spincore import and_circuit, mul_circuit, xor_circuit


def test_zero_hamiltonian_fails_with_witness():
    res = verify_hamiltonian(xor_circuit(), QuadraticHamiltonian.zeros(4), 1)
    assert not res.passed
    assert res.gap == 0
    sigma, state = res.witness
    assert state & 3 == sigma
    assert (state >> 2) & 1 != xor_circuit().table[sigma]


def test_rosenberg_and_passes():
    p = rosenberg_penalty(0, 1, 2, 3)
    H = QH.from_polynomial(p)
    res = verify_hamiltonian(and_circuit(), H, 0)
    assert res.passed and abs(res.gap - 1.0) < 1e-9
    assert bool(res)


def test_ties_fail():
    # constant 0 energy on the output: both outputs tie on every level
    H = QuadraticHamiltonian([0.0, 0.0, 0.0], np.zeros((3, 3)))
    assert not verify_hamiltonian(and_circuit(), H, 0).passed


def test_convention_independent(rng):
    H = QH.from_polynomial(rosenberg_penalty(0, 1, 2, 3))
    for conv in (PLUS_MINUS, ZERO_ONE):
        Hc = H.converted(conv)
        r = verify_hamiltonian(and_circuit(), Hc, 0)
        assert r.passed and abs(r.gap - 1.0) < 1e-9


def test_level_energies_layout(rng):
    H = QuadraticHamiltonian(rng.normal(size=4), np.triu(rng.normal(size=(4, 4)), 1))
    E = level_energies(H, 2, np.arange(4))
    words = np.arange(16)
    assert np.allclose(E[words & 3, words >> 2], H.energies(words))


def test_block_size_irrelevant(rng):
    c = mul_circuit(2, 2)
    H = QuadraticHamiltonian(rng.normal(size=9), np.triu(rng.normal(size=(9, 9)), 1))
    a = verify_hamiltonian(c, H, 1)
    b = verify_hamiltonian(c, H, 1, block_states=32)
    assert a.gap == b.gap and a.witness == b.witness


def test_size_checks():
    with pytest.raises(ValueError):
        verify_hamiltonian(and_circuit(), QuadraticHamiltonian.zeros(4), 0)


def test_exhaustive_aux_search():
    assert exhaustive_aux_search(xor_circuit(), 0) is None
    assert list(exhaustive_aux_search(and_circuit(), 0)) == [0, 0, 0, 0]
    g = exhaustive_aux_search(xor_circuit(), 1)
    assert g is not None and g[0] == 0
    assert reference_feasibility(and_circuit())
    assert not reference_feasibility(xor_circuit())
    assert reference_feasibility(xor_circuit(), AuxiliaryFunction(3, [and_function(3, 0, 1)]))
    with pytest.raises(ValueError):
        exhaustive_aux_search(mul_circuit(3, 3), 1)
