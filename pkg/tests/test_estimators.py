import numpy as np
import pytest
from sklearn.base import clone

from reverse_ising.estimators import IsingCircuitDesigner, ThresholdClassifier
from reverse_ising.functions import vertex_matrix
from reverse_ising.oracle import verify_hamiltonian
from reverse_ising.spincore import mul_circuit, unpack_bits, xor_circuit


def test_designer_on_xor_bits():
    X = unpack_bits(np.arange(4), 2)
    y = (X[:, 0] ^ X[:, 1])[:, None]
    est = IsingCircuitDesigner(algorithm="greedy").fit(X, y)
    assert est.n_aux_ == 1
    assert np.array_equal(est.predict(X), y[:, 0])
    assert est.score(X, y[:, 0]) == 1.0
    assert verify_hamiltonian(xor_circuit(), est.hamiltonian_, 1).passed


def test_designer_on_circuit():
    c = mul_circuit(2, 2)
    est = IsingCircuitDesigner().fit(c)
    assert np.array_equal(est.predict(np.arange(16)), c.table)


def test_designer_params_and_clone():
    est = IsingCircuitDesigner(seed=3, max_aux=5)
    assert est.get_params()["seed"] == 3
    assert clone(est).get_params() == est.get_params()
    with pytest.raises(ValueError):
        est.fit(np.arange(3), np.arange(3))


def test_designer_budget():
    X = unpack_bits(np.arange(4), 2)
    with pytest.raises(RuntimeError):
        IsingCircuitDesigner(max_aux=0).fit(X, (X[:, 0] ^ X[:, 1])[:, None])


def test_threshold_classifier():
    X = vertex_matrix(3)
    y = (X.sum(axis=1) >= 2).astype(int)
    clf = ThresholdClassifier().fit(X, y)
    assert clf.separable_ and np.array_equal(clf.predict(X), y)
    xor = ThresholdClassifier().fit(vertex_matrix(2), [0, 1, 1, 0])
    assert not xor.separable_
