"""Estimator-style wrappers over the functional API.

``IsingCircuitDesigner`` learns a verified Hamiltonian from a complete
truth table and predicts outputs by minimising it on each input level.
``ThresholdClassifier`` fits a separating hyperplane to 0/1 data.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import linprog
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from .compose import compose_solution
from .oracle import level_energies
from .search import SearchOptions, descent, greedy, strong_pool
from .spincore import Circuit, pack_bits


def _as_words(X, width: int | None = None) -> np.ndarray:
    """Rows of 0/1 bits (bit ``j`` in column ``j``) or a 1-D array of packed words."""
    X = np.asarray(X)
    if X.ndim == 1:
        return X.astype(np.int64)
    if X.ndim != 2 or (width is not None and X.shape[1] != width):
        raise ValueError("expected packed words or a 2-D array of bits")
    if not np.isin(X, (0, 1)).all():
        raise ValueError("bit arrays must contain only 0 and 1")
    return pack_bits(X.astype(np.uint8))


class IsingCircuitDesigner(BaseEstimator):
    """Find auxiliary spins and a Hamiltonian whose ground states realise a circuit.

    Parameters
    ----------
    algorithm : {"descent", "greedy"}
    radius_schedule : tuple
        Constraint radii for descent, e.g. ``(1, 2, "full")``.
    max_aux, max_secs : search budgets.
    seed : int
        Permutes the candidate order; 0 keeps the natural order.
    threads : int
    """

    def __init__(self, algorithm: str = "descent", radius_schedule=("full",), max_aux: int = 16,
                 max_secs: float | None = None, seed: int = 0, threads: int = 1):
        self.algorithm = algorithm
        self.radius_schedule = radius_schedule
        self.max_aux = max_aux
        self.max_secs = max_secs
        self.seed = seed
        self.threads = threads

    def fit(self, X, y=None, n_outputs: int | None = None):
        """Fit to a :class:`Circuit` or to a complete table ``X -> y``.

        ``X`` holds every input exactly once (bit rows or packed words) and
        ``y`` the matching outputs.  Raises ``RuntimeError`` if the search
        runs out of budget.
        """
        if isinstance(X, Circuit):
            c = X
        else:
            if y is None:
                raise ValueError("y is required unless X is a Circuit")
            X = np.asarray(X)
            y = np.asarray(y)
            n_in = X.shape[1] if X.ndim == 2 else int(np.max(X)).bit_length()
            if n_outputs is None:
                n_outputs = y.shape[1] if y.ndim == 2 else max(1, int(np.max(y)).bit_length())
            sigma = _as_words(X, n_in if X.ndim == 2 else None)
            if X.ndim == 1:
                n_in = max(1, (len(sigma) - 1).bit_length())
            if sorted(sigma.tolist()) != list(range(1 << n_in)):
                raise ValueError("X must list every input state exactly once")
            out = _as_words(y, n_outputs if y.ndim == 2 else None)
            table = np.empty(1 << n_in, dtype=np.int64)
            table[sigma] = out
            c = Circuit(n_in, n_outputs, table)
        opts = SearchOptions(max_aux=self.max_aux, max_secs=self.max_secs,
                             radius_schedule=tuple(self.radius_schedule), seed=self.seed, threads=self.threads)
        search = descent if self.algorithm == "descent" else greedy
        outcome = search(c, strong_pool(c.n_spins), opts)
        if not outcome.solved:
            raise RuntimeError(f"search ended with status {outcome.status}")
        self.solution_ = compose_solution(c, outcome.g, seed=self.seed)
        self.circuit_ = c
        self.hamiltonian_ = self.solution_.H
        self.n_aux_ = self.solution_.n_aux
        self.outcome_ = outcome
        return self

    def predict(self, X) -> np.ndarray:
        """Ground-state output word for each input (packed words or bit rows)."""
        check_is_fitted(self, "hamiltonian_")
        c = self.circuit_
        sigma = _as_words(X, c.n_in)
        E = level_energies(self.hamiltonian_, c.n_in, sigma)
        return np.argmin(E, axis=1) & ((1 << c.n_out) - 1)

    def score(self, X, y) -> float:
        return float(np.mean(self.predict(X) == _as_words(y)))


class ThresholdClassifier(ClassifierMixin, BaseEstimator):
    """Separating hyperplane ``[w . x - b > 0]`` for 0/1 labels.

    Fitting solves ``min sum(slack)`` subject to ``y_k (w . x_k - b) >= 1 - slack_k``
    with labels mapped to +-1; ``separable_`` is true when no slack is needed.
    """

    def __init__(self, tol: float = 1e-7):
        self.tol = tol

    def fit(self, X, y):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y).astype(int).ravel()
        if X.ndim != 2 or X.shape[0] != y.shape[0]:
            raise ValueError("X must be 2-D with one row per label")
        self.classes_ = np.array([0, 1])
        m, d = X.shape
        s = 2.0 * y - 1.0
        cost = np.concatenate([np.zeros(d + 1), np.ones(m)])
        A = -np.hstack([s[:, None] * X, -s[:, None], np.eye(m)])
        bounds = [(None, None)] * (d + 1) + [(0, None)] * m
        res = linprog(cost, A_ub=A, b_ub=-np.ones(m), bounds=bounds, method="highs")
        if res.status != 0:
            raise RuntimeError(f"linear program failed: {res.message}")
        self.coef_ = res.x[:d]
        self.intercept_ = -res.x[d]
        self.slack_ = float(res.fun)
        self.separable_ = self.slack_ <= self.tol
        return self

    def decision_function(self, X) -> np.ndarray:
        check_is_fitted(self, "coef_")
        return np.asarray(X, dtype=float) @ self.coef_ + self.intercept_

    def predict(self, X) -> np.ndarray:
        return (self.decision_function(X) > 0).astype(int)
