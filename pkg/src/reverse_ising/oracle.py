"""Brute-force ground truth for small systems.

Everything here enumerates state spaces exhaustively and is meant as the
final authority in tests; nothing is clever.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .constraints import build_augmented, build_full
from .functions import as_auxiliary
from .lp import reference_solve, solve_artificial
from .pseudobool import QuadraticHamiltonian
from .spincore import Circuit

MAX_VERIFY_SPINS = 26
TIE_TOL = 1e-9


@dataclass
class VerificationResult:
    """Outcome of exhaustive verification.

    ``gap`` is the smallest difference, over all inputs, between the lowest
    wrong-output energy and the lowest correct-output energy of the input
    level.  ``witness`` is ``(sigma, state)`` for the worst wrong state when
    verification fails.
    """

    passed: bool
    gap: float
    witness: tuple[int, int] | None = None

    def __bool__(self):
        return self.passed


def level_energies(H: QuadraticHamiltonian, n_in: int, sigmas: np.ndarray) -> np.ndarray:
    """Energies ``E[k, r]`` of state ``sigmas[k] | (r << n_in)``."""
    rest = np.arange(1 << (H.n - n_in), dtype=np.int64)
    words = (np.asarray(sigmas, dtype=np.int64)[:, None] | (rest[None, :] << n_in)).ravel()
    return H.energies(words).reshape(len(sigmas), rest.shape[0])


def verify_hamiltonian(c: Circuit, H: QuadraticHamiltonian, n_aux: int, block_states: int = 1 << 18) -> VerificationResult:
    """Check that every minimiser of ``H`` on each input level has output ``f(sigma)``.

    Ties between a wrong state and the level minimum count as failures.
    Works for either convention; ``H`` must act on ``N + M + n_aux`` spins.
    """
    n = c.n_in + c.n_out + n_aux
    if H.n != n:
        raise ValueError(f"Hamiltonian has {H.n} spins, expected {n}")
    if n > MAX_VERIFY_SPINS:
        raise ValueError(f"verification limited to {MAX_VERIFY_SPINS} spins, got {n}")
    level = 1 << (c.n_out + n_aux)
    outputs = np.arange(level, dtype=np.int64) & ((1 << c.n_out) - 1)
    per_block = max(1, block_states // level)
    best_gap, witness = np.inf, None
    scale = 1.0 + np.abs(H.coefficient_vector()).sum() + abs(H.constant)
    for start in range(0, 1 << c.n_in, per_block):
        sig = np.arange(start, min(start + per_block, 1 << c.n_in), dtype=np.int64)
        E = level_energies(H, c.n_in, sig)
        correct = outputs[None, :] == c.table[sig][:, None]
        e_right = np.where(correct, E, np.inf).min(axis=1)
        wrong_E = np.where(correct, np.inf, E)
        e_wrong = wrong_E.min(axis=1)
        gaps = e_wrong - e_right
        k = int(np.argmin(gaps))
        if gaps[k] < best_gap:
            best_gap = float(gaps[k])
            r = int(np.argmin(wrong_E[k]))
            witness = (int(sig[k]), int(sig[k] | (r << c.n_in)))
    passed = best_gap > TIE_TOL * scale
    return VerificationResult(bool(passed), best_gap, None if passed else witness)


def reference_feasibility(c: Circuit, g=None, max_rows: int = 20000) -> bool:
    """Feasibility of the ``g``-augmented constraints via the reference LP."""
    g = as_auxiliary(c.n_spins, g)
    B = build_augmented(c, g)
    if B.n_rows > max_rows:
        raise ValueError(f"reference feasibility limited to {max_rows} rows")
    return reference_solve(B.dense()).objective < 1e-6


def exhaustive_aux_search(c: Circuit, n_aux: int, use_reference: bool = False):
    """Brute-force an input-only auxiliary map ``Sigma^N -> Sigma^A``.

    Returns the first map (array of packed auxiliary words, one per input)
    whose full weak constraints are feasible, or ``None``.  Negating an
    auxiliary spin preserves feasibility, so ``g(0) = 0`` is fixed.
    """
    if n_aux * (1 << c.n_in) > 20:
        raise ValueError("exhaustive auxiliary search needs A * 2^N <= 20")
    n_inputs = 1 << c.n_in
    choices = range(1 << n_aux)
    for tail in itertools.product(choices, repeat=n_inputs - 1):
        g_in = np.array((0, *tail), dtype=np.int64)
        B = build_full(c, g_in, n_aux)
        if use_reference:
            obj = reference_solve(B.dense()).objective
        else:
            obj = solve_artificial(B).objective
        if obj < 1e-6:
            return g_in
    return None
