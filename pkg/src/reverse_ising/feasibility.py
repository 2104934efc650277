"""The artificial-variable feasibility heuristic and its cache."""

from __future__ import annotations

import logging
import threading
from collections import OrderedDict
from dataclasses import dataclass

import numpy as np

from .constraints import ConstraintMatrix, build_local
from .functions import AuxiliaryFunction, as_auxiliary
from .lp import LPInstance, LPOptions, LPResult, LPStatus, reference_solve, solve_artificial
from .pseudobool import QuadraticHamiltonian
from .spincore import Circuit

logger = logging.getLogger(__name__)

FEASIBILITY_TOL = 1e-6


class LPFailure(RuntimeError):
    """The interior-point solve did not reach an optimal status."""

    def __init__(self, result: LPResult):
        super().__init__(f"LP solve ended with status {result.status.value} after {result.iterations} iterations")
        self.result = result


def aux_key(c: Circuit, g: AuxiliaryFunction) -> bytes:
    """Spin-action-invariant fingerprint of ``g``'s values on the base cube.

    Each auxiliary column is negated if needed so that it reads 0 at the
    all-zero base state; negating an auxiliary bit leaves the heuristic
    unchanged.
    """
    if not len(g):
        return b""
    V = g.value_matrix()
    V = V ^ V[0:1, :]
    return np.packbits(V, axis=0).tobytes() + len(g).to_bytes(2, "little")


class RhoCache:
    """Bounded LRU map ``(circuit, radius, aux key) -> rho``; thread-safe."""

    def __init__(self, max_entries: int = 1 << 20):
        self.max_entries = max_entries
        self._data: OrderedDict = OrderedDict()
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def key(self, c: Circuit, g: AuxiliaryFunction, radius) -> tuple:
        return (c.key, radius, aux_key(c, g))

    def get(self, key):
        with self._lock:
            if key in self._data:
                self._data.move_to_end(key)
                self.hits += 1
                return self._data[key]
            self.misses += 1
            return None

    def put(self, key, value: float) -> None:
        with self._lock:
            self._data[key] = value
            self._data.move_to_end(key)
            while len(self._data) > self.max_entries:
                self._data.popitem(last=False)

    def __len__(self):
        return len(self._data)


def _radius_arg(c: Circuit, radius):
    if radius is None or radius == "full":
        return None
    radius = int(radius)
    return None if radius >= c.n_out else radius


def solve_constraints(B: ConstraintMatrix, opts: LPOptions | None = None) -> LPResult:
    """Interior-point solve, retried with HiGHS when it does not converge."""
    result = solve_artificial(B, opts)
    if result.status is not LPStatus.OPTIMAL:
        logger.info("interior point ended with %s; retrying with HiGHS", result.status.value)
        try:
            fallback = reference_solve(LPInstance(B.dense()))
        except ValueError:
            fallback = None
        if fallback is None or not fallback.optimal:
            raise LPFailure(result)
        result = fallback
    return result


def rho(c: Circuit, g=None, radius=None, cache: RhoCache | None = None, opts: LPOptions | None = None) -> float:
    """Optimal artificial-variable objective for the radius-``radius`` local
    constraints (``None``/``"full"``/``M`` = all augmented constraints).
    """
    g = as_auxiliary(c.n_spins, g)
    r = _radius_arg(c, radius)
    key = None
    if cache is not None:
        key = cache.key(c, g, r)
        hit = cache.get(key)
        if hit is not None:
            return hit
    value = solve_constraints(build_local(c, g, r), opts).objective
    # the system is homogeneous, so the optimum is 0 or at least 1: snap round-off
    value = 0.0 if value < FEASIBILITY_TOL else value
    if cache is not None:
        cache.put(key, value)
    return value


@dataclass
class Feasibility:
    feasible: bool
    objective: float
    u: np.ndarray
    matrix: ConstraintMatrix

    def hamiltonian(self) -> QuadraticHamiltonian:
        """PlusMinus Hamiltonian whose coefficient vector is the certificate."""
        n = self.matrix.n_in + self.matrix.n_out + self.matrix.n_aux
        return QuadraticHamiltonian.from_vector(self.matrix.hamiltonian_vector(self.u), n)


def is_feasible(c: Circuit, g=None, opts: LPOptions | None = None) -> Feasibility:
    """Decide feasibility of the full ``g``-augmented constraints.

    The certificate ``u`` is rescaled so that ``min(B u) == 1``.
    """
    g = as_auxiliary(c.n_spins, g)
    B = build_local(c, g, None)
    result = solve_constraints(B, opts)
    u = result.u
    margins = B.csc @ u
    feasible = result.objective < FEASIBILITY_TOL and margins.min() >= 1 - FEASIBILITY_TOL
    if feasible and margins.min() > 0:
        u = u / margins.min()
    return Feasibility(bool(feasible), result.objective, u, B)


def rho_profile(c: Circuit, g=None, cache: RhoCache | None = None, opts: LPOptions | None = None) -> np.ndarray:
    """``[rho_1, ..., rho_M]``; the last entry is the full-constraint value."""
    g = as_auxiliary(c.n_spins, g)
    return np.array([rho(c, g, r, cache, opts) for r in range(1, c.n_out + 1)])


def min_infeasible_prefix(B: ConstraintMatrix, order: np.ndarray, opts: LPOptions | None = None) -> int | None:
    """Smallest ``k`` such that rows ``order[:k]`` of ``B`` are already infeasible.

    Row subsets along a fixed order form a filtration, and ``rho`` is
    monotone along it, so a binary search over ``k`` is exact.  Returns
    ``None`` when all of ``B`` is feasible.
    """
    order = np.asarray(order, dtype=np.int64)
    A = B.csc.tocsr()

    def infeasible(k: int) -> bool:
        sub = A[order[:k]].toarray().astype(float)
        return solve_artificial(LPInstance(sub), opts).objective >= FEASIBILITY_TOL

    if not infeasible(order.shape[0]):
        return None
    lo, hi = 0, order.shape[0]  # infeasible(hi) holds, infeasible(lo) does not
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if infeasible(mid):
            hi = mid
        else:
            lo = mid
    return hi
