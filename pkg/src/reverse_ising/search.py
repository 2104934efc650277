"""Greedy and descent searches for a feasible auxiliary function.

Both searches grow ``g`` one threshold component at a time and score
candidates with the artificial-variable heuristic ``rho``.  Descent also
revisits existing components, replacing the one contributing least.
"""

from __future__ import annotations

import itertools
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .compose import ComponentCertifier
from .feasibility import FEASIBILITY_TOL, RhoCache, is_feasible, rho
from .functions import AuxiliaryFunction, ThresholdFunction, and_function, as_auxiliary
from .lp import LPOptions
from .spincore import Circuit
from .thresholds import ThresholdLibrary, check_weak_neutralizable, sample_thresholds
from .symmetry import Group

logger = logging.getLogger(__name__)

IMPROVE_TOL = 1e-6


@dataclass
class SearchOptions:
    """Budgets and knobs shared by the searches.

    ``radius_schedule`` lists the constraint radii to escalate through;
    ``"full"`` (or ``None``) means all augmented constraints.
    """

    max_aux: int = 16
    max_secs: float | None = None
    radius_schedule: tuple = ("full",)
    seed: int = 0
    threads: int = 1
    lp: LPOptions | None = None
    cache_size: int = 1 << 20
    check_neutralizable: bool = True
    max_steps: int | None = None

    def to_dict(self) -> dict:
        return {
            "max_aux": self.max_aux,
            "max_secs": self.max_secs,
            "radius_schedule": list(self.radius_schedule),
            "seed": self.seed,
            "threads": self.threads,
            "cache_size": self.cache_size,
            "check_neutralizable": self.check_neutralizable,
            "max_steps": self.max_steps,
        }


@dataclass
class SearchOutcome:
    g: AuxiliaryFunction
    status: str
    rho_trace: list = field(default_factory=list)
    seed: int = 0
    wall_time: float = 0.0
    u: np.ndarray | None = None
    events: list = field(default_factory=list)

    @property
    def solved(self) -> bool:
        return self.status == "Solved"

    def to_dict(self) -> dict:
        return {
            "g": self.g.to_dict(),
            "status": self.status,
            "rho_trace": [float(r) for r in self.rho_trace],
            "seed": self.seed,
            "wall_time": self.wall_time,
            "u": None if self.u is None else self.u.tolist(),
            "events": self.events,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SearchOutcome":
        u = d.get("u")
        return cls(AuxiliaryFunction.from_dict(d["g"]), d["status"], list(d["rho_trace"]), d["seed"],
                   d["wall_time"], None if u is None else np.asarray(u), list(d.get("events", [])))


# candidate pools ---------------------------------------------------------


def and_pairs_plain(dim: int) -> list[ThresholdFunction]:
    """``x_i & x_j`` for ``i < j``."""
    return [and_function(dim, i, j) for i, j in itertools.combinations(range(dim), 2)]


def and_literal_pairs(dim: int) -> list[ThresholdFunction]:
    """AND of two literals over every pair; ORs are their negations and are left out."""
    out = []
    for i, j in itertools.combinations(range(dim), 2):
        for ni, nj in itertools.product((False, True), repeat=2):
            out.append(and_function(dim, i, j, (ni, nj)))
    return out


def majority_literal_triples(dim: int) -> list[ThresholdFunction]:
    """Majority of three literals, one per output-negation class."""
    out = []
    for trip in itertools.combinations(range(dim), 3):
        for signs in itertools.product((1, -1), repeat=2):
            w = np.zeros(dim)
            signs = (1, *signs)
            b = 0.0
            for k, s in zip(trip, signs):
                w[k] = 2.0 * s
                b += 0.0 if s > 0 else -2.0
            out.append(ThresholdFunction(w, b + 3.0))
    return out


def strong_pool(dim: int, majority: bool = True) -> list[ThresholdFunction]:
    """Extrusions of the AND and majority orbits placed on every variable subset."""
    pool = and_literal_pairs(dim)
    if majority and dim >= 3:
        pool += majority_literal_triples(dim)
    return pool


def weak_pool(c: Circuit, n_samples: int, seed: int = 0, limit: int | None = None) -> list[ThresholdFunction]:
    """Sampled base-dimension threshold functions that are weakly neutralizable for ``c``."""
    lib = sample_thresholds(c.n_spins, n_samples, seed, group=Group.OUTPUT_NEGATION)
    out = []
    for e in lib:
        if limit is not None and len(out) >= limit:
            break
        if check_weak_neutralizable(e.function, c) is not None:
            out.append(e.function)
    return out


def library_functions(libs, dim: int) -> list[ThresholdFunction]:
    """Flatten libraries (or plain lists) of dimension ``<= dim``, extruded to ``dim``."""
    if libs is None:
        return []
    if isinstance(libs, (ThresholdLibrary, dict)) or (
        isinstance(libs, (list, tuple)) and libs and isinstance(libs[0], ThresholdFunction)
    ):
        libs = [libs]
    out = []
    for lib in libs:
        if isinstance(lib, dict):
            items = [f for d, fs in sorted(lib.items()) if d <= dim for f in _functions_of(fs)]
        else:
            items = [f for f in _functions_of(lib) if f.dim <= dim]
        out.extend(f.extruded(dim) for f in items)
    return out


def _functions_of(lib):
    if isinstance(lib, ThresholdLibrary):
        return lib.functions
    return list(lib)


# search machinery ----------------------------------------------------------


class BudgetExceeded(Exception):
    pass


class _Search:
    def __init__(self, c: Circuit, opts: SearchOptions, cache: RhoCache | None = None):
        self.c = c
        self.opts = opts
        self.cache = cache if cache is not None else RhoCache(opts.cache_size)
        self.certifier = ComponentCertifier(c)
        self.start = time.perf_counter()
        self.trace: list = []
        self.events: list = []
        self.steps = 0
        self.rejected: set = set()
        self.pool = ThreadPoolExecutor(opts.threads) if opts.threads > 1 else None

    def close(self):
        if self.pool is not None:
            self.pool.shutdown()

    def elapsed(self) -> float:
        return time.perf_counter() - self.start

    def tick(self):
        self.steps += 1
        o = self.opts
        if o.max_secs is not None and self.elapsed() > o.max_secs:
            raise BudgetExceeded("time")
        if o.max_steps is not None and self.steps > o.max_steps:
            raise BudgetExceeded("steps")

    def rho(self, g: AuxiliaryFunction, radius) -> float:
        return rho(self.c, g, radius, self.cache, self.opts.lp)

    def rho_many(self, gs: list, radius) -> np.ndarray:
        if self.pool is None:
            return np.array([self.rho(g, radius) for g in gs])
        return np.array(list(self.pool.map(lambda g: self.rho(g, radius), gs)))

    def admissible(self, t: ThresholdFunction, k: int) -> bool:
        if not self.opts.check_neutralizable:
            return True
        return self.certifier.certify(t, k) is not None

    def best(self, gs: list, funcs: list, k: int, radius) -> tuple[int, float]:
        """Index and value of the lowest-rho admissible candidate; ties by index."""
        vals = self.rho_many(gs, radius)
        for idx in np.lexsort((np.arange(len(vals)), vals)):
            if self.admissible(funcs[idx], k):
                return int(idx), float(vals[idx])
        return -1, np.inf

    def record(self, kind: str, value: float, **info):
        self.trace.append(float(value))
        self.events.append({"event": kind, "rho": float(value), "aux": info.pop("aux"), **info})
        logger.debug("%s rho=%.9g %s", kind, value, info)


def _ordered(funcs: list, seed: int) -> list:
    """Library order permuted by ``seed`` (seed 0 keeps the given order)."""
    if not seed:
        return list(funcs)
    perm = np.random.default_rng(seed).permutation(len(funcs))
    return [funcs[k] for k in perm]


def _append_step(s: _Search, g: AuxiliaryFunction, funcs: list, radius) -> tuple[AuxiliaryFunction, float]:
    k = len(g)
    if k >= s.opts.max_aux:
        raise BudgetExceeded("aux")
    dim = s.c.n_spins + k
    cands = [f.extruded(dim) for f in funcs]
    idx, val = s.best([g.appended(f) for f in cands], cands, k, radius)
    if idx < 0:
        raise BudgetExceeded("no admissible candidate")
    return g.appended(cands[idx]), val


def _finish(s: _Search, g: AuxiliaryFunction, status: str) -> SearchOutcome:
    u = None
    if status == "Solved":
        feas = is_feasible(s.c, g, s.opts.lp)
        if not feas.feasible:
            status = "Budget"
        else:
            u = feas.u
    s.close()
    return SearchOutcome(g, status, s.trace, s.opts.seed, s.elapsed(), u, s.events)


def greedy(c: Circuit, libs=None, opts: SearchOptions | None = None, g0=None,
           cache: RhoCache | None = None) -> SearchOutcome:
    """Append the argmin-``rho`` component until the full constraints are feasible.

    Candidates at step ``k`` are the library functions of dimension at most
    ``N + M + k`` (extruded) together with all plain AND pairs on those
    variables, which guarantees termination.
    """
    opts = opts or SearchOptions()
    s = _Search(c, opts, cache)
    g = as_auxiliary(c.n_spins, g0)
    current = s.rho(g, None)
    s.record("start", current, aux=len(g))
    try:
        while current > FEASIBILITY_TOL:
            s.tick()
            dim = c.n_spins + len(g)
            funcs = _ordered(library_functions(libs, dim), opts.seed) + and_pairs_plain(dim)
            g, current = _append_step(s, g, funcs, None)
            s.record("append", current, aux=len(g))
    except BudgetExceeded as exc:
        s.events.append({"event": "budget", "reason": str(exc)})
        return _finish(s, g, "Budget")
    return _finish(s, g, "Solved")


def contribution(c: Circuit, g: AuxiliaryFunction, j: int, radius=None, cache: RhoCache | None = None,
                 opts: LPOptions | None = None) -> float:
    """``rho`` with component ``j`` (0-based) suppressed to constant 0, minus ``rho(g)``."""
    g = as_auxiliary(c.n_spins, g)
    if not 0 <= j < len(g):
        raise IndexError(f"component {j} out of range for |g| = {len(g)}")
    return rho(c, g.suppressed(j), radius, cache, opts) - rho(c, g, radius, cache, opts)


def _descent_phase(s: _Search, g: AuxiliaryFunction, T: list, radius) -> AuxiliaryFunction:
    """One run of the working-set loop against ``rho`` at ``radius``."""
    c = s.c
    current = s.rho(g, radius)
    S = set(range(len(g)))
    while current > FEASIBILITY_TOL:
        s.tick()
        if not S:
            g, current = _append_step(s, g, T, radius)
            s.record("append", current, aux=len(g), radius=radius)
            S = set(range(len(g)))
            continue
        order = sorted(S)
        contrib = s.rho_many([g.suppressed(i) for i in order], radius) - current
        j = order[int(np.lexsort((np.arange(len(order)), contrib))[0])]
        dim = c.n_spins + j
        cands = [f.extruded(dim) for f in T] + and_pairs_plain(dim)
        idx, val = s.best([g.replaced(j, f) for f in cands], cands, j, radius)
        if idx >= 0 and val < current - IMPROVE_TOL:
            g = g.replaced(j, cands[idx])
            current = val
            s.record("replace", current, aux=len(g), radius=radius, index=j)
            S = set(range(len(g)))
        else:
            S.discard(j)
    return g


def _normalize_schedule(c: Circuit, schedule) -> list:
    out = []
    for r in schedule or ("full",):
        r = None if r in (None, "full") or int(r) >= c.n_out else int(r)
        if out and r is not None and out[-1] is not None and r <= out[-1]:
            raise ValueError("radius schedule must be increasing")
        if out and out[-1] is None:
            raise ValueError("'full' must be the last radius")
        out.append(r)
    if out[-1] is not None:
        out.append(None)
    return out


def descent(c: Circuit, lib=None, opts: SearchOptions | None = None, g0=None,
            cache: RhoCache | None = None) -> SearchOutcome:
    """Working-set coordinate descent over auxiliary components.

    ``lib`` supplies the candidate set (functions on the ``N + M`` base
    spins, or libraries of smaller dimension which are extruded).  The plain
    AND pairs of the base spins are always added.  With a radius schedule
    the loop runs against the local heuristic of each radius in turn and
    only reports Solved once the full constraints are feasible.
    """
    opts = opts or SearchOptions()
    s = _Search(c, opts, cache)
    base = c.n_spins
    T = _ordered(library_functions(lib, base), opts.seed)
    seen = {(f.weights.tobytes(), f.bias) for f in T}
    T += [f for f in and_pairs_plain(base) if (f.weights.tobytes(), f.bias) not in seen]
    g = as_auxiliary(base, g0)
    s.record("start", s.rho(g, None), aux=len(g))
    try:
        for radius in _normalize_schedule(c, opts.radius_schedule):
            g = _descent_phase(s, g, T, radius)
            s.record("advance", s.rho(g, None), aux=len(g), radius=radius)
    except BudgetExceeded as exc:
        s.events.append({"event": "budget", "reason": str(exc)})
        return _finish(s, g, "Budget")
    return _finish(s, g, "Solved")


def escalate(c: Circuit, g0=None, schedule=(1, 2, "full"), lib=None, opts: SearchOptions | None = None,
             cache: RhoCache | None = None) -> SearchOutcome:
    """Descent from ``g0`` through an increasing radius schedule."""
    opts = opts or SearchOptions()
    opts = SearchOptions(**{**opts.__dict__, "radius_schedule": tuple(schedule)})
    return descent(c, lib, opts, g0, cache)
