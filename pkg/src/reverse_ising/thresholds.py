"""Threshold-function libraries and neutralizability certificates.

Exhaustive enumeration walks the adjacency graph of threshold functions
(two functions are adjacent when their tables differ at one vertex).  The
functions are the regions of a hyperplane arrangement in ``(w, b)`` space,
so this graph is connected; the walk is done on FullGroup orbit
representatives and the orbits are expanded at the end.
"""

from __future__ import annotations

import enum
import functools
import itertools
import logging
from collections import deque
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .functions import ThresholdFunction, hex_to_table, table_to_hex, vertex_matrix
from .lp import LPInstance, reference_solve, solve_artificial
from .pseudobool import QuadraticHamiltonian
from .spincore import Circuit, pm_matrix, virtual_spins
from .symmetry import Group, canonical_form, permute_words

logger = logging.getLogger(__name__)

MAX_THRESHOLD_DIM = 12
MAX_NEUTRAL_SPINS = 16
CERT_TOL = 1e-7


class Mode(enum.Enum):
    EXHAUSTIVE = "Exhaustive"
    SAMPLED = "Sampled"


def _check_table(table) -> tuple[np.ndarray, int]:
    table = np.asarray(table, dtype=np.uint8).ravel()
    size = table.shape[0]
    if size == 0 or size & (size - 1):
        raise ValueError(f"table length {size} is not a power of two")
    if np.any(table > 1):
        raise ValueError("truth tables are 0/1")
    return table, size.bit_length() - 1


def is_threshold(table) -> ThresholdFunction | None:
    """Separating certificate for ``table`` or ``None``.

    Solves the artificial LP on rows ``y_k (x_k, -1)`` with ``y = +-1``.  The
    system is homogeneous, so its optimum is either 0 or at least 1; a
    returned certificate is checked against the table exactly and rescaled
    to minimum margin 1.
    """
    table, d = _check_table(table)
    if d > MAX_THRESHOLD_DIM:
        raise ValueError(f"is_threshold is limited to d <= {MAX_THRESHOLD_DIM}")
    X = vertex_matrix(d).astype(float)
    y = 2.0 * table - 1.0
    B = y[:, None] * np.hstack([X, -np.ones((X.shape[0], 1))])
    res = solve_artificial(LPInstance(B))
    if not res.optimal or 0.1 < res.objective < 0.9:
        res = reference_solve(LPInstance(B))
    if res.objective > 0.5:
        return None
    t = ThresholdFunction(res.u[:d], res.u[d])
    if not np.array_equal(t.table, table) or t.min_margin() <= 0:
        res = reference_solve(LPInstance(B))
        t = ThresholdFunction(res.u[:d], res.u[d])
        if res.objective > 0.5 or not np.array_equal(t.table, table):
            return None
    return t.rescaled()


def depends_on(table, i: int) -> bool:
    table, d = _check_table(table)
    k = np.arange(1 << d)
    return bool(np.any(table != table[k ^ (1 << i)]))


def is_extrusion(table) -> bool:
    """True if the function ignores at least one variable."""
    table, d = _check_table(table)
    return any(not depends_on(table, i) for i in range(d))


@functools.lru_cache(maxsize=16)
def _group_elements(d: int) -> tuple[np.ndarray, np.ndarray]:
    """All ``(perm, mask)`` of the hyperoctahedral group on ``d`` variables."""
    perm_list = list(itertools.permutations(range(d)))
    perms = np.array(perm_list, dtype=np.int64).reshape(len(perm_list), d)
    masks = np.arange(1 << d, dtype=np.int64)
    P = np.repeat(perms, masks.shape[0], axis=0)
    Mk = np.tile(masks, perms.shape[0])
    return P, Mk


def orbit_functions(t: ThresholdFunction, group: Group = Group.FULL) -> list[ThresholdFunction]:
    """Distinct functions in the orbit of ``t``, each with a transformed certificate."""
    d = t.dim
    if group is Group.FULL:
        P, Mk = _group_elements(d)
    elif group is Group.SPIN_ACTIONS:
        Mk = np.arange(1 << d, dtype=np.int64)
        P = np.tile(np.arange(d), (Mk.shape[0], 1))
    else:
        P, Mk = np.arange(d)[None, :], np.zeros(1, dtype=np.int64)
    flips = ((Mk[:, None] >> np.arange(d)) & 1).astype(bool)
    w = np.where(flips, -t.weights, t.weights)
    b = t.bias - np.where(flips, t.weights, 0.0).sum(axis=1)
    W = np.empty_like(w)
    np.put_along_axis(W, P, w, axis=1)
    W = np.vstack([W, -W])
    b = np.concatenate([b, -b])
    tables = (vertex_matrix(d) @ W.T - b > 0).T.astype(np.uint8)
    _, first = np.unique(np.packbits(tables, axis=1), axis=0, return_index=True)
    return [ThresholdFunction(W[k], b[k], _table=tables[k]) for k in sorted(first)]


@dataclass
class NeutralizabilityCertificate:
    """``R`` on ``d + 1`` spins (PlusMinus); the auxiliary spin is last."""

    R: QuadraticHamiltonian
    kind: str
    gap: float
    circuit: str | None = None


@dataclass
class LibraryEntry:
    function: ThresholdFunction
    strong: bool = False
    weak: bool | None = None
    certificate: NeutralizabilityCertificate | None = field(default=None, repr=False)

    @property
    def table(self) -> np.ndarray:
        return self.function.table

    @property
    def hex(self) -> str:
        return table_to_hex(self.function.table)


def _fmt(x: float) -> str:
    return repr(float(x))


@dataclass
class ThresholdLibrary:
    """Threshold functions of one dimension, sorted by truth table."""

    dim: int
    entries: list[LibraryEntry] = field(default_factory=list)
    mode: Mode = Mode.EXHAUSTIVE
    group: str = "None"
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        self.mode = Mode(self.mode)
        for e in self.entries:
            if e.function.dim != self.dim:
                raise ValueError(f"entry of dimension {e.function.dim} in a dimension-{self.dim} library")
        self.entries.sort(key=lambda e: int(e.hex, 16))

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def functions(self) -> list[ThresholdFunction]:
        return [e.function for e in self.entries]

    def table_set(self) -> set[str]:
        return {e.hex for e in self.entries}

    def deduplicated(self, group: Group | str) -> "ThresholdLibrary":
        """Keep the first entry (in table order) of every ``group`` orbit."""
        group = Group(group)
        seen, keep = set(), []
        for e in self.entries:
            key = canonical_form(e.table, group).tobytes()
            if key not in seen:
                seen.add(key)
                keep.append(e)
        return ThresholdLibrary(self.dim, keep, self.mode, group.value, dict(self.extra))

    def to_text(self) -> str:
        head = f"dim={self.dim} count={len(self)} mode={self.mode.value} group={self.group}"
        head += "".join(f" {k}={v}" for k, v in sorted(self.extra.items()))
        lines = [head]
        for e in self.entries:
            t = e.function
            line = f"tt={e.hex} w={','.join(_fmt(x) for x in t.weights)} b={_fmt(t.bias)} strong={int(e.strong)}"
            if e.weak is not None:
                line += f" weak={int(e.weak)}"
            lines.append(line)
        return "\n".join(lines) + "\n"

    def write(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_text())

    @classmethod
    def from_text(cls, text: str) -> "ThresholdLibrary":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise ValueError("empty library file")
        head = dict(tok.split("=", 1) for tok in lines[0].split())
        try:
            dim, count = int(head.pop("dim")), int(head.pop("count"))
            mode, group = head.pop("mode"), head.pop("group")
        except KeyError as exc:
            raise ValueError(f"library header is missing {exc}") from None
        entries = []
        for ln in lines[1:]:
            kv = dict(tok.split("=", 1) for tok in ln.split())
            w = [float(x) for x in kv["w"].split(",")] if kv["w"] else []
            t = ThresholdFunction(w, float(kv["b"]))
            if not np.array_equal(t.table, hex_to_table(kv["tt"], dim)):
                raise ValueError(f"weights do not reproduce table {kv['tt']}")
            weak = kv.get("weak")
            entries.append(LibraryEntry(t, kv.get("strong", "0") == "1", None if weak is None else weak == "1"))
        if len(entries) != count:
            raise ValueError(f"header says {count} entries, found {len(entries)}")
        return cls(dim, entries, Mode(mode), group, head)

    @classmethod
    def read(cls, path) -> "ThresholdLibrary":
        with open(path) as fh:
            return cls.from_text(fh.read())


def enumerate_thresholds(d: int, allow_long: bool = False) -> ThresholdLibrary:
    """Every threshold function of ``d`` variables (``d <= 4``; 5 with ``allow_long``)."""
    if d < 0 or d > 5 or (d == 5 and not allow_long):
        raise ValueError("exhaustive enumeration supports d <= 4 (d = 5 with allow_long)")
    start = np.zeros(1 << d, dtype=np.uint8)
    reps: dict[bytes, ThresholdFunction] = {}
    tested: set[bytes] = set()
    queue = deque([start])
    key0 = canonical_form(start, Group.FULL).tobytes()
    tested.add(key0)
    reps[key0] = is_threshold(start)
    while queue:
        table = queue.popleft()
        for k in range(1 << d):
            nb = table.copy()
            nb[k] ^= 1
            key = canonical_form(nb, Group.FULL).tobytes()
            if key in tested:
                continue
            tested.add(key)
            cert = is_threshold(nb)
            if cert is not None:
                reps[key] = cert
                queue.append(nb)
    logger.info("d=%d: %d orbit representatives, %d LPs", d, len(reps), len(tested))
    funcs = {}
    for t in reps.values():
        for img in orbit_functions(t, Group.FULL):
            funcs.setdefault(table_to_hex(img.table), img.rescaled())
    return ThresholdLibrary(d, [LibraryEntry(t) for t in funcs.values()], Mode.EXHAUSTIVE, "None")


def sample_thresholds(d: int, n_samples: int, seed: int = 0, group: Group | str | None = None,
                      chunk: int = 4096) -> ThresholdLibrary:
    """Threshold functions hit by random planes.

    ``w ~ N(0, I)``, ``b ~ U[-sum|w|, sum|w|]``; draws with a vertex within
    1e-9 of the plane are discarded and redrawn.  Duplicate tables keep the
    first draw; with ``group`` set, orbits are then reduced to one entry.
    """
    if not 0 <= d <= 10:
        raise ValueError("sampling supports d <= 10")
    n_samples = int(n_samples)
    rng = np.random.default_rng(seed)
    X = vertex_matrix(d).astype(float)
    found: dict[bytes, ThresholdFunction] = {}
    done = 0
    while done < n_samples:
        size = min(chunk, n_samples - done)
        W = rng.standard_normal((size, d))
        span = np.abs(W).sum(axis=1)
        b = rng.uniform(-span, span)
        margins = X @ W.T - b
        ok = np.abs(margins).min(axis=0) > 1e-9
        W, b, margins = W[ok], b[ok], margins[:, ok]
        done += int(ok.sum())
        tables = (margins > 0).T.astype(np.uint8)
        keys = np.packbits(tables, axis=1)
        _, first = np.unique(keys, axis=0, return_index=True)
        for k in sorted(first):
            kb = keys[k].tobytes()
            if kb not in found:
                found[kb] = ThresholdFunction(W[k], b[k], _table=tables[k]).rescaled()
    lib = ThresholdLibrary(d, [LibraryEntry(t) for t in found.values()], Mode.SAMPLED, "None")
    return lib.deduplicated(group) if group is not None else lib


def _state_rows(words: np.ndarray, n: int) -> np.ndarray:
    """Virtual spins (float) of packed states, with a trailing constant column."""
    V = virtual_spins(pm_matrix(words, n, dtype=np.int64)).astype(float)
    return np.hstack([V, np.ones((V.shape[0], 1))])


def _l1_feasibility(A_eq, A_ub_ge, rhs_ge):
    """Minimise ``|u|_1`` s.t. ``A_eq u = 0``, ``A_ub_ge u >= rhs_ge`` (HiGHS)."""
    n = A_ub_ge.shape[1]
    split = lambda A: sp.hstack([sp.csr_matrix(A), -sp.csr_matrix(A)], format="csr")
    kwargs = {}
    if A_eq is not None and A_eq.shape[0]:
        kwargs.update(A_eq=split(A_eq), b_eq=np.zeros(A_eq.shape[0]))
    out = linprog(np.ones(2 * n), A_ub=-split(A_ub_ge), b_ub=-np.asarray(rhs_ge, dtype=float),
                  bounds=(0, None), method="highs", **kwargs)
    if out.status != 0:
        return None
    return out.x[:n] - out.x[n:]


def _hamiltonian(u: np.ndarray, n: int) -> QuadraticHamiltonian:
    return QuadraticHamiltonian.from_vector(u[:-1], n, constant=u[-1])


def strong_certificate_gap(t: ThresholdFunction, R: QuadraticHamiltonian) -> float | None:
    """Re-check a strong certificate by enumeration; returns its gap or ``None``."""
    d = t.dim
    z = np.arange(1 << d, dtype=np.int64)
    a = t.table.astype(np.int64)
    right = R.energies(z | (a << d))
    wrong = R.energies(z | ((1 - a) << d))
    if np.abs(right).max() > CERT_TOL or wrong.min() < 1 - CERT_TOL:
        return None
    return float(wrong.min() - right.max())


def check_strong_neutralizable(t: ThresholdFunction) -> NeutralizabilityCertificate | None:
    """Quadratic ``R`` with ``R(z, t(z)) = 0`` and ``R(z, not t(z)) >= 1`` for all ``z``."""
    d = t.dim
    if d + 1 > MAX_NEUTRAL_SPINS:
        raise ValueError(f"strong check limited to {MAX_NEUTRAL_SPINS} spins")
    z = np.arange(1 << d, dtype=np.int64)
    a = t.table.astype(np.int64)
    right = _state_rows(z | (a << d), d + 1)
    wrong = _state_rows(z | ((1 - a) << d), d + 1)
    u = _l1_feasibility(right, wrong, np.ones(wrong.shape[0]))
    if u is None:
        return None
    u[np.abs(u) < 1e-10] = 0.0
    R = _hamiltonian(u, d + 1)
    gap = strong_certificate_gap(t, R)
    if gap is None:
        logger.warning("strong certificate for %s failed re-validation", table_to_hex(t.table))
        return None
    return NeutralizabilityCertificate(R, "strong", gap)


def weak_certificate_gap(t: ThresholdFunction, c: Circuit, R: QuadraticHamiltonian) -> float | None:
    """Re-check a weak certificate by enumeration; returns the auxiliary gap or ``None``."""
    N, M = c.n_in, c.n_out
    d = N + M
    z = np.arange(1 << d, dtype=np.int64)
    a = t.table.astype(np.int64)
    right = R.energies(z | (a << d))
    wrong = R.energies(z | ((1 - a) << d))
    gap = float((wrong - right).min())
    sigma = z & ((1 << N) - 1)
    graph = c.graph_words()[sigma]
    if gap < 1 - CERT_TOL or np.any(right < right[graph] - CERT_TOL):
        return None
    return gap


def check_weak_neutralizable(t: ThresholdFunction, c: Circuit) -> NeutralizabilityCertificate | None:
    """Quadratic ``R`` that solves the auxiliary circuit ``t`` with margin 1 and never
    rewards a wrong output: ``R(s, w, t(s, w)) >= R(s, f(s), t(s, f(s)))``.

    ``t`` must read exactly the ``N + M`` base spins of ``c``.
    """
    N, M = c.n_in, c.n_out
    d = N + M
    if t.dim != d:
        raise ValueError(f"weak check needs a function of {d} base spins, got {t.dim}")
    if d + 1 > MAX_NEUTRAL_SPINS:
        raise ValueError(f"weak check limited to {MAX_NEUTRAL_SPINS} spins")
    z = np.arange(1 << d, dtype=np.int64)
    a = t.table.astype(np.int64)
    on = _state_rows(z | (a << d), d + 1)[:, :-1]
    off = _state_rows(z | ((1 - a) << d), d + 1)[:, :-1]
    sigma = z & ((1 << N) - 1)
    graph = c.graph_words()[sigma]
    wrong_out = z != graph
    rows = np.vstack([off - on, on[wrong_out] - on[graph[wrong_out]]])
    rhs = np.concatenate([np.ones(off.shape[0]), np.zeros(int(wrong_out.sum()))])
    u = _l1_feasibility(None, rows, rhs)
    if u is None:
        return None
    u[np.abs(u) < 1e-10] = 0.0
    R = QuadraticHamiltonian.from_vector(u, d + 1)
    gap = weak_certificate_gap(t, c, R)
    if gap is None:
        logger.warning("weak certificate for %s failed re-validation", table_to_hex(t.table))
        return None
    return NeutralizabilityCertificate(R, "weak", gap, c.key)


def self_dualize(t: ThresholdFunction) -> ThresholdFunction:
    """``f_sd(s0, s) = s0 f(s) + (1 - s0)(1 - f(1 - s))`` with ``s0`` at index 0.

    Closed form: ``w0 = sum(w) - 2b``, bias ``sum(w) - b``; margins carry over.
    """
    total = t.weights.sum()
    return ThresholdFunction(np.concatenate([[total - 2 * t.bias], t.weights]), total - t.bias)


def self_dual_table(table) -> np.ndarray:
    """Direct table construction of the self-dualization (test oracle)."""
    table, d = _check_table(table)
    k = np.arange(1 << (d + 1))
    rest = k >> 1
    full = (1 << d) - 1
    return np.where(k & 1, table[rest], 1 - table[rest ^ full]).astype(np.uint8)


def extrude(t: ThresholdFunction, position: int | None = None) -> ThresholdFunction:
    """Add an ignored variable (last by default)."""
    pos = t.dim if position is None else position
    return ThresholdFunction(np.insert(t.weights, pos, 0.0), t.bias)


def certify_library(lib: ThresholdLibrary, kind: str = "strong", circuit: Circuit | None = None) -> ThresholdLibrary:
    """Attach strong (or weak, relative to ``circuit``) certificates in place."""
    for e in lib.entries:
        if kind == "strong":
            e.certificate = check_strong_neutralizable(e.function)
            e.strong = e.certificate is not None
        elif kind == "weak":
            if circuit is None:
                raise ValueError("weak certification needs a circuit")
            e.certificate = check_weak_neutralizable(e.function, circuit)
            e.weak = e.certificate is not None
        else:
            raise ValueError(f"unknown certificate kind {kind!r}")
    if kind == "weak":
        lib.extra["circuit"] = circuit.name or circuit.key
    return lib


def scan_nonredundant(dmax: int, dmin: int = 2) -> dict:
    """FullGroup orbits of strongly neutralizable threshold functions that use
    every variable, per dimension.

    Returns ``{"dims": {d: [{"tt", "w", "b", "orbit_size", "gap"}, ...]}}``.
    """
    if dmax > 5:
        raise ValueError("scan is limited to dmax <= 5")
    report: dict = {"dims": {}}
    for d in range(dmin, dmax + 1):
        lib = enumerate_thresholds(d, allow_long=d == 5).deduplicated(Group.FULL)
        found = []
        for e in lib:
            if is_extrusion(e.table):
                continue
            cert = check_strong_neutralizable(e.function)
            if cert is None:
                continue
            found.append({
                "tt": e.hex,
                "w": e.function.weights.tolist(),
                "b": e.function.bias,
                "orbit_size": len(orbit_functions(e.function, Group.FULL)),
                "gap": cert.gap,
            })
        report["dims"][d] = found
    return report
