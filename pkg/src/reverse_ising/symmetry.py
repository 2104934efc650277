"""Spin actions, coordinate permutations and canonical forms of truth tables.

A spin action is a +-1 vector multiplying states pointwise (a bit flip mask
in packed form).  A coordinate permutation relabels input and output spins.
Both act on states, circuits, Hamiltonians and threshold functions.
"""

from __future__ import annotations

import enum
import functools
import itertools
from dataclasses import dataclass

import numpy as np

from .functions import AuxiliaryFunction, ThresholdFunction
from .pseudobool import PLUS_MINUS, QuadraticHamiltonian, convert_convention
from .spincore import Circuit, Convention, SpinState


class Group(enum.Enum):
    """Groups acting on single-output truth tables of dimension ``d``."""

    OUTPUT_NEGATION = "OutputNegation"
    SPIN_ACTIONS = "SpinActionsOnly"
    FULL = "FullGroup"


@dataclass(frozen=True)
class SpinAction:
    """Pointwise multiplication by a +-1 vector ``signs``."""

    signs: tuple

    def __post_init__(self):
        signs = tuple(int(s) for s in np.asarray(self.signs).ravel())
        if any(s not in (-1, 1) for s in signs):
            raise ValueError("spin action entries must be +-1")
        object.__setattr__(self, "signs", signs)

    @classmethod
    def from_mask(cls, mask: int, n: int) -> "SpinAction":
        return cls(tuple(-1 if mask >> k & 1 else 1 for k in range(n)))

    @classmethod
    def identity(cls, n: int) -> "SpinAction":
        return cls((1,) * n)

    @classmethod
    def random(cls, n: int, rng) -> "SpinAction":
        return cls(tuple(rng.choice([-1, 1], size=n)))

    @property
    def n(self) -> int:
        return len(self.signs)

    @property
    def mask(self) -> int:
        """Packed flip mask: bit ``k`` set iff ``signs[k] == -1``."""
        return sum(1 << k for k, s in enumerate(self.signs) if s < 0)

    def part(self, start: int, stop: int) -> int:
        return (self.mask >> start) & ((1 << (stop - start)) - 1)

    def compose(self, other: "SpinAction") -> "SpinAction":
        if other.n != self.n:
            raise ValueError("spin actions have different lengths")
        return SpinAction(tuple(a * b for a, b in zip(self.signs, other.signs)))

    def virtual(self) -> np.ndarray:
        """``v(alpha)``: the signs followed by all pairwise products."""
        from .spincore import virtual_spins

        return virtual_spins(np.array([self.signs]))[0]


@dataclass(frozen=True)
class CoordPermutation:
    """Relabelling of inputs and outputs.

    On inputs, new bit ``i`` is old bit ``input_perm[i]``; on outputs, the
    output word ``omega`` maps to the word whose bit ``j`` is ``omega[output_perm[j]]``.
    Acting on a circuit gives ``f'(sigma) = P_beta f(P_alpha sigma)``.
    """

    input_perm: tuple
    output_perm: tuple

    def __post_init__(self):
        for name in ("input_perm", "output_perm"):
            p = tuple(int(k) for k in getattr(self, name))
            if sorted(p) != list(range(len(p))):
                raise ValueError(f"{name} is not a permutation")
            object.__setattr__(self, name, p)

    @classmethod
    def identity(cls, n_in: int, n_out: int) -> "CoordPermutation":
        return cls(tuple(range(n_in)), tuple(range(n_out)))

    @classmethod
    def random(cls, n_in: int, n_out: int, rng) -> "CoordPermutation":
        return cls(tuple(rng.permutation(n_in)), tuple(rng.permutation(n_out)))

    def compose(self, other: "CoordPermutation") -> "CoordPermutation":
        """``self.compose(other)`` acts as ``other`` first, then ``self``.

        Inputs are relabelled before evaluation and outputs after, so the two
        parts compose in opposite orders.
        """
        a = tuple(self.input_perm[k] for k in other.input_perm)
        b = tuple(other.output_perm[k] for k in self.output_perm)
        return CoordPermutation(a, b)

    def spin_map(self) -> np.ndarray:
        """``pi`` with ``H'(s) = H(Q s)`` and ``(Q s)_k = s_{pi[k]}``."""
        N, M = len(self.input_perm), len(self.output_perm)
        inv_b = np.argsort(self.output_perm)
        return np.concatenate([np.array(self.input_perm, dtype=np.int64), N + inv_b])


def permute_words(words: np.ndarray, perm) -> np.ndarray:
    """New bit ``i`` of each word is old bit ``perm[i]``."""
    words = np.asarray(words, dtype=np.int64)
    out = np.zeros_like(words)
    for i, p in enumerate(perm):
        out |= ((words >> p) & 1) << i
    return out


def act_state(a: SpinAction, s: SpinState) -> SpinState:
    if a.n != s.n:
        raise ValueError(f"action has length {a.n}, state has {s.n}")
    return SpinState(s.bits ^ a.mask, s.n, s.convention)


def act_function(a, c: Circuit) -> Circuit:
    """Transform a circuit by a spin action on ``N + M`` spins or a permutation."""
    N, M = c.n_in, c.n_out
    sigma = np.arange(1 << N, dtype=np.int64)
    if isinstance(a, SpinAction):
        if a.n != N + M:
            raise ValueError(f"action has length {a.n}, circuit has {N + M} spins")
        table = c.table[sigma ^ a.part(0, N)] ^ a.part(N, N + M)
    elif isinstance(a, CoordPermutation):
        if (len(a.input_perm), len(a.output_perm)) != (N, M):
            raise ValueError("permutation sizes do not match the circuit")
        table = permute_words(c.table[permute_words(sigma, a.input_perm)], a.output_perm)
    else:
        raise TypeError(f"cannot act with {type(a).__name__}")
    return Circuit(N, M, table, c.name)


def act_coefficients(a, H: QuadraticHamiltonian) -> QuadraticHamiltonian:
    """Transform a Hamiltonian so that it solves the transformed circuit.

    A spin action gives ``(aH)(s) = H(a s)``; a coordinate permutation gives
    ``H'(s) = H(Q s)`` where ``Q`` applies the input relabelling and the
    inverse output relabelling.  Extra (auxiliary) spins are left in place.
    """
    if isinstance(a, SpinAction):
        if a.n != H.n:
            raise ValueError(f"action has length {a.n}, Hamiltonian has {H.n} spins")
        src = H if H.convention is PLUS_MINUS else convert_convention(H, PLUS_MINUS)
        sg = np.array(a.signs, dtype=float)
        out = QuadraticHamiltonian(src.h * sg, src.J * np.outer(sg, sg), src.constant, PLUS_MINUS)
        return out if H.convention is PLUS_MINUS else convert_convention(out, H.convention)
    if isinstance(a, CoordPermutation):
        pi = a.spin_map()
        if pi.shape[0] > H.n:
            raise ValueError("permutation covers more spins than the Hamiltonian")
        pi = np.concatenate([pi, np.arange(pi.shape[0], H.n)])
        # H'(s) = sum_k h_k s_{pi(k)}  =>  h'_{pi(k)} = h_k
        h = np.empty(H.n)
        h[pi] = H.h
        Jsym = H.J + H.J.T
        Jn = np.empty_like(Jsym)
        Jn[np.ix_(pi, pi)] = Jsym
        return QuadraticHamiltonian(h, np.triu(Jn, k=1), H.constant, H.convention)
    raise TypeError(f"cannot act with {type(a).__name__}")


def act_threshold(t: ThresholdFunction, perm=None, mask: int = 0, negate: bool = False) -> ThresholdFunction:
    """Image of ``t`` under ``x -> negate ^ t(P_perm(x) ^ mask)``.

    Matches :func:`act_table` with the same arguments; margins are preserved.
    """
    d = t.dim
    perm = tuple(range(d)) if perm is None else tuple(perm)
    flips = np.array([(mask >> i) & 1 for i in range(d)], dtype=bool)
    w = np.where(flips, -t.weights, t.weights)
    b = t.bias - t.weights[flips].sum()
    new_w = np.empty(d)
    new_w[list(perm)] = w
    if negate:
        new_w, b = -new_w, -b
    return ThresholdFunction(new_w, b)


def act_table(table: np.ndarray, perm=None, mask: int = 0, negate: bool = False) -> np.ndarray:
    """``T'[k] = negate ^ T[P_perm(k) ^ mask]``."""
    table = np.asarray(table, dtype=np.uint8)
    d = table.shape[0].bit_length() - 1
    idx = np.arange(1 << d, dtype=np.int64)
    if perm is not None:
        idx = permute_words(idx, perm)
    return table[idx ^ mask] ^ np.uint8(bool(negate))


def act_auxiliary(a: SpinAction, g: AuxiliaryFunction) -> AuxiliaryFunction:
    """Spin action on ``N + M + A`` spins applied to a sequential auxiliary function.

    Component ``k`` becomes ``alpha_k * g_k(alpha|domain . z)``: its inputs
    and its own output are flipped according to ``a``.
    """
    n = g.base_dim + len(g)
    if a.n != n:
        raise ValueError(f"action has length {a.n}, auxiliary system has {n} spins")
    comps = []
    for k, t in enumerate(g.components):
        d = g.base_dim + k
        comps.append(act_threshold(t, None, a.part(0, d), bool(a.mask >> d & 1)))
    return AuxiliaryFunction(g.base_dim, comps)


@functools.lru_cache(maxsize=32)
def _orbit_indices(d: int, group: Group) -> np.ndarray:
    """Index maps ``idx[e]`` such that the images of ``T`` are ``T[idx[e]]``."""
    base = np.arange(1 << d, dtype=np.int64)
    if group is Group.OUTPUT_NEGATION:
        maps = [base]
    else:
        perms = itertools.permutations(range(d)) if group is Group.FULL else [tuple(range(d))]
        maps = []
        for p in perms:
            pk = permute_words(base, p)
            maps.extend(pk ^ m for m in range(1 << d))
    out = np.unique(np.array(maps), axis=0)
    out.setflags(write=False)
    return out


def _lex_keys(images: np.ndarray) -> np.ndarray:
    """Keys whose order matches the lexicographic order of the rows."""
    packed = np.packbits(images, axis=1, bitorder="big")
    if packed.shape[1] <= 8:
        padded = np.zeros((packed.shape[0], 8), dtype=np.uint8)
        padded[:, : packed.shape[1]] = packed
        return padded.view(">u8").ravel()
    return np.array([r.tobytes() for r in packed], dtype=object)


def orbit(table, group: Group | str = Group.FULL) -> np.ndarray:
    """All distinct images of ``table`` (rows), including output negation."""
    group = Group(group)
    table = np.asarray(table, dtype=np.uint8)
    d = _dimension(table, group)
    images = table[_orbit_indices(d, group)]
    images = np.vstack([images, 1 - images])
    return np.unique(images, axis=0)


def _dimension(table: np.ndarray, group: Group) -> int:
    size = table.shape[0]
    if size == 0 or size & (size - 1):
        raise ValueError(f"table length {size} is not a power of two")
    d = size.bit_length() - 1
    if group is Group.FULL and d > 8:
        raise ValueError("FullGroup canonical forms are limited to d <= 8")
    if group is Group.SPIN_ACTIONS and d > 16:
        raise ValueError("SpinActionsOnly canonical forms are limited to d <= 16")
    return d


def canonical_form(table, group: Group | str = Group.SPIN_ACTIONS) -> np.ndarray:
    """Lexicographically smallest table in the orbit of ``table``.

    All groups include negation of the output.
    """
    group = Group(group)
    table = np.asarray(table, dtype=np.uint8)
    d = _dimension(table, group)
    if group is Group.OUTPUT_NEGATION:
        return table.copy() if table[0] == 0 else 1 - table
    images = table[_orbit_indices(d, group)]
    # the minimum always starts with 0, so negation is folded in by fixing T[0]
    images ^= images[:, :1]
    keys = _lex_keys(images)
    return images[int(np.argmin(keys)) if keys.dtype != object else min(range(len(keys)), key=keys.__getitem__)]


def canonical_key(table, group: Group | str = Group.SPIN_ACTIONS) -> bytes:
    return np.packbits(canonical_form(table, group)).tobytes()
