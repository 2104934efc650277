"""Spin states, conventions, virtual spins and circuits.

Global spin layout used throughout the package: inputs occupy indices
``0..N-1``, outputs ``N..N+M-1`` and auxiliaries ``N+M..N+M+A-1``.  A global
state is packed into an integer with spin ``j`` stored in bit ``j``.
"""

from __future__ import annotations

import enum
import functools
import hashlib
import math
import os
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

MAX_SPINS = 63


class Convention(enum.Enum):
    PLUS_MINUS = "pm"
    ZERO_ONE = "01"


@dataclass(frozen=True)
class SpinState:
    """A point of the spin space of ``n`` spins, bit-packed into ``bits``."""

    bits: int
    n: int
    convention: Convention = Convention.ZERO_ONE

    def __post_init__(self):
        if not 0 <= self.n <= MAX_SPINS:
            raise ValueError(f"spin count must be in [0, {MAX_SPINS}], got {self.n}")
        if not 0 <= self.bits < (1 << self.n):
            raise ValueError(f"bits {self.bits} out of range for {self.n} spins")

    def __len__(self):
        return self.n

    def __getitem__(self, j):
        b = (self.bits >> j) & 1
        if self.convention is Convention.PLUS_MINUS:
            return 2 * b - 1
        return b

    def to_array(self) -> np.ndarray:
        arr = unpack_bits(np.array([self.bits], dtype=np.int64), self.n)[0].astype(np.int64)
        if self.convention is Convention.PLUS_MINUS:
            return 2 * arr - 1
        return arr

    def convert(self, convention: Convention) -> "SpinState":
        return SpinState(self.bits, self.n, convention)

    @classmethod
    def from_array(cls, values, convention: Convention = Convention.ZERO_ONE) -> "SpinState":
        values = np.asarray(values).astype(np.int64)
        if convention is Convention.PLUS_MINUS:
            if not np.all(np.abs(values) == 1):
                raise ValueError("PlusMinus states take values in {-1, +1}")
            values = (values + 1) // 2
        elif not np.all((values == 0) | (values == 1)):
            raise ValueError("ZeroOne states take values in {0, 1}")
        bits = int(sum(int(v) << j for j, v in enumerate(values)))
        return cls(bits, len(values), convention)


def encode_state(index: int, n: int, convention: Convention = Convention.ZERO_ONE) -> SpinState:
    if not 0 <= index < (1 << n):
        raise ValueError(f"index {index} out of range for {n} spins")
    return SpinState(int(index), n, convention)


def decode_state(s: SpinState) -> int:
    return s.bits


def unpack_bits(words: np.ndarray, n: int) -> np.ndarray:
    """Rows of 0/1 bits (uint8), bit ``j`` of each word in column ``j``."""
    words = np.asarray(words, dtype=np.int64)
    shifts = np.arange(n, dtype=np.int64)
    return ((words[:, None] >> shifts) & 1).astype(np.uint8)


def pack_bits(bits: np.ndarray) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.int64)
    weights = np.int64(1) << np.arange(bits.shape[1], dtype=np.int64)
    return bits @ weights


def popcount(words) -> np.ndarray:
    return np.bitwise_count(np.asarray(words, dtype=np.uint64)).astype(np.int64)


def hamming_distance(a, b) -> int:
    if isinstance(a, SpinState):
        if isinstance(b, SpinState) and a.n != b.n:
            raise ValueError("states have different lengths")
        a = a.bits
    if isinstance(b, SpinState):
        b = b.bits
    return int(a ^ b).bit_count()


@functools.lru_cache(maxsize=None)
def pair_indices(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Upper-triangular pairs ``(i, j)``, ``i < j``, in lexicographic order."""
    i, j = np.triu_indices(n, k=1)
    i.setflags(write=False)
    j.setflags(write=False)
    return i, j


def virtual_spin(s: SpinState) -> np.ndarray:
    if s.convention is not Convention.PLUS_MINUS:
        raise ValueError("virtual spins are defined for PlusMinus states")
    return virtual_spins(s.to_array()[None, :])[0]


def virtual_spins(pm: np.ndarray) -> np.ndarray:
    """Vectorised virtual spins for rows of a +-1 matrix."""
    pm = np.asarray(pm)
    i, j = pair_indices(pm.shape[1])
    return np.concatenate([pm, pm[:, i] * pm[:, j]], axis=1)


def pm_matrix(words: np.ndarray, n: int, dtype=np.int8) -> np.ndarray:
    return (2 * unpack_bits(words, n).astype(dtype) - 1).astype(dtype)


@dataclass(frozen=True, eq=False)
class Circuit:
    """A logic function on ``n_in`` input spins with ``n_out`` output spins.

    ``table[k]`` is the packed output word for the input word ``k``.
    """

    n_in: int
    n_out: int
    table: np.ndarray
    name: str = ""
    _digest: str = field(init=False, repr=False)

    def __post_init__(self):
        if self.n_in < 0 or self.n_out < 1:
            raise ValueError("need n_in >= 0 and n_out >= 1")
        if self.n_in + self.n_out > MAX_SPINS:
            raise ValueError(f"circuit exceeds {MAX_SPINS} spins")
        table = np.array(self.table, dtype=np.int64).ravel()
        if table.shape[0] != 1 << self.n_in:
            raise ValueError(f"table must have 2^{self.n_in} entries, got {table.shape[0]}")
        if np.any(table < 0) or np.any(table >= (1 << self.n_out)):
            raise ValueError(f"table entries must fit in {self.n_out} bits")
        table.setflags(write=False)
        object.__setattr__(self, "table", table)
        h = hashlib.sha1(f"{self.n_in},{self.n_out}:".encode() + table.tobytes()).hexdigest()
        object.__setattr__(self, "_digest", h[:16])

    @property
    def n_spins(self) -> int:
        return self.n_in + self.n_out

    @property
    def key(self) -> str:
        """Content hash; two circuits with equal tables share a key."""
        return self._digest

    def __call__(self, sigma: int) -> int:
        return int(self.table[sigma])

    def __eq__(self, other):
        if not isinstance(other, Circuit):
            return NotImplemented
        return (self.n_in, self.n_out) == (other.n_in, other.n_out) and np.array_equal(
            self.table, other.table
        )

    def __hash__(self):
        return hash(self._digest)

    def graph_words(self) -> np.ndarray:
        """Packed ``(sigma, f(sigma))`` words for every input."""
        sigma = np.arange(1 << self.n_in, dtype=np.int64)
        return sigma | (self.table << self.n_in)

    def __repr__(self):
        return f"Circuit(name={self.name!r}, n_in={self.n_in}, n_out={self.n_out})"


def mul_circuit(n: int, m: int) -> Circuit:
    """Unsigned ``n``-bit times ``m``-bit multiplier, little-endian operands."""
    if n < 1 or m < 1:
        raise ValueError("operand widths must be >= 1")
    sigma = np.arange(1 << (n + m), dtype=np.int64)
    a = sigma & ((1 << n) - 1)
    b = sigma >> n
    return Circuit(n + m, n + m, a * b, name=f"mul:{n}x{m}")


def and_circuit() -> Circuit:
    return Circuit(2, 1, [0, 0, 0, 1], name="and")


def or_circuit() -> Circuit:
    return Circuit(2, 1, [0, 1, 1, 1], name="or")


def xor_circuit() -> Circuit:
    return Circuit(2, 1, [0, 1, 1, 0], name="xor")


def parity_circuit(n: int) -> Circuit:
    """Output is 1 iff the number of set input bits is odd."""
    if n < 1:
        raise ValueError("parity needs at least one input")
    sigma = np.arange(1 << n, dtype=np.int64)
    return Circuit(n, 1, popcount(sigma) & 1, name=f"parity:{n}")


def circuit_from_function(n_in: int, n_out: int, fn, name: str = "") -> Circuit:
    return Circuit(n_in, n_out, [fn(k) for k in range(1 << n_in)], name=name)


def write_table(circuit: Circuit, path) -> None:
    width = max(1, math.ceil(circuit.n_out / 4))
    with open(path, "w") as fh:
        fh.write(f"N={circuit.n_in} M={circuit.n_out}\n")
        for word in circuit.table:
            fh.write(f"{int(word):0{width}x}\n")


def read_table(path, name: str | None = None) -> Circuit:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty truth-table file")
    try:
        header = dict(tok.split("=", 1) for tok in lines[0].split())
        n_in, n_out = int(header["N"]), int(header["M"])
    except (KeyError, ValueError) as exc:
        raise ValueError(f"{path}: malformed header {lines[0]!r}") from exc
    rows = lines[1:]
    if len(rows) & (len(rows) - 1) or not rows:
        raise ValueError(f"{path}: table length {len(rows)} is not a power of two")
    if len(rows) != 1 << n_in:
        raise ValueError(f"{path}: expected {1 << n_in} rows for N={n_in}, got {len(rows)}")
    try:
        table = [int(r, 16) for r in rows]
    except ValueError as exc:
        raise ValueError(f"{path}: malformed hex entry") from exc
    return Circuit(n_in, n_out, table, name=name or f"table:{os.path.basename(str(path))}")


def build_circuit(kind: str) -> Circuit:
    """Parse a circuit description.

    Accepted forms: ``mul:NxM``, ``and``, ``or``, ``xor``, ``parity:N`` and
    ``table:<path>`` (a truth-table file).
    """
    kind = kind.strip()
    head, _, arg = kind.partition(":")
    head = head.lower()
    if head == "mul":
        try:
            n, m = (int(x) for x in arg.lower().split("x"))
        except ValueError as exc:
            raise ValueError(f"bad multiplier spec {kind!r}; use mul:NxM") from exc
        return mul_circuit(n, m)
    if head == "and":
        return and_circuit()
    if head == "or":
        return or_circuit()
    if head == "xor":
        return xor_circuit()
    if head == "parity":
        return parity_circuit(int(arg))
    if head == "table":
        return read_table(arg)
    raise ValueError(f"unknown circuit kind {kind!r}")


def input_level(c: Circuit, aux_count: int, sigma: SpinState | int) -> Iterator[SpinState]:
    """All global states (ZeroOne) agreeing with ``sigma`` on the inputs."""
    s = sigma.bits if isinstance(sigma, SpinState) else int(sigma)
    if isinstance(sigma, SpinState) and sigma.n != c.n_in:
        raise ValueError("input state has the wrong length")
    n = c.n_spins + aux_count
    for k in range(1 << (c.n_out + aux_count)):
        yield SpinState(s | (k << c.n_in), n)
