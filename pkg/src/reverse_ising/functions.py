"""Threshold functions and sequential auxiliary functions built from them."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .spincore import unpack_bits


def vertex_matrix(d: int) -> np.ndarray:
    """0/1 coordinates of the ``2^d`` hypercube vertices, row ``k`` = vertex ``k``."""
    return unpack_bits(np.arange(1 << d, dtype=np.int64), d)


def table_to_hex(table: np.ndarray) -> str:
    """Hex string of a truth table; bit ``k`` of the integer is ``table[k]``."""
    bits = np.asarray(table, dtype=np.uint8)
    if bits.shape[0] < 8:
        return format(int(sum(int(b) << k for k, b in enumerate(bits))), "x")
    packed = np.packbits(bits, bitorder="little")
    return packed[::-1].tobytes().hex().lstrip("0") or "0"


def hex_to_table(text: str, d: int) -> np.ndarray:
    value = int(text, 16)
    if value >> (1 << d):
        raise ValueError(f"truth table {text} does not fit dimension {d}")
    size = 1 << d
    nbytes = max(1, (size + 7) // 8)
    raw = np.frombuffer(value.to_bytes(nbytes, "little"), dtype=np.uint8)
    return np.unpackbits(raw, bitorder="little")[:size].copy()


@dataclass(eq=False)
class ThresholdFunction:
    """``x -> [<w, x> - b > 0]`` on 0/1 vertices of the ``dim``-cube."""

    weights: np.ndarray
    bias: float
    _table: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.weights = np.array(self.weights, dtype=float).ravel()
        self.bias = float(self.bias)

    @property
    def dim(self) -> int:
        return self.weights.shape[0]

    @property
    def table(self) -> np.ndarray:
        if self._table is None:
            if self.dim > 24:
                raise ValueError("truth tables are only materialised up to dimension 24")
            self._table = self(vertex_matrix(self.dim))
            self._table.setflags(write=False)
        return self._table

    def margins(self, X) -> np.ndarray:
        return np.asarray(X, dtype=float) @ self.weights - self.bias

    def __call__(self, X) -> np.ndarray:
        return (self.margins(X) > 0).astype(np.uint8)

    def min_margin(self) -> float:
        return float(np.abs(self.margins(vertex_matrix(self.dim))).min())

    def rescaled(self) -> "ThresholdFunction":
        """Same function with minimum vertex margin exactly 1."""
        m = self.min_margin()
        if m <= 0:
            raise ValueError("a vertex lies on the separating plane")
        w, b = self.weights / m, self.bias / m
        # LP certificates carry round-off; snap it away when the margins allow
        small = np.abs(w) < 1e-9
        if small.any():
            clean = ThresholdFunction(np.where(small, 0.0, w), 0.0 if abs(b) < 1e-9 else b)
            mc = clean.min_margin()
            if mc > 0 and np.array_equal(clean.table, self.table):
                return ThresholdFunction(clean.weights / mc, clean.bias / mc)
        return ThresholdFunction(w, b)

    def extruded(self, dim: int) -> "ThresholdFunction":
        """Append ignored variables up to ``dim``."""
        if dim < self.dim:
            raise ValueError("cannot extrude to a smaller dimension")
        if dim == self.dim:
            return self
        return ThresholdFunction(np.concatenate([self.weights, np.zeros(dim - self.dim)]), self.bias)

    def same_function(self, other: "ThresholdFunction") -> bool:
        return self.dim == other.dim and np.array_equal(self.table, other.table)

    def to_dict(self) -> dict:
        return {"weights": self.weights.tolist(), "bias": self.bias}

    @classmethod
    def from_dict(cls, d: dict) -> "ThresholdFunction":
        return cls(d["weights"], d["bias"])


def and_function(dim: int, i: int, j: int, negate=(False, False)) -> ThresholdFunction:
    """AND of two (possibly negated) literals, margin 1."""
    if not (0 <= i < dim and 0 <= j < dim and i != j):
        raise ValueError("bad AND indices")
    w = np.zeros(dim)
    b = 3.0
    for k, neg in ((i, negate[0]), (j, negate[1])):
        if neg:
            w[k] = -2.0
            b -= 2.0
        else:
            w[k] = 2.0
    return ThresholdFunction(w, b)


def constant_function(dim: int, value: int = 0) -> ThresholdFunction:
    return ThresholdFunction(np.zeros(dim), -1.0 if value else 1.0)


def and_pairs(dim: int) -> list[ThresholdFunction]:
    """Plain ANDs ``x_i & x_j`` for all ``i < j``."""
    return [and_function(dim, i, j) for i in range(dim) for j in range(i + 1, dim)]


@dataclass
class AuxiliaryFunction:
    """Ordered threshold components evaluated sequentially.

    Component ``k`` (0-based) reads the ``base_dim`` base spins followed by
    the ``k`` earlier auxiliary bits.
    """

    base_dim: int
    components: list[ThresholdFunction] = field(default_factory=list)

    def __post_init__(self):
        comps = []
        for k, t in enumerate(self.components):
            need = self.base_dim + k
            if t.dim > need:
                raise ValueError(f"component {k} has dimension {t.dim} > {need}")
            comps.append(t.extruded(need))
        self.components = comps

    def __len__(self):
        return len(self.components)

    def __iter__(self):
        return iter(self.components)

    def evaluate_bits(self, X: np.ndarray) -> np.ndarray:
        """Auxiliary bits (rows x A) for 0/1 base-spin rows ``X``."""
        X = np.asarray(X, dtype=float)
        if X.shape[1] != self.base_dim:
            raise ValueError(f"expected {self.base_dim} base spins, got {X.shape[1]}")
        out = np.zeros((X.shape[0], len(self)), dtype=np.uint8)
        Z = X
        for k, t in enumerate(self.components):
            out[:, k] = t(Z)
            Z = np.hstack([Z, out[:, k : k + 1].astype(float)])
        return out

    def evaluate_words(self, words: np.ndarray) -> np.ndarray:
        """Packed auxiliary words for packed base-spin words."""
        bits = self.evaluate_bits(unpack_bits(words, self.base_dim))
        if not len(self):
            return np.zeros(len(bits), dtype=np.int64)
        return bits.astype(np.int64) @ (np.int64(1) << np.arange(len(self), dtype=np.int64))

    def value_matrix(self) -> np.ndarray:
        """Auxiliary bits at every base point, shape ``(2^base_dim, A)``."""
        return self.evaluate_bits(vertex_matrix(self.base_dim))

    def appended(self, t: ThresholdFunction) -> "AuxiliaryFunction":
        return AuxiliaryFunction(self.base_dim, [*self.components, t])

    def replaced(self, j: int, t: ThresholdFunction) -> "AuxiliaryFunction":
        if not 0 <= j < len(self):
            raise IndexError(j)
        comps = list(self.components)
        comps[j] = t
        return AuxiliaryFunction(self.base_dim, comps)

    def suppressed(self, j: int) -> "AuxiliaryFunction":
        """Component ``j`` replaced by the constant-0 function."""
        return self.replaced(j, constant_function(self.base_dim + j))

    def to_dict(self) -> dict:
        return {"base_dim": self.base_dim, "components": [t.to_dict() for t in self.components]}

    @classmethod
    def from_dict(cls, d: dict) -> "AuxiliaryFunction":
        return cls(int(d["base_dim"]), [ThresholdFunction.from_dict(c) for c in d["components"]])

    @classmethod
    def glue(cls, g1: "AuxiliaryFunction", g2: "AuxiliaryFunction") -> "AuxiliaryFunction":
        """Product ``g1 x g2``; ``g2``'s components keep reading base spins only
        up to their own position, shifted past ``g1``'s bits.
        """
        if g1.base_dim != g2.base_dim:
            raise ValueError("auxiliary functions must share the base circuit")
        shifted = []
        n1 = len(g1)
        for k, t in enumerate(g2.components):
            w = t.weights
            base, aux = w[: g1.base_dim], w[g1.base_dim :]
            if aux.size and np.any(aux):
                new = np.concatenate([base, np.zeros(n1), aux])
            else:
                new = base
            shifted.append(ThresholdFunction(new, t.bias))
        return cls(g1.base_dim, [*g1.components, *shifted])


def as_auxiliary(base_dim: int, components: Sequence[ThresholdFunction] | AuxiliaryFunction | None):
    if components is None:
        return AuxiliaryFunction(base_dim)
    if isinstance(components, AuxiliaryFunction):
        if components.base_dim != base_dim:
            raise ValueError(
                f"auxiliary function is defined on {components.base_dim} spins, circuit has {base_dim}"
            )
        return components
    return AuxiliaryFunction(base_dim, list(components))
