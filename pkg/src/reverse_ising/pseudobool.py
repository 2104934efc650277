"""Pseudo-Boolean polynomials, quadratic Hamiltonians and quadratization."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .spincore import Circuit, Convention, SpinState, pair_indices, parity_circuit, popcount, unpack_bits

ZERO_ONE = Convention.ZERO_ONE
PLUS_MINUS = Convention.PLUS_MINUS


@dataclass
class MultilinearPolynomial:
    """Sparse multilinear polynomial; keys are monomial bitmasks."""

    terms: dict[int, float]
    n_vars: int
    convention: Convention = ZERO_ONE

    def __post_init__(self):
        limit = 1 << self.n_vars
        for mask in self.terms:
            if not 0 <= mask < limit:
                raise ValueError(f"monomial {mask:#x} exceeds {self.n_vars} variables")

    @property
    def degree(self) -> int:
        return max((m.bit_count() for m, c in self.terms.items() if c != 0), default=0)

    def evaluate(self, s) -> float:
        bits = s.bits if isinstance(s, SpinState) else int(s)
        if isinstance(s, SpinState) and s.convention is not self.convention:
            raise ValueError("convention mismatch")
        total = 0.0
        for mask, c in self.terms.items():
            if self.convention is ZERO_ONE:
                if bits & mask == mask:
                    total += c
            else:
                # product of +-1 values: -1 for each zero bit inside the mask
                total += -c if (mask & ~bits).bit_count() & 1 else c
        return total

    def evaluate_all(self) -> np.ndarray:
        """Values at every point of the cube, indexed by packed state."""
        words = np.arange(1 << self.n_vars, dtype=np.int64)
        out = np.zeros(words.shape[0])
        for mask, c in self.terms.items():
            if self.convention is ZERO_ONE:
                out += c * ((words & mask) == mask)
            else:
                out += c * (1 - 2 * (popcount(mask & ~words) & 1))
        return out

    def pruned(self, tol: float = 0.0) -> "MultilinearPolynomial":
        return MultilinearPolynomial(
            {m: c for m, c in self.terms.items() if abs(c) > tol}, self.n_vars, self.convention
        )

    def to_text(self) -> str:
        return "".join(f"{m:x} {c!r}\n" for m, c in sorted(self.terms.items()))

    @classmethod
    def from_text(cls, text: str, n_vars: int | None = None) -> "MultilinearPolynomial":
        terms: dict[int, float] = {}
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            mask_hex, coef = line.split()
            mask = int(mask_hex, 16)
            terms[mask] = terms.get(mask, 0.0) + float(coef)
        if n_vars is None:
            n_vars = max((m.bit_length() for m in terms), default=0)
        return cls(terms, n_vars)


@dataclass
class QuadraticHamiltonian:
    """``H(s) = sum_i h_i s_i + sum_{i<j} J_ij s_i s_j + constant``.

    ``J`` is stored dense and strictly upper triangular.
    """

    h: np.ndarray
    J: np.ndarray
    constant: float = 0.0
    convention: Convention = PLUS_MINUS
    _pairs: tuple = field(init=False, repr=False)

    def __post_init__(self):
        self.h = np.array(self.h, dtype=float).ravel()
        n = self.h.shape[0]
        J = np.zeros((n, n)) if self.J is None else np.array(self.J, dtype=float)
        if J.shape != (n, n):
            raise ValueError(f"J must be {n}x{n}")
        if np.any(np.tril(J) != 0):
            raise ValueError("J must be strictly upper triangular")
        self.J = J
        self.constant = float(self.constant)
        self._pairs = pair_indices(n)

    @property
    def n(self) -> int:
        return self.h.shape[0]

    @classmethod
    def zeros(cls, n: int, convention: Convention = PLUS_MINUS) -> "QuadraticHamiltonian":
        return cls(np.zeros(n), np.zeros((n, n)), 0.0, convention)

    @classmethod
    def from_vector(cls, u, n: int, constant: float = 0.0, convention: Convention = PLUS_MINUS):
        """Inverse of :meth:`coefficient_vector` (linear terms, then pairs)."""
        u = np.asarray(u, dtype=float)
        i, j = pair_indices(n)
        if u.shape[0] != n + i.shape[0]:
            raise ValueError("coefficient vector has the wrong length")
        J = np.zeros((n, n))
        J[i, j] = u[n:]
        return cls(u[:n].copy(), J, constant, convention)

    def coefficient_vector(self) -> np.ndarray:
        i, j = self._pairs
        return np.concatenate([self.h, self.J[i, j]])

    def energies(self, words: np.ndarray) -> np.ndarray:
        """Energies of packed states from the coefficient form, vectorised."""
        x = unpack_bits(np.asarray(words, dtype=np.int64), self.n).astype(float)
        if self.convention is PLUS_MINUS:
            x = 2 * x - 1
        return x @ self.h + np.einsum("ki,ij,kj->k", x, self.J, x) + self.constant

    def evaluate(self, s) -> float:
        if isinstance(s, SpinState):
            if s.convention is not self.convention:
                raise ValueError("convention mismatch")
            if s.n != self.n:
                raise ValueError("state has the wrong length")
            s = s.bits
        return float(self.energies(np.array([s]))[0])

    def evaluate_inner(self, s: SpinState) -> float:
        """Energy as the inner product with the virtual spin (plus constant)."""
        from .spincore import virtual_spin

        if self.convention is not PLUS_MINUS:
            raise ValueError("inner-product form needs the PlusMinus convention")
        return float(self.coefficient_vector() @ virtual_spin(s)) + self.constant

    def __add__(self, other: "QuadraticHamiltonian") -> "QuadraticHamiltonian":
        if other.n != self.n or other.convention is not self.convention:
            raise ValueError("Hamiltonians must share size and convention")
        return QuadraticHamiltonian(
            self.h + other.h, self.J + other.J, self.constant + other.constant, self.convention
        )

    def scaled(self, factor: float) -> "QuadraticHamiltonian":
        return QuadraticHamiltonian(
            factor * self.h, factor * self.J, factor * self.constant, self.convention
        )

    def padded(self, n: int) -> "QuadraticHamiltonian":
        """Embed into ``n >= self.n`` spins; new spins carry no terms."""
        if n < self.n:
            raise ValueError("cannot shrink a Hamiltonian")
        h = np.zeros(n)
        h[: self.n] = self.h
        J = np.zeros((n, n))
        J[: self.n, : self.n] = self.J
        return QuadraticHamiltonian(h, J, self.constant, self.convention)

    def converted(self, convention: Convention) -> "QuadraticHamiltonian":
        return convert_convention(self, convention)

    def to_polynomial(self) -> MultilinearPolynomial:
        terms: dict[int, float] = {}
        if self.constant:
            terms[0] = self.constant
        for k, v in enumerate(self.h):
            if v:
                terms[1 << k] = float(v)
        i, j = self._pairs
        for a, b in zip(i, j):
            if self.J[a, b]:
                terms[(1 << a) | (1 << b)] = float(self.J[a, b])
        return MultilinearPolynomial(terms, self.n, self.convention)

    @classmethod
    def from_polynomial(cls, p: MultilinearPolynomial) -> "QuadraticHamiltonian":
        if p.degree > 2:
            raise ValueError(f"polynomial has degree {p.degree} > 2")
        H = cls.zeros(p.n_vars, p.convention)
        for mask, c in p.terms.items():
            idx = [k for k in range(p.n_vars) if mask >> k & 1]
            if not idx:
                H.constant += c
            elif len(idx) == 1:
                H.h[idx[0]] += c
            else:
                H.J[idx[0], idx[1]] += c
        return H

    def to_dict(self) -> dict:
        i, j = self._pairs
        return {
            "convention": self.convention.value,
            "n": self.n,
            "h": self.h.tolist(),
            "J": [[int(a), int(b), float(self.J[a, b])] for a, b in zip(i, j) if self.J[a, b]],
            "constant": self.constant,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "QuadraticHamiltonian":
        n = int(d["n"])
        J = np.zeros((n, n))
        for a, b, v in d["J"]:
            J[int(a), int(b)] = v
        return cls(d["h"], J, d.get("constant", 0.0), Convention(d["convention"]))


def evaluate(p, s) -> float:
    """Value of a polynomial or Hamiltonian at a state of matching convention."""
    return p.evaluate(s)


def fit_multilinear(values) -> MultilinearPolynomial:
    """Multilinear (ZeroOne) polynomial through ``values`` via the Moebius transform."""
    values = np.asarray(values, dtype=float)
    size = values.shape[0]
    if size == 0 or size & (size - 1):
        raise ValueError(f"length {size} is not a power of two")
    n = size.bit_length() - 1
    if n > 20:
        raise ValueError("at most 20 variables are supported")
    a = values.copy()
    for i in range(n):
        # axis i of the reshaped array is bit i of the index
        view = a.reshape((-1, 2, 1 << i))
        view[:, 1, :] -= view[:, 0, :]
    terms = {int(m): float(c) for m, c in enumerate(a) if c != 0}
    return MultilinearPolynomial(terms, n)


def hamming_hamiltonian(c: Circuit) -> MultilinearPolynomial:
    """Polynomial on ``N+M`` variables equal to ``d(eta, f(sigma))``."""
    n = c.n_spins
    if n > 20:
        raise ValueError("hamming_hamiltonian supports at most 20 spins")
    words = np.arange(1 << n, dtype=np.int64)
    sigma = words & ((1 << c.n_in) - 1)
    eta = words >> c.n_in
    return fit_multilinear(popcount(eta ^ c.table[sigma]))


def rosenberg_penalty(x: int, y: int, a: int, n_vars: int, weight: float = 1.0) -> MultilinearPolynomial:
    """``weight * (xy - 2ax - 2ay + 3a)`` over ``n_vars`` variables."""
    bx, by, ba = 1 << x, 1 << y, 1 << a
    terms = {bx | by: weight, ba | bx: -2 * weight, ba | by: -2 * weight, ba: 3 * weight}
    return MultilinearPolynomial(terms, n_vars)


def rosenberg_reduce(p: MultilinearPolynomial) -> tuple[MultilinearPolynomial, list[tuple[int, int, int]]]:
    """Quadratize ``p`` by repeated Rosenberg substitution.

    Each round replaces the variable pair that occurs in the most monomials
    of degree >= 3 (ties: smallest pair) by a fresh auxiliary ``a`` and adds
    ``C (xy - 2ax - 2ay + 3a)`` with ``C = 1 + sum |coefficients|``.
    Returns the quadratic polynomial and the ``(i, j, aux)`` substitutions.
    """
    if p.convention is not ZERO_ONE:
        raise ValueError("Rosenberg reduction works in the ZeroOne convention")
    terms = {m: c for m, c in p.terms.items() if c != 0}
    n = p.n_vars
    subs: list[tuple[int, int, int]] = []
    while True:
        counts: Counter = Counter()
        for mask in terms:
            if mask.bit_count() >= 3:
                idx = [k for k in range(n) if mask >> k & 1]
                counts.update(combinations(idx, 2))
        if not counts:
            break
        best = max(counts.values())
        i, j = min(pair for pair, cnt in counts.items() if cnt == best)
        C = 1.0 + sum(abs(c) for c in terms.values())
        a = n
        n += 1
        pair_mask = (1 << i) | (1 << j)
        new_terms: dict[int, float] = {}
        for mask, c in terms.items():
            if mask.bit_count() >= 3 and mask & pair_mask == pair_mask:
                mask = (mask & ~pair_mask) | (1 << a)
            new_terms[mask] = new_terms.get(mask, 0.0) + c
        for mask, c in rosenberg_penalty(i, j, a, n, C).terms.items():
            new_terms[mask] = new_terms.get(mask, 0.0) + c
        terms = {m: c for m, c in new_terms.items() if c != 0}
        subs.append((i, j, a))
    return MultilinearPolynomial(terms, n), subs


def squared_linear_form(coeffs, offset: float) -> QuadraticHamiltonian:
    """ZeroOne Hamiltonian equal to ``(sum_i c_i z_i + offset)^2``."""
    c = np.asarray(coeffs, dtype=float)
    n = c.shape[0]
    J = np.triu(2 * np.outer(c, c), k=1)
    return QuadraticHamiltonian(c * c + 2 * offset * c, J, offset * offset, ZERO_ONE)


@dataclass
class ParityQuadratization:
    hamiltonian: QuadraticHamiltonian
    n_inputs: int
    n_aux: int
    aux_sign: int
    offset: float
    gap: float


def _parity_candidates(n: int):
    ell = max(math.ceil(math.log2(n + 1)) - 1, 0)
    cap = math.ceil(math.log2(n + 2))
    parity = n % 2
    for delta in (0, 1, 2):
        k = ell + delta
        if k > cap:
            break
        top = 2 ** (k + 1)
        offsets = []
        for off in (top - parity, -parity, top, 0, -top, top - 2, -(top - 2)):
            if off not in offsets:
                offsets.append(off)
        for sign in (-1, 1):
            for off in offsets:
                yield k, sign, off


def parity_quadratization(n: int) -> ParityQuadratization:
    """Squared-linear-form Hamiltonian realising ``parity(n)``.

    Spins: inputs ``0..n-1``, output ``n``, auxiliaries ``n+1..``.  The form
    ``(sum x + y + sign * sum_{i=1..k} 2^i a_i + offset)^2`` is scanned over a
    small family around ``k = ceil(log2(n+1)) - 1`` and the first member that
    passes exhaustive verification is returned.
    """
    from .oracle import verify_hamiltonian

    if not 2 <= n <= 8:
        raise ValueError("parity_quadratization supports 2 <= n <= 8")
    circuit = parity_circuit(n)
    for k, sign, off in _parity_candidates(n):
        coeffs = [1.0] * (n + 1) + [sign * 2.0**i for i in range(1, k + 1)]
        H = squared_linear_form(coeffs, off)
        result = verify_hamiltonian(circuit, H, k)
        if result.passed:
            return ParityQuadratization(H, n, k, sign, float(off), result.gap)
    raise RuntimeError(f"no member of the parity family verifies for n={n}")


def convert_convention(H: QuadraticHamiltonian, convention: Convention | None = None) -> QuadraticHamiltonian:
    """Rewrite ``H`` under the affine change of variables ``s = 2x - 1``.

    With no target given the convention is toggled.
    """
    target = convention or (PLUS_MINUS if H.convention is ZERO_ONE else ZERO_ONE)
    if target is H.convention:
        return QuadraticHamiltonian(H.h.copy(), H.J.copy(), H.constant, H.convention)
    Jsym = H.J + H.J.T
    if H.convention is ZERO_ONE:
        # x = (s + 1) / 2
        h = H.h / 2 + Jsym.sum(axis=1) / 4
        J = H.J / 4
        const = H.constant + H.h.sum() / 2 + H.J.sum() / 4
    else:
        # s = 2x - 1
        h = 2 * H.h - 2 * Jsym.sum(axis=1)
        J = 4 * H.J
        const = H.constant - H.h.sum() + H.J.sum()
    return QuadraticHamiltonian(h, J, const, target)
