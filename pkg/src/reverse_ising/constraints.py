"""Sign constraint matrices for weak, augmented and local constraint sets.

Every row is half the difference ``v(wrong) - v(correct)`` of two virtual
spins (PlusMinus), so entries are in ``{-1, 0, +1}``.  Columns follow the
virtual-spin order with the pure-input columns removed: linear terms for
spins ``N..n-1`` first, then pairs ``(i, j)``, ``i < j``, lexicographically,
skipping pairs with both ``i, j < N``.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from math import comb

import numpy as np
import scipy.sparse as sp

from .functions import AuxiliaryFunction, as_auxiliary
from .spincore import Circuit, pair_indices, popcount, unpack_bits


@functools.lru_cache(maxsize=64)
def column_layout(n_in: int, n_spins: int) -> tuple[np.ndarray, np.ndarray]:
    """``(col_i, col_j)`` for each column; ``col_j == -1`` marks a linear term."""
    lin = np.arange(n_in, n_spins)
    i, j = pair_indices(n_spins)
    keep = j >= n_in
    col_i = np.concatenate([lin, i[keep]])
    col_j = np.concatenate([np.full(lin.shape, -1), j[keep]])
    col_i.setflags(write=False)
    col_j.setflags(write=False)
    return col_i, col_j


def n_columns(n_in: int, n_out: int, n_aux: int) -> int:
    n = n_in + n_out + n_aux
    return n_out + n_aux + comb(n, 2) - comb(n_in, 2)


@dataclass(eq=False)
class ConstraintMatrix:
    """CSC sign matrix with per-row ``(sigma, omega)`` provenance."""

    csc: sp.csc_matrix
    provenance: np.ndarray
    n_in: int
    n_out: int
    n_aux: int
    _dense: np.ndarray | None = field(default=None, repr=False)

    @property
    def n_rows(self) -> int:
        return self.csc.shape[0]

    @property
    def n_cols(self) -> int:
        return self.csc.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.csc.shape

    @property
    def indptr(self) -> np.ndarray:
        return self.csc.indptr

    @property
    def indices(self) -> np.ndarray:
        return self.csc.indices

    @property
    def data(self) -> np.ndarray:
        return self.csc.data

    @property
    def column_map(self) -> list:
        col_i, col_j = column_layout(self.n_in, self.n_in + self.n_out + self.n_aux)
        return [int(a) if b < 0 else (int(a), int(b)) for a, b in zip(col_i, col_j)]

    def dense(self) -> np.ndarray:
        """Float64 dense copy, cached."""
        if self._dense is None:
            self._dense = self.csc.toarray().astype(np.float64)
            self._dense.setflags(write=False)
        return self._dense

    def row_keys(self) -> set[tuple[int, int]]:
        return {(int(s), int(w)) for s, w in self.provenance}

    def sparsity(self) -> float:
        """Fraction of zero entries."""
        return 1.0 - self.csc.nnz / max(1, self.n_rows * self.n_cols)

    def to_coo_text(self) -> str:
        coo = self.csc.tocoo()
        order = np.lexsort((coo.col, coo.row))
        lines = [f"{self.n_rows} {self.n_cols} {coo.nnz}"]
        lines += [f"{r} {c} {v}" for r, c, v in zip(coo.row[order], coo.col[order], coo.data[order])]
        return "\n".join(lines) + "\n"

    def hamiltonian_vector(self, u: np.ndarray) -> np.ndarray:
        """Expand a column-space vector to a full virtual-spin coefficient vector."""
        n = self.n_in + self.n_out + self.n_aux
        col_i, col_j = column_layout(self.n_in, n)
        i, j = pair_indices(n)
        full = np.zeros(n + i.shape[0])
        lin = col_j < 0
        full[col_i[lin]] = u[lin]
        # pair (a, b) sits at offset n + position in the triu ordering
        pos = {(int(a), int(b)): n + k for k, (a, b) in enumerate(zip(i, j))}
        for k in np.flatnonzero(~lin):
            full[pos[(int(col_i[k]), int(col_j[k]))]] = u[k]
        return full


def _difference_rows(wrong: np.ndarray, right: np.ndarray, n_in: int, n: int) -> np.ndarray:
    """Halved virtual-spin differences as a dense int8 array."""
    sw = (2 * unpack_bits(wrong, n).astype(np.int8) - 1).astype(np.int8)
    sr = (2 * unpack_bits(right, n).astype(np.int8) - 1).astype(np.int8)
    col_i, col_j = column_layout(n_in, n)
    lin = col_j < 0
    out = np.empty((wrong.shape[0], col_i.shape[0]), dtype=np.int8)
    li = col_i[lin]
    out[:, lin] = (sw[:, li] - sr[:, li]) // 2
    pi, pj = col_i[~lin], col_j[~lin]
    out[:, ~lin] = (sw[:, pi] * sw[:, pj] - sr[:, pi] * sr[:, pj]) // 2
    return out


def _assemble(c: Circuit, sigma, omega, wrong_aux, right_aux, n_aux) -> ConstraintMatrix:
    N, M = c.n_in, c.n_out
    n = N + M + n_aux
    wrong = sigma | (omega << N) | (wrong_aux << (N + M))
    right = sigma | (c.table[sigma] << N) | (right_aux << (N + M))
    dense = _difference_rows(wrong, right, N, n)
    prov = np.stack([sigma, omega], axis=1)
    prov.setflags(write=False)
    return ConstraintMatrix(sp.csc_matrix(dense), prov, N, M, n_aux)


def _wrong_pairs(c: Circuit, radius: int | None = None):
    """``(sigma, omega)`` with ``omega != f(sigma)``; sorted by (radius,) sigma, omega."""
    N, M = c.n_in, c.n_out
    sigma = np.repeat(np.arange(1 << N, dtype=np.int64), 1 << M)
    omega = np.tile(np.arange(1 << M, dtype=np.int64), 1 << N)
    dist = popcount(omega ^ c.table[sigma])
    if radius is None:
        keep = dist > 0
        return sigma[keep], omega[keep]
    keep = (dist > 0) & (dist <= radius)
    sigma, omega, dist = sigma[keep], omega[keep], dist[keep]
    order = np.argsort(dist, kind="stable")
    return sigma[order], omega[order]


def build_augmented(c: Circuit, g: AuxiliaryFunction | None = None) -> ConstraintMatrix:
    """The ``g``-augmented constraints: ``2^N (2^M - 1)`` rows."""
    return build_local(c, g, None)


def build_local(c: Circuit, g: AuxiliaryFunction | None, radius: int | None) -> ConstraintMatrix:
    """Rows whose wrong output lies within Hamming ``radius`` of the correct one.

    ``radius=None`` gives the full augmented matrix.
    """
    if radius is not None and not 1 <= radius <= c.n_out:
        raise ValueError(f"radius must be in [1, {c.n_out}], got {radius}")
    g = as_auxiliary(c.n_spins, g)
    sigma, omega = _wrong_pairs(c, radius)
    A = len(g)
    if A:
        aux_w = g.evaluate_words(sigma | (omega << c.n_in))
        aux_r = g.evaluate_words(c.graph_words())[sigma]
    else:
        aux_w = aux_r = np.zeros_like(sigma)
    return _assemble(c, sigma, omega, aux_w, aux_r, A)


def build_full(c: Circuit, g_in, n_aux: int) -> ConstraintMatrix:
    """All weak constraints for an input-only auxiliary map.

    ``g_in`` is a length-``2^N`` array of packed auxiliary words (or a
    callable on the input index).  Row count is ``2^N (2^(M+A) - 2^A)``.
    """
    if n_aux > 12:
        raise ValueError("build_full is limited to 12 auxiliaries")
    N, M = c.n_in, c.n_out
    if callable(g_in):
        g_in = [g_in(s) for s in range(1 << N)]
    g_in = np.asarray(g_in, dtype=np.int64).ravel()
    if g_in.shape[0] != 1 << N:
        raise ValueError(f"g_in must have 2^{N} entries")
    if np.any((g_in < 0) | (g_in >= 1 << n_aux)):
        raise ValueError(f"g_in entries must fit in {n_aux} bits")
    s0, w0 = _wrong_pairs(c)
    reps = 1 << n_aux
    sigma = np.repeat(s0, reps)
    omega = np.repeat(w0, reps)
    eta = np.tile(np.arange(reps, dtype=np.int64), s0.shape[0])
    return _assemble(c, sigma, omega, eta, g_in[sigma], n_aux)


def local_row_count(c: Circuit, radius: int) -> int:
    return (1 << c.n_in) * sum(comb(c.n_out, k) for k in range(1, radius + 1))
