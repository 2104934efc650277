"""Artificial-variable LP: ``min ||rho||_1  s.t.  B u + rho >= v, rho >= 0``.

The problem is treated as the dual of a standard-form LP with

    b = [0; -1],   c = [-v; 0],   A^T = [[-B, -I], [0, -I]],

so ``lambda = (u, rho)``.  Every linear system met by the predictor-corrector
iteration has the form ``(A K A^T) p = q`` with ``K`` diagonal; it is reduced
by a block factorisation to a dense ``n x n`` system in
``Omega = B^T (D - D^2 Z^-1) B`` with ``D = K1`` and ``Z = K1 + K2``.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from dataclasses import replace as _replace

import numpy as np
import scipy.linalg as sla

logger = logging.getLogger(__name__)


class LPStatus(enum.Enum):
    OPTIMAL = "Optimal"
    ITERATION_LIMIT = "IterationLimit"
    NUMERICAL_FAILURE = "NumericalFailure"


class FactorizationError(np.linalg.LinAlgError):
    """Omega could not be factored even after jitter escalation."""


REFERENCE_MAX_ROWS = 200_000
REFERENCE_MAX_COLS = 2_000


@dataclass
class LPOptions:
    tol: float = 1e-9
    residual_tol: float = 1e-8
    gap_abs: float = 1e-8
    gap_rel: float = 1e-12
    max_iter: int = 200
    jitter_start: float = 1e-12
    jitter_max: float = 1e-6
    assembly: str = "dense"  # or "plan"
    reduce_columns: bool = True


@dataclass
class LPResult:
    objective: float
    u: np.ndarray
    rho: np.ndarray
    status: LPStatus
    iterations: int
    residuals: tuple[float, float, float] = (0.0, 0.0, 0.0)

    @property
    def optimal(self) -> bool:
        return self.status is LPStatus.OPTIMAL


@dataclass
class LPInstance:
    B: object
    rhs: np.ndarray | None = None

    def __post_init__(self):
        m, n = self.B.shape
        if m < 1 or n < 1:
            raise ValueError("constraint matrix must be non-empty")
        self.rhs = np.ones(m) if self.rhs is None else np.asarray(self.rhs, dtype=float).ravel()
        if self.rhs.shape[0] != m:
            raise ValueError("rhs length must equal the number of rows")

    @property
    def matrix(self) -> np.ndarray:
        return as_dense(self.B)


def as_dense(B) -> np.ndarray:
    if hasattr(B, "dense"):
        return B.dense()
    if hasattr(B, "toarray"):
        return B.toarray().astype(float)
    return np.asarray(B, dtype=float)


@dataclass
class ColumnPairPlan:
    """For each column pair ``i <= j``: rows where both are nonzero and the
    products of the two entries there, flattened into shared arrays.
    """

    n: int
    pair_i: np.ndarray
    pair_j: np.ndarray
    pair_id: np.ndarray  # pair index for every stored (row, sign) entry
    rows: np.ndarray
    signs: np.ndarray
    offsets: np.ndarray = field(repr=False)

    @classmethod
    def from_matrix(cls, B, max_entries: int = 50_000_000) -> "ColumnPairPlan":
        D = as_dense(B)
        m, n = D.shape
        nz = D != 0
        per_row = nz.sum(axis=1)
        total = int((per_row * (per_row + 1) // 2).sum())
        if total > max_entries:
            raise MemoryError(f"column-pair plan needs {total} entries (limit {max_entries})")
        col_rows = [np.flatnonzero(nz[:, i]) for i in range(n)]
        pi, pj, ids, rows, signs, offsets = [], [], [], [], [], [0]
        k = 0
        for i in range(n):
            ri = col_rows[i]
            sub = D[ri]
            for j in range(i, n):
                hit = sub[:, j] != 0
                r = ri[hit]
                pi.append(i)
                pj.append(j)
                rows.append(r)
                signs.append((D[r, i] * D[r, j]).astype(np.int8))
                ids.append(np.full(r.shape[0], k, dtype=np.int32))
                offsets.append(offsets[-1] + r.shape[0])
                k += 1
        return cls(
            n,
            np.array(pi),
            np.array(pj),
            np.concatenate(ids) if ids else np.zeros(0, np.int32),
            np.concatenate(rows).astype(np.int64) if rows else np.zeros(0, np.int64),
            np.concatenate(signs) if signs else np.zeros(0, np.int8),
            np.array(offsets),
        )

    def segment(self, i: int, j: int) -> tuple[np.ndarray, np.ndarray]:
        """``(R_ij, S_ij)`` for ``i <= j``."""
        if i > j:
            i, j = j, i
        k = i * self.n - i * (i - 1) // 2 + (j - i)
        a, b = self.offsets[k], self.offsets[k + 1]
        return self.rows[a:b], self.signs[a:b]

    def weighted_gram(self, d: np.ndarray) -> np.ndarray:
        """``B^T diag(d) B`` from the precomputed pair lists."""
        vals = np.bincount(self.pair_id, weights=self.signs * d[self.rows], minlength=self.pair_i.shape[0])
        G = np.zeros((self.n, self.n))
        G[self.pair_i, self.pair_j] = vals
        G[self.pair_j, self.pair_i] = vals
        return G


def weighted_gram(B: np.ndarray, d: np.ndarray, plan: ColumnPairPlan | None = None) -> np.ndarray:
    if plan is not None:
        return plan.weighted_gram(d)
    return B.T @ (B * d[:, None])


class NormalEquations:
    """Factored ``A K A^T`` for fixed diagonals ``k1, k2``; reusable for many
    right-hand sides.
    """

    def __init__(self, B: np.ndarray, k1, k2, plan=None, opts: LPOptions | None = None):
        opts = opts or LPOptions()
        self.B = B
        self.d = np.asarray(k1, dtype=float)
        self.z = self.d + np.asarray(k2, dtype=float)
        if np.any(self.d <= 0) or np.any(self.z <= 0) or not np.all(np.isfinite(self.z)):
            raise ValueError("k1 and k2 must be strictly positive and finite")
        weights = self.d * np.asarray(k2, dtype=float) / self.z  # = D - D^2 Z^-1
        omega = weighted_gram(B, weights, plan)
        self.jitter = 0.0
        self.factor = self._factor(omega, opts)

    @staticmethod
    def _factor(omega: np.ndarray, opts: LPOptions):
        scale = max(1.0, float(np.max(np.abs(np.diag(omega)), initial=0.0)))
        jitter = 0.0
        eye = np.eye(omega.shape[0])
        while True:
            try:
                factor = sla.cho_factor(omega + jitter * scale * eye, lower=False, check_finite=True)
                if np.all(np.isfinite(factor[0])):
                    return factor
            except (np.linalg.LinAlgError, ValueError):
                pass
            jitter = opts.jitter_start if jitter == 0.0 else jitter * 10
            if jitter > opts.jitter_max * (1 + 1e-9):
                raise FactorizationError("Omega is not positive definite after jitter escalation")

    def solve(self, q1: np.ndarray, q2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        B, d, z = self.B, self.d, self.z
        p1 = sla.cho_solve(self.factor, q1 - B.T @ (d / z * q2))
        p2 = (q2 - d * (B @ p1)) / z
        return p1, p2


def solve_normal_equations(plan, B, k1, k2, q, opts: LPOptions | None = None) -> np.ndarray:
    """Solve ``(A K A^T) p = q`` with the two-step block recipe.

    ``q`` has length ``n + m``; ``plan`` may be ``None`` (dense assembly).
    """
    Bd = as_dense(B)
    n = Bd.shape[1]
    q = np.asarray(q, dtype=float)
    ne = NormalEquations(Bd, k1, k2, plan, opts)
    p1, p2 = ne.solve(q[:n], q[n:])
    return np.concatenate([p1, p2])


def assemble_akat(B, k1, k2) -> np.ndarray:
    """Dense ``A K A^T``; test oracle for the block recipe."""
    Bd = as_dense(B)
    k1 = np.asarray(k1, dtype=float)
    k2 = np.asarray(k2, dtype=float)
    top = np.hstack([Bd.T @ (k1[:, None] * Bd), Bd.T * k1])
    bottom = np.hstack([k1[:, None] * Bd, np.diag(k1 + k2)])
    return np.vstack([top, bottom])


# Operators for A = [[-B^T, 0], [-I, -I]] acting on length-2m vectors and
# A^T acting on length-(n+m) vectors.


def _A(B, y):
    m = B.shape[0]
    y1, y2 = y[:m], y[m:]
    return np.concatenate([-(B.T @ y1), -y1 - y2])


def _AT(B, lam):
    n = B.shape[1]
    l1, l2 = lam[:n], lam[n:]
    return np.concatenate([-(B @ l1) - l2, -l2])


@dataclass
class IPMState:
    B: np.ndarray
    v: np.ndarray
    x: np.ndarray
    lam: np.ndarray
    s: np.ndarray

    @property
    def b(self) -> np.ndarray:
        n, m = self.B.shape[1], self.B.shape[0]
        return np.concatenate([np.zeros(n), -np.ones(m)])

    @property
    def c(self) -> np.ndarray:
        return np.concatenate([-self.v, np.zeros(self.B.shape[0])])

    def residuals(self) -> tuple[np.ndarray, np.ndarray]:
        rb = _A(self.B, self.x) - self.b
        rc = _AT(self.B, self.lam) + self.s - self.c
        return rb, rc


def solve_kkt_step(state: IPMState, L: np.ndarray, normal: NormalEquations | None = None, plan=None):
    """Newton direction for ``[[0, A^T, I], [A, 0, 0], [S, 0, X]]``.

    Returns ``(dx, dlam, ds)`` with right-hand side ``(-r_c, -r_b, L)``.
    """
    B, x, s = state.B, state.x, state.s
    if np.any(x <= 0) or np.any(s <= 0):
        raise ValueError("x and s must be strictly positive")
    m, n = B.shape
    rb, rc = state.residuals()
    if normal is None:
        k = x / s
        normal = NormalEquations(B, k[:m], k[m:], plan)
    rhs = state.b - _A(B, x + (x * rc + L) / s)
    p1, p2 = normal.solve(rhs[:n], rhs[n:])
    dlam = np.concatenate([p1, p2])
    ds = -rc - _AT(B, dlam)
    dx = (L - x * ds) / s
    return dx, dlam, ds


def _max_step(v: np.ndarray, dv: np.ndarray) -> float:
    neg = dv < 0
    if not np.any(neg):
        return np.inf
    return float(np.min(-v[neg] / dv[neg]))


def _starting_point(B: np.ndarray, v: np.ndarray, plan) -> IPMState:
    m, n = B.shape
    state = IPMState(B, v, np.zeros(2 * m), np.zeros(n + m), np.zeros(2 * m))
    b, c = state.b, state.c
    ones = np.ones(m)
    ne = NormalEquations(B, ones, ones, plan)  # A A^T
    p1, p2 = ne.solve(b[:n], b[n:])
    x = _AT(B, np.concatenate([p1, p2]))
    Ac = _A(B, c)
    l1, l2 = ne.solve(Ac[:n], Ac[n:])
    lam = np.concatenate([l1, l2])
    s = c - _AT(B, lam)
    x = x + max(-1.5 * x.min(), 0.0)
    s = s + max(-1.5 * s.min(), 0.0)
    xs = x @ s
    if s.sum() > 0 and x.sum() > 0:
        x = x + 0.5 * xs / s.sum()
        s = s + 0.5 * xs / x.sum()
    # degenerate start (x or s identically zero): fall back to a unit point
    if not (np.all(x > 0) and np.all(s > 0)):
        x = np.maximum(x, 1.0)
        s = np.maximum(s, 1.0)
    state.x, state.lam, state.s = x, lam, s
    return state


def _result(state: IPMState, status: LPStatus, it: int, res) -> LPResult:
    n = state.B.shape[1]
    u = state.lam[:n].copy()
    rho = state.lam[n:].copy()
    obj = float(rho.sum())
    return LPResult(max(obj, 0.0) if obj > -1e-8 else obj, u, rho, status, it, res)


def column_basis(B: np.ndarray, rtol: float = 1e-9) -> np.ndarray:
    """Indices of a maximal independent set of columns (pivoted QR of ``B^T B``)."""
    if B.shape[1] == 0:
        return np.arange(0)
    G = B.T @ B
    R, piv = sla.qr(G, mode="r", pivoting=True)
    d = np.abs(np.diag(R))
    rank = int(np.sum(d > rtol * max(d[0], 1.0)))
    return np.sort(piv[:rank])


def solve_artificial(inst: LPInstance | object, opts: LPOptions | None = None, plan=None) -> LPResult:
    """Mehrotra predictor-corrector for the artificial-variable LP.

    Dependent columns of ``B`` are dropped first (``opts.reduce_columns``);
    they do not change the optimum and would make the normal equations
    singular.  The returned ``u`` is zero on dropped columns.
    """
    if not isinstance(inst, LPInstance):
        inst = LPInstance(inst)
    opts = opts or LPOptions()
    B = inst.matrix
    v = inst.rhs
    if not (np.all(np.isfinite(B)) and np.all(np.isfinite(v))):
        raise ValueError("LP data must be finite")
    if opts.reduce_columns and plan is None:
        keep = column_basis(B)
        if keep.shape[0] == 0:
            r = np.maximum(v, 0.0)
            return LPResult(float(r.sum()), np.zeros(B.shape[1]), r, LPStatus.OPTIMAL, 0, (0.0, 0.0, 0.0))
        if keep.shape[0] < B.shape[1]:
            res = solve_artificial(LPInstance(B[:, keep], v), _replace(opts, reduce_columns=False))
            u = np.zeros(B.shape[1])
            u[keep] = res.u
            return LPResult(res.objective, u, res.rho, res.status, res.iterations, res.residuals)
    if plan is None and opts.assembly == "plan":
        plan = ColumnPairPlan.from_matrix(B)
    m, n = B.shape
    try:
        state = _starting_point(B, v, plan)
    except FactorizationError:
        return _result(IPMState(B, v, np.ones(2 * m), np.zeros(n + m), np.ones(2 * m)),
                       LPStatus.NUMERICAL_FAILURE, 0, (np.inf, np.inf, np.inf))
    bnorm = 1.0 + np.sqrt(m)
    cnorm = 1.0 + np.linalg.norm(v)
    res = (np.inf, np.inf, np.inf)
    for it in range(opts.max_iter + 1):
        x, s = state.x, state.s
        rb, rc = state.residuals()
        mu = float(x @ s) / (2 * m)
        obj = float(state.lam[n:].sum())
        res = (
            float(np.linalg.norm(rb)) / bnorm,
            float(np.linalg.norm(rc)) / cnorm,
            float(x @ s),
        )
        gap_ok = res[2] <= opts.gap_abs + opts.gap_rel * abs(obj)
        if mu <= opts.tol and res[0] <= opts.residual_tol and res[1] <= opts.residual_tol and gap_ok:
            return _result(state, LPStatus.OPTIMAL, it, res)
        if it == opts.max_iter:
            break
        try:
            k = x / s
            normal = NormalEquations(B, k[:m], k[m:], plan, opts)
            dx_a, dl_a, ds_a = solve_kkt_step(state, -x * s, normal)
            ap = min(1.0, _max_step(x, dx_a))
            ad = min(1.0, _max_step(s, ds_a))
            mu_aff = float((x + ap * dx_a) @ (s + ad * ds_a)) / (2 * m)
            sigma = (mu_aff / mu) ** 3
            L = -x * s - dx_a * ds_a + sigma * mu
            dx, dl, ds = solve_kkt_step(state, L, normal)
        except (FactorizationError, ValueError) as exc:
            logger.debug("factorisation failed at iteration %d: %s", it, exc)
            return _result(state, LPStatus.NUMERICAL_FAILURE, it, res)
        # keep a strict interior: eta -> 1 lets x or s underflow to zero
        eta = min(max(0.99, 1.0 - mu), 1.0 - 1e-6)
        ap = min(1.0, eta * _max_step(x, dx))
        ad = min(1.0, eta * _max_step(s, ds))
        state.x = x + ap * dx
        state.lam = state.lam + ad * dl
        state.s = s + ad * ds
        if not (np.all(np.isfinite(state.x)) and np.all(np.isfinite(state.lam))):
            return _result(state, LPStatus.NUMERICAL_FAILURE, it + 1, res)
    return _result(state, LPStatus.ITERATION_LIMIT, opts.max_iter, res)


def reference_solve(inst: LPInstance | object) -> LPResult:
    """Dense HiGHS solve of the same LP; a differential-testing oracle."""
    import scipy.sparse as sp
    from scipy.optimize import linprog

    if not isinstance(inst, LPInstance):
        inst = LPInstance(inst)
    B = inst.matrix
    m, n = B.shape
    if m > REFERENCE_MAX_ROWS or n > REFERENCE_MAX_COLS:
        raise ValueError(f"reference_solve is limited to {REFERENCE_MAX_ROWS} x {REFERENCE_MAX_COLS}")
    cost = np.concatenate([np.zeros(n), np.ones(m)])
    A_ub = sp.hstack([sp.csr_matrix(-B), -sp.eye(m, format="csr")], format="csr")
    bounds = [(None, None)] * n + [(0, None)] * m
    out = linprog(cost, A_ub=A_ub, b_ub=-inst.rhs, bounds=bounds, method="highs")
    if out.status != 0:
        return LPResult(np.nan, np.zeros(n), np.zeros(m), LPStatus.NUMERICAL_FAILURE, int(out.nit), (np.nan,) * 3)
    return LPResult(float(out.fun), out.x[:n], out.x[n:], LPStatus.OPTIMAL, int(out.nit))
