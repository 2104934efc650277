import numpy as np
import pytest

from reverse_ising.constraints import build_augmented
from reverse_ising.lp import (
    ColumnPairPlan,
    IPMState,
    LPInstance,
    LPOptions,
    NormalEquations,
    assemble_akat,
    column_basis,
    reference_solve,
    solve_artificial,
    solve_kkt_step,
    solve_normal_equations,
    weighted_gram,
)
from reverse_ising.spincore import xor_circuit


def random_sign_matrix(rng, m, n, density=0.5):
    B = rng.choice([-1.0, 1.0], size=(m, n))
    B[rng.random((m, n)) > density] = 0.0
    return B


def kkt_dense(B, state, L):
    """Dense 3x3 block solve of the Newton system."""
    m, n = B.shape
    N = 2 * m
    A = np.zeros((n + m, N))
    A[:n, :m] = -B.T
    A[n:, :m] = -np.eye(m)
    A[n:, m:] = -np.eye(m)
    rb, rc = state.residuals()
    x, s = state.x, state.s
    K = np.zeros((2 * N + n + m, 2 * N + n + m))
    K[:N, N : N + n + m] = A.T
    K[:N, N + n + m :] = np.eye(N)
    K[N : N + n + m, :N] = A
    K[N + n + m :, :N] = np.diag(s)
    K[N + n + m :, N + n + m :] = np.diag(x)
    rhs = np.concatenate([-rc, -rb, L])
    sol = np.linalg.solve(K, rhs)
    return sol[:N], sol[N : N + n + m], sol[N + n + m :]


def test_trivial_instances():
    assert solve_artificial(LPInstance(np.array([[1.0]]))).objective < 1e-6
    res = solve_artificial(LPInstance(np.array([[1.0], [-1.0]])))
    assert abs(res.objective - 2.0) < 1e-6
    assert abs(reference_solve(LPInstance(np.array([[1.0], [-1.0]]))).objective - 2.0) < 1e-9


def test_xor_objective():
    B = build_augmented(xor_circuit())
    res = solve_artificial(B)
    assert res.optimal and res.objective > 0.5
    assert abs(res.objective - reference_solve(B).objective) < 1e-6


def test_normal_equations_identity():
    B = np.eye(2)
    k = np.ones(2)
    q = np.array([1.0, -2.0, 0.5, 3.0])
    p = solve_normal_equations(None, B, k, k, q)
    assert np.allclose(p, np.linalg.solve(assemble_akat(B, k, k), q), atol=1e-9)
    assert np.allclose(solve_normal_equations(None, B, k, k, np.zeros(4)), 0)


def test_normal_equations_random(rng):
    for _ in range(100):
        B = random_sign_matrix(rng, 20, 4, 0.8)
        B[:4] = np.eye(4)  # keep Omega nonsingular
        k1, k2 = rng.uniform(0.1, 10, 20), rng.uniform(0.1, 10, 20)
        q = rng.normal(size=24)
        plan = ColumnPairPlan.from_matrix(B) if rng.random() < 0.5 else None
        p = solve_normal_equations(plan, B, k1, k2, q)
        res = np.abs(assemble_akat(B, k1, k2) @ p - q).max()
        assert res <= 1e-7 * (1 + np.abs(q).max())


def test_plan_matches_dense_gram(rng):
    B = random_sign_matrix(rng, 50, 6)
    plan = ColumnPairPlan.from_matrix(B)
    d = rng.uniform(0.5, 2, 50)
    assert np.allclose(plan.weighted_gram(d), weighted_gram(B, d))
    R, S = plan.segment(1, 3)
    assert np.array_equal(R, np.flatnonzero((B[:, 1] != 0) & (B[:, 3] != 0)))
    assert set(np.unique(S)) <= {-1, 1}


def test_kkt_step_matches_dense(rng):
    m, n = 10, 3
    B = random_sign_matrix(rng, m, n, 0.9)
    B[:3] = np.eye(3)
    state = IPMState(B, np.ones(m), rng.uniform(0.5, 2, 2 * m), rng.normal(size=n + m), rng.uniform(0.5, 2, 2 * m))
    L = rng.normal(size=2 * m)
    got = solve_kkt_step(state, L)
    want = kkt_dense(B, state, L)
    for a, b in zip(got, want):
        assert np.allclose(a, b, atol=1e-7)


def test_kkt_step_centering_and_zero_rhs():
    m, n = 4, 2
    B = np.array([[1.0, 0], [0, 1], [1, 1], [1, -1]])
    e = np.ones(2 * m)
    lam = np.zeros(n + m)
    state = IPMState(B, np.ones(m), e.copy(), lam, e.copy())
    # choose lam, s so that r_c = 0, and x so that r_b = 0, then L = 0 gives no step
    rb, rc = state.residuals()
    state.s = state.s - rc
    state.x = state.x.copy()
    state.lam = lam
    if np.all(state.s > 0):
        dx, dl, ds = solve_kkt_step(state, np.zeros(2 * m) - (0 * e))
        want = kkt_dense(B, state, np.zeros(2 * m))
        assert np.allclose(dx, want[0]) and np.allclose(ds, want[2])
    state = IPMState(B, np.ones(m), e.copy(), lam, e.copy())
    dx, dl, ds = solve_kkt_step(state, -state.x * state.s)
    want = kkt_dense(B, state, -state.x * state.s)
    assert np.allclose(dx, want[0], atol=1e-7)


def test_kkt_rejects_nonpositive():
    B = np.eye(2)
    state = IPMState(B, np.ones(2), np.array([1.0, 0.0, 1.0, 1.0]), np.zeros(4), np.ones(4))
    with pytest.raises(ValueError):
        solve_kkt_step(state, np.zeros(4))


def test_differential_against_reference(rng):
    for _ in range(60):
        m = int(rng.integers(5, 400))
        n = int(rng.integers(1, 30))
        B = random_sign_matrix(rng, m, n, rng.uniform(0.2, 0.9))
        B[np.abs(B).sum(axis=1) == 0, 0] = 1.0
        a = solve_artificial(LPInstance(B))
        b = reference_solve(LPInstance(B))
        assert a.optimal
        assert abs(a.objective - b.objective) <= 1e-6
        assert a.objective >= -1e-8 and np.all(a.rho >= -1e-8)


def test_rank_deficient_columns(rng):
    B = random_sign_matrix(rng, 200, 8)
    B = np.hstack([B, B[:, :2], B[:, 2:3] - B[:, 3:4] * 0])
    assert column_basis(B).shape[0] == np.linalg.matrix_rank(B)
    a = solve_artificial(LPInstance(B))
    assert a.optimal
    assert abs(a.objective - reference_solve(LPInstance(B)).objective) < 1e-6


def test_homogeneity(rng):
    B = random_sign_matrix(rng, 100, 6)
    base = solve_artificial(LPInstance(B)).objective
    scaled = solve_artificial(LPInstance(B, 3.0 * np.ones(100))).objective
    assert abs(scaled - 3.0 * base) < 1e-6


def test_extra_columns_never_increase(rng):
    B = random_sign_matrix(rng, 150, 5)
    C = np.hstack([B, random_sign_matrix(rng, 150, 3)])
    assert solve_artificial(LPInstance(C)).objective <= solve_artificial(LPInstance(B)).objective + 1e-6


def test_plan_assembly_agrees(rng):
    B = random_sign_matrix(rng, 300, 10)
    a = solve_artificial(LPInstance(B), LPOptions(assembly="plan"))
    b = solve_artificial(LPInstance(B))
    assert abs(a.objective - b.objective) < 1e-6
    plan = ColumnPairPlan.from_matrix(B)
    r1 = solve_artificial(LPInstance(B), LPOptions(assembly="plan"), plan)
    r2 = solve_artificial(LPInstance(B), LPOptions(assembly="plan"), plan)
    assert r1.objective == r2.objective and np.array_equal(r1.u, r2.u)


def test_iteration_limit_status():
    B = np.array([[1.0], [-1.0], [1.0]])
    res = solve_artificial(LPInstance(B), LPOptions(max_iter=1, reduce_columns=False))
    assert res.status.value in ("IterationLimit", "Optimal")


def test_invalid_input():
    with pytest.raises(ValueError):
        solve_artificial(LPInstance(np.array([[np.nan]])))
    with pytest.raises(ValueError):
        LPInstance(np.zeros((0, 2)))
    with pytest.raises(ValueError):
        NormalEquations(np.eye(2), np.array([1.0, 0.0]), np.ones(2))
