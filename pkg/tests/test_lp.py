import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import load_fixture
from efgdom import lp, seqform

BACKENDS = ["highs", "simplex"]


@pytest.mark.parametrize("backend", BACKENDS)
def test_single_upper_row(backend):
    prob = lp.LpProblem([1.0], "max", A_le=[[1.0]], b_le=[5.0])
    assert lp.solve(prob, backend).value == pytest.approx(5)


@pytest.mark.parametrize("backend", BACKENDS)
def test_simplex_face(backend):
    prob = lp.LpProblem([1.0, 1.0], "max", A_eq=[[1.0, 1.0]], b_eq=[1.0])
    assert lp.solve(prob, backend).value == pytest.approx(1)


@pytest.mark.parametrize("backend", BACKENDS)
def test_infeasible(backend):
    prob = lp.LpProblem([1.0], "max", A_ge=[[1.0]], b_ge=[2.0], A_le=[[1.0]], b_le=[1.0])
    sol = lp.solve(prob, backend)
    assert sol.status == lp.INFEASIBLE
    with pytest.raises(lp.LpError):
        sol.require()


@pytest.mark.parametrize("backend", BACKENDS)
def test_unbounded(backend):
    prob = lp.LpProblem([1.0, 0.0], "max", A_ge=[[1.0, -1.0]], b_ge=[0.0])
    assert lp.solve(prob, backend).status == lp.UNBOUNDED


@pytest.mark.parametrize("backend", BACKENDS)
def test_fixed_and_free_variables(backend):
    prob = lp.LpProblem([1.0, 1.0], "min", A_ge=[[1.0, 1.0]], b_ge=[-3.0],
                        lower=[-np.inf, 0.0], upper=[np.inf, np.inf])
    prob.fix(1, 2.0)
    sol = lp.solve(prob, backend).require()
    assert sol.x[1] == pytest.approx(2.0)
    assert sol.value == pytest.approx(-3.0)


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        lp.LpProblem([1.0, 2.0], "max", A_eq=[[1.0]], b_eq=[1.0])


def test_unknown_backend():
    with pytest.raises(ValueError):
        lp.solve(lp.LpProblem([1.0], "max", A_le=[[1.0]], b_le=[1.0]), "nope")


@pytest.mark.parametrize("backend", BACKENDS)
def test_matching_pennies_duality(backend):
    g = load_fixture("matching_pennies")
    sf = seqform.build_sequence_form(g)
    E, F = (np.asarray(M.todense() if hasattr(M, "todense") else M) for M in (sf.E, sf.F))
    A = np.asarray(sf.A.todense())
    d1, d2 = A.shape
    # min e.p s.t. -A y + E^T p >= 0, F y = f, y >= 0 (variables y, p)
    primal = lp.LpProblem(np.concatenate([np.zeros(d2), sf.e]), "min",
                          A_ge=np.hstack([-A, E.T]), b_ge=np.zeros(d1),
                          A_eq=np.hstack([F, np.zeros((F.shape[0], E.shape[0]))]), b_eq=sf.f,
                          lower=np.concatenate([np.zeros(d2), np.full(E.shape[0], -np.inf)]))
    # max -f.q s.t. A^T x + F^T q >= 0, E x = e, x >= 0 (variables x, q)
    dual = lp.LpProblem(np.concatenate([np.zeros(d1), -sf.f]), "max",
                        A_le=np.hstack([-A.T, -F.T]), b_le=np.zeros(d2),
                        A_eq=np.hstack([E, np.zeros((E.shape[0], F.shape[0]))]), b_eq=sf.e,
                        lower=np.concatenate([np.zeros(d1), np.full(F.shape[0], -np.inf)]))
    p = lp.solve(primal, backend).require()
    q = lp.solve(dual, backend).require()
    assert p.value == pytest.approx(0, abs=1e-9)
    assert q.value == pytest.approx(0, abs=1e-9)


def random_lp(seed):
    rng = np.random.default_rng(seed)
    n, m = rng.integers(2, 7), rng.integers(1, 6)
    A = rng.integers(0, 5, (m, n)).astype(float)
    A[rng.integers(m), :] += 1.0  # every variable bounded by some row
    b = rng.integers(1, 10, m).astype(float)
    c = rng.integers(-3, 6, n).astype(float)
    eq = rng.random() < 0.5
    kw = dict(A_eq=np.ones((1, n)), b_eq=[float(rng.integers(0, 3))]) if eq else {}
    return lp.LpProblem(c, "max", A_le=A, b_le=b, **kw)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_backends_agree_and_strong_duality(seed):
    prob = random_lp(seed)
    sols = [lp.solve(prob, b) for b in BACKENDS]
    assert sols[0].status == sols[1].status
    if not sols[0].ok:
        return
    assert sols[0].value == pytest.approx(sols[1].value, abs=1e-8 * (1 + abs(sols[0].value)))
    for sol in sols:
        assert prob.residual(sol.x) <= 1e-8
        # all variables have lower bound 0 and no upper bound, so the dual
        # objective is b . y over the rows
        dual = prob.b_eq @ sol.duals_eq + prob.b_le @ sol.duals_le
        assert dual == pytest.approx(sol.value, abs=1e-8 * (1 + abs(sol.value)))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6))
def test_determinism(seed):
    prob = random_lp(seed)
    for backend in BACKENDS:
        a, b = lp.solve(prob, backend), lp.solve(prob, backend)
        assert a.status == b.status
        if a.ok:
            assert a.x.tobytes() == b.x.tobytes()


def test_row_scaling_handles_mixed_magnitudes():
    # coefficients of order 1e-6 next to order 1e3
    prob = lp.LpProblem([1.0, 1.0], "max", A_le=[[1e-6, 2e-6], [1e3, 1e2]], b_le=[1e-6, 1e3])
    for backend in BACKENDS:
        sol = lp.solve(prob, backend).require()
        assert sol.value == pytest.approx(1.0, rel=1e-9)
