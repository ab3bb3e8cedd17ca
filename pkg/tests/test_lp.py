import itertools

import numpy as np
import pytest

from delayflow.lp import LinearProgram, solve_lp


def test_simple_max():
    lp = LinearProgram("max", [3, 2], [[1, 1], [1, 0]], ("<=", "<="), [4, 2])
    sol = solve_lp(lp, engine="simplex")
    assert sol.status == "optimal"
    assert sol.objective == pytest.approx(10.0)
    assert sol.x == pytest.approx([2.0, 2.0])


def test_simple_min_with_equality():
    lp = LinearProgram("min", [1, 2], [[1, 1]], ("=",), [3])
    sol = solve_lp(lp, engine="simplex")
    assert sol.status == "optimal"
    assert sol.objective == pytest.approx(3.0)
    assert sol.x == pytest.approx([3.0, 0.0])


def test_infeasible():
    lp = LinearProgram("min", [1], [[1], [1]], ("<=", ">="), [1, 2])
    assert solve_lp(lp, engine="simplex").status == "infeasible"
    assert solve_lp(lp, engine="highs").status == "infeasible"


def test_unbounded():
    lp = LinearProgram("max", [1, 0], [[0, 1]], ("<=",), [1])
    assert solve_lp(lp, engine="simplex").status == "unbounded"
    assert solve_lp(lp, engine="highs").status == "unbounded"


def test_bounds_and_free_variables():
    # min x + y with x free, y in [2, 5], x >= y - 4
    lp = LinearProgram(
        "min",
        [1, 1],
        [[1, -1]],
        (">=",),
        [-4],
        lower=[-np.inf, 2.0],
        upper=[np.inf, 5.0],
    )
    sol = solve_lp(lp, engine="simplex")
    assert sol.status == "optimal"
    assert sol.x == pytest.approx([-2.0, 2.0])
    assert sol.objective == pytest.approx(0.0)


def test_validation_errors():
    with pytest.raises(ValueError):
        LinearProgram("maximize", [1], [[1]], ("<=",), [1])
    with pytest.raises(ValueError):
        LinearProgram("max", [1], [[1]], ("<",), [1])
    with pytest.raises(ValueError):
        LinearProgram("max", [1], [[1], [1]], ("<=",), [1])
    with pytest.raises(ValueError):
        LinearProgram("max", [1], [[1]], ("<=",), [1], lower=[2], upper=[1])


def test_determinism():
    rng = np.random.default_rng(5)
    lp = LinearProgram(
        "max",
        rng.integers(-3, 4, size=5).astype(float),
        rng.integers(-3, 4, size=(5, 5)).astype(float),
        ("<=", ">=", "=", "<=", "<="),
        rng.integers(0, 9, size=5).astype(float),
    )
    a = solve_lp(lp, engine="simplex")
    b = solve_lp(lp, engine="simplex")
    assert a.status == b.status
    if a.status == "optimal":
        assert np.array_equal(a.x, b.x)


def test_duals_complementary_slackness():
    lp = LinearProgram("max", [3, 2], [[1, 1], [1, 0]], ("<=", "<="), [4, 2])
    sol = solve_lp(lp, engine="simplex")
    assert sol.duals is not None
    # both rows tight, duals reproduce the objective (strong duality)
    assert float(sol.duals @ lp.rhs) == pytest.approx(sol.objective)
    # dual feasibility for a max/<= problem: A^T y >= c, y >= 0
    assert np.all(lp.rows.T @ sol.duals >= lp.objective - 1e-9)
    assert np.all(sol.duals >= -1e-9)


def _enumerate_vertices(lp: LinearProgram):
    """All basic feasible points of {Ax rel b, x >= 0} by activating n
    constraints at a time; assumes default bounds."""
    n = lp.num_vars
    planes = [(row, b) for row, b in zip(lp.rows, lp.rhs)]
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        planes.append((e, 0.0))
    eq_idx = [i for i, r in enumerate(lp.relations) if r == "="]
    verts = []
    for combo in itertools.combinations(range(len(planes)), n):
        if any(i not in combo for i in eq_idx):
            continue
        a = np.array([planes[i][0] for i in combo])
        b = np.array([planes[i][1] for i in combo])
        try:
            x = np.linalg.solve(a, b)
        except np.linalg.LinAlgError:
            continue
        if np.any(x < -1e-7):
            continue
        ok = True
        for row, rel, rhs in zip(lp.rows, lp.relations, lp.rhs):
            v = float(row @ x)
            if rel == "<=" and v > rhs + 1e-7:
                ok = False
            elif rel == ">=" and v < rhs - 1e-7:
                ok = False
            elif rel == "=" and abs(v - rhs) > 1e-7:
                ok = False
            if not ok:
                break
        if ok:
            verts.append(x)
    return verts


def test_against_vertex_enumeration():
    """Oracle check: with x >= 0 the feasible set is pointed, so it is
    nonempty iff it has a vertex, and any finite optimum is attained at one.
    """
    rng = np.random.default_rng(123)
    checked_optimal = 0
    for _ in range(100):
        n = int(rng.integers(1, 7))
        m = int(rng.integers(1, 7))
        lp = LinearProgram(
            "max" if rng.random() < 0.5 else "min",
            rng.integers(-5, 6, size=n).astype(float),
            rng.integers(-5, 6, size=(m, n)).astype(float),
            tuple(rng.choice(["<=", "=", ">="], size=m, p=[0.6, 0.2, 0.2])),
            rng.integers(0, 10, size=m).astype(float),
        )
        sol = solve_lp(lp, engine="simplex")
        verts = _enumerate_vertices(lp)
        if sol.status == "infeasible":
            assert not verts
            continue
        assert verts, "solver claims feasible but no vertex exists"
        vals = [float(lp.objective @ v) for v in verts]
        best = max(vals) if lp.sense == "max" else min(vals)
        if sol.status == "optimal":
            assert sol.objective == pytest.approx(best, abs=1e-6)
            checked_optimal += 1
        else:  # unbounded: the solver's claim must beat every vertex
            hs = solve_lp(lp, engine="highs")
            assert hs.status == "unbounded"
    assert checked_optimal > 20


def test_engines_agree_on_random_lps():
    rng = np.random.default_rng(77)
    for _ in range(100):
        n = int(rng.integers(1, 8))
        m = int(rng.integers(1, 8))
        lp = LinearProgram(
            "max" if rng.random() < 0.5 else "min",
            rng.integers(-5, 6, size=n).astype(float),
            rng.integers(-5, 6, size=(m, n)).astype(float),
            tuple(rng.choice(["<=", "=", ">="], size=m)),
            rng.integers(0, 10, size=m).astype(float),
        )
        a = solve_lp(lp, engine="simplex")
        b = solve_lp(lp, engine="highs")
        assert a.status == b.status
        if a.status == "optimal":
            assert a.objective == pytest.approx(b.objective, abs=1e-6)


def test_auto_engine_picks_simplex_for_small():
    lp = LinearProgram("max", [1], [[1]], ("<=",), [1])
    sol = solve_lp(lp)  # must not raise; small goes through the tableau
    assert sol.status == "optimal"
    assert sol.duals is not None  # simplex path provides duals
