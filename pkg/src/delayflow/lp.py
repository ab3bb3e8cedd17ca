"""Self-contained linear-program solving.

Two engines behind one contract: a from-scratch two-phase dense-tableau
simplex (Bland's rule, deterministic; the pivot loop lives in _kernels and
is numba-compiled), and scipy's HiGHS for instances too large for a dense
tableau. ``engine="auto"`` picks by tableau size, so identical inputs always
take the same route and yield bit-identical solutions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from delayflow._kernels import (
    PIVOT_TOL,
    STATUS_OPTIMAL,
    STATUS_UNBOUNDED,
    simplex_iterations,
)

#: Absolute feasibility tolerance for solutions (after row scaling).
SOLUTION_TOL = 1e-7

#: Above this many tableau cells, auto engine switches to HiGHS.
_AUTO_TABLEAU_CELLS = 250_000

_MAX_ITER = 200_000


@dataclass
class LinearProgram:
    sense: str  # "min" or "max"
    objective: np.ndarray
    rows: np.ndarray
    relations: tuple[str, ...]
    rhs: np.ndarray
    lower: np.ndarray = field(default=None)
    upper: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.sense not in ("min", "max"):
            raise ValueError("sense must be 'min' or 'max'")
        self.objective = np.asarray(self.objective, dtype=np.float64)
        n = self.objective.shape[0]
        self.rows = np.asarray(self.rows, dtype=np.float64).reshape(-1, n)
        self.rhs = np.asarray(self.rhs, dtype=np.float64)
        self.relations = tuple(self.relations)
        m = self.rows.shape[0]
        if self.rhs.shape != (m,) or len(self.relations) != m:
            raise ValueError("row/relation/rhs dimension mismatch")
        if any(r not in ("<=", "=", ">=") for r in self.relations):
            raise ValueError("relations must be one of <=, =, >=")
        if not np.all(np.isfinite(self.rhs)):
            raise ValueError("rhs must be finite")
        if self.lower is None:
            self.lower = np.zeros(n)
        if self.upper is None:
            self.upper = np.full(n, np.inf)
        self.lower = np.asarray(self.lower, dtype=np.float64)
        self.upper = np.asarray(self.upper, dtype=np.float64)
        if self.lower.shape != (n,) or self.upper.shape != (n,):
            raise ValueError("bounds dimension mismatch")
        if np.any(self.lower > self.upper):
            raise ValueError("lower bound exceeds upper bound")

    @property
    def num_vars(self) -> int:
        return self.objective.shape[0]

    @property
    def num_rows(self) -> int:
        return self.rows.shape[0]


@dataclass
class LpSolution:
    status: str  # "optimal", "infeasible", "unbounded"
    x: np.ndarray | None = None
    objective: float | None = None
    duals: np.ndarray | None = None


def solve_lp(lp: LinearProgram, engine: str = "auto") -> LpSolution:
    """Solve ``lp``; when optimal, x is feasible within SOLUTION_TOL and the
    objective is within 1e-6 relative of the true optimum."""
    if engine == "auto":
        cells = (lp.num_rows + 1) * (lp.num_vars + 2 * lp.num_rows + 2)
        engine = "simplex" if cells <= _AUTO_TABLEAU_CELLS else "highs"
    if engine == "simplex":
        return _solve_simplex(lp)
    if engine == "highs":
        return _solve_highs(lp)
    raise ValueError(f"unknown engine {engine!r}")


def _solve_highs(lp: LinearProgram) -> LpSolution:
    c = lp.objective if lp.sense == "min" else -lp.objective
    a_ub, b_ub, a_eq, b_eq = [], [], [], []
    for row, rel, b in zip(lp.rows, lp.relations, lp.rhs):
        if rel == "<=":
            a_ub.append(row)
            b_ub.append(b)
        elif rel == ">=":
            a_ub.append(-row)
            b_ub.append(-b)
        else:
            a_eq.append(row)
            b_eq.append(b)
    bounds = list(zip(lp.lower, lp.upper))
    kwargs = dict(
        A_ub=np.array(a_ub) if a_ub else None,
        b_ub=np.array(b_ub) if b_ub else None,
        A_eq=np.array(a_eq) if a_eq else None,
        b_eq=np.array(b_eq) if b_eq else None,
        bounds=bounds,
        method="highs",
    )
    res = linprog(c, **kwargs)
    if res.status == 2:
        # HiGHS presolve can report "infeasible" for unbounded problems;
        # re-check without presolve to tell them apart.
        res = linprog(c, options={"presolve": False}, **kwargs)
    if res.status == 2:
        return LpSolution("infeasible")
    if res.status == 3:
        return LpSolution("unbounded")
    if res.status != 0:
        raise RuntimeError(f"LP solver failure: {res.message}")
    x = np.asarray(res.x, dtype=np.float64)
    return LpSolution("optimal", x, float(lp.objective @ x))


def _solve_simplex(lp: LinearProgram) -> LpSolution:
    # Internally a maximization over shifted variables y >= 0.
    c_user = lp.objective
    c = c_user.copy() if lp.sense == "max" else -c_user
    n = lp.num_vars

    # Variable transform: x_j = shift_j + sum(sign * y_col). Finite lower
    # bounds shift; free variables split into a positive pair.
    shift = np.where(np.isfinite(lp.lower), lp.lower, 0.0)
    cols: list[list[tuple[int, float]]] = []  # per original var
    c_y: list[float] = []
    for j in range(n):
        if np.isfinite(lp.lower[j]):
            cols.append([(len(c_y), 1.0)])
            c_y.append(c[j])
        else:
            cols.append([(len(c_y), 1.0), (len(c_y) + 1, -1.0)])
            c_y.extend([c[j], -c[j]])
    ny = len(c_y)

    a_rows: list[np.ndarray] = []
    rels: list[str] = []
    bvec: list[float] = []

    def expand(row: np.ndarray) -> np.ndarray:
        out = np.zeros(ny)
        for j in range(n):
            for col, sign in cols[j]:
                out[col] = sign * row[j]
        return out

    for row, rel, b in zip(lp.rows, lp.relations, lp.rhs):
        a_rows.append(expand(row))
        rels.append(rel)
        bvec.append(b - float(row @ shift))
    n_user_rows = len(a_rows)
    for j in range(n):
        if np.isfinite(lp.upper[j]):
            row = np.zeros(n)
            row[j] = 1.0
            a_rows.append(expand(row))
            rels.append("<=")
            bvec.append(lp.upper[j] - shift[j])

    a = np.array(a_rows) if a_rows else np.zeros((0, ny))
    b = np.array(bvec)
    m = a.shape[0]

    # Row scaling by max-abs coefficient, then orient rhs nonnegative.
    scale = np.abs(a).max(axis=1, initial=0.0) if m else np.zeros(0)
    scale[scale < 1e-12] = 1.0
    a = a / scale[:, None]
    b = b / scale
    flip = {"<=": ">=", ">=": "<=", "=": "="}
    flipped = np.zeros(m, dtype=bool)
    for i in range(m):
        if b[i] < 0:
            a[i] = -a[i]
            b[i] = -b[i]
            rels[i] = flip[rels[i]]
            flipped[i] = True

    n_slack = sum(1 for r in rels if r != "=")
    n_art = sum(1 for r in rels if r != "<=")
    ncols = ny + n_slack + n_art
    T = np.zeros((m + 1, ncols + 1))
    T[:m, :ny] = a
    T[:m, -1] = b
    basis = np.empty(m, dtype=np.int64)
    art_col_of_row = np.full(m, -1, dtype=np.int64)
    slack_col_of_row = np.full(m, -1, dtype=np.int64)
    sc, ac = ny, ny + n_slack
    for i, rel in enumerate(rels):
        if rel != "=":
            T[i, sc] = 1.0 if rel == "<=" else -1.0
            slack_col_of_row[i] = sc
            sc += 1
        if rel != "<=":
            T[i, ac] = 1.0
            art_col_of_row[i] = ac
            basis[i] = ac
            ac += 1
        else:
            basis[i] = slack_col_of_row[i]

    # Phase 1: maximize -(sum of artificials).
    if n_art:
        for i in range(m):
            if art_col_of_row[i] >= 0:
                T[m, :] -= T[i, :]
        status = simplex_iterations(T, basis, ny + n_slack, _MAX_ITER)
        if status != STATUS_OPTIMAL:
            raise RuntimeError("simplex iteration failure in phase 1")
        if T[m, -1] < -SOLUTION_TOL:
            return LpSolution("infeasible")
        art_set = set(range(ny + n_slack, ncols))
        drop_rows = []
        for i in range(m):
            if basis[i] in art_set:
                pivot_j = -1
                for j in range(ny + n_slack):
                    if abs(T[i, j]) > PIVOT_TOL:
                        pivot_j = j
                        break
                if pivot_j < 0:
                    drop_rows.append(i)
                    continue
                piv = T[i, pivot_j]
                T[i, :] /= piv
                for r in range(m + 1):
                    if r != i and T[r, pivot_j] != 0.0:
                        T[r, :] -= T[r, pivot_j] * T[i, :]
                basis[i] = pivot_j
        if drop_rows:
            keep = [i for i in range(m) if i not in set(drop_rows)]
            T = np.vstack([T[keep, :], T[m:, :]])
            basis = basis[np.array(keep, dtype=np.int64)]
            m = len(keep)

    # Phase 2 with the real objective.
    c_ext = np.zeros(ncols + 1)
    c_ext[:ny] = np.asarray(c_y)
    cb = c_ext[basis]
    T[m, :] = cb @ T[:m, :] - c_ext
    status = simplex_iterations(T, basis, ny + n_slack, _MAX_ITER)
    if status == STATUS_UNBOUNDED:
        return LpSolution("unbounded")
    if status != STATUS_OPTIMAL:
        raise RuntimeError("simplex iteration failure in phase 2")

    y = np.zeros(ncols)
    for i in range(m):
        y[basis[i]] = T[i, -1]
    x = shift.copy()
    for j in range(n):
        for col, sign in cols[j]:
            x[j] += sign * y[col]

    # Duals for the internal max form, read off the auxiliary column of
    # each user row and mapped back through scaling/orientation.
    duals = np.zeros(lp.num_rows)
    for i in range(min(n_user_rows, lp.num_rows)):
        col = art_col_of_row[i] if art_col_of_row[i] >= 0 else slack_col_of_row[i]
        val = T[m, col]
        if flipped[i]:
            val = -val
        duals[i] = val / scale[i]

    return LpSolution("optimal", x, float(c_user @ x), duals)
