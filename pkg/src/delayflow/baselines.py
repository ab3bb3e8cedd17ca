"""Comparison solvers: a greedy shortest-path heuristic and the exact
optimum via per-commodity time-expanded networks (integer delays only).
"""

from __future__ import annotations

import heapq
import math
import time

import numpy as np

from delayflow.algorithms import (
    InfeasibleError,
    SolveReport,
    _constraint_ratios,
    delete_slowest,
)
from delayflow.decompose import PRUNE_TOL
from delayflow.graph import FEAS_TOL, Network, Path, shortest_path_by_delay
from delayflow.lp import LinearProgram, solve_lp
from delayflow.problem import (
    FlowSolution,
    Objective,
    ProblemSpec,
    evaluate_metrics,
    objective_value,
)

_MAX_ENUM_NODES = 12


def solve_greedy(spec: ProblemSpec) -> SolveReport:
    """Process commodities in order, repeatedly pushing rate onto the
    minimum-delay residual path (that also meets the delay bound, when one
    is set) until the throughput requirement is met or no path remains.

    An unmet requirement yields a partial solution flagged infeasible.
    """
    spec.validate()
    t0 = time.perf_counter()
    net = spec.network
    residual = net.capacities()
    flows = []
    feasible = True
    for c in spec.commodities:
        target = c.R if c.R > 0 else math.inf
        pushed = 0.0
        paths: list[tuple[Path, float]] = []
        while pushed < target - FEAS_TOL:
            p = shortest_path_by_delay(net, residual, c.source, c.sink)
            if p is None or p.delay(net) > c.D:
                break
            room = min(residual[k] for k in p.edges)
            take = min(room, target - pushed)
            if take <= FEAS_TOL:
                break
            for k in p.edges:
                residual[k] -= take
            paths.append((p, take))
            pushed += take
        if c.R > 0 and pushed < c.R - 1e-6:
            feasible = False
        flows.append(tuple(paths))
    sol = FlowSolution(tuple(flows))
    metrics = evaluate_metrics(net, sol)
    thr, dly = _constraint_ratios(spec, metrics)
    return SolveReport(
        algorithm="GREEDY",
        solution=sol,
        metrics=metrics,
        objective=objective_value(spec, metrics),
        throughput_ratios=thr,
        delay_ratios=dly,
        feasible=feasible,
        wall_time=time.perf_counter() - t0,
    )


def simple_path_delays(net: Network, s: str, t: str) -> list[float]:
    """Sorted distinct delays of all simple s->t paths."""
    if len(net.nodes) > _MAX_ENUM_NODES:
        raise ValueError(
            f"path enumeration limited to {_MAX_ENUM_NODES} nodes "
            f"(graph has {len(net.nodes)})"
        )
    si, ti = net.index_of(s), net.index_of(t)
    delays: set[float] = set()

    def rec(u: int, seen: set[int], acc: float) -> None:
        if u == ti:
            delays.add(acc)
            return
        for k in net.out_edges[u]:
            v = net.edges[k].v
            if v not in seen:
                rec(v, seen | {v}, acc + net.edges[k].delay)

    rec(si, {si}, 0.0)
    return sorted(delays)


class _TimeExpanded:
    """Per-commodity layered graph: states (v, elapsed delay tau), pruned to
    those on some source-to-sink walk with tau <= deadline."""

    def __init__(self, net: Network, s: int, t: int, deadline: float):
        self.net = net
        self.s = s
        self.t = t
        # Forward reachability from (s, 0); sink states absorb.
        reach: set[tuple[int, float]] = {(s, 0.0)}
        frontier = [(s, 0.0)]
        while frontier:
            u, tau = frontier.pop()
            if u == t:
                continue
            for k in net.out_edges[u]:
                e = net.edges[k]
                nxt = (e.v, tau + e.delay)
                if nxt[1] <= deadline and nxt not in reach:
                    reach.add(nxt)
                    frontier.append(nxt)
        # Backward prune: keep states that can reach a sink state.
        useful: set[tuple[int, float]] = {st for st in reach if st[0] == t}
        changed = True
        arcs_all = []
        for u, tau in reach:
            if u == t:
                continue
            for k in net.out_edges[u]:
                e = net.edges[k]
                nxt = (e.v, tau + e.delay)
                if nxt in reach:
                    arcs_all.append(((u, tau), k, nxt))
        while changed:
            changed = False
            for src, _, dst in arcs_all:
                if dst in useful and src not in useful:
                    useful.add(src)
                    changed = True
        self.states = sorted(useful)
        self.arcs = sorted(
            (a for a in arcs_all if a[0] in useful and a[2] in useful),
            key=lambda a: (a[0], a[1]),
        )
        self.feasible = (s, 0.0) in useful


def _exact_lp(
    spec: ProblemSpec,
    deadlines: list[float],
    mode: str,
    profile: list[float] | None = None,
):
    """Build and solve the coupled time-expanded LP.

    mode "utility": maximize the spec's throughput objective subject to
    |f_i| >= R_i. mode "scale": maximize t subject to |f_i| >= t*profile_i.
    Returns (LpSolution-like status, per-commodity arc flows, aux info).
    """
    net = spec.network
    comms = spec.commodities
    K = len(comms)
    tes = []
    for c, delta in zip(comms, deadlines):
        te = _TimeExpanded(net, net.index_of(c.source), net.index_of(c.sink), delta)
        tes.append(te)
        if not te.feasible and (mode == "scale" or c.R > 0):
            return None, tes

    arc_var: list[dict[int, int]] = []
    nvars = 0
    for te in tes:
        arc_var.append({j: nvars + j for j in range(len(te.arcs))})
        nvars += len(te.arcs)
    rate_var = [nvars + i for i in range(K)]
    nvars += K
    aux_var = None
    scale_var = None
    bound_var = None
    if mode == "utility":
        aux_var = [nvars + i for i in range(K)]
        nvars += K
        if spec.objective is Objective.MIN_THROUGHPUT_UTILITY:
            bound_var = nvars
            nvars += 1
    else:
        scale_var = nvars
        nvars += 1

    rows, rels, rhs = [], [], []

    def new_row():
        r = np.zeros(nvars)
        rows.append(r)
        return r

    for i, te in enumerate(tes):
        in_arcs: dict[tuple[int, float], list[int]] = {}
        out_arcs: dict[tuple[int, float], list[int]] = {}
        for j, (src, _, dst) in enumerate(te.arcs):
            out_arcs.setdefault(src, []).append(j)
            in_arcs.setdefault(dst, []).append(j)
        source = (te.s, 0.0)
        for st in te.states:
            if st[0] == te.t:
                continue
            r = new_row()
            for j in out_arcs.get(st, []):
                r[arc_var[i][j]] += 1.0
            for j in in_arcs.get(st, []):
                r[arc_var[i][j]] -= 1.0
            if st == source:
                r[rate_var[i]] = -1.0
            rels.append("=")
            rhs.append(0.0)
        # Rate also equals total inflow into sink states.
        r = new_row()
        for st in te.states:
            if st[0] != te.t:
                continue
            for j in in_arcs.get(st, []):
                r[arc_var[i][j]] += 1.0
        r[rate_var[i]] = -1.0
        rels.append("=")
        rhs.append(0.0)

    # Capacity coupling across commodities and layers.
    for k, e in enumerate(net.edges):
        r = new_row()
        used = False
        for i, te in enumerate(tes):
            for j, (_, ke, _) in enumerate(te.arcs):
                if ke == k:
                    r[arc_var[i][j]] += 1.0
                    used = True
        if used:
            rels.append("<=")
            rhs.append(e.capacity)
        else:
            rows.pop()

    objective = np.zeros(nvars)
    if mode == "utility":
        for i, c in enumerate(comms):
            if c.R > 0:
                r = new_row()
                r[rate_var[i]] = 1.0
                rels.append(">=")
                rhs.append(c.R)
            for slope, intercept in c.utility_t.segments():
                r = new_row()
                r[aux_var[i]] = 1.0
                r[rate_var[i]] = -slope
                rels.append("<=")
                rhs.append(intercept)
        if bound_var is None:
            for i in range(K):
                objective[aux_var[i]] = 1.0
        else:
            objective[bound_var] = 1.0
            for i in range(K):
                r = new_row()
                r[bound_var] = 1.0
                r[aux_var[i]] = -1.0
                rels.append("<=")
                rhs.append(0.0)
    else:
        for i in range(K):
            r = new_row()
            r[rate_var[i]] = 1.0
            r[scale_var] = -profile[i]
            rels.append(">=")
            rhs.append(0.0)
        objective[scale_var] = 1.0

    lp = LinearProgram("max", objective, np.array(rows), tuple(rels), np.array(rhs))
    sol = solve_lp(lp)
    return (sol, tes, arc_var, rate_var)


def _extract_paths(
    net: Network, te: _TimeExpanded, arc_flow: np.ndarray
) -> list[tuple[Path, float]]:
    """Decompose a time-expanded arc flow and project to physical paths.

    The layered graph is a DAG in tau (zero-delay edges excepted, guarded
    below), so greedy extraction terminates. Projected walks that revisit a
    physical node have the enclosed cycle excised, which only shortens them.
    """
    x = arc_flow.copy()
    out_arcs: dict[tuple[int, float], list[int]] = {}
    for j, (src, _, _) in enumerate(te.arcs):
        out_arcs.setdefault(src, []).append(j)
    source = (te.s, 0.0)
    raw: dict[tuple[int, ...], float] = {}
    while True:
        avail = [j for j in out_arcs.get(source, []) if x[j] > PRUNE_TOL]
        if not avail:
            break
        edges: list[int] = []
        st = source
        seen = {st}
        stranded = False
        while st[0] != te.t:
            nxt = -1
            for j in out_arcs.get(st, []):
                if x[j] > PRUNE_TOL:
                    nxt = j
                    break
            if nxt < 0:
                # Numerical dust from the LP can leave a walk without an
                # exit; drop it if it is tiny, otherwise something is wrong.
                dust = min(x[j] for j in edges)
                if dust > 1e-6:
                    raise RuntimeError("stranded time-expanded flow")
                for j in edges:
                    x[j] = max(0.0, x[j] - dust)
                    if x[j] < PRUNE_TOL:
                        x[j] = 0.0
                stranded = True
                break
            edges.append(nxt)
            st = te.arcs[nxt][2]
            if st in seen:
                raise RuntimeError("zero-delay cycle in time-expanded flow")
            seen.add(st)
        if stranded:
            continue
        bottleneck = min(x[j] for j in edges)
        for j in edges:
            x[j] -= bottleneck
            if x[j] < PRUNE_TOL:
                x[j] = 0.0
        phys = [te.arcs[j][1] for j in edges]
        phys = _simplify_walk(net, phys)
        if bottleneck > PRUNE_TOL and phys:
            raw[tuple(phys)] = raw.get(tuple(phys), 0.0) + bottleneck
    return [(Path(p), r) for p, r in sorted(raw.items())]


def _simplify_walk(net: Network, edges: list[int]) -> list[int]:
    """Drop cycles from a physical walk so it becomes a simple path."""
    while True:
        seq = [net.edges[edges[0]].u] + [net.edges[k].v for k in edges]
        seen: dict[int, int] = {}
        cut = None
        for pos, v in enumerate(seq):
            if v in seen:
                cut = (seen[v], pos)
                break
            seen[v] = pos
        if cut is None:
            return edges
        a, b = cut
        edges = edges[:a] + edges[b:]


def solve_exact(
    spec: ProblemSpec,
    cache: dict | None = None,
    deadline_cap: float | None = None,
) -> SolveReport:
    """True optimum of the delay-constrained problem via time-expanded
    networks; requires integer edge delays.

    Throughput objectives need one LP (larger deadlines never hurt). Delay
    objectives enumerate candidate deadline vectors drawn from achievable
    simple-path delays, best-first by objective value, with monotone
    dominance pruning; the first feasible vector is optimal. ``cache`` may
    be shared across calls with the same network, endpoints, and relative
    requirement profile to reuse feasibility LPs.
    """
    spec.validate()
    if not spec.network.has_integer_delays():
        raise ValueError("integer delays required for the exact solver")
    t0 = time.perf_counter()
    net = spec.network
    comms = spec.commodities

    caps = []
    for c in comms:
        cap = c.D
        if not math.isfinite(cap):
            cap = deadline_cap
        if cap is None or not math.isfinite(cap):
            all_delays = simple_path_delays(net, c.source, c.sink)
            if not all_delays:
                raise InfeasibleError(f"no path from {c.source} to {c.sink}")
            cap = all_delays[-1]
        caps.append(cap)

    if not spec.objective.is_delay:
        out = _exact_lp(spec, caps, "utility")
        sol, tes = out[0], out[1]
        if sol is None or sol.status == "infeasible":
            raise InfeasibleError("no feasible flow within the delay bounds")
        if sol.status != "optimal":
            raise RuntimeError(f"exact LP status {sol.status}")
        _, _, arc_var, rate_var = out
        flows = _flows_from_arcs(net, tes, arc_var, sol.x)
        return _exact_report(spec, flows, t0)

    # Delay objective: best-first over candidate deadline vectors.
    cands = []
    for c, cap in zip(comms, caps):
        ds = [d for d in simple_path_delays(net, c.source, c.sink) if d <= cap]
        if not ds:
            raise InfeasibleError(
                f"no {c.source}->{c.sink} path within delay bound {cap}"
            )
        cands.append(ds)

    max_r = max(c.R for c in comms)
    profile = [c.R / max_r for c in comms]
    if cache is None:
        cache = {}

    def value(idx: tuple[int, ...]) -> float:
        vals = [
            c.utility_d.value(cands[i][idx[i]]) for i, c in enumerate(comms)
        ]
        if spec.objective is Objective.MAX_DELAY_PENALTY:
            return max(vals)
        return sum(vals)

    def max_scale(idx: tuple[int, ...]) -> tuple[float, object]:
        deltas = tuple(cands[i][idx[i]] for i in range(len(comms)))
        key = (deltas, tuple(profile))
        if key in cache:
            return cache[key], None
        # Monotone dominance against exact cached values: h only grows with
        # the deadline vector, so a large infeasible vector or a small
        # feasible one settles this vector without an LP. The borrowed h is
        # one-sided, so it is not written back into the cache.
        for (other, prof), h in cache.items():
            if prof != tuple(profile):
                continue
            if all(o >= d for o, d in zip(other, deltas)) and h < max_r - 1e-6:
                return h, None
            if all(o <= d for o, d in zip(other, deltas)) and h >= max_r - 1e-6:
                return h, None
        out = _exact_lp(spec, list(deltas), "scale", profile)
        sol = out[0]
        if sol is None or sol.status == "infeasible":
            h = 0.0
        elif sol.status == "unbounded":
            h = math.inf
        else:
            h = sol.objective
        cache[key] = h
        return h, out

    start = tuple(0 for _ in comms)
    heap = [(value(start), start)]
    visited = {start}
    budget = 200_000
    while heap:
        budget -= 1
        if budget < 0:
            raise RuntimeError("deadline enumeration budget exceeded")
        _, idx = heapq.heappop(heap)
        h, out = max_scale(idx)
        if h >= max_r - 1e-6:
            if out is None:
                out = _exact_lp(
                    spec, [cands[i][idx[i]] for i in range(len(comms))],
                    "scale", profile,
                )
            sol, tes, arc_var, rate_var = out
            flows = _flows_from_arcs(net, tes, arc_var, sol.x)
            # Trim surplus rate from the slowest paths so |f_i| = R_i.
            trimmed = []
            for pf, c in zip(flows, comms):
                rate = sum(r for _, r in pf)
                if rate > c.R + FEAS_TOL:
                    pf = delete_slowest(net, pf, rate - c.R)
                trimmed.append(pf)
            return _exact_report(spec, trimmed, t0)
        for i in range(len(comms)):
            if idx[i] + 1 < len(cands[i]):
                nxt = idx[:i] + (idx[i] + 1,) + idx[i + 1 :]
                if nxt not in visited:
                    visited.add(nxt)
                    heapq.heappush(heap, (value(nxt), nxt))
    raise InfeasibleError("throughput requirements cannot be met")


def _flows_from_arcs(net, tes, arc_var, x):
    flows = []
    for i, te in enumerate(tes):
        arc_flow = np.array([x[arc_var[i][j]] for j in range(len(te.arcs))])
        flows.append(_extract_paths(net, te, arc_flow))
    return flows


def _exact_report(spec, flows, t0):
    sol = FlowSolution(tuple(tuple(pf) for pf in flows))
    metrics = evaluate_metrics(spec.network, sol)
    thr, dly = _constraint_ratios(spec, metrics)
    return SolveReport(
        algorithm="EXACT",
        solution=sol,
        metrics=metrics,
        objective=objective_value(spec, metrics),
        throughput_ratios=thr,
        delay_ratios=dly,
        wall_time=time.perf_counter() - t0,
    )
