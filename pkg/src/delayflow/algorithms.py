"""The slowest-path-deletion solver family and its certificate checks.

All three solvers share the same first step: solve the average-delay-aware
counterpart LP once and decompose it into path flows. They differ in what
they delete afterwards: a fixed epsilon fraction of every commodity's rate
(constant relaxation of both constraint families), whole slowest paths until
each delay bound holds exactly, or nothing at all (throughput requirements
met exactly).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

from delayflow.decompose import cancel_cycles, decompose
from delayflow.graph import FEAS_TOL, Network, Path
from delayflow.lp import solve_lp
from delayflow.problem import (
    CommodityMetrics,
    FlowSolution,
    ProblemSpec,
    build_counterpart,
    evaluate_metrics,
    objective_value,
)


class InfeasibleError(RuntimeError):
    """The average-delay counterpart (hence the problem itself) is infeasible."""


PathFlow = list[tuple[Path, float]]


@dataclass
class SolveReport:
    algorithm: str  # PASS | PASS-M | PASS-T | GREEDY | EXACT
    solution: FlowSolution
    metrics: tuple[CommodityMetrics, ...]
    objective: float
    counterpart: FlowSolution | None = None
    counterpart_metrics: tuple[CommodityMetrics, ...] | None = None
    epsilon: float | None = None
    epsilon_max: float | None = None
    epsilon_min: float | None = None
    lam: float | None = None  # PASS-T delay ratio; math.inf when unbounded
    throughput_ratios: tuple[float, ...] = ()  # |f_i| / R_i (inf when R_i = 0)
    delay_ratios: tuple[float, ...] = ()  # M(f_i) / D_i (0 when D_i = inf)
    feasible: bool = True
    wall_time: float = 0.0


def _constraint_ratios(spec, metrics):
    thr, dly = [], []
    for c, m in zip(spec.commodities, metrics):
        thr.append(m.throughput / c.R if c.R > 0 else math.inf)
        dly.append(m.max_delay / c.D if math.isfinite(c.D) else 0.0)
    return tuple(thr), tuple(dly)


def _deletion_order_key(net: Network):
    def key(item):
        path, rate = item
        return (-path.delay(net), -rate, path.nodes(net))

    return key


def delete_slowest(net: Network, path_flow: PathFlow, amount: float) -> PathFlow:
    """Remove ``amount`` total rate, drawn from paths in non-increasing
    delay order (ties: larger rate first, then lexicographically smaller
    node sequence); the last path touched may be reduced partially."""
    total = sum(r for _, r in path_flow)
    if amount < -FEAS_TOL or amount > total + FEAS_TOL:
        raise ValueError(f"deletion amount {amount} outside [0, {total}]")
    remaining = [r for _, r in path_flow]
    live = list(range(len(path_flow)))
    left = amount
    while left > FEAS_TOL and live:
        live.sort(
            key=lambda i: (
                -path_flow[i][0].delay(net),
                -remaining[i],
                path_flow[i][0].nodes(net),
            )
        )
        i = live[0]
        take = min(remaining[i], left)
        remaining[i] -= take
        left -= take
        if remaining[i] <= FEAS_TOL:
            live.pop(0)
    return [
        (p, remaining[i])
        for i, (p, _) in enumerate(path_flow)
        if remaining[i] > FEAS_TOL
    ]


def _solve_counterpart(spec: ProblemSpec) -> tuple[FlowSolution, list[PathFlow]]:
    lp, cmap = build_counterpart(spec)
    sol = solve_lp(lp)
    if sol.status == "infeasible":
        raise InfeasibleError("average-delay counterpart is infeasible")
    if sol.status != "optimal":
        raise RuntimeError(f"counterpart LP ended with status {sol.status}")
    net = spec.network
    edge_flows = cmap.edge_flows(net, len(spec.commodities), sol.x)
    path_flows: list[PathFlow] = []
    for c, x in zip(spec.commodities, edge_flows):
        x = cancel_cycles(net, x, c.source, c.sink)
        path_flows.append(decompose(net, c.source, c.sink, x))
    return FlowSolution(tuple(tuple(pf) for pf in path_flows)), path_flows


def _finish_report(spec, algorithm, path_flows, counterpart_flows, **extra):
    sol = FlowSolution(tuple(tuple(pf) for pf in path_flows))
    metrics = evaluate_metrics(spec.network, sol)
    hat_sol = FlowSolution(tuple(tuple(pf) for pf in counterpart_flows))
    hat_metrics = evaluate_metrics(spec.network, hat_sol)
    thr, dly = _constraint_ratios(spec, metrics)
    return SolveReport(
        algorithm=algorithm,
        solution=sol,
        metrics=metrics,
        objective=objective_value(spec, metrics),
        counterpart=hat_sol,
        counterpart_metrics=hat_metrics,
        throughput_ratios=thr,
        delay_ratios=dly,
        **extra,
    )


def solve_pass(spec: ProblemSpec, epsilon: float) -> SolveReport:
    """Solve the counterpart once, then delete an epsilon fraction of each
    commodity's rate from its slowest flow-carrying paths.

    The result satisfies |f_i| >= (1-epsilon)*R_i, M(f_i) <= D_i/epsilon
    for finite D_i, and full feasibility.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    t0 = time.perf_counter()
    _, hat_flows = _solve_counterpart(spec)
    bar_flows = []
    for pf in hat_flows:
        rate = sum(r for _, r in pf)
        bar_flows.append(delete_slowest(spec.network, pf, epsilon * rate))
    report = _finish_report(spec, "PASS", bar_flows, hat_flows, epsilon=epsilon)
    report.wall_time = time.perf_counter() - t0
    return report


def solve_pass_m(spec: ProblemSpec) -> SolveReport:
    """Delete whole slowest paths until every commodity's maximum delay
    meets its bound exactly; delay bounds must all be finite."""
    for i, c in enumerate(spec.commodities):
        if not math.isfinite(c.D):
            raise ValueError(f"commodity {i}: PASS-M needs a finite delay bound")
    t0 = time.perf_counter()
    _, hat_flows = _solve_counterpart(spec)
    net = spec.network
    bar_flows = []
    eps_i = []
    for pf, c in zip(hat_flows, spec.commodities):
        flow = list(pf)
        key = _deletion_order_key(net)
        while flow:
            flow.sort(key=key)
            if flow[0][0].delay(net) <= c.D:
                break
            flow.pop(0)
        bar_flows.append(flow)
        hat_rate = sum(r for _, r in pf)
        bar_rate = sum(r for _, r in flow)
        eps_i.append((hat_rate - bar_rate) / hat_rate if hat_rate > FEAS_TOL else 0.0)
    report = _finish_report(
        spec,
        "PASS-M",
        bar_flows,
        hat_flows,
        epsilon_max=max(eps_i),
        epsilon_min=min(eps_i),
    )
    report.wall_time = time.perf_counter() - t0
    return report


def solve_pass_t(spec: ProblemSpec) -> SolveReport:
    """Return the decomposed counterpart optimum unmodified; throughput
    requirements hold exactly."""
    t0 = time.perf_counter()
    _, hat_flows = _solve_counterpart(spec)
    report = _finish_report(spec, "PASS-T", [list(pf) for pf in hat_flows], hat_flows)
    report.wall_time = time.perf_counter() - t0
    return report


def check_lemma1(
    net: Network, f_hat_i: PathFlow, f_bar_i: PathFlow, epsilon: float
) -> tuple[bool, float]:
    """Deletion inequality for one commodity:
    T(f_bar) + epsilon*|f_hat|*M(f_bar) <= T(f_hat). Returns (holds, slack)."""
    t_hat = sum(r * p.delay(net) for p, r in f_hat_i)
    t_bar = sum(r * p.delay(net) for p, r in f_bar_i)
    rate_hat = sum(r for _, r in f_hat_i)
    m_bar = max((p.delay(net) for p, r in f_bar_i if r > FEAS_TOL), default=0.0)
    lhs = t_bar + epsilon * rate_hat * m_bar
    slack = t_hat - lhs
    return slack >= -1e-6, slack


def compute_lambda(pass_t_report: SolveReport, pass_report: SolveReport) -> float:
    """Delay-relaxation ratio of the no-deletion solver relative to a
    companion epsilon run: max(1, max_i M(f_i)/M(g_i)). Returns math.inf
    when some commodity has M(g_i) = 0 < M(f_i)."""
    if pass_t_report.algorithm != "PASS-T" or pass_report.algorithm != "PASS":
        raise ValueError("expected a PASS-T report and a PASS report")
    mt = pass_t_report.metrics
    mp = pass_report.metrics
    if len(mt) != len(mp):
        raise ValueError("reports come from different problem specs")
    lam = 1.0
    for a, b in zip(mt, mp):
        if b.max_delay <= FEAS_TOL:
            if a.max_delay > FEAS_TOL:
                return math.inf
            continue
        lam = max(lam, a.max_delay / b.max_delay)
    return lam
