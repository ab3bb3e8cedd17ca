"""Problem model: commodities, piecewise-linear utilities, the average-delay
counterpart LPs, and flow-metric evaluation."""

from __future__ import annotations

import enum
import math
import os
from dataclasses import dataclass, field

import numpy as np

from delayflow.graph import FEAS_TOL, Network, Path
from delayflow.lp import LinearProgram


def verify_tol() -> float:
    """Verification tolerance, overridable via DELAYFLOW_TOL."""
    return float(os.environ.get("DELAYFLOW_TOL", "1e-6"))


@dataclass(frozen=True)
class PLFunction:
    """Piecewise-linear function given by breakpoints (a_k, u_k), a_0 = 0,
    strictly increasing a_k; the last segment extends with its final slope."""

    points: tuple[tuple[float, float], ...]

    def __post_init__(self):
        pts = tuple((float(a), float(u)) for a, u in self.points)
        object.__setattr__(self, "points", pts)
        if not pts:
            raise ValueError("PLFunction needs at least one breakpoint")
        if pts[0][0] != 0.0:
            raise ValueError("first breakpoint must be at a=0")
        for (a0, _), (a1, _) in zip(pts, pts[1:]):
            if a1 <= a0:
                raise ValueError("breakpoint abscissae must strictly increase")

    def slopes(self) -> list[float]:
        s = [
            (u1 - u0) / (a1 - a0)
            for (a0, u0), (a1, u1) in zip(self.points, self.points[1:])
        ]
        return s or [0.0]

    def segments(self) -> list[tuple[float, float]]:
        """(slope, intercept-at-zero) per segment, extended rightward."""
        out = []
        for (a0, u0), slope in zip(self.points, self.slopes()):
            out.append((slope, u0 - slope * a0))
        return out

    def value(self, a: float) -> float:
        if a < 0:
            raise ValueError("argument must be nonnegative")
        pts = self.points
        for (a0, u0), (a1, u1) in zip(pts, pts[1:]):
            if a <= a1:
                return u0 + (u1 - u0) / (a1 - a0) * (a - a0)
        a0, u0 = pts[-1]
        return u0 + self.slopes()[-1] * (a - a0)


IDENTITY = PLFunction(((0.0, 0.0), (1.0, 1.0)))


def scaled_identity(w: float) -> PLFunction:
    return PLFunction(((0.0, 0.0), (1.0, float(w))))


def validate_utility_t(u: PLFunction) -> str | None:
    """Throughput utilities must be concave, non-decreasing, non-negative.
    Returns None when ok, else a description of the violation."""
    if u.points[0][1] < 0:
        return f"u(0) = {u.points[0][1]} is negative"
    slopes = u.slopes()
    for k, s in enumerate(slopes):
        if s < 0:
            return f"segment {k} has negative slope {s} (not non-decreasing)"
    for k, (s0, s1) in enumerate(zip(slopes, slopes[1:])):
        if s1 > s0 + 1e-12:
            return f"slopes increase at segment {k + 1} ({s0} -> {s1}, not concave)"
    return None


def validate_utility_d(u: PLFunction) -> str | None:
    """Delay penalties must be convex, non-decreasing, non-negative, and
    sublinear under argument scaling (U(sigma*a) <= sigma*U(a) for sigma>=1),
    which for PL functions is exactly: every segment line extended to a=0
    has a non-negative intercept."""
    if u.points[0][1] < 0:
        return f"u(0) = {u.points[0][1]} is negative"
    slopes = u.slopes()
    for k, s in enumerate(slopes):
        if s < 0:
            return f"segment {k} has negative slope {s} (not non-decreasing)"
    for k, (s0, s1) in enumerate(zip(slopes, slopes[1:])):
        if s1 < s0 - 1e-12:
            return f"slopes decrease at segment {k + 1} ({s0} -> {s1}, not convex)"
    for k, (slope, intercept) in enumerate(u.segments()):
        if intercept < -1e-12:
            return (
                f"segment {k} line y = {slope}*a + {intercept} has negative "
                "intercept, so scaling the argument can outgrow the value"
            )
    return None


@dataclass(frozen=True)
class Commodity:
    source: str
    sink: str
    R: float = 0.0
    D: float = math.inf
    w: float = 1.0
    utility_t: PLFunction = IDENTITY
    utility_d: PLFunction = IDENTITY

    def __post_init__(self):
        if self.source == self.sink:
            raise ValueError("source and sink must differ")
        if self.R < 0:
            raise ValueError("throughput requirement must be nonnegative")
        if not self.D > 0:
            raise ValueError("delay bound must be positive")
        if self.w < 0:
            raise ValueError("weight must be nonnegative")


class Objective(enum.Enum):
    SUM_THROUGHPUT_UTILITY = "SumThroughputUtility"
    SUM_DELAY_PENALTY = "SumDelayPenalty"
    MIN_THROUGHPUT_UTILITY = "MinThroughputUtility"
    MAX_DELAY_PENALTY = "MaxDelayPenalty"

    @property
    def is_delay(self) -> bool:
        return self in (Objective.SUM_DELAY_PENALTY, Objective.MAX_DELAY_PENALTY)


@dataclass(frozen=True)
class ProblemSpec:
    network: Network
    commodities: tuple[Commodity, ...]
    objective: Objective

    def __post_init__(self):
        if not self.commodities:
            raise ValueError("need at least one commodity")
        idx = self.network.node_index
        for c in self.commodities:
            for node in (c.source, c.sink):
                if node not in idx:
                    raise ValueError(f"unknown node {node!r}")

    def validate(self) -> None:
        """Raise if objective-relevant utilities fail their shape checks."""
        for i, c in enumerate(self.commodities):
            if self.objective.is_delay:
                msg = validate_utility_d(c.utility_d)
                if msg:
                    raise ValueError(f"commodity {i} delay utility: {msg}")
                if c.R <= 0:
                    raise ValueError(
                        f"commodity {i}: delay objectives need R > 0 "
                        "(average delay undefined at zero rate)"
                    )
            else:
                msg = validate_utility_t(c.utility_t)
                if msg:
                    raise ValueError(f"commodity {i} throughput utility: {msg}")


@dataclass(frozen=True)
class FlowSolution:
    """Per-commodity path flows; the path-form of a point of the feasible
    multi-commodity flow polytope."""

    flows: tuple[tuple[tuple[Path, float], ...], ...]

    def edge_flow(self, net: Network, i: int) -> np.ndarray:
        x = np.zeros(len(net.edges))
        for path, rate in self.flows[i]:
            for k in path.edges:
                x[k] += rate
        return x

    def total_edge_flow(self, net: Network) -> np.ndarray:
        x = np.zeros(len(net.edges))
        for i in range(len(self.flows)):
            x += self.edge_flow(net, i)
        return x

    def check_feasible(
        self, net: Network, commodities: tuple[Commodity, ...], tol: float | None = None
    ) -> list[str]:
        """Conservation, capacity, and nonnegativity violations (empty if ok)."""
        tol = verify_tol() if tol is None else tol
        issues = []
        for i, flow in enumerate(self.flows):
            for path, rate in flow:
                if rate < -tol:
                    issues.append(f"commodity {i}: negative path rate {rate}")
            x = self.edge_flow(net, i)
            s = net.index_of(commodities[i].source)
            t = net.index_of(commodities[i].sink)
            for v in range(len(net.nodes)):
                if v in (s, t):
                    continue
                inflow = sum(x[k] for k in net.in_edges[v])
                outflow = sum(x[k] for k in net.out_edges[v])
                if abs(inflow - outflow) > tol:
                    issues.append(
                        f"commodity {i}: conservation violated at {net.nodes[v]} "
                        f"(in {inflow}, out {outflow})"
                    )
        total = self.total_edge_flow(net)
        for k, e in enumerate(net.edges):
            if total[k] > e.capacity + tol:
                issues.append(
                    f"capacity exceeded on {net.nodes[e.u]}->{net.nodes[e.v]} "
                    f"({total[k]} > {e.capacity})"
                )
        return issues


@dataclass(frozen=True)
class CommodityMetrics:
    throughput: float
    max_delay: float
    total_delay: float
    avg_delay: float


def evaluate_metrics(net: Network, sol: FlowSolution) -> tuple[CommodityMetrics, ...]:
    out = []
    for flow in sol.flows:
        thr = sum(rate for _, rate in flow)
        carrying = [(p, r) for p, r in flow if r > FEAS_TOL]
        max_d = max((p.delay(net) for p, _ in carrying), default=0.0)
        total_d = sum(r * p.delay(net) for p, r in flow)
        avg_d = total_d / thr if thr > 0 else 0.0
        out.append(CommodityMetrics(thr, max_d, total_d, avg_d))
    return tuple(out)


def objective_value(spec: ProblemSpec, metrics: tuple[CommodityMetrics, ...]) -> float:
    """The target objective evaluated at a solution's metrics. Throughput
    objectives are maximized; delay objectives report the penalty being
    minimized."""
    obj = spec.objective
    if obj is Objective.SUM_THROUGHPUT_UTILITY:
        return sum(
            c.utility_t.value(m.throughput) for c, m in zip(spec.commodities, metrics)
        )
    if obj is Objective.MIN_THROUGHPUT_UTILITY:
        return min(
            c.utility_t.value(m.throughput) for c, m in zip(spec.commodities, metrics)
        )
    if obj is Objective.SUM_DELAY_PENALTY:
        return sum(
            c.utility_d.value(m.max_delay) for c, m in zip(spec.commodities, metrics)
        )
    return max(
        c.utility_d.value(m.max_delay) for c, m in zip(spec.commodities, metrics)
    )


@dataclass(frozen=True)
class CounterpartMap:
    """Maps counterpart-LP variables back to model quantities."""

    edge_var: dict[tuple[int, int], int]  # (commodity, edge) -> column
    rate_var: dict[int, int]  # commodity -> column for |f_i|
    aux_var: dict[int, int] = field(default_factory=dict)  # epigraph columns
    bound_var: int | None = None  # scalar for max-min objectives

    def edge_flows(self, net: Network, n_comms: int, x: np.ndarray) -> list[np.ndarray]:
        flows = []
        for i in range(n_comms):
            f = np.zeros(len(net.edges))
            for k in range(len(net.edges)):
                f[k] = x[self.edge_var[(i, k)]]
            flows.append(f)
        return flows


def build_counterpart(spec: ProblemSpec) -> tuple[LinearProgram, CounterpartMap]:
    """Average-delay-aware counterpart LP of ``spec``.

    Throughput objectives get the relaxation with T(f_i) <= D_i*|f_i| and
    |f_i| >= R_i; delay objectives pin |f_i| = R_i and bound T(f_i) <=
    D_i*R_i, minimizing the penalty of the average delay T_i/R_i. PL
    utilities enter exactly through one epigraph variable per commodity.
    """
    spec.validate()
    net = spec.network
    comms = spec.commodities
    K = len(comms)
    E = len(net.edges)
    delays = net.delays()

    edge_var = {(i, k): i * E + k for i in range(K) for k in range(E)}
    rate_var = {i: K * E + i for i in range(K)}
    aux_var = {i: K * E + K + i for i in range(K)}
    nvars = K * E + 2 * K
    bound_var = None
    if spec.objective in (Objective.MIN_THROUGHPUT_UTILITY, Objective.MAX_DELAY_PENALTY):
        bound_var = nvars
        nvars += 1

    rows, rels, rhs = [], [], []

    def new_row():
        r = np.zeros(nvars)
        rows.append(r)
        return r

    for i, c in enumerate(comms):
        s, t = net.index_of(c.source), net.index_of(c.sink)
        # |f_i| defined as net outflow at the source.
        r = new_row()
        for k in net.out_edges[s]:
            r[edge_var[(i, k)]] = 1.0
        for k in net.in_edges[s]:
            r[edge_var[(i, k)]] = -1.0
        r[rate_var[i]] = -1.0
        rels.append("=")
        rhs.append(0.0)
        # Conservation at interior nodes.
        for v in range(len(net.nodes)):
            if v in (s, t):
                continue
            r = new_row()
            for k in net.out_edges[v]:
                r[edge_var[(i, k)]] += 1.0
            for k in net.in_edges[v]:
                r[edge_var[(i, k)]] -= 1.0
            rels.append("=")
            rhs.append(0.0)
        # Throughput requirement.
        if spec.objective.is_delay:
            r = new_row()
            r[rate_var[i]] = 1.0
            rels.append("=")
            rhs.append(c.R)
        elif c.R > 0:
            r = new_row()
            r[rate_var[i]] = 1.0
            rels.append(">=")
            rhs.append(c.R)
        # Average-delay bound (dropped when D_i is infinite).
        if math.isfinite(c.D):
            r = new_row()
            for k in range(E):
                r[edge_var[(i, k)]] = delays[k]
            if spec.objective.is_delay:
                rels.append("<=")
                rhs.append(c.D * c.R)
            else:
                r[rate_var[i]] -= c.D
                rels.append("<=")
                rhs.append(0.0)
        # Epigraph rows for the PL utility.
        if spec.objective.is_delay:
            # aux_i >= U_d(T_i / R_i): R_i*aux_i - slope*T_i >= intercept*R_i
            for slope, intercept in c.utility_d.segments():
                r = new_row()
                r[aux_var[i]] = c.R
                for k in range(E):
                    r[edge_var[(i, k)]] = -slope * delays[k]
                rels.append(">=")
                rhs.append(intercept * c.R)
        else:
            # aux_i <= U_t(|f_i|): aux_i - slope*f_i <= intercept
            for slope, intercept in c.utility_t.segments():
                r = new_row()
                r[aux_var[i]] = 1.0
                r[rate_var[i]] = -slope
                rels.append("<=")
                rhs.append(intercept)

    # Link capacity coupling.
    for k, e in enumerate(net.edges):
        r = new_row()
        for i in range(K):
            r[edge_var[(i, k)]] = 1.0
        rels.append("<=")
        rhs.append(e.capacity)

    objective = np.zeros(nvars)
    if spec.objective is Objective.SUM_THROUGHPUT_UTILITY:
        sense = "max"
        for i in range(K):
            objective[aux_var[i]] = 1.0
    elif spec.objective is Objective.SUM_DELAY_PENALTY:
        sense = "min"
        for i in range(K):
            objective[aux_var[i]] = 1.0
    elif spec.objective is Objective.MIN_THROUGHPUT_UTILITY:
        sense = "max"
        objective[bound_var] = 1.0
        for i in range(K):
            r = new_row()
            r[bound_var] = 1.0
            r[aux_var[i]] = -1.0
            rels.append("<=")
            rhs.append(0.0)
    else:  # MAX_DELAY_PENALTY: minimize the worst penalty
        sense = "min"
        objective[bound_var] = 1.0
        for i in range(K):
            r = new_row()
            r[bound_var] = 1.0
            r[aux_var[i]] = -1.0
            rels.append(">=")
            rhs.append(0.0)

    lp = LinearProgram(sense, objective, np.array(rows), tuple(rels), np.array(rhs))
    return lp, CounterpartMap(edge_var, rate_var, aux_var, bound_var)


def make_tcdm(
    net: Network, demands: list[tuple[str, str, float, float]]
) -> ProblemSpec:
    """Throughput-constrained weighted max-delay minimization: demands are
    (source, sink, R, w); no delay bound."""
    comms = tuple(
        Commodity(s, t, R=R, D=math.inf, w=w, utility_d=scaled_identity(w))
        for s, t, R, w in demands
    )
    return ProblemSpec(net, comms, Objective.SUM_DELAY_PENALTY)


def make_dcum(
    net: Network, demands: list[tuple[str, str, float, PLFunction]]
) -> ProblemSpec:
    """Delay-constrained throughput-utility maximization: demands are
    (source, sink, D, utility_t); no throughput requirement."""
    comms = tuple(
        Commodity(s, t, R=0.0, D=D, utility_t=u) for s, t, D, u in demands
    )
    return ProblemSpec(net, comms, Objective.SUM_THROUGHPUT_UTILITY)


# -- problem spec JSON ------------------------------------------------------

_OBJECTIVE_NAMES = {o.value: o for o in Objective}


def _pl_from_json(obj) -> PLFunction:
    return PLFunction(tuple((float(a), float(u)) for a, u in obj["points"]))


def _pl_to_json(u: PLFunction):
    return {"points": [[a, v] for a, v in u.points]}


def problem_from_json(doc: dict, net: Network) -> ProblemSpec:
    try:
        objective = _OBJECTIVE_NAMES[doc["objective"]]
    except KeyError:
        raise ValueError(f"unknown objective {doc.get('objective')!r}") from None
    comms = []
    for c in doc["commodities"]:
        d_raw = c.get("D", "inf")
        comms.append(
            Commodity(
                source=c["src"],
                sink=c["dst"],
                R=float(c.get("R", 0.0)),
                D=math.inf if d_raw == "inf" else float(d_raw),
                w=float(c.get("w", 1.0)),
                utility_t=_pl_from_json(c["utility_t"]) if "utility_t" in c else IDENTITY,
                utility_d=_pl_from_json(c["utility_d"]) if "utility_d" in c else IDENTITY,
            )
        )
    return ProblemSpec(net, tuple(comms), objective)


def problem_to_json(spec: ProblemSpec) -> dict:
    return {
        "objective": spec.objective.value,
        "commodities": [
            {
                "src": c.source,
                "dst": c.sink,
                "R": c.R,
                "D": "inf" if math.isinf(c.D) else c.D,
                "w": c.w,
                "utility_t": _pl_to_json(c.utility_t),
                "utility_d": _pl_to_json(c.utility_d),
            }
            for c in spec.commodities
        ],
    }
