"""Seeded random instance generator for property tests and the CLI.

Instances are feasible by construction: throughput requirements are set to a
fraction of what the greedy pusher can route, and delay bounds sit at or
above each commodity's shortest-path delay. Delays are small integers so the
exact time-expanded solver applies.
"""

from __future__ import annotations

import math

import numpy as np

from delayflow.graph import Edge, Network, shortest_path_by_delay
from delayflow.problem import (
    Commodity,
    Objective,
    PLFunction,
    ProblemSpec,
    scaled_identity,
    validate_utility_d,
    validate_utility_t,
)


def random_network(
    rng: np.random.Generator, max_nodes: int = 8, max_delay: int = 10
) -> Network:
    """Connected-ish random digraph with integer delays in 1..max_delay and
    integer capacities in 1..20."""
    n = int(rng.integers(3, max_nodes + 1))
    nodes = tuple(f"n{i}" for i in range(n))
    edges = []
    seen = set()
    # A random ring first so every node has a way in and out.
    order = list(rng.permutation(n))
    for a, b in zip(order, order[1:] + order[:1]):
        seen.add((a, b))
        edges.append((a, b))
    p = float(rng.uniform(0.25, 0.6))
    for u in range(n):
        for v in range(n):
            if u == v or (u, v) in seen:
                continue
            if rng.random() < p:
                seen.add((u, v))
                edges.append((u, v))
    built = tuple(
        Edge(
            u,
            v,
            float(rng.integers(1, max_delay + 1)),
            float(rng.integers(1, 21)),
        )
        for u, v in edges
    )
    return Network(nodes, built)


def random_concave_utility(rng: np.random.Generator) -> PLFunction:
    nseg = int(rng.integers(1, 4))
    slopes = sorted((float(rng.uniform(0.2, 3.0)) for _ in range(nseg)), reverse=True)
    widths = [float(rng.integers(1, 8)) for _ in range(nseg)]
    pts = [(0.0, 0.0)]
    for s, w in zip(slopes, widths):
        a, u = pts[-1]
        pts.append((a + w, u + s * w))
    f = PLFunction(tuple(pts))
    assert validate_utility_t(f) is None
    return f


def random_convex_penalty(rng: np.random.Generator) -> PLFunction:
    """Convex non-decreasing penalty whose segment lines all have nonnegative
    intercepts (so scaling the argument scales the value at most linearly).
    Built by lifting the whole function until the steepest line clears zero."""
    nseg = int(rng.integers(1, 4))
    slopes = sorted(float(rng.uniform(0.2, 3.0)) for _ in range(nseg))
    widths = [float(rng.integers(1, 8)) for _ in range(nseg)]
    pts = [(0.0, 0.0)]
    for s, w in zip(slopes, widths):
        a, u = pts[-1]
        pts.append((a + w, u + s * w))
    lift = max(0.0, -min(u - s * a for (a, u), s in zip(pts, slopes + slopes[-1:])))
    pts = [(a, u + lift) for a, u in pts]
    f = PLFunction(tuple(pts))
    assert validate_utility_d(f) is None
    return f


def _routable_rate(net: Network, s: str, t: str, residual: np.ndarray) -> float:
    """Rate the greedy shortest-path pusher can route s->t; mutates residual."""
    total = 0.0
    while True:
        p = shortest_path_by_delay(net, residual, s, t)
        if p is None:
            return total
        room = min(residual[k] for k in p.edges)
        if room <= 0:
            return total
        for k in p.edges:
            residual[k] -= room
        total += room


def random_problem(
    rng: np.random.Generator,
    max_nodes: int = 8,
    max_delay: int = 10,
    objective: Objective | None = None,
) -> ProblemSpec:
    net = random_network(rng, max_nodes, max_delay)
    if objective is None:
        objective = list(Objective)[int(rng.integers(0, 4))]
    k = int(rng.integers(1, 3))
    residual = net.capacities()
    comms = []
    used = set()
    n = len(net.nodes)
    for _ in range(k):
        for _ in range(30):
            s, t = (int(x) for x in rng.integers(0, n, size=2))
            if s == t or (s, t) in used:
                continue
            sp = shortest_path_by_delay(
                net, net.capacities(), net.nodes[s], net.nodes[t]
            )
            if sp is None:
                continue
            cap = _routable_rate(net, net.nodes[s], net.nodes[t], residual)
            if cap <= 0.5:
                continue
            used.add((s, t))
            break
        else:
            continue
        sp_delay = sp.delay(net)
        if objective.is_delay:
            # Requirement the greedy pusher just met; no delay bound so the
            # counterpart stays feasible.
            comms.append(
                Commodity(
                    net.nodes[s],
                    net.nodes[t],
                    R=round(float(rng.uniform(0.3, 0.9)) * cap, 3),
                    D=math.inf,
                    w=float(rng.integers(1, 5)),
                    utility_d=(
                        scaled_identity(float(rng.integers(1, 5)))
                        if rng.random() < 0.5
                        else random_convex_penalty(rng)
                    ),
                )
            )
        else:
            comms.append(
                Commodity(
                    net.nodes[s],
                    net.nodes[t],
                    R=0.0,
                    D=float(math.ceil(sp_delay * float(rng.uniform(1.0, 3.0)))),
                    utility_t=(
                        random_concave_utility(rng)
                        if rng.random() < 0.5
                        else scaled_identity(1.0)
                    ),
                )
            )
    if not comms:
        # Degenerate draw; retry with a fresh graph.
        return random_problem(rng, max_nodes, max_delay, objective)
    return ProblemSpec(net, tuple(comms), objective)
