"""Directed network model, topology I/O, and delay-based shortest paths."""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

#: Edges with residual capacity below this are treated as saturated (Mbps).
FEAS_TOL = 1e-9


class TopologyError(ValueError):
    """Raised for malformed topology input."""


@dataclass(frozen=True)
class Edge:
    u: int
    v: int
    delay: float
    capacity: float


@dataclass(frozen=True)
class Network:
    """Immutable directed graph with per-edge delay (ms) and capacity (Mbps).

    Node identifiers are opaque strings; internally nodes get dense integer
    indices in declaration order so runs are deterministic.
    """

    nodes: tuple[str, ...]
    edges: tuple[Edge, ...]
    out_edges: tuple[tuple[int, ...], ...] = field(repr=False, default=())
    in_edges: tuple[tuple[int, ...], ...] = field(repr=False, default=())

    def __post_init__(self):
        if len(set(self.nodes)) != len(self.nodes):
            raise TopologyError("duplicate node identifier")
        for e in self.edges:
            if not (0 <= e.u < len(self.nodes) and 0 <= e.v < len(self.nodes)):
                raise TopologyError("edge endpoint out of range")
            if e.u == e.v:
                raise TopologyError("self-loops are not allowed")
            if e.delay < 0:
                raise TopologyError("negative delay")
            if e.capacity < 0:
                raise TopologyError("negative capacity")
        out = [[] for _ in self.nodes]
        inc = [[] for _ in self.nodes]
        for k, e in enumerate(self.edges):
            out[e.u].append(k)
            inc[e.v].append(k)
        object.__setattr__(self, "out_edges", tuple(tuple(x) for x in out))
        object.__setattr__(self, "in_edges", tuple(tuple(x) for x in inc))

    @property
    def node_index(self) -> dict[str, int]:
        return {name: i for i, name in enumerate(self.nodes)}

    def index_of(self, node: str) -> int:
        try:
            return self.nodes.index(node)
        except ValueError:
            raise KeyError(f"unknown node {node!r}") from None

    def delays(self) -> np.ndarray:
        return np.array([e.delay for e in self.edges], dtype=np.float64)

    def capacities(self) -> np.ndarray:
        return np.array([e.capacity for e in self.edges], dtype=np.float64)

    def has_integer_delays(self) -> bool:
        return all(float(e.delay).is_integer() for e in self.edges)


@dataclass(frozen=True)
class Path:
    """Simple directed path, stored as an ordered tuple of edge indices."""

    edges: tuple[int, ...]

    def nodes(self, net: Network) -> tuple[str, ...]:
        seq = [net.edges[self.edges[0]].u]
        for k in self.edges:
            if net.edges[k].u != seq[-1]:
                raise ValueError("path edges are not contiguous")
            seq.append(net.edges[k].v)
        names = tuple(net.nodes[i] for i in seq)
        if len(set(names)) != len(names):
            raise ValueError("path repeats a node")
        return names

    def delay(self, net: Network) -> float:
        return sum(net.edges[k].delay for k in self.edges)


def _parse_number(token: str, what: str, lineno: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise TopologyError(f"line {lineno}: bad {what} {token!r}") from None
    if value < 0:
        raise TopologyError(f"line {lineno}: negative {what}")
    return value


def load_topology(text: str) -> Network:
    """Parse a line-oriented topology file.

    Directives: ``node <id>``, ``edge <u> <v> <delay_ms> <capacity_mbps>``,
    ``uedge ...`` (expands to both directions), ``#`` comments.
    """
    nodes: list[str] = []
    edges: list[Edge] = []
    index: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        kind = parts[0]
        if kind == "node":
            if len(parts) != 2:
                raise TopologyError(f"line {lineno}: expected 'node <id>'")
            name = parts[1]
            if name in index:
                raise TopologyError(f"line {lineno}: duplicate node {name!r}")
            index[name] = len(nodes)
            nodes.append(name)
        elif kind in ("edge", "uedge"):
            if len(parts) != 5:
                raise TopologyError(
                    f"line {lineno}: expected '{kind} <u> <v> <delay> <capacity>'"
                )
            u, v = parts[1], parts[2]
            for name in (u, v):
                if name not in index:
                    raise TopologyError(f"line {lineno}: unknown node {name!r}")
            d = _parse_number(parts[3], "delay", lineno)
            c = _parse_number(parts[4], "capacity", lineno)
            edges.append(Edge(index[u], index[v], d, c))
            if kind == "uedge":
                edges.append(Edge(index[v], index[u], d, c))
        else:
            raise TopologyError(f"line {lineno}: unknown directive {kind!r}")
    return Network(tuple(nodes), tuple(edges))


def _fmt(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def serialize_topology(net: Network) -> str:
    """Normalized topology text; inverse of load_topology on its own output."""
    lines = [f"node {n}" for n in net.nodes]
    for e in net.edges:
        lines.append(
            f"edge {net.nodes[e.u]} {net.nodes[e.v]} {_fmt(e.delay)} {_fmt(e.capacity)}"
        )
    return "\n".join(lines) + "\n"


#: (delay ms, capacity Mbps) per undirected link of the six-datacenter
#: EC2 measurement set (OR Oregon, VA Virginia, IR Ireland, TO Tokyo,
#: SI Singapore, SP Sao Paulo).
_EC2_LINKS = {
    ("OR", "VA"): (41, 82),
    ("OR", "IR"): (86, 86),
    ("OR", "TO"): (68, 138),
    ("OR", "SI"): (117, 74),
    ("OR", "SP"): (104, 67),
    ("VA", "IR"): (54, 72),
    ("VA", "TO"): (101, 41),
    ("VA", "SI"): (127, 52),
    ("VA", "SP"): (82, 70),
    ("IR", "TO"): (138, 56),
    ("IR", "SI"): (117, 44),
    ("IR", "SP"): (120, 61),
    ("TO", "SI"): (45, 166),
    ("TO", "SP"): (151, 41),
    ("SI", "SP"): (182, 33),
}

_EC2_NODES = ("OR", "VA", "IR", "TO", "SI", "SP")


def builtin_ec2() -> Network:
    """Complete graph on the six EC2 datacenters, each undirected link
    expanded to two independent directed edges."""
    index = {n: i for i, n in enumerate(_EC2_NODES)}
    edges = []
    for (u, v), (d, c) in _EC2_LINKS.items():
        edges.append(Edge(index[u], index[v], float(d), float(c)))
        edges.append(Edge(index[v], index[u], float(d), float(c)))
    return Network(_EC2_NODES, tuple(edges))


def shortest_path_by_delay(
    net: Network, residual: np.ndarray, s: str, t: str
) -> Path | None:
    """Minimum-delay s->t path over edges with residual capacity > FEAS_TOL.

    Ties are broken toward the lexicographically smallest node-identifier
    sequence. Returns None when t is unreachable.
    """
    si, ti = net.index_of(s), net.index_of(t)
    if si == ti:
        raise ValueError("source and sink must differ")
    residual = np.asarray(residual, dtype=np.float64)
    if residual.shape != (len(net.edges),):
        raise ValueError("residual must have one entry per edge")
    if np.any(residual < -FEAS_TOL):
        raise ValueError("residual entries must be nonnegative")

    # Dijkstra with (delay, node-name path) keys; the path component makes
    # the tie-break deterministic. Graphs here are small enough that carrying
    # the path in the heap is cheap.
    heap: list[tuple[float, tuple[str, ...], int, tuple[int, ...]]] = [
        (0.0, (net.nodes[si],), si, ())
    ]
    settled: set[int] = set()
    while heap:
        dist, names, u, edge_seq = heapq.heappop(heap)
        if u in settled:
            continue
        settled.add(u)
        if u == ti:
            return Path(edge_seq)
        for k in net.out_edges[u]:
            e = net.edges[k]
            if residual[k] <= FEAS_TOL or e.v in settled:
                continue
            if net.nodes[e.v] in names:
                continue  # zero-delay edges could otherwise close a cycle
            heapq.heappush(
                heap,
                (dist + e.delay, names + (net.nodes[e.v],), e.v, edge_seq + (k,)),
            )
    return None
