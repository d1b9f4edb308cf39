"""Infrastructure graphs: topology, sensor placement, and distance metrics.

Networks are undirected, unweighted graphs with 2D node coordinates and a
designated sensor subset. Node order is canonicalized (sorted ids) so that
every downstream vector or matrix indexed by node is deterministic.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

NodeId = str


@dataclass(frozen=True, eq=False)
class NetworkGraph:
    """Immutable undirected graph with coordinates and sensors.

    ``nodes`` is sorted; ``positions[i]`` and ``neighbors[i]`` refer to
    ``nodes[i]``. All operations are pure, so instances are safe to share
    across workers.
    """

    nodes: tuple[NodeId, ...]
    positions: np.ndarray  # (n, 2) float64
    neighbors: tuple[tuple[int, ...], ...]
    sensors: tuple[NodeId, ...]

    @cached_property
    def _index(self) -> dict[NodeId, int]:
        return {node: i for i, node in enumerate(self.nodes)}

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return sum(len(adj) for adj in self.neighbors) // 2

    @cached_property
    def sensor_indices(self) -> np.ndarray:
        return np.array([self._index[s] for s in self.sensors], dtype=np.intp)

    def index_of(self, node: NodeId) -> int:
        try:
            return self._index[node]
        except KeyError:
            raise KeyError(f"unknown node {node!r}") from None

    def degree(self, node: NodeId) -> int:
        return len(self.neighbors[self.index_of(node)])

    def edges(self) -> list[tuple[NodeId, NodeId]]:
        out = []
        for i, adj in enumerate(self.neighbors):
            for j in adj:
                if i < j:
                    out.append((self.nodes[i], self.nodes[j]))
        return out

    def hops_from(self, source: NodeId) -> np.ndarray:
        """BFS hop counts from ``source`` to every node; inf if unreachable."""
        dist = np.full(self.n_nodes, np.inf)
        start = self.index_of(source)
        dist[start] = 0
        queue = deque([start])
        while queue:
            u = queue.popleft()
            du = dist[u] + 1
            for v in self.neighbors[u]:
                if math.isinf(dist[v]):
                    dist[v] = du
                    queue.append(v)
        return dist


def max_degree(g: NetworkGraph) -> int:
    """Maximum neighbor count over all nodes; 0 for an edgeless graph."""
    if g.n_nodes == 0:
        return 0
    return max(len(adj) for adj in g.neighbors)


def topological_distance(g: NetworkGraph, u: NodeId, v: NodeId) -> int | float:
    """Shortest-path length in hops; ``math.inf`` when disconnected."""
    if u == v:
        g.index_of(u)  # still validate
        return 0
    d = g.hops_from(u)[g.index_of(v)]
    return math.inf if math.isinf(d) else int(d)


def geographic_distance(g: NetworkGraph, u: NodeId, v: NodeId) -> float:
    """Euclidean distance between node coordinates, in the same units."""
    pu = g.positions[g.index_of(u)]
    pv = g.positions[g.index_of(v)]
    return float(math.hypot(pu[0] - pv[0], pu[1] - pv[1]))


def build_graph(
    edges: Iterable[tuple[NodeId, NodeId]],
    positions: Mapping[NodeId, tuple[float, float]] | Iterable[tuple[NodeId, float, float]],
    sensors: Iterable[NodeId],
) -> NetworkGraph:
    """Validate and canonicalize a graph description.

    ``positions`` declares the node set (every node needs coordinates).
    Rejects duplicate node ids, self loops, duplicate edges, edges or
    sensors referencing undeclared nodes, and non-finite coordinates.
    """
    if isinstance(positions, Mapping):
        records = [(str(n), float(x), float(y)) for n, (x, y) in positions.items()]
    else:
        records = [(str(n), float(x), float(y)) for n, x, y in positions]

    seen: dict[NodeId, tuple[float, float]] = {}
    for node, x, y in records:
        if node in seen:
            raise ValueError(f"duplicate node id {node!r}")
        if not (math.isfinite(x) and math.isfinite(y)):
            raise ValueError(f"non-finite coordinates for node {node!r}")
        seen[node] = (x, y)

    nodes = tuple(sorted(seen))
    index = {node: i for i, node in enumerate(nodes)}
    pos = np.array([seen[n] for n in nodes], dtype=np.float64)

    adj: list[set[int]] = [set() for _ in nodes]
    edge_set: set[tuple[int, int]] = set()
    for a, b in edges:
        a, b = str(a), str(b)
        for end in (a, b):
            if end not in index:
                raise ValueError(f"unknown node {end!r} in edge list")
        if a == b:
            raise ValueError(f"self-loop edge at node {a!r}")
        i, j = index[a], index[b]
        key = (min(i, j), max(i, j))
        if key in edge_set:
            raise ValueError(f"duplicate edge ({a!r}, {b!r})")
        edge_set.add(key)
        adj[i].add(j)
        adj[j].add(i)

    sensor_list = []
    for s in sensors:
        s = str(s)
        if s not in index:
            raise ValueError(f"unknown sensor node {s!r}")
        sensor_list.append(s)
    if len(set(sensor_list)) != len(sensor_list):
        raise ValueError("duplicate sensor id")

    return NetworkGraph(
        nodes=nodes,
        positions=pos,
        neighbors=tuple(tuple(sorted(a)) for a in adj),
        sensors=tuple(sorted(sensor_list)),
    )


def _largest_component(n: int, adj: list[set[int]]) -> list[int]:
    seen = [False] * n
    best: list[int] = []
    for start in range(n):
        if seen[start]:
            continue
        comp = [start]
        seen[start] = True
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                if not seen[v]:
                    seen[v] = True
                    comp.append(v)
                    queue.append(v)
        if len(comp) > len(best):
            best = comp
    return sorted(best)


def _farthest_point_sensors(g: NetworkGraph, count: int, rng: np.random.Generator) -> list[NodeId]:
    """Greedy max-min placement over hop distance; seeded start, id tie-break."""
    if count <= 0:
        return []
    count = min(count, g.n_nodes)
    first = int(rng.integers(g.n_nodes))
    chosen = [first]
    min_dist = g.hops_from(g.nodes[first])
    while len(chosen) < count:
        # unreachable nodes (inf) are treated as maximally far
        finite = np.where(np.isinf(min_dist), g.n_nodes + 1.0, min_dist)
        finite[chosen] = -1.0
        nxt = int(np.argmax(finite))  # first max = smallest node index on ties
        chosen.append(nxt)
        min_dist = np.minimum(min_dist, g.hops_from(g.nodes[nxt]))
    return [g.nodes[i] for i in chosen]


def random_geometric_graph(
    n: int, radius: float, sensor_count: int, seed: int
) -> NetworkGraph:
    """Seeded random geometric graph restricted to its largest component.

    Draws ``n`` uniform points in the unit square (one ``rng.random((n, 2))``
    call), connects pairs within ``radius``, keeps the largest connected
    component, and places ``sensor_count`` sensors by farthest-point
    sampling over hop distance (greedy start drawn from the same stream).
    ``sensor_count`` is capped at the retained component size.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if sensor_count < 0 or sensor_count > n:
        raise ValueError("sensor_count must be in [0, n]")
    rng = np.random.default_rng(seed)
    pts = rng.random((n, 2))

    adj: list[set[int]] = [set() for _ in range(n)]
    r2 = radius * radius
    for i in range(n):
        d2 = np.sum((pts[i + 1 :] - pts[i]) ** 2, axis=1)
        for off in np.nonzero(d2 <= r2)[0]:
            j = i + 1 + int(off)
            adj[i].add(j)
            adj[j].add(i)

    keep = _largest_component(n, adj)
    width = max(3, len(str(n - 1)))
    ids = {i: f"n{i:0{width}d}" for i in keep}
    keep_set = set(keep)
    edges = [
        (ids[i], ids[j]) for i in keep for j in adj[i] if i < j and j in keep_set
    ]
    positions = {ids[i]: (float(pts[i, 0]), float(pts[i, 1])) for i in keep}

    g = build_graph(edges, positions, sensors=())
    sensors = _farthest_point_sensors(g, min(sensor_count, g.n_nodes), rng)
    return NetworkGraph(
        nodes=g.nodes,
        positions=g.positions,
        neighbors=g.neighbors,
        sensors=tuple(sorted(sensors)),
    )


def graph_to_dict(g: NetworkGraph) -> dict:
    return {
        "nodes": [
            {"id": node, "x": float(g.positions[i, 0]), "y": float(g.positions[i, 1])}
            for i, node in enumerate(g.nodes)
        ],
        "edges": [[a, b] for a, b in g.edges()],
        "sensors": list(g.sensors),
    }


def graph_from_dict(data: Mapping) -> NetworkGraph:
    try:
        positions = [(rec["id"], rec["x"], rec["y"]) for rec in data["nodes"]]
        edges = [(a, b) for a, b in data["edges"]]
        sensors = list(data["sensors"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed graph document: {exc}") from exc
    return build_graph(edges, positions, sensors)


def save_graph(g: NetworkGraph, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(graph_to_dict(g), fh, indent=1)
        fh.write("\n")


def load_graph(path: str) -> NetworkGraph:
    with open(path) as fh:
        return graph_from_dict(json.load(fh))
