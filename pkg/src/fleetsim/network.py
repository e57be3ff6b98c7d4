"""Road graph storage, nearest-node snapping, and shortest-path routing.

Every movement and every "nearest" query in the simulator is defined on the
network distance computed here. Coordinates are planar meters (inputs are
pre-projected); the service areas modeled are a few kilometers across, so no
geodesy is needed.

The network file is line-oriented text, UTF-8, with `#` comments:

    N,<id>,<x_m>,<y_m>
    E,<id>,<from>,<to>,<length_m>,<bidir 0|1>

Graphs must be strongly connected; loading rejects anything else, naming the
smallest unreachable node id.

Routing guarantees, relied on by tests and by deterministic replay:
  - distance(a, a) == 0 and distance(a, b) > 0 for a != b
  - network_distance(a, b) == shortest_path(a, b).total_length_m exactly
  - among equal-length paths the lexicographically smallest node sequence is
    returned, so identical inputs give identical routes on every run
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from pathlib import Path as FilePath
from typing import Iterable, Iterator

from .errors import DisconnectedGraph, ParseError, UnknownNode


@dataclass(frozen=True)
class Path:
    """An ordered node sequence with its total length in meters.

    The sequence is empty for a zero-length path (from == to). Consecutive
    nodes are always joined by an edge of the owning network.
    """

    node_sequence: tuple[int, ...]
    total_length_m: float


class RoadNetwork:
    """Immutable directed weighted graph with cached distance maps.

    The object is safe for concurrent reads once built: path queries are pure
    and the internal caches are only additive.
    """

    def __init__(
        self,
        nodes: dict[int, tuple[float, float]],
        edges: list[tuple[int, int, int, float, bool]],
    ):
        """Build and validate a network.

        :param nodes: node_id -> (x_m, y_m)
        :param edges: (edge_id, from_node, to_node, length_m, bidirectional)
        """
        if len(nodes) < 2:
            raise ParseError("a network needs at least 2 nodes")
        if not edges:
            raise ParseError("a network needs at least 1 edge")
        self._xy = dict(nodes)
        self._edges = list(edges)
        # adjacency: node -> sorted list of (neighbor, length_m)
        adj: dict[int, list[tuple[int, float]]] = {n: [] for n in nodes}
        radj: dict[int, list[tuple[int, float]]] = {n: [] for n in nodes}
        for edge_id, frm, to, length, bidir in edges:
            if frm not in nodes or to not in nodes:
                missing = frm if frm not in nodes else to
                raise ParseError(f"edge {edge_id} references unknown node {missing}")
            if length <= 0:
                raise ParseError(f"edge {edge_id} has non-positive length {length}")
            adj[frm].append((to, length))
            radj[to].append((frm, length))
            if bidir:
                adj[to].append((frm, length))
                radj[frm].append((to, length))
        for n in adj:
            adj[n].sort()
            radj[n].sort()
        self._adj = adj
        self._radj = radj
        self._dist_from: dict[int, dict[int, float]] = {}
        self._dist_to: dict[int, dict[int, float]] = {}
        self._check_strongly_connected()

    # -- construction helpers -------------------------------------------------

    def _check_strongly_connected(self) -> None:
        start = min(self._xy)
        fwd = self._reachable(self._adj, start)
        bwd = self._reachable(self._radj, start)
        unreachable = (set(self._xy) - fwd) | (set(self._xy) - bwd)
        if unreachable:
            raise DisconnectedGraph(min(unreachable))

    @staticmethod
    def _reachable(adj: dict[int, list[tuple[int, float]]], start: int) -> set[int]:
        seen = {start}
        stack = [start]
        while stack:
            u = stack.pop()
            for v, _ in adj[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        return seen

    # -- basic queries ---------------------------------------------------------

    @property
    def node_ids(self) -> list[int]:
        """All node ids, ascending."""
        return sorted(self._xy)

    @property
    def edges(self) -> list[tuple[int, int, int, float, bool]]:
        """The edge records as loaded (edge_id, from, to, length_m, bidir)."""
        return list(self._edges)

    def node_xy(self, node_id: int) -> tuple[float, float]:
        try:
            return self._xy[node_id]
        except KeyError:
            raise UnknownNode(node_id) from None

    def has_node(self, node_id: int) -> bool:
        return node_id in self._xy

    def nearest_node(self, x: float, y: float) -> int:
        """Snap a planar point to the closest node (ties to the smallest id)."""
        return min(
            self._xy,
            key=lambda n: ((self._xy[n][0] - x) ** 2 + (self._xy[n][1] - y) ** 2, n),
        )

    # -- shortest paths ---------------------------------------------------------

    def _dijkstra(self, adj: dict[int, list[tuple[int, float]]], source: int) -> dict[int, float]:
        dist = {source: 0.0}
        heap = [(0.0, source)]
        done: set[int] = set()
        while heap:
            d, u = heapq.heappop(heap)
            if u in done:
                continue
            done.add(u)
            for v, w in adj[u]:
                nd = d + w
                if v not in dist or nd < dist[v]:
                    dist[v] = nd
                    heapq.heappush(heap, (nd, v))
        return dist

    def _distances_from(self, source: int) -> dict[int, float]:
        if source not in self._dist_from:
            self._dist_from[source] = self._dijkstra(self._adj, source)
        return self._dist_from[source]

    def _distances_to(self, target: int) -> dict[int, float]:
        if target not in self._dist_to:
            self._dist_to[target] = self._dijkstra(self._radj, target)
        return self._dist_to[target]

    def network_distance(self, frm: int, to: int) -> float:
        """Shortest-path length in meters without materializing the path."""
        if frm not in self._xy:
            raise UnknownNode(frm)
        if to not in self._xy:
            raise UnknownNode(to)
        return self._distances_from(frm)[to]

    def shortest_path(self, frm: int, to: int) -> Path:
        """Minimum-length path; equal lengths break to the lexicographically
        smallest node sequence.

        The tie-break walks greedily from the source, at each node taking the
        smallest-id neighbor that still lies on some shortest path to the
        target (checked against a reverse-Dijkstra distance map). Lexicographic
        order is decided at the first differing position, so the greedy choice
        is globally optimal.
        """
        if frm not in self._xy:
            raise UnknownNode(frm)
        if to not in self._xy:
            raise UnknownNode(to)
        if frm == to:
            return Path((), 0.0)
        total = self._distances_from(frm)[to]
        dist_to = self._distances_to(to)
        seq = [frm]
        cur = frm
        while cur != to:
            rest = dist_to[cur]
            nxt = None
            for v, w in self._adj[cur]:  # sorted by neighbor id
                if v in dist_to and abs(w + dist_to[v] - rest) <= 1e-6 + 1e-12 * rest:
                    nxt = v
                    break
            if nxt is None:  # cannot happen on a strongly connected graph
                raise UnknownNode(to)
            seq.append(nxt)
            cur = nxt
        return Path(tuple(seq), total)

    def path_point(self, path: Path, progress_m: float) -> tuple[float, float]:
        """Interpolated (x, y) at progress_m meters along a path."""
        if not path.node_sequence:
            raise ValueError("cannot interpolate along an empty path")
        remaining = max(0.0, min(progress_m, path.total_length_m))
        seq = path.node_sequence
        for a, b in zip(seq, seq[1:]):
            seg = self._segment_length(a, b)
            if remaining <= seg or b == seq[-1]:
                ax, ay = self._xy[a]
                bx, by = self._xy[b]
                f = 0.0 if seg == 0 else min(1.0, remaining / seg)
                return (ax + f * (bx - ax), ay + f * (by - ay))
            remaining -= seg
        return self._xy[seq[-1]]

    def _segment_length(self, a: int, b: int) -> float:
        for v, w in self._adj[a]:
            if v == b:
                return w
        raise UnknownNode(b)


def network_distance(net: RoadNetwork, frm: int, to: int) -> float:
    return net.network_distance(frm, to)


def shortest_path(net: RoadNetwork, frm: int, to: int) -> Path:
    return net.shortest_path(frm, to)


def load_network(source: str | FilePath | Iterable[str]) -> RoadNetwork:
    """Parse and validate a network file.

    :param source: path to the file, or an iterable of lines.
    :raises ParseError: malformed record, bad reference, or too-small graph.
    :raises DisconnectedGraph: the graph is not strongly connected.
    """
    nodes: dict[int, tuple[float, float]] = {}
    edges: list[tuple[int, int, int, float, bool]] = []
    for line_no, raw in _lines(source):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = [p.strip() for p in line.split(",")]
        kind = parts[0]
        try:
            if kind == "N":
                if len(parts) != 4:
                    raise ValueError("node record needs N,<id>,<x_m>,<y_m>")
                nid = int(parts[1])
                if nid in nodes:
                    raise ValueError(f"duplicate node id {nid}")
                nodes[nid] = (float(parts[2]), float(parts[3]))
            elif kind == "E":
                if len(parts) != 6:
                    raise ValueError(
                        "edge record needs E,<id>,<from>,<to>,<length_m>,<bidir>"
                    )
                bidir = parts[5]
                if bidir not in ("0", "1"):
                    raise ValueError(f"bidir flag must be 0 or 1, got {bidir!r}")
                edges.append(
                    (int(parts[1]), int(parts[2]), int(parts[3]), float(parts[4]), bidir == "1")
                )
            else:
                raise ValueError(f"unknown record type {kind!r}")
        except ValueError as exc:
            raise ParseError(str(exc), line_no) from None
    try:
        return RoadNetwork(nodes, edges)
    except ParseError:
        raise
    except DisconnectedGraph:
        raise


def _lines(source: str | FilePath | Iterable[str]) -> Iterator[tuple[int, str]]:
    if isinstance(source, (str, FilePath)):
        with open(source, "r", encoding="utf-8") as fh:
            yield from enumerate(fh, start=1)
    else:
        yield from enumerate(source, start=1)
