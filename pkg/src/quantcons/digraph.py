"""Strongly connected digraphs with per-node out-edge priority orders.

Edges are stored as ``(receiver, sender)`` pairs, 0-based. Files and the
public ``from_arcs`` helper use the more readable ``sender -> receiver``
direction with 1-based node labels.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

__all__ = [
    "Digraph",
    "GraphError",
    "PriorityMap",
    "assign_priorities",
    "build_digraph",
    "from_arcs",
    "generate_random_strongly_connected",
    "in_neighbors",
    "is_strongly_connected",
    "out_neighbors",
    "read_graph_file",
    "read_priority_file",
    "write_graph_file",
    "write_priority_file",
]

MAX_GENERATION_ATTEMPTS = 10_000


class GraphError(ValueError):
    """Structural problem with a digraph or priority assignment."""


@dataclass(frozen=True)
class Digraph:
    node_count: int
    edges: frozenset[tuple[int, int]]
    _out: tuple[tuple[int, ...], ...] = field(repr=False, compare=False, default=())
    _in: tuple[tuple[int, ...], ...] = field(repr=False, compare=False, default=())

    @property
    def n(self) -> int:
        return self.node_count

    @property
    def m(self) -> int:
        return len(self.edges)

    def out_neighbors(self, j: int) -> tuple[int, ...]:
        return self._out[j]

    def in_neighbors(self, j: int) -> tuple[int, ...]:
        return self._in[j]

    def out_degree(self, j: int) -> int:
        return len(self._out[j])

    def in_degree(self, j: int) -> int:
        return len(self._in[j])

    @property
    def max_in_degree(self) -> int:
        return max((len(x) for x in self._in), default=0)

    def arcs(self) -> list[tuple[int, int]]:
        """Edges as sorted ``(sender, receiver)`` pairs."""
        return sorted((i, j) for j, i in self.edges)


def build_digraph(node_count: int, edge_list: Iterable[tuple[int, int]]) -> Digraph:
    """Validate ``(receiver, sender)`` pairs and build a :class:`Digraph`.

    Duplicate pairs collapse; self-pairs and out-of-range indices raise
    :class:`GraphError`.
    """
    if node_count < 1:
        raise GraphError(f"node_count must be positive, got {node_count}")
    edges = set()
    for j, i in edge_list:
        if not (0 <= j < node_count and 0 <= i < node_count):
            raise GraphError(f"edge ({j}, {i}) has an index outside 0..{node_count - 1}")
        if i == j:
            raise GraphError(f"self-loop on node {j} is not allowed")
        edges.add((int(j), int(i)))
    out: list[list[int]] = [[] for _ in range(node_count)]
    inn: list[list[int]] = [[] for _ in range(node_count)]
    for j, i in edges:
        out[i].append(j)
        inn[j].append(i)
    return Digraph(
        node_count,
        frozenset(edges),
        tuple(tuple(sorted(x)) for x in out),
        tuple(tuple(sorted(x)) for x in inn),
    )


def from_arcs(node_count: int, arcs: Iterable[tuple[int, int]], one_based: bool = True) -> Digraph:
    """Build from ``(sender, receiver)`` arcs, 1-based by default."""
    off = 1 if one_based else 0
    return build_digraph(node_count, [(v - off, u - off) for u, v in arcs])


def out_neighbors(g: Digraph, j: int) -> list[int]:
    return list(g.out_neighbors(j))


def in_neighbors(g: Digraph, j: int) -> list[int]:
    return list(g.in_neighbors(j))


def _reach(adj: Sequence[Sequence[int]], start: int) -> int:
    seen = [False] * len(adj)
    seen[start] = True
    queue = deque([start])
    count = 1
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if not seen[v]:
                seen[v] = True
                count += 1
                queue.append(v)
    return count


def is_strongly_connected(g: Digraph) -> bool:
    """Forward and backward reachability from node 0 both cover every node."""
    n = g.node_count
    return _reach(g._out, 0) == n and _reach(g._in, 0) == n


def generate_random_strongly_connected(
    node_count: int,
    edge_probability: float,
    seed: int,
    max_attempts: int = MAX_GENERATION_ATTEMPTS,
) -> Digraph:
    """Sample directed Erdos-Renyi graphs until one is strongly connected.

    Each ordered pair ``(i, j)``, ``i != j``, is an edge with probability
    ``edge_probability``. Deterministic for a given seed.
    """
    if node_count < 2:
        raise GraphError("random generation needs at least 2 nodes")
    if not 0.0 < edge_probability <= 1.0:
        raise GraphError(f"edge_probability must lie in (0, 1], got {edge_probability}")
    rng = random.Random(seed)
    pairs = [(j, i) for i in range(node_count) for j in range(node_count) if i != j]
    for _ in range(max_attempts):
        edges = [p for p in pairs if rng.random() < edge_probability]
        g = build_digraph(node_count, edges)
        if is_strongly_connected(g):
            return g
    raise GraphError(
        f"no strongly connected digraph after {max_attempts} attempts "
        f"(n={node_count}, p={edge_probability})"
    )


@dataclass(frozen=True)
class PriorityMap:
    """Per-node out-neighbors listed in transmission order (priority 0 first)."""

    order: tuple[tuple[int, ...], ...]

    def priority(self, j: int, neighbor: int) -> int:
        return self.order[j].index(neighbor)

    def as_dict(self) -> dict[int, dict[int, int]]:
        return {j: {l: p for p, l in enumerate(seq)} for j, seq in enumerate(self.order)}

    @classmethod
    def from_priorities(cls, g: Digraph, table: Mapping[int, Mapping[int, int]]) -> PriorityMap:
        """Build from ``{node: {out_neighbor: priority}}`` (0-based), validating bijectivity.

        Nodes missing from ``table`` fall back to ascending neighbor index.
        """
        order = []
        for j in range(g.node_count):
            nbrs = g.out_neighbors(j)
            if j not in table:
                order.append(tuple(nbrs))
                continue
            prio = dict(table[j])
            if set(prio) != set(nbrs):
                raise GraphError(
                    f"node {j + 1}: priorities given for {[x + 1 for x in sorted(prio)]} "
                    f"but out-neighbors are {[x + 1 for x in nbrs]}"
                )
            if sorted(prio.values()) != list(range(len(nbrs))):
                raise GraphError(f"node {j + 1}: priorities {sorted(prio.values())} are not 0..{len(nbrs) - 1}")
            order.append(tuple(sorted(nbrs, key=prio.__getitem__)))
        return cls(tuple(order))


def assign_priorities(
    g: Digraph,
    strategy: str = "by_node_index",
    seed: int = 0,
    override: Mapping[int, Mapping[int, int]] | None = None,
) -> PriorityMap:
    """Give every node a bijective round-robin order over its out-neighbors.

    ``strategy`` is ``"by_node_index"`` (ascending neighbor index) or
    ``"seeded_shuffle"``. Entries in ``override`` replace the strategy for the
    nodes they mention.
    """
    if strategy == "by_node_index":
        base = {j: {l: p for p, l in enumerate(g.out_neighbors(j))} for j in range(g.node_count)}
    elif strategy == "seeded_shuffle":
        rng = random.Random(seed)
        base = {}
        for j in range(g.node_count):
            nbrs = list(g.out_neighbors(j))
            rng.shuffle(nbrs)
            base[j] = {l: p for p, l in enumerate(nbrs)}
    else:
        raise GraphError(f"unknown priority strategy {strategy!r}")
    if override:
        base.update(override)
    return PriorityMap.from_priorities(g, base)


# --- file formats -----------------------------------------------------------


def _content_lines(path: Path | str) -> list[list[str]]:
    rows = []
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            rows.append(line.split())
    return rows


def read_graph_file(path: Path | str) -> Digraph:
    """First line ``n``; then one ``u v`` per line for the 1-based arc u -> v."""
    rows = _content_lines(path)
    if not rows or len(rows[0]) != 1:
        raise GraphError(f"{path}: first line must hold the node count")
    n = int(rows[0][0])
    arcs = []
    for k, row in enumerate(rows[1:], start=2):
        if len(row) != 2:
            raise GraphError(f"{path}: line {k} should be 'u v'")
        arcs.append((int(row[0]), int(row[1])))
    return from_arcs(n, arcs)


def write_graph_file(g: Digraph, path: Path | str) -> None:
    lines = [str(g.node_count)] + [f"{i + 1} {j + 1}" for i, j in g.arcs()]
    Path(path).write_text("\n".join(lines) + "\n")


def read_priority_file(g: Digraph, path: Path | str) -> PriorityMap:
    """Lines ``j neighbor priority`` (1-based nodes, 0-based priority)."""
    table: dict[int, dict[int, int]] = {}
    for row in _content_lines(path):
        if len(row) != 3:
            raise GraphError(f"{path}: expected 'node neighbor priority', got {' '.join(row)!r}")
        j, l, p = (int(x) for x in row)
        table.setdefault(j - 1, {})[l - 1] = p
    return PriorityMap.from_priorities(g, table)


def write_priority_file(priorities: PriorityMap, path: Path | str) -> None:
    lines = [
        f"{j + 1} {l + 1} {p}" for j, seq in enumerate(priorities.order) for p, l in enumerate(seq)
    ]
    Path(path).write_text("\n".join(lines) + "\n")
