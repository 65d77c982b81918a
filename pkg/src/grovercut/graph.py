"""Undirected graphs, cut evaluation and exhaustive MAX-CUT."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

MAX_EXHAUSTIVE_VERTICES = 30


class ResourceLimitError(ValueError):
    """Raised when an exhaustive scan would exceed the supported size."""


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph on vertices ``0 .. n_vertices - 1``.

    Edges are stored normalised as ``(min, max)`` pairs in insertion order.
    """

    n_vertices: int
    edges: tuple[tuple[int, int], ...]

    def __init__(self, n_vertices: int, edges: Iterable[Sequence[int]]):
        if n_vertices < 1:
            raise ValueError("graph needs at least one vertex")
        seen = set()
        norm = []
        for e in edges:
            u, v = int(e[0]), int(e[1])
            if u == v:
                raise ValueError(f"self-loop on vertex {u}")
            if not (0 <= u < n_vertices and 0 <= v < n_vertices):
                raise ValueError(f"edge ({u}, {v}) out of range for {n_vertices} vertices")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise ValueError(f"duplicate edge {key}")
            seen.add(key)
            norm.append(key)
        object.__setattr__(self, "n_vertices", int(n_vertices))
        object.__setattr__(self, "edges", tuple(norm))

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def degree(self, v: int) -> int:
        return sum(v in e for e in self.edges)

    def max_degree_vertex(self) -> int:
        """Highest-degree vertex; ties go to the lowest index."""
        degs = [self.degree(v) for v in range(self.n_vertices)]
        return int(np.argmax(degs))

    def is_connected(self) -> bool:
        adj = {v: set() for v in range(self.n_vertices)}
        for u, v in self.edges:
            adj[u].add(v)
            adj[v].add(u)
        stack, seen = [0], {0}
        while stack:
            for w in adj[stack.pop()]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == self.n_vertices

    def is_tree(self) -> bool:
        return self.is_connected() and self.n_edges == self.n_vertices - 1

    def to_json(self) -> dict:
        return {"n": self.n_vertices, "edges": [list(e) for e in self.edges]}

    @classmethod
    def from_json(cls, data: dict | str) -> "Graph":
        if isinstance(data, str):
            data = json.loads(data)
        return cls(data["n"], data["edges"])


def star(n: int) -> Graph:
    """K_{1,n} with vertex 0 as the center."""
    return Graph(n + 1, [(0, k) for k in range(1, n + 1)])


def path(n: int) -> Graph:
    return Graph(n, [(k, k + 1) for k in range(n - 1)])


def cycle(n: int) -> Graph:
    if n < 3:
        raise ValueError("cycle needs at least 3 vertices")
    return Graph(n, [(k, (k + 1) % n) for k in range(n)])


def complete(n: int) -> Graph:
    return Graph(n, [(u, v) for u in range(n) for v in range(u + 1, n)])


def named_graph(name: str) -> Graph:
    """Resolve ``k13``, ``k14``, ``k2``, ``k3``, ``k1n:<n>``, ``path:<n>``, ``cycle:<n>``."""
    key = name.strip().lower()
    fixed = {"k2": lambda: path(2), "k3": lambda: complete(3), "triangle": lambda: complete(3),
             "k13": lambda: star(3), "k14": lambda: star(4)}
    if key in fixed:
        return fixed[key]()
    kind, _, arg = key.partition(":")
    builders = {"k1n": star, "path": path, "cycle": cycle, "complete": complete}
    if kind in builders and arg:
        return builders[kind](int(arg))
    raise ValueError(f"unknown graph name {name!r}")


def load_graph(ref: str) -> Graph:
    """Named constructor, inline JSON, or path to a JSON file."""
    text = ref.strip()
    if text.startswith("{"):
        return Graph.from_json(text)
    if text.endswith(".json"):
        with open(text) as fh:
            return Graph.from_json(json.load(fh))
    return named_graph(text)


# Colorings are bitstrings with vertex 0 leftmost.

def coloring_to_bits(coloring: str | Sequence[int]) -> tuple[int, ...]:
    if isinstance(coloring, str):
        if set(coloring) - {"0", "1"}:
            raise ValueError(f"not a bitstring: {coloring!r}")
        return tuple(int(c) for c in coloring)
    return tuple(int(b) for b in coloring)


def bits_to_coloring(bits: Sequence[int]) -> str:
    return "".join(str(int(b)) for b in bits)


def index_to_coloring(index: int, n: int) -> str:
    """Basis index (vertex 0 = least significant bit) to a printed coloring."""
    return "".join(str((index >> v) & 1) for v in range(n))


def coloring_to_index(coloring: str) -> int:
    return sum(int(c) << v for v, c in enumerate(coloring))


def complement(coloring: str) -> str:
    return "".join("1" if c == "0" else "0" for c in coloring)


def cut_value(graph: Graph, coloring: str | Sequence[int]) -> int:
    bits = coloring_to_bits(coloring)
    if len(bits) != graph.n_vertices:
        raise ValueError(
            f"coloring has {len(bits)} bits, graph has {graph.n_vertices} vertices")
    return sum(bits[u] != bits[v] for u, v in graph.edges)


def _check_size(graph: Graph) -> None:
    if graph.n_vertices > MAX_EXHAUSTIVE_VERTICES:
        raise ResourceLimitError(
            f"exhaustive scan limited to {MAX_EXHAUSTIVE_VERTICES} vertices, got {graph.n_vertices}")


def cut_table(graph: Graph) -> np.ndarray:
    """Cut value of every basis index, vertex 0 as least significant bit."""
    _check_size(graph)
    idx = np.arange(1 << graph.n_vertices, dtype=np.int64)
    cuts = np.zeros(idx.shape, dtype=np.int64)
    for u, v in graph.edges:
        cuts += ((idx >> u) ^ (idx >> v)) & 1
    return cuts


def brute_force_maxcut(graph: Graph) -> tuple[int, set[str]]:
    cuts = cut_table(graph)
    best = int(cuts.max())
    argmax = {index_to_coloring(int(i), graph.n_vertices) for i in np.flatnonzero(cuts == best)}
    return best, argmax


def cut_histogram(graph: Graph) -> dict[int, int]:
    counts = Counter(cut_table(graph).tolist())
    return {k: counts[k] for k in sorted(counts)}
