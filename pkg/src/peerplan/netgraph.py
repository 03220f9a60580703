"""Graph data model, partial-observation bookkeeping, and edge-list ingestion.

External node labels ("tokens") map to dense internal indices 0..n-1; all
algorithmic code works on indices and translates back at I/O boundaries.
Graph and ObservedNetwork are immutable: updates return new values.
"""
from __future__ import annotations

from typing import Iterable

import numpy as np


class ParseError(ValueError):
    """Malformed edge-list input; carries the 1-based line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class Roster:
    """Append-only bijection between external tokens and indices 0..n-1."""

    __slots__ = ("tokens", "_index")

    def __init__(self, tokens: Iterable[str] = ()):
        self.tokens = tuple(tokens)
        self._index = {t: i for i, t in enumerate(self.tokens)}
        if len(self._index) != len(self.tokens):
            raise ValueError("duplicate roster tokens")

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def __eq__(self, other) -> bool:
        return isinstance(other, Roster) and self.tokens == other.tokens

    def __hash__(self) -> int:
        return hash(self.tokens)

    def index_of(self, token: str) -> int:
        return self._index[token]

    def token_of(self, idx: int) -> str:
        return self.tokens[idx]

    def extend(self, new_tokens: Iterable[str]) -> "Roster":
        """Roster with unseen tokens appended; existing indices are unchanged."""
        extra = [t for t in dict.fromkeys(new_tokens) if t not in self._index]
        if not extra:
            return self
        return Roster(self.tokens + tuple(extra))


class Graph:
    """Undirected simple graph over a roster.

    Edges are stored deduplicated as (u, v) index pairs with u < v, plus
    parallel numpy arrays for the simulation kernels and sorted adjacency
    lists for traversals.
    """

    def __init__(self, roster: Roster, edges: Iterable[tuple[int, int]]):
        self.roster = roster
        n = len(roster)
        seen = set()
        for u, v in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u}, {v}) outside roster of size {n}")
            if u == v:
                raise ValueError(f"self-loop at node {u}")
            seen.add((u, v) if u < v else (v, u))
        ordered = sorted(seen)
        self.n = n
        self.edges = tuple(ordered)
        self.edge_u = np.fromiter((u for u, _ in ordered), np.int32, len(ordered))
        self.edge_v = np.fromiter((v for _, v in ordered), np.int32, len(ordered))
        adj: list[list[int]] = [[] for _ in range(n)]
        for u, v in ordered:
            adj[u].append(v)
            adj[v].append(u)
        self.adjacency = tuple(tuple(sorted(a)) for a in adj)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def neighbors(self, u: int) -> tuple[int, ...]:
        return self.adjacency[u]

    def degree(self, u: int) -> int:
        return len(self.adjacency[u])

    def degrees(self) -> np.ndarray:
        out = np.zeros(self.n, np.int64)
        np.add.at(out, self.edge_u, 1)
        np.add.at(out, self.edge_v, 1)
        return out

    def has_edge(self, u: int, v: int) -> bool:
        return ((u, v) if u < v else (v, u)) in self._edge_set()

    def _edge_set(self) -> frozenset:
        cached = getattr(self, "_edges_frozen", None)
        if cached is None:
            cached = frozenset(self.edges)
            self._edges_frozen = cached
        return cached

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Graph)
            and self.roster == other.roster
            and self.edges == other.edges
        )

    def __hash__(self) -> int:
        return hash((self.roster, self.edges))

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.num_edges})"


def _iter_lines(source) -> Iterable[str]:
    if isinstance(source, str):
        return source.splitlines()
    if hasattr(source, "read"):
        return source.read().splitlines()
    return source


def load_edge_list(source) -> Graph:
    """Parse an edge-list stream into a Graph.

    One edge (two whitespace-separated tokens) or one isolated-node
    declaration (single token) per line; `#` starts a comment line.
    Rejects self-loops and lines with more than two tokens, reporting the
    offending line number. Duplicate edges collapse to one.
    """
    tokens: dict[str, None] = {}
    edge_tokens: list[tuple[str, str]] = []
    for line_no, raw in enumerate(_iter_lines(source), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) == 1:
            tokens.setdefault(parts[0])
        elif len(parts) == 2:
            a, b = parts
            if a == b:
                raise ParseError(line_no, f"self-loop on {a!r}")
            tokens.setdefault(a)
            tokens.setdefault(b)
            edge_tokens.append((a, b))
        else:
            raise ParseError(line_no, f"expected 1 or 2 tokens, got {len(parts)}")
    roster = Roster(tokens)
    edges = [(roster.index_of(a), roster.index_of(b)) for a, b in edge_tokens]
    return Graph(roster, edges)


def serialize_edge_list(g: Graph) -> str:
    """Inverse of load_edge_list: token declarations in roster order, then edges."""
    lines = list(g.roster.tokens)
    for u, v in g.edges:
        lines.append(f"{g.roster.token_of(u)} {g.roster.token_of(v)}")
    return "\n".join(lines) + "\n"


def top_k_by_degree(g: Graph, k: int) -> set[int]:
    """The k highest-degree nodes; ties broken by ascending internal index."""
    if not 0 <= k <= g.n:
        raise ValueError(f"k={k} outside [0, {g.n}]")
    deg = g.degrees()
    order = sorted(range(g.n), key=lambda u: (-deg[u], u))
    return set(order[:k])


class ObservedNetwork:
    """Partial network view: queried node set plus the edges those queries revealed.

    The roster may grow mid-session when a respondent names a contact not yet
    enrolled; indices already assigned never move.
    """

    __slots__ = ("roster", "queried", "revealed")

    def __init__(
        self,
        roster: Roster,
        queried: frozenset[int] = frozenset(),
        revealed: frozenset[tuple[int, int]] = frozenset(),
    ):
        n = len(roster)
        for q in queried:
            if not 0 <= q < n:
                raise ValueError(f"queried index {q} outside roster")
        for u, v in revealed:
            if not (0 <= u < n and 0 <= v < n) or u >= v:
                raise ValueError(f"bad revealed edge ({u}, {v})")
            if u not in queried and v not in queried:
                raise ValueError(f"revealed edge ({u}, {v}) has no queried endpoint")
        self.roster = roster
        self.queried = frozenset(queried)
        self.revealed = frozenset(revealed)

    def unqueried(self) -> list[int]:
        return [i for i in range(len(self.roster)) if i not in self.queried]

    def revealed_neighbors(self, u: int) -> set[int]:
        out = set()
        for a, b in self.revealed:
            if a == u:
                out.add(b)
            elif b == u:
                out.add(a)
        return out

    def reveal(self, token: str, neighbor_tokens: Iterable[str]) -> "ObservedNetwork":
        """Record one interview: token's full neighborhood becomes known.

        Unknown contact tokens are appended to the roster. A respondent
        naming themself carries no edge information and is dropped.
        Re-querying an already-queried node is an operator workflow bug and
        raises.
        """
        if token not in self.roster:
            raise ValueError(f"unknown respondent token {token!r}")
        node = self.roster.index_of(token)
        if node in self.queried:
            raise ValueError(f"node {token!r} was already queried")
        contacts = [t for t in dict.fromkeys(neighbor_tokens) if t != token]
        roster = self.roster.extend(contacts)
        edges = set(self.revealed)
        for t in contacts:
            v = roster.index_of(t)
            edges.add((node, v) if node < v else (v, node))
        return ObservedNetwork(roster, self.queried | {node}, frozenset(edges))

    def observed_subgraph(self) -> Graph:
        """Graph over the full roster with exactly the revealed edges."""
        return Graph(self.roster, self.revealed)


def reveal(obs: ObservedNetwork, token: str, neighbors: Iterable[str]) -> ObservedNetwork:
    return obs.reveal(token, neighbors)


def observed_subgraph(obs: ObservedNetwork) -> Graph:
    return obs.observed_subgraph()
