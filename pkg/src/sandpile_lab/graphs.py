"""Generator-labeled multigraphs, rooted graphs, and sandpile arenas.

Edges are undirected but stored with the orientation they were created in
(for Schreier graphs: u -> act(g, u)), which label-following comparisons
rely on.  Loops are kept explicitly and contribute two to the degree.
"""

from __future__ import annotations

from bisect import bisect_left
from collections import Counter
from dataclasses import dataclass, field


class GraphError(ValueError):
    pass


def decode_word(code: int, q: int, level: int) -> str:
    out = []
    for _ in range(level):
        out.append(code % q)
        code //= q
    return "".join(str(x) for x in reversed(out))


def encode_word(word: str, q: int) -> int:
    code = 0
    for ch in word:
        x = int(ch)
        if not 0 <= x < q:
            raise GraphError("letter %r out of range" % ch)
        code = code * q + x
    return code


@dataclass
class LabeledMultigraph:
    """Undirected multigraph with generator-labeled edges and loops.

    Vertices are 0..n_vertices-1.  When the graph comes from a tree action,
    ``q``/``level`` are set and ``word_codes[v]`` is the integer code of the
    defining word (None means codes coincide with vertex indices).
    """

    n_vertices: int
    edges: list  # (u, v, label_index) triples; u == v is a loop
    labels: tuple
    q: int | None = None
    level: int | None = None
    word_codes: list | None = None  # sorted; None -> identity coding
    _adj: list | None = field(default=None, repr=False, compare=False)
    _deg: list | None = field(default=None, repr=False, compare=False)

    # -- vertex naming ----------------------------------------------------
    def word(self, v: int) -> str:
        if self.q is None:
            return "v%d" % v
        code = v if self.word_codes is None else self.word_codes[v]
        return decode_word(code, self.q, self.level)

    def vertex(self, word: str) -> int:
        if self.q is None:
            raise GraphError("graph has no word labels")
        if len(word) != self.level:
            raise GraphError("word %r is not at level %d" % (word, self.level))
        code = encode_word(word, self.q)
        if self.word_codes is None:
            return code
        i = bisect_left(self.word_codes, code)
        if i == len(self.word_codes) or self.word_codes[i] != code:
            raise GraphError("word %r not in graph" % word)
        return i

    # -- adjacency ---------------------------------------------------------
    def adjacency(self):
        """adj[v] = list of (neighbor, edge_id); loops appear once."""
        if self._adj is None:
            adj = [[] for _ in range(self.n_vertices)]
            for eid, (u, v, _) in enumerate(self.edges):
                if u == v:
                    adj[u].append((u, eid))
                else:
                    adj[u].append((v, eid))
                    adj[v].append((u, eid))
            self._adj = adj
        return self._adj

    def degrees(self):
        if self._deg is None:
            deg = [0] * self.n_vertices
            for u, v, _ in self.edges:
                deg[u] += 1
                deg[v] += 1  # loops count twice
            self._deg = deg
        return self._deg

    def loop_counts(self) -> Counter:
        return Counter(u for u, v, _ in self.edges if u == v)

    def connected(self) -> bool:
        if self.n_vertices == 0:
            return True
        adj = self.adjacency()
        seen = bytearray(self.n_vertices)
        seen[0] = 1
        stack = [0]
        count = 1
        while stack:
            u = stack.pop()
            for w, _ in adj[u]:
                if not seen[w]:
                    seen[w] = 1
                    count += 1
                    stack.append(w)
        return count == self.n_vertices

    # -- derived graphs ------------------------------------------------------
    def induced(self, keep) -> tuple["LabeledMultigraph", dict]:
        """Induced subgraph on ``keep``; returns (graph, old->new map)."""
        keep_sorted = sorted(set(keep))
        old2new = {v: i for i, v in enumerate(keep_sorted)}
        edges = [
            (old2new[u], old2new[v], lab)
            for (u, v, lab) in self.edges
            if u in old2new and v in old2new
        ]
        codes = None
        if self.q is not None:
            codes = [v if self.word_codes is None else self.word_codes[v]
                     for v in keep_sorted]
        sub = LabeledMultigraph(
            len(keep_sorted), edges, self.labels,
            q=self.q, level=self.level, word_codes=codes,
        )
        return sub, old2new

    def to_json_dict(self, dissipative=(), root=None, meta=None) -> dict:
        mult = Counter()
        for u, v, lab in self.edges:
            a, b = (u, v) if u <= v else (v, u)
            mult[(a, b, lab)] += 1
        data = {
            "vertices": [self.word(v) for v in range(self.n_vertices)],
            "edges": [
                {"u": self.word(u), "v": self.word(v),
                 "label": self.labels[lab], "multiplicity": m}
                for (u, v, lab), m in sorted(mult.items())
            ],
            "dissipative": [self.word(p) for p in sorted(dissipative)],
            "root": None if root is None else self.word(root),
        }
        if meta:
            data.update(meta)
        return data


@dataclass(frozen=True)
class RootedGraph:
    graph: LabeledMultigraph
    root: int

    def __post_init__(self):
        if not 0 <= self.root < self.graph.n_vertices:
            raise GraphError("root out of range")


@dataclass
class SandpileGraph:
    """A multigraph together with a nonempty dissipative vertex set."""

    graph: LabeledMultigraph
    dissipative: tuple
    _neighbors: list | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if not self.dissipative:
            raise GraphError("dissipative set must be nonempty")
        self.dissipative = tuple(sorted(set(self.dissipative)))
        for p in self.dissipative:
            if not 0 <= p < self.graph.n_vertices:
                raise GraphError("dissipative vertex out of range")

    @property
    def n(self) -> int:
        return self.graph.n_vertices

    def is_sink(self, v: int) -> bool:
        return v in self._sink_set()

    def _sink_set(self):
        return set(self.dissipative)

    def v0(self) -> list:
        sinks = self._sink_set()
        return [v for v in range(self.n) if v not in sinks]

    def neighbors(self):
        """neighbors[v] = neighbor per incident edge end (loops give v twice)."""
        if self._neighbors is None:
            nb = [[] for _ in range(self.n)]
            for u, v, _ in self.graph.edges:
                if u == v:
                    nb[u].append(u)
                    nb[u].append(u)
                else:
                    nb[u].append(v)
                    nb[v].append(u)
            self._neighbors = nb
        return self._neighbors

    def degrees(self):
        return self.graph.degrees()


# ---------------------------------------------------------------------------
# Builders used throughout the tests
# ---------------------------------------------------------------------------

def cycle_graph(size: int, n_labels: int = 1) -> SandpileGraph:
    """Cycle of ``size`` vertices with vertex 0 dissipative.

    Vertices are numbered 0 (sink), 1, ..., size-1 around the cycle; a
    2-cycle is the double edge.
    """
    if size < 2:
        raise GraphError("cycle needs size >= 2")
    edges = [(i, (i + 1) % size, 0) for i in range(size)]
    g = LabeledMultigraph(size, edges, tuple("g%d" % i for i in range(n_labels)))
    return SandpileGraph(g, (0,))


def random_cactus(rng, max_vertices: int = 25, extra_sinks: int = 0) -> SandpileGraph:
    """Random cactus with a sink at vertex 0 (plus optional extra sinks)."""
    edges = []
    n = 1
    while n < max_vertices:
        anchor = rng.randrange(n)
        kind = rng.random()
        if kind < 0.15:
            edges.append((anchor, anchor, 0))  # loop
        elif kind < 0.35:
            edges.append((anchor, n, 0))  # pendant edge block
            n += 1
        else:
            size = rng.choice([2, 2, 3, 4, 4, 5, 6])
            size = min(size, max_vertices - n + 1)
            if size < 2:
                break
            prev = anchor
            for i in range(size - 1):
                edges.append((prev, n, 0))
                prev = n
                n += 1
            edges.append((prev, anchor, 0))
    g = LabeledMultigraph(n, edges, ("g0",))
    sinks = [0]
    nonzero = [v for v in range(1, n)]
    for _ in range(extra_sinks):
        if nonzero:
            sinks.append(nonzero.pop(rng.randrange(len(nonzero))))
    return SandpileGraph(g, tuple(sinks))
