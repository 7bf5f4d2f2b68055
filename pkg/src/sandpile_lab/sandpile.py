"""Chip dynamics: stabilization, burning, recurrent configurations.

Chips live on non-dissipative vertices.  A vertex is stable while it holds
fewer chips than its degree (loops count twice); firing sends one chip per
incident edge end, so a loop returns two chips to the firer.  Chips that
reach a dissipative vertex leave the system.
"""

from __future__ import annotations

import itertools
from collections import Counter, deque
from dataclasses import dataclass, field
from fractions import Fraction

from .cactus import BlockDecomposition, BlockPath, CactusError, block_decompose
from .graphs import GraphError, LabeledMultigraph, SandpileGraph


class SandpileError(ValueError):
    pass


class UnstableConfigError(SandpileError):
    """Raised when an operation requires a stable configuration."""


@dataclass
class Configuration:
    """Dense chip counts indexed by vertex id; sink entries stay 0."""

    values: list

    def copy(self) -> "Configuration":
        return Configuration(list(self.values))

    def __eq__(self, other):
        return isinstance(other, Configuration) and self.values == other.values

    def key(self) -> tuple:
        return tuple(self.values)

    def to_csv(self, sg: SandpileGraph) -> str:
        lines = ["%s,%d" % (sg.graph.word(v), self.values[v]) for v in sg.v0()]
        return "\n".join(lines) + "\n"

    @staticmethod
    def from_csv(sg: SandpileGraph, text: str) -> "Configuration":
        values = [0] * sg.n
        for line in text.strip().splitlines():
            word, chips = line.rsplit(",", 1)
            values[sg.graph.vertex(word)] = int(chips)
        return Configuration(values)


def zero_configuration(sg: SandpileGraph) -> Configuration:
    return Configuration([0] * sg.n)


def is_stable(sg: SandpileGraph, c: Configuration) -> bool:
    deg = sg.degrees()
    sinks = set(sg.dissipative)
    return all(c.values[v] < deg[v] for v in range(sg.n) if v not in sinks)


@dataclass
class StabilizationResult:
    final: Configuration
    fired_counts: dict      # vertex -> times fired (only fired vertices)
    mass: int               # distinct vertices fired
    length: int             # total firings
    absorbed: int           # chips that reached the dissipative set
    diameter: int | None    # diameter of the fired subgraph, if requested


def _fired_diameter(sg: SandpileGraph, fired) -> int:
    """Exact diameter of the subgraph induced by the fired vertices."""
    if not fired:
        return 0
    fired_set = set(fired)
    adj = sg.graph.adjacency()
    best = 0
    for src in fired:
        dist = {src: 0}
        queue = deque([src])
        while queue:
            u = queue.popleft()
            for w, _ in adj[u]:
                if w in fired_set and w not in dist:
                    dist[w] = dist[u] + 1
                    queue.append(w)
        ecc = max(dist.values())
        if ecc > best:
            best = ecc
    return best


def stabilize(sg: SandpileGraph, c: Configuration, order: str = "fifo",
              rng=None, with_diameter: bool = False) -> StabilizationResult:
    """Fire unstable vertices until stable.

    ``order`` picks the scheduling policy ("fifo" or "random"); by
    abelianness the result does not depend on it, which the tests fuzz.
    """
    n = sg.n
    chips = list(c.values)
    deg = sg.degrees()
    nbrs = sg.neighbors()
    sinks = set(sg.dissipative)
    absorbed = sum(chips[p] for p in sinks)
    for p in sinks:
        chips[p] = 0

    pending = [v for v in range(n) if v not in sinks and chips[v] >= deg[v]]
    in_queue = bytearray(n)
    for v in pending:
        in_queue[v] = 1
    queue = deque(pending)
    fired = Counter()
    length = 0
    use_random = order == "random"
    if use_random and rng is None:
        raise SandpileError("random order needs an rng")

    while queue:
        if use_random:
            i = rng.randrange(len(queue))
            queue[i], queue[-1] = queue[-1], queue[i]
            v = queue.pop()
        else:
            v = queue.popleft()
        in_queue[v] = 0
        if chips[v] < deg[v]:
            continue
        chips[v] -= deg[v]  # fire once per dequeue
        fired[v] += 1
        length += 1
        for w in nbrs[v]:
            if w in sinks:
                absorbed += 1
            else:
                chips[w] += 1
                if chips[w] >= deg[w] and not in_queue[w]:
                    in_queue[w] = 1
                    queue.append(w)
        if chips[v] >= deg[v]:
            in_queue[v] = 1
            queue.append(v)

    diameter = _fired_diameter(sg, list(fired)) if with_diameter else None
    return StabilizationResult(Configuration(chips), dict(fired),
                               len(fired), length, absorbed, diameter)


# ---------------------------------------------------------------------------
# Burning algorithm
# ---------------------------------------------------------------------------

def _burn_order(sg: SandpileGraph, c: Configuration):
    """Fire-from-the-sink pass; returns the enumeration or None."""
    deg = sg.degrees()
    nbrs = sg.neighbors()
    sinks = set(sg.dissipative)
    received = [0] * sg.n
    order = list(sg.dissipative)
    for p in sg.dissipative:
        for w in nbrs[p]:
            if w not in sinks:
                received[w] += 1
    burnt = bytearray(sg.n)
    for p in sinks:
        burnt[p] = 1
    queue = deque(v for v in range(sg.n)
                  if not burnt[v] and c.values[v] + received[v] >= deg[v])
    queued = bytearray(sg.n)
    for v in queue:
        queued[v] = 1
    while queue:
        v = queue.popleft()
        if burnt[v]:
            continue
        burnt[v] = 1
        order.append(v)
        for w in nbrs[v]:
            if not burnt[w]:
                received[w] += 1
                if not queued[w] and c.values[w] + received[w] >= deg[w]:
                    queued[w] = 1
                    queue.append(w)
    if len(order) == sg.n:
        return order
    return None


def burning_test(sg: SandpileGraph, c: Configuration) -> bool:
    """True iff the stable configuration is recurrent."""
    if not is_stable(sg, c):
        raise UnstableConfigError("burning test needs a stable configuration")
    return _burn_order(sg, c) is not None


def burning_sequence(sg: SandpileGraph, c: Configuration):
    """Burning enumeration p_1..p_k v_1..v_{|V_0|}, or None if not recurrent."""
    if not is_stable(sg, c):
        raise UnstableConfigError("burning sequence needs a stable configuration")
    return _burn_order(sg, c)


def replay_burning(sg: SandpileGraph, c: Configuration, sequence) -> Configuration:
    """Apply a burning sequence: sinks send their edge multiplicities, then
    each listed vertex fires once.  On a recurrent c this returns c."""
    chips = list(c.values)
    deg = sg.degrees()
    nbrs = sg.neighbors()
    sinks = set(sg.dissipative)
    for v in sequence:
        if v in sinks:
            for w in nbrs[v]:
                if w not in sinks:
                    chips[w] += 1
        else:
            if chips[v] < deg[v]:
                raise SandpileError("sequence fires a stable vertex")
            chips[v] -= deg[v]
            for w in nbrs[v]:
                if w not in sinks:
                    chips[w] += 1
    return Configuration(chips)


def burning_test_slow(sg: SandpileGraph, c: Configuration) -> bool:
    """Literal B_t / U_t set recursion; cross-validation oracle."""
    if not is_stable(sg, c):
        raise UnstableConfigError("burning test needs a stable configuration")
    sinks = set(sg.dissipative)
    unburnt = set(v for v in range(sg.n) if v not in sinks)
    adj = sg.graph.adjacency()
    while unburnt:
        # degree within the subgraph spanned by the unburnt vertices
        def deg_in(v):
            d = 0
            for w, _ in adj[v]:
                if w in unburnt:
                    d += 2 if w == v else 1
            return d

        burn = {v for v in unburnt if c.values[v] >= deg_in(v)}
        if not burn:
            return False  # the remaining set carries a forbidden subconfiguration
        unburnt -= burn
    return True


# ---------------------------------------------------------------------------
# Recurrent configurations on cacti
# ---------------------------------------------------------------------------

@dataclass
class CactusSampler:
    """Uniform sampler over recurrent configurations of a single-sink cactus.

    Per cycle block an index j in 0..|C|-1 is drawn independently; block
    configuration c_j has a zero at cyclic position j from the block's
    sink-side anchor and ones elsewhere.  The full chip count adds the
    out-degree offset deg(v) - deg_block(v).  Single-edge blocks contribute
    their one forced configuration.
    """

    sg: SandpileGraph
    cycle_blocks: list   # list of (positions tuple: anchor first, then cyclic)
    base: Configuration  # offsets: deg(v) - deg_parent_block(v) (+ c_0 ones)

    @property
    def count(self) -> int:
        out = 1
        for verts in self.cycle_blocks:
            out *= len(verts)
        return out

    def sample(self, rng) -> Configuration:
        values = list(self.base.values)
        for verts in self.cycle_blocks:
            j = rng.randrange(len(verts))
            if j:
                values[verts[j]] -= 1  # c_j has a zero at position j
        return Configuration(values)

    def from_indices(self, indices) -> Configuration:
        values = list(self.base.values)
        for verts, j in zip(self.cycle_blocks, indices):
            if j:
                values[verts[j]] -= 1
        return Configuration(values)

    def iter_all(self):
        for combo in itertools.product(*(range(len(v)) for v in self.cycle_blocks)):
            yield self.from_indices(combo)


def recurrent_sampler(sg: SandpileGraph,
                      dec: BlockDecomposition | None = None) -> CactusSampler:
    if len(sg.dissipative) != 1:
        raise SandpileError("cactus sampling needs a single sink (merge first)")
    sink = sg.dissipative[0]
    if dec is None:
        dec = block_decompose(sg.graph)
    if not dec.is_cactus:
        raise SandpileError("graph is not a cactus")
    from .cactus import _block_adjacency  # sink-rooted block orientation
    from collections import deque as _deque

    depth = {b: 0 for b in dec.vertex_blocks[sink]}
    nbrs = _block_adjacency(dec)
    queue = _deque(depth)
    while queue:
        b = queue.popleft()
        for cb in nbrs[b]:
            if cb not in depth:
                depth[cb] = depth[b] + 1
                queue.append(cb)
    if len(depth) != len(dec.blocks):
        raise SandpileError("graph is not connected")

    parent_block = [None] * sg.n
    for v in range(sg.n):
        if v != sink and dec.vertex_blocks[v]:
            parent_block[v] = min(dec.vertex_blocks[v], key=lambda b: depth[b])

    deg = sg.degrees()
    values = [0] * sg.n
    parent_deg = [0] * sg.n
    cycle_blocks = []
    for blk in dec.blocks:
        # the anchor is the unique member whose own parent block is nearer
        # the sink (or the sink itself); every other member has this block
        # as parent
        anchors = [v for v in blk.vertices
                   if v == sink or parent_block[v] != blk.id]
        if len(anchors) != 1:
            raise SandpileError("block with %d sink-side anchors" % len(anchors))
        anchor = anchors[0]
        if blk.kind == "cycle":
            order = list(blk.vertices)
            i0 = order.index(anchor)
            order = order[i0:] + order[:i0]
            for v in order[1:]:
                parent_deg[v] = 2
                values[v] += 1  # block c_0 puts one chip everywhere
            cycle_blocks.append(tuple(order))
        else:
            (v,) = [u for u in blk.vertices if u != anchor]
            parent_deg[v] = 1
    for v in range(sg.n):
        if v != sink and dec.vertex_blocks[v]:
            values[v] += deg[v] - parent_deg[v]  # out-degree offset
    values[sink] = 0
    return CactusSampler(sg, cycle_blocks, Configuration(values))


def sample_recurrent_cactus(sg: SandpileGraph, rng,
                            sampler: CactusSampler | None = None) -> Configuration:
    if sampler is None:
        sampler = recurrent_sampler(sg)
    return sampler.sample(rng)


@dataclass
class RecurrentSet:
    count: int
    configs: list | None  # materialized only when small
    sampler: CactusSampler | None


def enumerate_recurrent(sg: SandpileGraph, method: str = "auto",
                        materialize_limit: int = 1 << 20) -> RecurrentSet:
    """Exact recurrent set, by stable-scan oracle or cactus product form."""
    deg = sg.degrees()
    v0 = sg.v0()
    if method in ("auto", "cactus"):
        try:
            sampler = recurrent_sampler(sg)
        except (SandpileError, CactusError):
            sampler = None
            if method == "cactus":
                raise
        if sampler is not None:
            configs = None
            if sampler.count <= materialize_limit:
                configs = list(sampler.iter_all())
            return RecurrentSet(sampler.count, configs, sampler)
    # exhaustive scan over stable configurations
    candidates = 1
    for v in v0:
        candidates *= deg[v]
        if candidates > 1 << 24:
            raise SandpileError(
                "stable-configuration scan too large; use the cactus form")
    configs = []
    for combo in itertools.product(*(range(deg[v]) for v in v0)):
        values = [0] * sg.n
        for v, chips in zip(v0, combo):
            values[v] = chips
        c = Configuration(values)
        if _burn_order(sg, c) is not None:
            configs.append(c)
    return RecurrentSet(len(configs), configs, None)


# ---------------------------------------------------------------------------
# Spanning trees (independent count via the reduced Laplacian)
# ---------------------------------------------------------------------------

def spanning_tree_count(sg: SandpileGraph) -> int:
    """Determinant of the reduced Laplacian, exact.

    Loops are excluded from the Laplacian.  Multiple dissipative vertices
    are identified into one sink first.  Uses sparse fraction-free-ish
    elimination with min-degree pivoting; exact rational arithmetic.
    """
    g = merge_dissipative(sg) if len(sg.dissipative) > 1 else sg
    if not g.graph.connected():
        raise SandpileError("spanning tree count needs a connected graph")
    sink = g.dissipative[0]
    rows: dict = {}

    def bump(a, b, val):
        row = rows.setdefault(a, {})
        row[b] = row.get(b, 0) + val

    for u, v, _ in g.graph.edges:
        if u == v:
            continue
        bump(u, u, 1)
        bump(v, v, 1)
        bump(u, v, -1)
        bump(v, u, -1)
    rows.pop(sink, None)
    for row in rows.values():
        row.pop(sink, None)

    det = Fraction(1)
    alive = set(rows)
    while alive:
        v = min(alive, key=lambda x: (len(rows[x]), x))
        pivot = Fraction(rows[v].get(v, 0))
        if pivot == 0:
            return 0
        det *= pivot
        alive.discard(v)
        col = [(u, rows[u][v]) for u in list(rows[v]) if u != v and u in alive]
        vrow = [(w, val) for w, val in rows[v].items() if w != v and w in alive]
        for u, uv in col:
            factor = Fraction(uv, pivot)
            urow = rows[u]
            del urow[v]
            for w, val in vrow:
                urow[w] = urow.get(w, 0) - factor * val
                if urow[w] == 0:
                    del urow[w]
        del rows[v]
    if det.denominator != 1:
        raise SandpileError("non-integral determinant: %r" % det)
    return int(det)


# ---------------------------------------------------------------------------
# Group operation and avalanches
# ---------------------------------------------------------------------------

def add_and_stabilize(sg: SandpileGraph, c1: Configuration,
                      c2: Configuration) -> Configuration:
    values = [a + b for a, b in zip(c1.values, c2.values)]
    return stabilize(sg, Configuration(values)).final


@dataclass
class AvalancheRecord:
    mass: int
    length: int
    diameter: int | None
    stop_block: int | None  # 1-based index on the block path; 0 = no firing
    final: Configuration


def trigger_avalanche(sg: SandpileGraph, c: Configuration, v: int,
                      path: BlockPath | None = None,
                      check_recurrent: bool = True,
                      with_diameter: bool = False) -> AvalancheRecord:
    """Add one chip at v to a recurrent configuration and stabilize.

    With a block path toward the sink, reports the stop block: the last
    path block whose entry cut fired (the following cut received chips but
    never fired).
    """
    if sg.is_sink(v):
        raise SandpileError("cannot trigger on a dissipative vertex")
    if check_recurrent and not burning_test(sg, c):
        raise SandpileError("avalanche statistics need a recurrent start")
    work = c.copy()
    work.values[v] += 1
    res = stabilize(sg, work, with_diameter=with_diameter)
    stop = None
    if path is not None:
        if res.mass == 0:
            stop = 0
        else:
            stop = 1
            for j, cut in enumerate(path.cuts):
                if res.fired_counts.get(cut, 0) > 0:
                    stop = j + 2
                else:
                    break
    return AvalancheRecord(res.mass, res.length, res.diameter, stop, res.final)


def merge_dissipative(sg: SandpileGraph) -> SandpileGraph:
    """Identify all dissipative vertices into a single sink.

    Non-dissipative vertices keep their relative order (their new index is
    their rank among kept vertices); the sink takes the last index.
    """
    if len(sg.dissipative) == 1:
        return sg
    sinks = set(sg.dissipative)
    kept = [v for v in range(sg.n) if v not in sinks]
    new_id = {v: i for i, v in enumerate(kept)}
    sink_id = len(kept)
    edges = []
    for u, v, lab in sg.graph.edges:
        nu = new_id.get(u, sink_id)
        nv = new_id.get(v, sink_id)
        edges.append((nu, nv, lab))
    g = sg.graph
    if g.q is not None:
        # keep word coding; the merged sink takes the smallest dissipative
        # word, and indices are re-sorted by code for vertex() lookups
        codes = [v if g.word_codes is None else g.word_codes[v] for v in kept]
        codes.append(min(v if g.word_codes is None else g.word_codes[v]
                         for v in sinks))
        order = sorted(range(len(codes)), key=lambda i: codes[i])
        rank = [0] * len(codes)
        for i, old in enumerate(order):
            rank[old] = i
        edges = [(rank[u], rank[v], lab) for (u, v, lab) in edges]
        merged = LabeledMultigraph(len(kept) + 1, edges, g.labels, q=g.q,
                                   level=g.level,
                                   word_codes=[codes[i] for i in order])
        return SandpileGraph(merged, (rank[sink_id],))
    merged = LabeledMultigraph(len(kept) + 1, edges, g.labels)
    return SandpileGraph(merged, (sink_id,))
