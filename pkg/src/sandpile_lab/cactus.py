"""Block structure of separable graphs and ray combinatorics.

Provides the biconnected decomposition (loops tracked separately, never as
blocks), block-paths toward a sink, decoration sizes/diameters by rooted
aggregation, cyclic critical-group factors for cacti, growth statistics,
and the combinatorics of boundary rays for the binary and ternary presets.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict, deque
from dataclasses import dataclass, field

import numpy as np

from .graphs import GraphError, LabeledMultigraph, SandpileGraph


class CactusError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Biconnected decomposition
# ---------------------------------------------------------------------------

@dataclass
class Block:
    id: int
    kind: str  # "cycle" | "edge" | "core"
    vertices: tuple  # cyclic order for cycles
    edge_ids: tuple

    @property
    def size(self) -> int:
        return len(self.vertices)


@dataclass
class BlockDecomposition:
    blocks: list
    vertex_blocks: list  # vertex -> list of block ids
    cut_vertices: set
    loops: Counter  # vertex -> number of loops
    is_cactus: bool

    def blocks_of(self, v: int) -> list:
        return self.vertex_blocks[v]


def _cycle_order(edge_ids, edges):
    inc = defaultdict(list)
    for eid in edge_ids:
        u, v, _ = edges[eid]
        inc[u].append((v, eid))
        inc[v].append((u, eid))
    for lst in inc.values():
        lst.sort()
    start = min(inc)
    order = [start]
    used = set()
    cur = start
    for _ in range(len(edge_ids) - 1):
        for w, eid in inc[cur]:
            if eid not in used:
                used.add(eid)
                order.append(w)
                cur = w
                break
    if len(set(order)) != len(order):
        return None
    return tuple(order)


def block_decompose(graph) -> BlockDecomposition:
    """Maximal 2-connected components via an iterative lowpoint DFS.

    Works on multigraphs: parallel edges form 2-cycles.  Loops are excluded
    from blocks and reported separately.
    """
    g = graph.graph if isinstance(graph, SandpileGraph) else graph
    n = g.n_vertices
    adj = g.adjacency()
    edges = g.edges
    disc = [-1] * n
    low = [0] * n
    estack = []
    raw_blocks = []
    timer = 0
    for root in range(n):
        if disc[root] != -1:
            continue
        disc[root] = low[root] = timer
        timer += 1
        stack = [(root, -1, iter(adj[root]))]
        while stack:
            v, pe, it = stack[-1]
            advanced = False
            for w, eid in it:
                if eid == pe or w == v:
                    continue
                if disc[w] == -1:
                    estack.append(eid)
                    disc[w] = low[w] = timer
                    timer += 1
                    stack.append((w, eid, iter(adj[w])))
                    advanced = True
                    break
                if disc[w] < disc[v]:
                    estack.append(eid)
                    if disc[w] < low[v]:
                        low[v] = disc[w]
            if advanced:
                continue
            stack.pop()
            if not stack:
                continue
            u = stack[-1][0]
            if low[v] < low[u]:
                low[u] = low[v]
            if low[v] >= disc[u]:
                blk = []
                while True:
                    eid = estack.pop()
                    blk.append(eid)
                    if eid == pe:
                        break
                raw_blocks.append(blk)

    blocks = []
    vertex_blocks = [[] for _ in range(n)]
    for eids in raw_blocks:
        verts = set()
        within_deg = Counter()
        for eid in eids:
            u, v, _ = edges[eid]
            verts.update((u, v))
            within_deg[u] += 1
            within_deg[v] += 1
        if len(eids) == 1:
            u, v, _ = edges[eids[0]]
            kind, order = "edge", (min(u, v), max(u, v))
        elif len(eids) == len(verts) and all(d == 2 for d in within_deg.values()):
            order = _cycle_order(eids, edges)
            kind = "cycle" if order is not None else "core"
            if order is None:
                order = tuple(sorted(verts))
        else:
            kind, order = "core", tuple(sorted(verts))
        bid = len(blocks)
        blocks.append(Block(bid, kind, order, tuple(sorted(eids))))
        for v in order:
            vertex_blocks[v].append(bid)
    cuts = {v for v in range(n) if len(vertex_blocks[v]) >= 2}
    loops = g.loop_counts()
    is_cactus = all(b.kind in ("cycle", "edge") for b in blocks)
    return BlockDecomposition(blocks, vertex_blocks, cuts, loops, is_cactus)


# ---------------------------------------------------------------------------
# Block paths
# ---------------------------------------------------------------------------

@dataclass
class BlockPath:
    block_ids: list
    cuts: list  # cuts[i] joins block_ids[i] and block_ids[i+1]
    source: int
    target: int

    def __len__(self):
        return len(self.block_ids)


def _block_adjacency(dec: BlockDecomposition):
    nbrs = defaultdict(set)
    for v in dec.cut_vertices:
        bids = dec.vertex_blocks[v]
        for b in bids:
            for c in bids:
                if b != c:
                    nbrs[b].add(c)
    return nbrs


def block_path(dec: BlockDecomposition, v: int, p: int) -> BlockPath:
    """Unique minimal block-path joining v to p (empty when v == p)."""
    if v == p:
        return BlockPath([], [], v, p)
    starts = dec.vertex_blocks[v]
    goals = set(dec.vertex_blocks[p])
    if not starts or not goals:
        raise CactusError("vertex with no incident block")
    nbrs = _block_adjacency(dec)
    prev = {b: None for b in starts}
    queue = deque(starts)
    end = None
    while queue:
        b = queue.popleft()
        if b in goals:
            end = b
            break
        for c in nbrs[b]:
            if c not in prev:
                prev[c] = b
                queue.append(c)
    if end is None:
        raise CactusError("no block path (disconnected input?)")
    ids = [end]
    while prev[ids[-1]] is not None:
        ids.append(prev[ids[-1]])
    ids.reverse()
    cuts = []
    for a, b in zip(ids, ids[1:]):
        shared = set(dec.blocks[a].vertices) & set(dec.blocks[b].vertices)
        if len(shared) != 1:
            raise CactusError("consecutive blocks share %d vertices" % len(shared))
        cuts.append(shared.pop())
    return BlockPath(ids, cuts, v, p)


def dominates(dec: BlockDecomposition, sink: int, w: int, x: int) -> bool:
    """True iff w lies on every path from x to the sink (x above w)."""
    if x == w or w == sink:
        return True
    return w in block_path(dec, x, sink).cuts


# ---------------------------------------------------------------------------
# Rooted decoration aggregation
# ---------------------------------------------------------------------------

@dataclass
class DecorationInfo:
    size: int
    height: int
    diam: int


def _cycle_pair_max(heights):
    """max over distinct member pairs of h_i + h_j + cycledist(i, j).

    ``heights[i]`` is the hanging height at cyclic position i (i = 0 is the
    anchor and must not be included by the caller: pass None there).
    Linear-time sliding-window over the doubled sequence.
    """
    s = len(heights)
    positions = [i for i in range(s) if heights[i] is not None]
    if len(positions) < 2:
        return None
    half = s // 2
    doubled = positions + [p + s for p in positions]
    best = None
    dq = deque()  # (position, h - position), decreasing in value
    idx = 0
    for t in doubled:
        while idx < len(doubled) and doubled[idx] < t:
            c = doubled[idx]
            val = heights[c % s] - c
            while dq and dq[-1][1] <= val:
                dq.pop()
            dq.append((c, val))
            idx += 1
        while dq and dq[0][0] < t - half:
            dq.popleft()
        if dq:
            cand = heights[t % s] + t + dq[0][1]
            if best is None or cand > best:
                best = cand
    return best


def _cycle_pair_max_slow(heights):
    s = len(heights)
    best = None
    for i in range(s):
        if heights[i] is None:
            continue
        for j in range(i + 1, s):
            if heights[j] is None:
                continue
            d = min(j - i, s - (j - i))
            cand = heights[i] + heights[j] + d
            if best is None or cand > best:
                best = cand
    return best


def decoration_weights(g: LabeledMultigraph, dec: BlockDecomposition,
                       sink: int) -> list:
    """Per-vertex (size, height, diam) of the hanging side away from sink.

    For vertex v != sink this describes the subgraph induced by v and
    everything separated from the sink by v.  Entry [sink] is the whole
    graph.
    """
    n = g.n_vertices
    # depth of every block measured from the sink's blocks
    sink_blocks = dec.vertex_blocks[sink]
    nbrs = _block_adjacency(dec)
    depth = {b: 0 for b in sink_blocks}
    queue = deque(sink_blocks)
    while queue:
        b = queue.popleft()
        for c in nbrs[b]:
            if c not in depth:
                depth[c] = depth[b] + 1
                queue.append(c)
    if len(depth) != len(dec.blocks):
        raise CactusError("graph is not connected")

    parent_block = [None] * n
    for v in range(n):
        if v == sink or not dec.vertex_blocks[v]:
            continue
        parent_block[v] = min(dec.vertex_blocks[v], key=lambda b: depth[b])

    info = [None] * n
    order = sorted((v for v in range(n) if v != sink and parent_block[v] is not None),
                   key=lambda v: -depth[parent_block[v]])
    for v in order:
        size = 1
        branch_stats = []
        for bid in dec.vertex_blocks[v]:
            if bid == parent_block[v]:
                continue
            blk = dec.blocks[bid]
            if blk.kind == "edge":
                u = blk.vertices[0] if blk.vertices[1] == v else blk.vertices[1]
                iu = info[u]
                size += iu.size
                branch_stats.append((1 + iu.height, max(iu.diam, 1 + iu.height)))
                continue
            order_c = list(blk.vertices)
            i0 = order_c.index(v)
            order_c = order_c[i0:] + order_c[:i0]
            s = len(order_c)
            heights = [None] * s
            b_diam = 0
            b_height = 0
            for pos in range(1, s):
                u = order_c[pos]
                iu = info[u]
                size += iu.size
                heights[pos] = iu.height
                if iu.diam > b_diam:
                    b_diam = iu.diam
                reach = min(pos, s - pos) + iu.height
                if reach > b_height:
                    b_height = reach
            pair = _cycle_pair_max(heights)
            if pair is not None and pair > b_diam:
                b_diam = pair
            if b_height > b_diam:
                b_diam = b_height
            branch_stats.append((b_height, b_diam))
        height = max((h for h, _ in branch_stats), default=0)
        diam = max((d for _, d in branch_stats), default=0)
        tops = sorted((h for h, _ in branch_stats), reverse=True)
        if len(tops) >= 2 and tops[0] + tops[1] > diam:
            diam = tops[0] + tops[1]
        info[v] = DecorationInfo(size, height, diam)

    info[sink] = None  # the sink has no hanging side
    return info


# ---------------------------------------------------------------------------
# Path profile (input of the avalanche engines)
# ---------------------------------------------------------------------------

@dataclass
class PathBlock:
    kind: str
    size: int
    entry_pos: int
    vertices: tuple  # position -> vertex id; position 0 is the exit
    weights: tuple   # position -> |D(vertex)|; exit position unused (0)
    heights: tuple
    diams: tuple


@dataclass
class PathProfile:
    blocks: list
    d: list        # d[j] = |D(p_j)|, j = 0 .. r-1, with p_0 the root
    diam_d: list
    height_d: list
    root: int
    sink: int
    n_vertices: int

    @property
    def r(self) -> int:
        return len(self.blocks)

    def sizes(self):
        return [b.size for b in self.blocks]


def path_profile(sg: SandpileGraph, root: int,
                 dec: BlockDecomposition | None = None) -> PathProfile:
    """Block path from root to the (single) sink with decoration weights."""
    if len(sg.dissipative) != 1:
        raise CactusError("path_profile needs a single merged sink")
    sink = sg.dissipative[0]
    if root == sink:
        raise CactusError("root coincides with the sink")
    g = sg.graph
    if dec is None:
        dec = block_decompose(g)
    bp = block_path(dec, root, sink)
    info = decoration_weights(g, dec, sink)

    blocks = []
    d = [info[root].size]
    diam_d = [info[root].diam]
    height_d = [info[root].height]
    r = len(bp.block_ids)
    for j, bid in enumerate(bp.block_ids):
        blk = dec.blocks[bid]
        entry = root if j == 0 else bp.cuts[j - 1]
        exit_v = bp.cuts[j] if j < r - 1 else sink
        if entry == exit_v:
            raise CactusError("degenerate path block (entry == exit)")
        if blk.kind == "core":
            raise CactusError("non-cactus block on the avalanche path")
        if blk.kind == "edge":
            verts = (exit_v, entry)
            pb = PathBlock("edge", 2, 1, verts,
                           (0, info[entry].size),
                           (0, info[entry].height),
                           (0, info[entry].diam))
        else:
            order = list(blk.vertices)
            i0 = order.index(exit_v)
            order = order[i0:] + order[:i0]
            if len(order) > 2 and order[1] > order[-1]:
                order = [order[0]] + order[1:][::-1]
            weights, heights, diams = [0], [0], [0]
            for u in order[1:]:
                weights.append(info[u].size)
                heights.append(info[u].height)
                diams.append(info[u].diam)
            pb = PathBlock("cycle", len(order), order.index(entry), tuple(order),
                           tuple(weights), tuple(heights), tuple(diams))
        blocks.append(pb)
        if j < r - 1:
            cut = bp.cuts[j]
            d.append(info[cut].size)
            diam_d.append(info[cut].diam)
            height_d.append(info[cut].height)

    prof = PathProfile(blocks, d, diam_d, height_d, root, sink, g.n_vertices)
    # everything except the sink hangs below the last block
    last = blocks[-1]
    covered = d[-1] + sum(w for pos, w in enumerate(last.weights)
                          if pos not in (0, last.entry_pos))
    if covered != g.n_vertices - 1:
        raise CactusError("decoration bookkeeping mismatch: %d != %d"
                          % (covered, g.n_vertices - 1))
    return prof


# ---------------------------------------------------------------------------
# Decoration stats along a path and critical group
# ---------------------------------------------------------------------------

@dataclass
class DecorationStats:
    d: list
    diam: list

    def strictly_increasing(self) -> bool:
        return all(a < b for a, b in zip(self.d, self.d[1:]))


def decoration_stats(profile: PathProfile) -> DecorationStats:
    return DecorationStats(list(profile.d), list(profile.diam_d))


def critical_group(dec: BlockDecomposition) -> list:
    """Cyclic factor decomposition [(order, multiplicity), ...], desc order."""
    if not dec.is_cactus:
        raise CactusError("critical group factorization implemented for cacti only")
    counts = Counter(b.size for b in dec.blocks if b.kind == "cycle")
    return sorted(counts.items(), reverse=True)


def critical_group_order(factors) -> int:
    out = 1
    for order, mult in factors:
        out *= order ** mult
    return out


# ---------------------------------------------------------------------------
# Growth
# ---------------------------------------------------------------------------

@dataclass
class GrowthStats:
    radii: list
    ball_sizes: list
    alpha_hat: float
    window: tuple


def ball_sizes(g: LabeledMultigraph, v: int, r_max: int | None = None) -> list:
    adj = g.adjacency()
    dist = [-1] * g.n_vertices
    dist[v] = 0
    queue = deque([v])
    layers = Counter({0: 1})
    while queue:
        u = queue.popleft()
        if r_max is not None and dist[u] >= r_max:
            continue
        for w, _ in adj[u]:
            if dist[w] == -1:
                dist[w] = dist[u] + 1
                layers[dist[w]] += 1
                queue.append(w)
    sizes = []
    total = 0
    for r in range(max(layers) + 1):
        total += layers[r]
        sizes.append(total)
    return sizes


def growth_stats(g: LabeledMultigraph, v: int, r_max: int | None = None,
                 window: tuple | None = None) -> GrowthStats:
    """Ball census around v and the log-log growth slope.

    The default window ends where the ball starts swallowing the whole
    finite graph (half the vertices) and starts at a quarter of that, which
    skips the pre-asymptotic head.
    """
    sizes = ball_sizes(g, v, r_max)
    n = g.n_vertices
    if window is None:
        hi = max((r for r, s in enumerate(sizes) if s <= n / 2), default=1)
        lo = max(2, hi // 4)
        window = (lo, hi)
    lo, hi = window
    hi = min(hi, len(sizes) - 1)
    rs = [r for r in range(lo, hi + 1)]
    if len(rs) < 2:
        raise CactusError("growth window too small")
    xs = np.log([float(r) for r in rs])
    ys = np.log([float(sizes[r]) for r in rs])
    slope = float(np.polyfit(xs, ys, 1)[0])
    return GrowthStats(rs, [sizes[r] for r in rs], slope, (lo, hi))


def beta_stats(profile: PathProfile, window_frac: float = 0.5):
    """Finite-index surrogates (beta, beta') of log d_i / log Diam(D(p_i)).

    Uses the trailing part of the available cut sequence.
    """
    pairs = [(d, dm) for d, dm in zip(profile.d, profile.diam_d) if dm >= 2]
    if not pairs:
        raise CactusError("no usable decoration diameters")
    start = int(len(pairs) * window_frac)
    tail = pairs[start:] or pairs[-1:]
    ratios = [math.log(d) / math.log(dm) for d, dm in tail]
    return max(ratios), min(ratios)


# ---------------------------------------------------------------------------
# Boundary rays: parametrization, reconstruction, end counts
# ---------------------------------------------------------------------------

class RayError(ValueError):
    pass


@dataclass(frozen=True)
class RaySpec:
    """Eventually periodic ray prefix . period^omega (period may be empty
    for purely finite prefixes, which only support prefix extraction)."""

    prefix: str = ""
    period: str = ""

    def word(self, n: int) -> str:
        if len(self.prefix) >= n:
            return self.prefix[:n]
        if not self.period:
            raise RayError("finite ray spec too short for level %d" % n)
        need = n - len(self.prefix)
        reps = need // len(self.period) + 1
        return (self.prefix + self.period * reps)[:n]


def parse_ray(text: str, rng=None) -> RaySpec:
    """Grammar: lit:<w> | per(<p>) | pre(<w>)per(<p>) | rand:<seed>."""
    text = text.strip()
    if text.startswith("lit:"):
        return RaySpec(prefix=text[4:])
    if text.startswith("per(") and text.endswith(")"):
        return RaySpec(period=text[4:-1])
    if text.startswith("pre(") and "per(" in text and text.endswith(")"):
        pre_part, per_part = text.split(")per(", 1)
        return RaySpec(prefix=pre_part[4:], period=per_part[:-1])
    if text.startswith("rand:"):
        import random

        seed = int(text[5:])
        r = random.Random(seed)
        bits = "".join(str(r.randrange(2)) for _ in range(64))
        return RaySpec(prefix=bits)
    raise RayError("cannot parse ray spec %r" % text)


@dataclass(frozen=True)
class RayTriple:
    """Parameters (l, {m_k}, {t_k}) of a one-ended binary ray, plus the free
    bits inside the zero groups.  ``ones_tail`` marks the w1^omega family."""

    l: int
    m: tuple
    t: tuple
    bits: tuple  # bits[k] = letters x_1^k .. x_{m_k/2}^k
    ones_tail: bool

    def __post_init__(self):
        if self.l < 1 or self.m[0] % 2 or self.t[0] != 0:
            raise RayError("invalid triple head")
        for mk in self.m[1:]:
            if mk <= 0 or mk % 2:
                raise RayError("m_k must be positive even")
        for tk in self.t[1:]:
            if tk <= 0:
                raise RayError("t_k must be positive")
        if len(self.m) != len(self.t) or len(self.bits) != len(self.m):
            raise RayError("triple sequences have inconsistent lengths")


def ray_triple(word: str) -> RayTriple:
    """Parse a finite binary word into its (l, {m_k}, {t_k}) triple.

    The word is read as a prefix of the ray word . 1^omega, so it must
    decompose as 0^{l-1} 1 (0x 0x ..) 1^{t_1} (0x ..) 1^{t_2} ...; a
    trailing run of ones is absorbed into the tail.  Words of 0^omega or
    alternating shape fail with a classification error.
    """
    if not word or set(word) - {"0", "1"}:
        raise RayError("binary words only")
    i = 0
    while i < len(word) and word[i] == "0":
        i += 1
    if i == len(word):
        raise RayError("all-zero word: not a one-ended ray shape (0^omega tail)")
    l = i + 1
    i += 1
    m, t, bits = [], [0], []

    def take_group():
        nonlocal i
        group = []
        while i < len(word) and word[i] == "0":
            if i + 1 >= len(word):
                raise RayError("word ends inside a zero pair")
            group.append(int(word[i + 1]))
            i += 2
        m.append(2 * len(group))
        bits.append(tuple(group))

    take_group()
    while i < len(word):
        run = 0
        while i < len(word) and word[i] == "1":
            run += 1
            i += 1
        if i >= len(word):
            break  # trailing ones belong to the 1^omega tail
        t.append(run)
        take_group()
    return RayTriple(l, tuple(m), tuple(t), tuple(bits), True)


def ray_triple_prefix(word: str):
    """Longest cleanly parsable prefix: returns (triple, used_length)."""
    for end in range(len(word), 0, -1):
        try:
            return ray_triple(word[:end]), end
        except RayError:
            continue
    raise RayError("no parsable prefix in %r" % word)


def reconstruct(triple: RayTriple, length: int | None = None) -> str:
    """Inverse of ray_triple; appends the 1^omega tail up to ``length``."""
    out = ["0" * (triple.l - 1), "1"]
    for k in range(len(triple.m)):
        if k > 0:
            out.append("1" * triple.t[k])
        out.append("".join("0%d" % b for b in triple.bits[k]))
    word = "".join(out)
    if length is not None:
        if len(word) > length:
            raise RayError("triple longer than requested length")
        if not triple.ones_tail and len(word) < length:
            raise RayError("finite triple shorter than requested length")
        word = word + "1" * (length - len(word))
    return word


def a_sequence(triple: RayTriple, count: int) -> list:
    """Cycle-size exponents a_1..a_count of the block path of the ray.

    a_{T_{j-1}+s+1} = l + M_{j-1} + T_{j-1} + s; after the parsed groups the
    ones tail continues the unit steps.  Block i of the path is a cycle of
    length 2^ceil(a_i / 2).
    """
    out = []
    mc = tc = 0  # cumulative m / t before the current ones-run
    for j in range(1, len(triple.t)):
        mc += triple.m[j - 1]
        tc += triple.t[j - 1]
        for s in range(triple.t[j]):
            out.append(triple.l + mc + tc + s)
            if len(out) == count:
                return out
    mc += triple.m[-1]
    tc += triple.t[-1]
    if not triple.ones_tail:
        raise RayError("triple too short for %d blocks" % count)
    s = 0
    while len(out) < count:
        out.append(triple.l + mc + tc + s)
        s += 1
    return out


def predicted_block_sizes(triple: RayTriple, count: int) -> list:
    return [2 ** ((a + 1) // 2) for a in a_sequence(triple, count)]


def _tail_letters(spec: RaySpec, span: int):
    """(global_index, letter) pairs for one analysis window of the tail."""
    if not spec.period:
        raise RayError("end classification needs an eventually periodic ray")
    start = len(spec.prefix)
    word = spec.word(start + span)
    return [(i, word[i]) for i in range(start, start + span)]


def classify_basilica_ends(spec: RaySpec) -> int:
    per = spec.period
    if not per:
        raise RayError("need a periodic tail")
    if set(per) == {"0"}:
        return 4
    probe = spec.word(len(spec.prefix) + 2 * len(per) + 2)
    tail = probe[len(spec.prefix):]
    if all(tail[i] != tail[i + 1] for i in range(len(tail) - 1)):
        return 4  # eventually alternating: the w(01)^omega family
    window = _tail_letters(spec, 2 * len(per))
    even_one = any(ch == "1" for i, ch in window if i % 2 == 0)
    odd_one = any(ch == "1" for i, ch in window if i % 2 == 1)
    return 1 if (even_one and odd_one) else 2


def classify_img3_ends(spec: RaySpec) -> int:
    per = spec.period
    if not per:
        raise RayError("need a periodic tail")
    letters = set(per)
    if len(letters) == 1:
        return 4  # pure-letter tail
    if "1" in letters and "2" in letters:
        return 1  # infinitely many alternating A/B blocks
    return 2


def classify_ends(spec: RaySpec, preset_name: str) -> int:
    base = preset_name.split(":")[0]
    if base == "basilica" or preset_name == "kneading:0":
        return classify_basilica_ends(spec)
    if base == "img3":
        return classify_img3_ends(spec)
    raise RayError("end classification not available for preset %r" % preset_name)


# ---------------------------------------------------------------------------
# Ternary A/B block decomposition
# ---------------------------------------------------------------------------

def img_blocks(word: str):
    """Greedy maximal decomposition into type A (no 2) / type B (no 1) blocks.

    Zeros absorb into the current block; an all-zero word is a single type-A
    block.  Returns (blocks, nu) where nu[i] is the length of the prefix
    holding the first i+1 blocks.
    """
    if set(word) - {"0", "1", "2"}:
        raise RayError("ternary words only")
    blocks = []
    nu = []
    cur_type = None
    start = 0
    for i, ch in enumerate(word):
        if ch == "0":
            continue
        t = "A" if ch == "1" else "B"
        if cur_type is None:
            cur_type = t
        elif t != cur_type:
            blocks.append((cur_type, word[start:i]))
            nu.append(i)
            cur_type = t
            start = i
    blocks.append((cur_type if cur_type else "A", word[start:]))
    nu.append(len(word))
    return blocks, nu
