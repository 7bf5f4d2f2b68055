"""Finite Schreier graphs of a tree action and their rooted exhaustions.

Level-n vertices are the q^n words; for every generator g and vertex w one
undirected edge {w, g(w)} is added (a loop when fixed), so a k-generator
action yields a 2k-regular multigraph.  Exhaustion subgraphs realize the
one-, two- and four-ended dissipative conventions.
"""

from __future__ import annotations

from collections import Counter, deque
from dataclasses import dataclass

import numpy as np

from .automata import GroupPreset, act, level_permutations
from .cactus import BlockDecomposition, block_decompose, block_path
from .graphs import GraphError, LabeledMultigraph, RootedGraph, SandpileGraph


class SchreierError(ValueError):
    pass


class InvalidLevelError(SchreierError):
    """The requested level violates the exhaustion convention."""

    def __init__(self, message, nearest=None):
        super().__init__(message)
        self.nearest = nearest


def schreier_graph(preset: GroupPreset, n: int) -> LabeledMultigraph:
    """Schreier graph of the level-n action; vertices in word (code) order."""
    if n < 1:
        raise SchreierError("level must be >= 1")
    aut = preset.automaton
    q = aut.q
    perms = level_permutations(aut, n)
    size = q ** n
    edges = []
    for gi, gen in enumerate(aut.generators):
        perm = perms[gen]
        for u in range(size):
            edges.append((u, int(perm[u]), gi))
    return LabeledMultigraph(size, edges, tuple(aut.generators),
                             q=q, level=n, word_codes=None)


# ---------------------------------------------------------------------------
# Covering verification
# ---------------------------------------------------------------------------

@dataclass
class CoveringReport:
    ok: bool
    fiber_size: int | None
    witness: str | None


def verify_covering(preset: GroupPreset, n: int,
                    graph_hi: LabeledMultigraph | None = None,
                    graph_lo: LabeledMultigraph | None = None) -> CoveringReport:
    """Check that dropping the last letter covers level n from level n+1.

    Every labeled edge of the upper graph must project onto an edge of the
    lower one with fibers of size q (label preserved); a corrupted edge
    list produces a witness.
    """
    q = preset.alphabet.size
    hi = graph_hi if graph_hi is not None else schreier_graph(preset, n + 1)
    lo = graph_lo if graph_lo is not None else schreier_graph(preset, n)

    def norm(u, v, lab):
        return (u, v, lab) if u <= v else (v, u, lab)

    projected = Counter()
    for u, v, lab in hi.edges:
        projected[norm(u // q, v // q, lab)] += 1
    lower = Counter(norm(u, v, lab) for u, v, lab in lo.edges)
    for key, mult in lower.items():
        if projected.get(key, 0) != q * mult:
            u, v, lab = key
            return CoveringReport(
                False, None,
                "edge {%s,%s} label %s: fiber %d != %d" % (
                    lo.word(u), lo.word(v), lo.labels[lab],
                    projected.get(key, 0), q * mult))
    extra = set(projected) - set(lower)
    if extra:
        u, v, lab = sorted(extra)[0]
        return CoveringReport(False, None,
                              "projected edge {%s,%s} label %s missing below"
                              % (lo.word(u), lo.word(v), lo.labels[lab]))
    return CoveringReport(True, q, None)


# ---------------------------------------------------------------------------
# Rooted-ball comparison (the local metric)
# ---------------------------------------------------------------------------

def _direction_maps(g: LabeledMultigraph):
    """fwd[label][u] -> v and bwd[label][v] -> u per stored edge orientation."""
    k = len(g.labels)
    fwd = [dict() for _ in range(k)]
    bwd = [dict() for _ in range(k)]
    for u, v, lab in g.edges:
        if u in fwd[lab]:
            raise SchreierError("vertex %d has two outgoing %r edges"
                                % (u, g.labels[lab]))
        fwd[lab][u] = v
        if v in bwd[lab]:
            raise SchreierError("vertex %d has two incoming %r edges"
                                % (v, g.labels[lab]))
        bwd[lab][v] = u
    return fwd, bwd


def _distances(g: LabeledMultigraph, root: int):
    adj = g.adjacency()
    dist = {root: 0}
    queue = deque([root])
    while queue:
        u = queue.popleft()
        for w, _ in adj[u]:
            if w not in dist:
                dist[w] = dist[u] + 1
                queue.append(w)
    return dist


def common_ball_radius(a: RootedGraph, b: RootedGraph) -> int:
    """Largest r with isomorphic labeled r-balls around the roots.

    The comparison follows generator labels from the roots (the canonical
    root-fixing map of deterministic labeled graphs).  For fully isomorphic
    finite graphs this returns max eccentricity + 1, so Dist = 1/(r+1) is
    the honest upper bound at finite size.
    """
    if a.graph.labels != b.graph.labels:
        raise SchreierError("generator label sets differ")
    fa, ba_ = _direction_maps(a.graph)
    fb, bb_ = _direction_maps(b.graph)
    dist_a = _distances(a.graph, a.root)
    dist_b = _distances(b.graph, b.root)
    k = len(a.graph.labels)
    moves_a = [fa[i].get for i in range(k)] + [ba_[i].get for i in range(k)]
    moves_b = [fb[i].get for i in range(k)] + [bb_[i].get for i in range(k)]
    r_cap = max(max(dist_a.values(), default=0),
                max(dist_b.values(), default=0)) + 1

    def check_moves(u, f, image, r, grow):
        out = []
        for ma, mb in zip(moves_a, moves_b):
            ua, ub = ma(u), mb(f[u])
            if (ua is None) != (ub is None):
                return None
            if ua is None:
                continue
            inside_a = dist_a.get(ua, r + 1) <= r
            inside_b = dist_b.get(ub, r + 1) <= r
            if inside_a != inside_b:
                return None  # the edge leaves one ball but not the other
            if not inside_a:
                continue
            if ua in f:
                if f[ua] != ub:
                    return None
            elif not grow or ub in image:
                return None
            else:
                f[ua] = ub
                image.add(ub)
                out.append(ua)
        return out

    def ball_isomorphic(r):
        f = {a.root: b.root}
        image = {b.root}
        frontier = [a.root]
        for _ in range(r):
            nxt = []
            for u in frontier:
                grown = check_moves(u, f, image, r, grow=True)
                if grown is None:
                    return False
                nxt.extend(grown)
            frontier = nxt
        for u in frontier:  # edges within the outermost layer
            if check_moves(u, f, image, r, grow=False) is None:
                return False
        size_a = sum(1 for d in dist_a.values() if d <= r)
        size_b = sum(1 for d in dist_b.values() if d <= r)
        return size_a == len(f) and size_b == len(image)

    best = -1
    for r in range(r_cap + 1):
        if ball_isomorphic(r):
            best = r
        else:
            break
    return best


def rooted_distance(a: RootedGraph, b: RootedGraph) -> float:
    """Metric 1/(r+1) with r the largest isomorphic ball radius."""
    r = common_ball_radius(a, b)
    return 1.0 if r < 0 else 1.0 / (r + 1)


# ---------------------------------------------------------------------------
# Exhaustion subgraphs
# ---------------------------------------------------------------------------

@dataclass
class Exhaustion:
    sandpile: SandpileGraph
    root: int
    convention: str
    level: int
    preset_name: str
    meta: dict

    @property
    def graph(self) -> LabeledMultigraph:
        return self.sandpile.graph


def _component_with(g: LabeledMultigraph, start: int, removed: set):
    adj = g.adjacency()
    seen = {start}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for w, _ in adj[u]:
            if w not in removed and w not in seen:
                seen.add(w)
                queue.append(w)
    return seen


def _separating_vertex_ok(graph, dec, root, zero):
    """Convention check: the cut between the last two path blocks must not
    be the corner vertex 0^n itself (else the level is skipped)."""
    bp = block_path(dec, root, zero)
    if len(bp.block_ids) < 2:
        return True, bp
    return bp.cuts[-1] != zero, bp


def exhaustion_subgraph(preset: GroupPreset, n: int, ray_prefix: str,
                        convention: str = "one-ended",
                        graph: LabeledMultigraph | None = None) -> Exhaustion:
    """Rooted sandpile subgraph H_n of the level-n Schreier graph.

    one-ended: component of the root with 0^n removed, 0^n the sole sink.
    two-ended: the two neighbours of 0^n on the last block of the root's
    block-path are the sinks.  four-ended: the four cycle neighbours of
    0^{n-1}1 and 0^{n-2}10 on their paths toward 0^n (root forced to 0^n).
    The dissipative set is kept separate; merge it for single-sink engines.
    """
    g = graph if graph is not None else schreier_graph(preset, n)
    q = preset.alphabet.size
    if convention != "four-ended":
        if len(ray_prefix) != n:
            raise SchreierError("ray prefix must have length n")
        root_full = g.vertex(ray_prefix)
    zero = g.vertex("0" * n)

    if convention == "one-ended":
        if root_full == zero:
            raise SchreierError("one-ended convention needs root != 0^n")
        dec = block_decompose(g)
        ok, bp = _separating_vertex_ok(g, dec, root_full, zero)
        if not ok:
            raise InvalidLevelError(
                "level %d invalid: the separating vertex of the last two "
                "path blocks equals 0^n" % n,
                nearest=_nearest_valid(preset, n, ray_prefix, convention))
        keep = _component_with(g, root_full, {zero})
        keep.add(zero)
        sub, old2new = g.induced(keep)
        return Exhaustion(SandpileGraph(sub, (old2new[zero],)),
                          old2new[root_full], convention, n, preset.name,
                          {"blocks_full": len(bp.block_ids)})

    if convention == "two-ended":
        dec = block_decompose(g)
        ok, bp = _separating_vertex_ok(g, dec, root_full, zero)
        last = dec.blocks[bp.block_ids[-1]]
        if last.kind != "cycle":
            raise SchreierError("two-ended convention needs a cycle last block")
        order = list(last.vertices)
        i0 = order.index(zero)
        p1 = order[(i0 + 1) % len(order)]
        p2 = order[(i0 - 1) % len(order)]
        if not ok or root_full in (p1, p2, zero) or len(bp.block_ids) < 2:
            raise InvalidLevelError(
                "level %d invalid for the two-ended convention" % n,
                nearest=_nearest_valid(preset, n, ray_prefix, convention))
        entry = bp.cuts[-1]
        if entry in (p1, p2, zero):
            raise InvalidLevelError(
                "level %d invalid: root decoration attaches at a dissipative "
                "vertex" % n,
                nearest=_nearest_valid(preset, n, ray_prefix, convention))
        keep = _component_with(g, root_full, {p1, p2})
        if zero in keep:
            raise SchreierError("root and 0^n not separated; not a two-ended "
                                "exhaustion at this level")
        keep.update((p1, p2))
        sub, old2new = g.induced(keep)
        return Exhaustion(SandpileGraph(sub, (old2new[p1], old2new[p2])),
                          old2new[root_full], convention, n, preset.name,
                          {"central_cycle": len(order)})

    if convention == "four-ended":
        if q != 2:
            raise SchreierError("four-ended construction is defined on the "
                                "binary-tree presets")
        if n < 4:
            raise SchreierError("four-ended convention needs n >= 4")
        dec = block_decompose(g)
        u1 = g.vertex("0" * (n - 1) + "1")
        u2 = g.vertex("0" * (n - 2) + "10")
        sinks = []
        for u in (u1, u2):
            bp = block_path(dec, u, zero)
            first = dec.blocks[bp.block_ids[0]]
            if first.kind != "cycle":
                raise SchreierError("corner vertex not on a cycle block")
            order = list(first.vertices)
            iu = order.index(u)
            sinks.append(order[(iu + 1) % len(order)])
            sinks.append(order[(iu - 1) % len(order)])
        if len(set(sinks)) != 4 or zero in sinks:
            raise InvalidLevelError(
                "level %d invalid for the four-ended convention" % n,
                nearest=None)
        keep = _component_with(g, zero, set(sinks))
        keep.update(sinks)
        sub, old2new = g.induced(keep)
        return Exhaustion(SandpileGraph(sub, tuple(old2new[s] for s in sinks)),
                          old2new[zero], convention, n, preset.name,
                          {"corners": [g.word(u1), g.word(u2)]})

    raise SchreierError("unknown convention %r" % convention)


def _nearest_valid(preset, n, ray_prefix, convention, span: int = 4):
    from .cactus import RaySpec

    for delta in range(1, span + 1):
        for cand in (n + delta, n - delta):
            if cand < 1:
                continue
            try:
                prefix = (ray_prefix + ray_prefix[-1] * delta)[:cand]
                exhaustion_subgraph(preset, cand, prefix, convention)
                return cand
            except (SchreierError, GraphError):
                continue
    return None
