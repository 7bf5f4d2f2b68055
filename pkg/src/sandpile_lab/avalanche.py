"""Exact and Monte Carlo avalanche statistics on block-path exhaustions.

The exact engines exploit that an avalanche triggered at the root only
depends on the independent uniform block configurations along the block
path toward the sink.  Three routes are provided and cross-checked: brute
product enumeration with the full simulator, a transition-kernel dynamic
program over (block, incoming chips) states, and Monte Carlo sampling.
"""

from __future__ import annotations

import hashlib
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .cactus import CactusError, PathProfile, block_decompose, path_profile
from .graphs import SandpileGraph
from .sandpile import (Configuration, recurrent_sampler, stabilize,
                       trigger_avalanche)
from .schreier import Exhaustion


class AvalancheError(ValueError):
    pass


class KernelMismatchError(AvalancheError):
    """Transition kernel disagreed with the closed-form cycle arithmetic."""


# ---------------------------------------------------------------------------
# Distributions
# ---------------------------------------------------------------------------

@dataclass
class MassDistribution:
    """Law of a nonnegative avalanche statistic (mass or diameter).

    Exact laws carry Fractions; empirical ones floats plus counts.  Masses
    at or above ``bucket_min`` are aggregated in the overflow bucket.
    """

    quantity: str
    probs: dict
    exact: bool
    bucket_min: int | None = None
    bucket_prob: object = 0
    counts: dict | None = None
    samples: int | None = None
    meta: dict = field(default_factory=dict)

    def total(self):
        return sum(self.probs.values()) + self.bucket_prob

    def support(self) -> list:
        return sorted(m for m, p in self.probs.items() if p > 0)

    def probability(self, m):
        return self.probs.get(m, Fraction(0) if self.exact else 0.0)

    def folded(self, bucket_min: int):
        """Fold all resolved values >= bucket_min into the bucket."""
        if self.bucket_min is not None and bucket_min > self.bucket_min:
            raise AvalancheError("cannot unfold a coarser bucket")
        probs = {m: p for m, p in self.probs.items() if m < bucket_min}
        extra = sum(p for m, p in self.probs.items() if m >= bucket_min)
        out = MassDistribution(self.quantity, probs, self.exact, bucket_min,
                               self.bucket_prob + extra, None, self.samples,
                               dict(self.meta))
        return out

    def tv_distance(self, other: "MassDistribution") -> float:
        """Total-variation distance after aligning overflow buckets."""
        mins = [b for b in (self.bucket_min, other.bucket_min) if b is not None]
        a, b = self, other
        if mins:
            cut = min(mins)
            a, b = self.folded(cut), other.folded(cut)
        keys = set(a.probs) | set(b.probs)
        tv = sum(abs(float(a.probs.get(m, 0)) - float(b.probs.get(m, 0)))
                 for m in keys)
        tv += abs(float(a.bucket_prob) - float(b.bucket_prob))
        return tv / 2

    def as_rows(self):
        rows = []
        for m in sorted(self.probs):
            p = self.probs[m]
            if self.exact:
                rows.append((str(m), str(p.numerator), str(p.denominator)))
            else:
                cnt = self.counts.get(m, "") if self.counts else ""
                rows.append((str(m), repr(p), str(cnt)))
        if self.bucket_min is not None:
            p = self.bucket_prob
            if self.exact:
                rows.append((">=%d" % self.bucket_min,
                             str(p.numerator), str(p.denominator)))
            else:
                rows.append((">=%d" % self.bucket_min, repr(float(p)), ""))
        return rows


def distribution_from_counts(quantity: str, counts: Counter, samples: int,
                             meta=None) -> MassDistribution:
    probs = {m: c / samples for m, c in counts.items()}
    return MassDistribution(quantity, probs, False, None, 0.0,
                            dict(counts), samples, meta or {})


# ---------------------------------------------------------------------------
# Single cycle: closed-form law
# ---------------------------------------------------------------------------

def exact_cycle_distribution(size: int, i0: int) -> MassDistribution:
    """Avalanche-mass law on one cycle with the chip added at distance i0.

    Probabilities are exact over denominator ``size``; masses strictly
    between 0 and i0 are unrealizable.
    """
    if not (1 <= i0 and 2 * i0 <= size):
        raise AvalancheError("need 1 <= i0 and 2*i0 <= size")
    probs = {0: Fraction(1, size), size - 1: Fraction(1, size)}
    for m in range(i0, size - 1 - i0 + 1):
        probs[m] = Fraction(1, size)
    for m in range(size - i0, size - 1):
        probs[m] = probs.get(m, Fraction(0)) + Fraction(2, size)
    out = MassDistribution("mass", probs, True,
                           meta={"graph": "cycle", "size": size, "i0": i0})
    assert out.total() == 1
    return out


# ---------------------------------------------------------------------------
# Cycle transition kernel
# ---------------------------------------------------------------------------

_KERNEL_CACHE: dict = {}


def cycle_response(size: int, entry: int, k: int, t: int):
    """Local avalanche in one reduced cycle block.

    Cycle positions are 0..size-1 with the exit cut at 0 and all positions
    holding their recurrent value (config c_k: zero at position k).  ``t``
    chips arrive at ``entry``; the entry must become unstable.  Returns
    (t_out, lo, hi): chips delivered to the exit and the fired interval
    positions [entry-lo, entry+hi] (never wrapping through the exit).

    The final configuration is asserted against the rotation law
    (k - t * entry) mod size; a mismatch is a hard engine failure.
    """
    key = (size, entry, k, t)
    hit = _KERNEL_CACHE.get(key)
    if hit is not None:
        return hit
    vals = [1] * size
    if k:
        vals[k] = 0
    vals[entry] += t
    if vals[entry] < 2:
        raise AvalancheError("cycle_response called on a non-firing entry")
    fired = [0] * size
    t_out = 0
    stack = [entry]
    pending = bytearray(size)
    pending[entry] = 1
    while stack:
        v = stack.pop()
        pending[v] = 0
        if v == 0 or vals[v] < 2:
            continue
        vals[v] -= 2
        fired[v] += 1
        for w in ((v - 1) % size, (v + 1) % size):
            if w == 0:
                t_out += 1
            else:
                vals[w] += 1
                if vals[w] >= 2 and not pending[w]:
                    pending[w] = 1
                    stack.append(w)
        if vals[v] >= 2:
            pending[v] = 1
            stack.append(v)

    expect = (k - t * entry) % size
    ok = all(vals[i] == (0 if i == expect else 1) for i in range(1, size))
    if not ok:
        raise KernelMismatchError(
            "cycle %d entry %d config %d chips %d: final %r != c_%d"
            % (size, entry, k, t, vals[1:], expect))

    lo = 0
    while lo < size and fired[(entry - lo - 1) % size] and (entry - lo - 1) % size != 0:
        lo += 1
    hi = 0
    while hi < size and fired[(entry + hi + 1) % size] and (entry + hi + 1) % size != 0:
        hi += 1
    span = {(entry - i) % size for i in range(lo + 1)}
    span |= {(entry + i) % size for i in range(hi + 1)}
    if set(i for i in range(size) if fired[i]) != span:
        raise KernelMismatchError("fired set is not an interval around the entry")
    result = (t_out, lo, hi)
    _KERNEL_CACHE[key] = result
    return result


# ---------------------------------------------------------------------------
# Emission helpers shared by the DP and the path sampler
# ---------------------------------------------------------------------------

def _stop_mass(profile: PathProfile, j: int, arcs) -> int:
    """Mass of an avalanche stopping on path block j (1-based)."""
    blk = profile.blocks[j - 1]
    base = profile.d[j - 1]
    if arcs == "edge" or blk.kind == "edge":
        return base
    lo, hi = arcs
    e = blk.entry_pos
    total = base
    for i in range(1, lo + 1):
        total += blk.weights[(e - i) % blk.size]
    for i in range(1, hi + 1):
        total += blk.weights[(e + i) % blk.size]
    return total


def _stop_diameter(profile: PathProfile, j: int, arcs) -> int:
    """Exact diameter of the fired subgraph for a stop on block j."""
    blk = profile.blocks[j - 1]
    best = profile.diam_d[j - 1]
    if arcs == "edge" or blk.kind == "edge":
        return best
    lo, hi = arcs
    e = blk.entry_pos
    coords = list(range(-lo, hi + 1))  # path coordinates around the entry
    hh, dd = [], []
    for x in coords:
        pos = (e + x) % blk.size
        if x == 0:
            hh.append(profile.height_d[j - 1])
            dd.append(profile.diam_d[j - 1])
        else:
            hh.append(blk.heights[pos])
            dd.append(blk.diams[pos])
    best = max(best, max(dd))
    # pair term h + h' + (x - x') over x' < x via a prefix max of h' - x'
    run = None
    for x, h in zip(coords, hh):
        if run is not None:
            cand = h + x + run
            if cand > best:
                best = cand
        if run is None or h - x > run:
            run = h - x
    return best


# ---------------------------------------------------------------------------
# Dynamic program
# ---------------------------------------------------------------------------

@dataclass
class DpResult:
    mass: MassDistribution
    diameter: MassDistribution | None
    max_t: int
    t_trace: list  # per block: max chips in flight


def dp_blockpath_distribution(profile: PathProfile, cap: int | None = None,
                              with_diameter: bool = True,
                              meta=None) -> DpResult:
    """Exact law of the root-triggered avalanche mass (and diameter).

    States are (incoming chips t, fired interval of the previous block);
    each block contributes its uniform configuration index.  With
    ``cap`` = J < r the stops on blocks 1..J are resolved and the
    probability of firing the J-th cut goes to the ">= d_J" bucket.
    """
    r = profile.r
    cap = r if cap is None else min(cap, r)
    if cap < 1:
        raise AvalancheError("cap must be >= 1")
    mass_acc: dict = defaultdict(Fraction)
    diam_acc: dict = defaultdict(Fraction)
    one = Fraction(1)

    def emit(j, arcs, p):
        if j == 0:
            mass_acc[0] += p
            if with_diameter:
                diam_acc[0] += p
            return
        mass_acc[_stop_mass(profile, j, arcs)] += p
        if with_diameter:
            diam_acc[_stop_diameter(profile, j, arcs)] += p

    states = {(1, None): one}
    t_trace = []
    for j in range(1, cap + 1):
        blk = profile.blocks[j - 1]
        new_states: dict = defaultdict(Fraction)
        if blk.kind == "edge":
            for (t, arcs), p in states.items():
                new_states[(t, "edge")] += p  # entry always fires, t passes
        else:
            s = blk.size
            e = blk.entry_pos
            share = Fraction(1, s)
            for (t, arcs), p in states.items():
                ps = p * share
                for k in range(s):
                    if t == 1 and k == e:
                        emit(j - 1, arcs, ps)  # entry cut stays stable
                        continue
                    t_out, lo, hi = cycle_response(s, e, k, t)
                    new_states[(t_out, (lo, hi))] += ps
        states = dict(new_states)
        t_trace.append(max((t for (t, _) in states), default=0))

    bucket_min = None
    bucket_prob = Fraction(0)
    if cap == r:
        for (t, arcs), p in states.items():
            emit(r, arcs, p)
    else:
        nxt = profile.blocks[cap]
        for (t, arcs), p in states.items():
            if nxt.kind == "cycle" and t == 1:
                share = Fraction(1, nxt.size)
                emit(cap, arcs, p * share)
                bucket_prob += p * (1 - share)
            else:
                bucket_prob += p
        bucket_min = profile.d[cap]

    meta = dict(meta or {})
    meta.update({"method": "dp", "cap": cap, "blocks": profile.sizes()})
    mass = MassDistribution("mass", dict(mass_acc), True, bucket_min,
                            bucket_prob, meta=meta)
    diam = None
    if with_diameter:
        diam = MassDistribution("diameter", dict(diam_acc), True, bucket_min,
                                bucket_prob, meta=dict(meta))
    if mass.total() != 1:
        raise AvalancheError("dp law does not sum to 1: %r" % mass.total())
    return DpResult(mass, diam, max(t_trace, default=1), t_trace)


# ---------------------------------------------------------------------------
# Brute-force product enumeration (the oracle)
# ---------------------------------------------------------------------------

def exact_blockpath_distribution(sg: SandpileGraph, root: int,
                                 cap: int | None = None,
                                 with_diameter: bool = True,
                                 combo_limit: int = 300_000,
                                 meta=None):
    """Exact law by enumerating the block configurations along the path.

    Enumerates the product of the first J+1 path-block configurations
    (everything influencing stops up to block J), fixes arbitrary recurrent
    configurations elsewhere, and runs the full chip simulator per
    combination.  Avalanches firing the J-th cut accumulate in the bucket.
    """
    dec = block_decompose(sg.graph)
    profile = path_profile(sg, root, dec)
    sampler = recurrent_sampler(sg, dec)
    r = profile.r
    cap = r if cap is None else min(cap, r)
    use = min(cap + 1, r)

    # sampler indices of the path blocks, in path order
    anchor_to_idx = {verts[0]: i for i, verts in enumerate(sampler.cycle_blocks)}
    path_idx = []
    for j in range(use):
        blk = profile.blocks[j]
        if blk.kind == "cycle":
            path_idx.append((j, anchor_to_idx[blk.vertices[0]]))
    combos = 1
    for j, _ in path_idx:
        combos *= profile.blocks[j].size
    if combos > combo_limit:
        raise AvalancheError(
            "enumeration needs %d combinations; lower the cap or use the dp"
            % combos)

    sinks = set(sg.dissipative)
    cut_after = None
    if cap < r:
        # vertex whose firing sends the avalanche past block `cap`
        from .cactus import block_path

        bp = block_path(dec, root, sg.dissipative[0])
        cut_after = bp.cuts[cap - 1]

    weight = Fraction(1)
    for j, _ in path_idx:
        weight /= profile.blocks[j].size

    mass_acc: dict = defaultdict(Fraction)
    diam_acc: dict = defaultdict(Fraction)
    bucket_prob = Fraction(0)
    indices = [0] * len(sampler.cycle_blocks)

    def run(pos):
        nonlocal bucket_prob
        if pos == len(path_idx):
            c = sampler.from_indices(indices)
            c.values[root] += 1
            res = stabilize(sg, c, with_diameter=with_diameter)
            if cut_after is not None and res.fired_counts.get(cut_after, 0):
                bucket_prob += weight
                return
            mass_acc[res.mass] += weight
            if with_diameter:
                diam_acc[res.diameter] += weight
            return
        j, si = path_idx[pos]
        for k in range(profile.blocks[j].size):
            indices[si] = k
            run(pos + 1)
        indices[si] = 0

    run(0)
    meta = dict(meta or {})
    meta.update({"method": "exact", "cap": cap, "blocks": profile.sizes()})
    bucket_min = profile.d[cap] if cap < r else None
    mass = MassDistribution("mass", dict(mass_acc), True, bucket_min,
                            bucket_prob, meta=meta)
    diam = None
    if with_diameter:
        diam = MassDistribution("diameter", dict(diam_acc), True, bucket_min,
                                bucket_prob, meta=dict(meta))
    if mass.total() != 1:
        raise AvalancheError("enumeration law does not sum to 1")
    return DpResult(mass, diam, 0, [])


# ---------------------------------------------------------------------------
# Monte Carlo
# ---------------------------------------------------------------------------

def derive_seed(seed: int, index: int) -> int:
    digest = hashlib.sha256(("%d:%d" % (seed, index)).encode()).digest()
    return int.from_bytes(digest[:8], "big")


def _sample_path_once(profile: PathProfile, rng):
    """One avalanche along the block chain; returns (mass, stop_j, arcs)."""
    t = 1
    arcs = None
    r = profile.r
    for j in range(1, r + 1):
        blk = profile.blocks[j - 1]
        if blk.kind == "edge":
            arcs = "edge"
            continue
        k = rng.randrange(blk.size)
        if t == 1 and k == blk.entry_pos:
            return j - 1, arcs
        t, lo, hi = cycle_response(blk.size, blk.entry_pos, k, t)
        arcs = (lo, hi)
    return r, arcs


def mc_blockpath_distribution(profile: PathProfile, samples: int, seed: int,
                              quantity: str = "mass", workers: int = 1,
                              chunk: int = 10_000, meta=None) -> MassDistribution:
    """Monte Carlo law along the block chain.

    Samples are split into fixed chunks with seeds derived as
    sha256(seed:index), so the result is identical for any worker count.
    """
    import random

    counts = Counter()
    done = 0
    index = 0
    while done < samples:
        todo = min(chunk, samples - done)
        rng = random.Random(derive_seed(seed, index))
        for _ in range(todo):
            j, arcs = _sample_path_once(profile, rng)
            if j == 0:
                counts[0] += 1
            elif quantity == "mass":
                counts[_stop_mass(profile, j, arcs)] += 1
            else:
                counts[_stop_diameter(profile, j, arcs)] += 1
        done += todo
        index += 1
    meta = dict(meta or {})
    meta.update({"method": "mc-path", "seed": seed, "samples": samples})
    return distribution_from_counts(quantity, counts, samples, meta)


def mc_full_distribution(sg: SandpileGraph, root: int, samples: int, seed: int,
                         quantity: str = "mass", meta=None) -> MassDistribution:
    """Monte Carlo with full-graph sampling and simulation (slow oracle)."""
    import random

    sampler = recurrent_sampler(sg)
    counts = Counter()
    rng = random.Random(derive_seed(seed, 0))
    want_diam = quantity == "diameter"
    for _ in range(samples):
        c = sampler.sample(rng)
        c.values[root] += 1
        res = stabilize(sg, c, with_diameter=want_diam)
        counts[res.diameter if want_diam else res.mass] += 1
    meta = dict(meta or {})
    meta.update({"method": "mc-full", "seed": seed, "samples": samples})
    return distribution_from_counts(quantity, counts, samples, meta)


# ---------------------------------------------------------------------------
# Sandwich bounds
# ---------------------------------------------------------------------------

@dataclass
class SandwichBound:
    i_m: int
    lower: Fraction
    upper: Fraction
    l_constant: Fraction


def thm246_bounds(profile: PathProfile, m: int) -> SandwichBound:
    """Two-sided bound for P(mass = m) from the stop-block sizes.

    i_M is fixed by d_{i_M - 1} <= m < d_{i_M}; the lower constant is the
    product of (1 - 2/|C_j|) over earlier blocks larger than 2.
    """
    d = profile.d
    if m < d[0]:
        raise AvalancheError("mass %d below the root decoration size" % m)
    if m >= d[-1]:
        raise AvalancheError("mass %d beyond the last cut (out of range)" % m)
    i_m = next(i for i in range(1, len(d)) if d[i - 1] <= m < d[i])
    sizes = profile.sizes()
    lconst = Fraction(1)
    for j in range(1, i_m):
        if profile.blocks[j - 1].kind == "cycle" and sizes[j - 1] > 2:
            lconst *= Fraction(sizes[j - 1] - 2, sizes[j - 1])
    s_i = sizes[i_m - 1]
    s_n = sizes[i_m]
    return SandwichBound(i_m, lconst / (2 * s_i * s_n),
                         Fraction(2, s_i * s_n), lconst)


def check_sandwich(profile: PathProfile, dist: MassDistribution,
                   m_min: int | None = None):
    """Verify the two-sided bound for every resolved mass; returns failures."""
    failures = []
    lo_bound = profile.d[0] if m_min is None else m_min
    for m, p in sorted(dist.probs.items()):
        if p == 0 or m < lo_bound or m >= profile.d[-1]:
            continue
        b = thm246_bounds(profile, m)
        if not (b.lower <= p <= b.upper):
            failures.append((m, p, b))
    return failures


# ---------------------------------------------------------------------------
# Exponent fitting
# ---------------------------------------------------------------------------

@dataclass
class ExponentFit:
    delta_hat: float
    stderr: float
    window: tuple
    method: str
    n_points: int
    ratio_estimate: float


def fit_exponent(dist: MassDistribution, window: tuple | None = None,
                 min_points: int = 8) -> ExponentFit:
    """Least-squares slope of log P against log M over realizable masses.

    Default window is [32, max resolved / 4].  Also reports the coarse
    ratio estimator -log P(M*) / log M* at the window's top decile.
    """
    support = [m for m in dist.support() if m >= 1]
    if not support:
        raise AvalancheError("empty distribution")
    if window is None:
        window = (32, max(support) // 4)
    lo, hi = window
    pts = [(m, float(dist.probs[m])) for m in support if lo <= m <= hi]
    pts = [(m, p) for m, p in pts if p > 0]
    if len(pts) < min_points:
        raise AvalancheError("only %d fit points in window %r"
                             % (len(pts), window))
    xs = np.log([m for m, _ in pts])
    ys = np.log([p for _, p in pts])
    slope, intercept = np.polyfit(xs, ys, 1)
    resid = ys - (slope * xs + intercept)
    dof = max(len(pts) - 2, 1)
    sxx = float(np.sum((xs - xs.mean()) ** 2))
    stderr = math.sqrt(float(np.sum(resid ** 2)) / dof / sxx) if sxx else 0.0
    m_star, p_star = pts[min(int(0.9 * len(pts)), len(pts) - 1)]
    ratio = -math.log(p_star) / math.log(m_star)
    return ExponentFit(-float(slope), stderr, (lo, hi), "loglog-ls",
                       len(pts), ratio)


# ---------------------------------------------------------------------------
# Stationarity across levels
# ---------------------------------------------------------------------------

@dataclass
class StationarityReport:
    ok: bool
    common_blocks: int
    verified_below: int
    checked_masses: int
    first_mismatch: object


def _common_prefix(p1: PathProfile, p2: PathProfile) -> int:
    n = 0
    for b1, b2 in zip(p1.blocks, p2.blocks):
        if (b1.kind, b1.size, b1.entry_pos, b1.weights) != \
           (b2.kind, b2.size, b2.entry_pos, b2.weights):
            break
        n += 1
    return n


def stationarity_check(prof1: PathProfile, prof2: PathProfile
                       ) -> StationarityReport:
    """Exact agreement of the two laws on masses resolved by both levels.

    The laws must coincide as rationals on every mass below d[L-1], where L
    is the structural common prefix of the two block paths.
    """
    common = _common_prefix(prof1, prof2)
    if common < 1:
        return StationarityReport(False, 0, 0, 0, "no common block prefix")
    limit = prof1.d[common - 1]
    law1 = dp_blockpath_distribution(prof1, with_diameter=False).mass
    law2 = dp_blockpath_distribution(prof2, with_diameter=False).mass
    masses = sorted(set(m for m in law1.probs if m < limit)
                    | set(m for m in law2.probs if m < limit))
    for m in masses:
        if law1.probability(m) != law2.probability(m):
            return StationarityReport(False, common, limit - 1, len(masses),
                                      (m, law1.probability(m),
                                       law2.probability(m)))
    return StationarityReport(True, common, limit - 1, len(masses), None)
