"""Invertible Mealy automata acting on words of a regular rooted tree.

An automaton is given by a transition map mu(s, x) and an output map
nu(s, x).  Each non-identity state is a tree automorphism acting on words
letter by letter: nu(s, x w) = nu(s, x) nu(mu(s, x), w).  The first letter
of a word is the one consumed first (the root level).
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np

IDENTITY = "e"


class AutomatonError(ValueError):
    """Malformed automaton definition or invalid act() input."""


@dataclass(frozen=True)
class Alphabet:
    size: int

    def __post_init__(self):
        if self.size < 2:
            raise AutomatonError("alphabet needs at least 2 letters")

    @property
    def letters(self) -> range:
        return range(self.size)


@dataclass(frozen=True)
class Automaton:
    """Finite invertible Mealy automaton with a distinguished identity state.

    transition[s][x] is the state reached after consuming letter x in state
    s; output[s][x] is the emitted letter.  ``generators`` lists the
    non-identity states used as group generators.
    """

    alphabet: Alphabet
    transition: dict[str, tuple[str, ...]]
    output: dict[str, tuple[int, ...]]
    generators: tuple[str, ...]

    def __post_init__(self):
        q = self.alphabet.size
        states = set(self.transition)
        if states != set(self.output):
            raise AutomatonError("transition/output state sets differ")
        if IDENTITY not in states:
            raise AutomatonError("missing identity state %r" % IDENTITY)
        for s in states:
            if len(self.transition[s]) != q or len(self.output[s]) != q:
                raise AutomatonError("maps for state %r are not total" % s)
            if sorted(self.output[s]) != list(range(q)):
                raise AutomatonError("output of state %r is not a permutation" % s)
            for t in self.transition[s]:
                if t not in states:
                    raise AutomatonError("unknown target state %r" % t)
        if self.transition[IDENTITY] != (IDENTITY,) * q:
            raise AutomatonError("identity state must restrict to itself")
        if self.output[IDENTITY] != tuple(range(q)):
            raise AutomatonError("identity state must fix every letter")
        for g in self.generators:
            if g not in states or g == IDENTITY:
                raise AutomatonError("bad generator %r" % g)

    @property
    def states(self) -> tuple[str, ...]:
        return tuple(sorted(self.transition))

    @property
    def q(self) -> int:
        return self.alphabet.size


@dataclass(frozen=True)
class GroupPreset:
    name: str
    automaton: Automaton

    @property
    def alphabet(self) -> Alphabet:
        return self.automaton.alphabet

    @property
    def generators(self) -> tuple[str, ...]:
        return self.automaton.generators


# ---------------------------------------------------------------------------
# Words
# ---------------------------------------------------------------------------

def letters_of(word, q: int) -> list[int]:
    """Normalize a word given as str of digits or as an int sequence."""
    if isinstance(word, str):
        try:
            out = [int(ch) for ch in word]
        except ValueError:
            raise AutomatonError("word %r has non-digit letters" % word)
    else:
        out = list(word)
    for x in out:
        if not 0 <= x < q:
            raise AutomatonError("letter %r out of range for q=%d" % (x, q))
    return out


def word_str(letters) -> str:
    return "".join(str(x) for x in letters)


def inverse_name(state: str) -> str:
    if state == IDENTITY:
        return IDENTITY
    return state[:-3] if state.endswith("^-1") else state + "^-1"


def act(aut: Automaton, state: str, word):
    """Image of ``word`` under the tree automorphism defined by ``state``.

    ``state`` may be a formal inverse ("a^-1") of an automaton state.
    Returns the same type (str in, str out).
    """
    as_str = isinstance(word, str)
    if state not in aut.transition:
        inv = inverse_name(state)
        if inv in aut.transition:
            aut = invert(aut)
        if state not in aut.transition:
            raise AutomatonError("unknown state %r" % state)
    letters = letters_of(word, aut.q)
    out = []
    cur = state
    trans, outp = aut.transition, aut.output
    for x in letters:
        out.append(outp[cur][x])
        cur = trans[cur][x]
    return word_str(out) if as_str else out


def invert(aut: Automaton) -> Automaton:
    """Automaton of the inverse transformations: act(s^-1, act(s, w)) == w."""
    q = aut.q
    transition, output = {}, {}
    for s in aut.transition:
        name = inverse_name(s)
        trans_row, out_row = [None] * q, [None] * q
        for x in range(q):
            y = aut.output[s][x]
            out_row[y] = x
            trans_row[y] = inverse_name(aut.transition[s][x])
        transition[name] = tuple(trans_row)
        output[name] = tuple(out_row)
    gens = tuple(inverse_name(g) for g in aut.generators)
    return Automaton(aut.alphabet, transition, output, gens)


# ---------------------------------------------------------------------------
# Structural equality
# ---------------------------------------------------------------------------

def minimize(aut: Automaton) -> Automaton:
    """Merge states that define the same transformation (Moore refinement)."""
    states = sorted(aut.transition)
    cls = {s: aut.output[s] for s in states}
    while True:
        key = {s: (cls[s], tuple(cls[t] for t in aut.transition[s])) for s in states}
        if len(set(key.values())) == len(set(cls.values())):
            break
        cls = key
    rep: dict = {}
    name_of = {}
    for s in states:  # sorted order makes the representative deterministic
        if cls[s] not in rep:
            rep[cls[s]] = s
        name_of[s] = rep[cls[s]]
    if name_of[IDENTITY] != IDENTITY:
        # identity's class representative must keep the reserved name
        other = name_of[IDENTITY]
        name_of = {s: (IDENTITY if r == other else r) for s, r in name_of.items()}
    kept = sorted(set(name_of.values()))
    transition = {name_of[s]: tuple(name_of[t] for t in aut.transition[s])
                  for s in kept}
    output = {name_of[s]: aut.output[s] for s in kept}
    gens = []
    for g in aut.generators:
        if name_of[g] not in gens and name_of[g] != IDENTITY:
            gens.append(name_of[g])
    return Automaton(aut.alphabet, transition, output, tuple(gens))


def canonical_key(aut: Automaton):
    """Order-insensitive structural fingerprint of the generated action.

    States are minimized, then BFS-numbered from the generator list; the
    minimum over generator orderings is taken so that relabelled generator
    sets compare equal.
    """
    m = minimize(aut)
    q = m.q
    best = None
    for perm in itertools.permutations(m.generators):
        order = [IDENTITY] + list(perm)
        seen = set(order)
        i = 1  # BFS over transitions, identity pinned at index 0
        frontier = list(order)
        while frontier:
            nxt = []
            for s in frontier:
                for t in m.transition[s]:
                    if t not in seen:
                        seen.add(t)
                        order.append(t)
                        nxt.append(t)
            frontier = nxt
        if len(order) != len(m.transition):
            continue  # generators do not reach every state; skip this ordering
        idx = {s: i for i, s in enumerate(order)}
        table = tuple(
            (tuple(m.output[s]), tuple(idx[t] for t in m.transition[s]))
            for s in order
        )
        key = (q, len(m.generators), table)
        if best is None or key < best:
            best = key
    if best is None:
        raise AutomatonError("generators do not generate the automaton states")
    return best


def structurally_equal(a: Automaton, b: Automaton) -> bool:
    return canonical_key(a) == canonical_key(b)


# ---------------------------------------------------------------------------
# Level permutations
# ---------------------------------------------------------------------------

def level_permutations(aut: Automaton, n: int) -> dict[str, np.ndarray]:
    """Permutation of level-n word codes for every state.

    Word codes put the first letter in the most significant position, so
    lexicographic word order equals numeric code order.  Built bottom-up
    from the wreath recursion; independent of act() and used to cross-check
    it.
    """
    q = aut.q
    perms = {s: np.zeros(1, dtype=np.int64) for s in aut.transition}
    size = 1
    for _ in range(n):
        new = {}
        for s in aut.transition:
            parts = []
            for x in range(q):
                parts.append(aut.output[s][x] * size + perms[aut.transition[s][x]])
            new[s] = np.concatenate(parts)
        perms = new
        size *= q
    return perms


# ---------------------------------------------------------------------------
# Presets
# ---------------------------------------------------------------------------

def adding_machine() -> GroupPreset:
    aut = Automaton(
        Alphabet(2),
        transition={IDENTITY: (IDENTITY, IDENTITY), "a": (IDENTITY, "a")},
        output={IDENTITY: (0, 1), "a": (1, 0)},
        generators=("a",),
    )
    return GroupPreset("adding", aut)


def basilica() -> GroupPreset:
    # a = e(b, id),  b = (0 1)(a, id)
    aut = Automaton(
        Alphabet(2),
        transition={
            IDENTITY: (IDENTITY, IDENTITY),
            "a": ("b", IDENTITY),
            "b": ("a", IDENTITY),
        },
        output={IDENTITY: (0, 1), "a": (0, 1), "b": (1, 0)},
        generators=("a", "b"),
    )
    return GroupPreset("basilica", aut)


def interlaced_adding_machines() -> GroupPreset:
    # a = (0 1)(id, a, id),  b = (0 2)(id, id, b) on the ternary alphabet
    aut = Automaton(
        Alphabet(3),
        transition={
            IDENTITY: (IDENTITY,) * 3,
            "a": (IDENTITY, "a", IDENTITY),
            "b": (IDENTITY, IDENTITY, "b"),
        },
        output={IDENTITY: (0, 1, 2), "a": (1, 0, 2), "b": (2, 1, 0)},
        generators=("a", "b"),
    )
    return GroupPreset("img3", aut)


def kneading_automaton(v) -> Automaton:
    """Automaton with generators a_1..a_k for a binary kneading word v.

    a_1 = (0 1)(a_k, id); a_{i+1} = e(a_i, id) if v[i-1] == 0 else
    e(id, a_i).  len(v) = k - 1 >= 1.
    """
    bits = letters_of(v, 2)
    if not bits:
        raise AutomatonError("kneading word must be nonempty (k >= 2)")
    k = len(bits) + 1
    names = ["a%d" % (i + 1) for i in range(k)]
    transition = {IDENTITY: (IDENTITY, IDENTITY)}
    output = {IDENTITY: (0, 1)}
    transition[names[0]] = (names[k - 1], IDENTITY)
    output[names[0]] = (1, 0)
    for i, bit in enumerate(bits):
        if bit == 0:
            transition[names[i + 1]] = (names[i], IDENTITY)
        else:
            transition[names[i + 1]] = (IDENTITY, names[i])
        output[names[i + 1]] = (0, 1)
    return Automaton(Alphabet(2), transition, output, tuple(names))


def kneading(v) -> GroupPreset:
    word = word_str(letters_of(v, 2))
    return GroupPreset("kneading:%s" % word, kneading_automaton(word))


_PRESET_BUILDERS = {
    "adding": adding_machine,
    "basilica": basilica,
    "img3": interlaced_adding_machines,
}


def get_preset(name: str) -> GroupPreset:
    """Resolve a preset by name: basilica | img3 | adding | kneading:<bits>."""
    if name in _PRESET_BUILDERS:
        return _PRESET_BUILDERS[name]()
    if name.startswith("kneading:"):
        return kneading(name.split(":", 1)[1])
    raise AutomatonError("unknown preset %r" % name)


def preset_names() -> tuple[str, ...]:
    return ("basilica", "img3", "adding", "kneading:<bits>")


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def automaton_to_dict(aut: Automaton) -> dict:
    return {
        "alphabet": aut.q,
        "states": list(aut.states),
        "transitions": {s: list(aut.transition[s]) for s in aut.states},
        "outputs": {s: list(aut.output[s]) for s in aut.states},
        "generators": list(aut.generators),
    }


def automaton_from_dict(data: dict) -> Automaton:
    return Automaton(
        Alphabet(int(data["alphabet"])),
        transition={s: tuple(row) for s, row in data["transitions"].items()},
        output={s: tuple(int(x) for x in row) for s, row in data["outputs"].items()},
        generators=tuple(data["generators"]),
    )


def automaton_to_json(aut: Automaton) -> str:
    return json.dumps(automaton_to_dict(aut), indent=2, sort_keys=True)


def automaton_from_json(text: str) -> Automaton:
    return automaton_from_dict(json.loads(text))
