"""Word and conjugacy lengths in the Cayley graph of F with peripheral cosets coned off.

A cone transit between ``g`` and ``g h`` (``h`` in a peripheral representative)
costs 1, the same as a letter step, so all distances are integers.
"""

from __future__ import annotations

import heapq
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .subgroups import SubgroupSystem, is_malnormal
from .words import Word, cyclic_reduce, inverse, reduce

log = logging.getLogger(__name__)


# long classes try this many evenly spaced rotations instead of all of them
ROTATION_LIMIT = 64


class OutOfBall(ValueError):
    pass


class PreconditionError(ValueError):
    pass


@dataclass(frozen=True)
class ElectricLength:
    value: int
    exact: bool
    method: str

    def __int__(self):
        return self.value


class ElectricSpace:
    def __init__(self, rank: int, peripherals: Optional[SubgroupSystem] = None,
                 ball_radius: int = 12, peripheral_enumeration_bound: Optional[int] = None):
        if rank < 1 or ball_radius < 1:
            raise ValueError("rank and ball radius must be positive")
        self.rank = rank
        self.peripherals = peripherals or SubgroupSystem([])
        self.ball_radius = ball_radius
        self.peripheral_enumeration_bound = peripheral_enumeration_bound or 2 * ball_radius
        if self.peripheral_enumeration_bound < 1:
            raise ValueError("enumeration bound must be positive")
        self.malnormal, _ = is_malnormal(self.peripherals)
        if not self.malnormal:
            log.warning("peripheral system is not malnormal")
        self._moves: Optional[List[Word]] = None
        self._letter_sets = self._detect_letter_peripherals()

    def _detect_letter_peripherals(self):
        """Letter sets if every component is generated by basis letters, with disjoint sets."""
        sets = []
        for comp in self.peripherals.components:
            s = comp.letter_generated()
            if s is None:
                return None
            sets.append(s)
        used = [x for s in sets for x in s]
        if len(used) != len(set(used)):
            return None
        return sets

    @property
    def letter_peripheral(self) -> bool:
        return self._letter_sets is not None

    def peripheral_moves(self) -> List[Word]:
        """Nontrivial elements of the peripheral representatives up to the enumeration bound."""
        if self._moves is None:
            moves = set()
            for comp in self.peripherals.components:
                moves.update(comp.closed_walks(self.peripheral_enumeration_bound))
            self._moves = sorted(moves, key=lambda w: (len(w), w))
        return self._moves

    def describe(self) -> dict:
        return {
            "rank": self.rank,
            "peripherals": [c.describe() for c in self.peripherals.components],
            "ball_radius": self.ball_radius,
            "peripheral_enumeration_bound": self.peripheral_enumeration_bound,
            "malnormal": self.malnormal,
        }


# exact formula for letter-generated peripherals


def _letter_formula(S: ElectricSpace, w: Sequence[int]) -> int:
    owner = {}
    for i, s in enumerate(S._letter_sets):
        for x in s:
            owner[x] = i
    total, prev = 0, None
    for x in w:
        o = owner.get(abs(x))
        if o is None:
            total += 1
        elif o != prev:
            total += 1
        prev = o
    return total


def _cyclic_letter_formula(S: ElectricSpace, c: Sequence[int]) -> int:
    if not c:
        return 0
    owner = {}
    for i, s in enumerate(S._letter_sets):
        for x in s:
            owner[x] = i
    tags = [owner.get(abs(x)) for x in c]
    if all(t is not None and t == tags[0] for t in tags):
        return 1
    # rotate so the word starts at the beginning of a run
    n = len(c)
    start = next(i for i in range(n) if tags[i] is None or tags[i] != tags[i - 1])
    return _letter_formula(S, tuple(c[start:]) + tuple(c[:start]))


# ball search


def _cone_neighbors(S: ElectricSpace, g: Word):
    """Elements ``g h`` inside the ball, ``h`` a nontrivial element of a peripheral representative.

    Reduced walks in the folded graph are explored depth first.  The length of
    the running product first shrinks (cancellation against ``g``) and then only
    grows, so a prefix that leaves the ball can be pruned.
    """
    R, cap = S.ball_radius, S.peripheral_enumeration_bound
    for comp in S.peripherals.components:
        prod = list(g)
        # frames: (vertex, last letter, iterator over outgoing letters)
        stack = [(0, 0, iter(comp.out[0].items()))]
        undo: List[Optional[int]] = []
        while stack:
            v, last, it = stack[-1]
            step = next(it, None)
            if step is None:
                stack.pop()
                if undo:
                    popped = undo.pop()
                    if popped is None:
                        prod.pop()
                    else:
                        prod.append(popped)
                continue
            x, u = step
            if x == -last or len(stack) > cap:
                continue
            if prod and prod[-1] == -x:
                undo.append(prod.pop())
            else:
                prod.append(x)
                undo.append(None)
            if len(prod) > R:
                popped = undo.pop()
                if popped is None:
                    prod.pop()
                else:
                    prod.append(popped)
                continue
            if u == 0:
                yield tuple(prod)
            stack.append((u, x, iter(comp.out[u].items())))


def _neighbors(S: ElectricSpace, g: Word):
    for i in range(1, S.rank + 1):
        for x in (i, -i):
            gx = reduce(g + (x,))
            if len(gx) <= S.ball_radius:
                yield gx
    yield from _cone_neighbors(S, g)


def _ball_search(S: ElectricSpace, target: Word) -> int:
    dist: Dict[Word, int] = {(): 0}
    heap: List[Tuple[int, int, Word]] = [(0, 0, ())]
    tie = 0
    while heap:
        d, _, g = heapq.heappop(heap)
        if g == target:
            return d
        if d > dist.get(g, d):
            continue
        for gh in _neighbors(S, g):
            if d + 1 < dist.get(gh, d + 2):
                dist[gh] = d + 1
                tie += 1
                heapq.heappush(heap, (d + 1, tie, gh))
    raise OutOfBall("target not reachable inside the ball")


def ball_distances(S: ElectricSpace) -> Dict[Word, int]:
    """Electric distance from the identity to every element of the ball (single-source)."""
    dist: Dict[Word, int] = {(): 0}
    frontier = [()]
    d = 0
    while frontier:
        d += 1
        nxt = []
        for g in frontier:
            for gh in _neighbors(S, g):
                if gh not in dist:
                    dist[gh] = d
                    nxt.append(gh)
        frontier = nxt
    return dist


# prefix dynamic programme (upper bound for general peripherals)


def _prefix_dp(S: ElectricSpace, w: Sequence[int]) -> int:
    n = len(w)
    INF = n + 1
    best = [INF] * (n + 1)
    best[0] = 0
    for i in range(n):
        if best[i] + 1 < best[i + 1]:
            best[i + 1] = best[i] + 1
        for comp in S.peripherals.components:
            v = 0
            for j in range(i, n):
                v = comp.out[v].get(w[j])
                if v is None:
                    break
                if v == 0 and best[i] + 1 < best[j + 1]:
                    best[j + 1] = best[i] + 1
    return best[n]


def electric_length(S: ElectricSpace, w: Sequence[int], method: str = "auto") -> ElectricLength:
    """Electric length of the element ``w``.

    ``method`` is ``"ball"`` (search inside the ball, needs ``|w| <= ball_radius``),
    ``"formula"`` (letter-generated peripherals only), ``"prefix"`` (upper bound
    through prefixes of ``w``) or ``"auto"`` (formula when it applies, else prefix).
    """
    w = reduce(w, S.rank)
    if not w:
        return ElectricLength(0, True, "trivial")
    if not S.peripherals.components:
        return ElectricLength(len(w), True, "plain")
    if method == "auto":
        method = "formula" if S.letter_peripheral else "prefix"
    if method == "formula":
        if not S.letter_peripheral:
            raise PreconditionError("closed formula needs letter-generated peripherals")
        return ElectricLength(_letter_formula(S, w), True, "formula")
    if method == "prefix":
        return ElectricLength(_prefix_dp(S, w), S.letter_peripheral, "prefix")
    if method == "ball":
        if len(w) > S.ball_radius:
            raise OutOfBall(f"|w| = {len(w)} exceeds ball radius {S.ball_radius}")
        d = _ball_search(S, w)
        # a peripheral move longer than the enumeration bound could still shorten the path
        exact = S.peripheral_enumeration_bound >= 2 * S.ball_radius
        return ElectricLength(d, exact, "ball")
    raise ValueError(f"unknown method {method!r}")


def electric_distance(S: ElectricSpace, u: Sequence[int], v: Sequence[int], method: str = "auto"):
    return electric_length(S, multiply_inv(u, v), method)


def multiply_inv(u, v) -> Word:
    return reduce(tuple(inverse(u)) + tuple(v))


def _conjugates(core: Word, rank: int, bound: int):
    letters = [x for i in range(1, rank + 1) for x in (i, -i)]
    layer = [()]
    seen = {()}
    yield core
    for _ in range(bound):
        nxt = []
        for u in layer:
            for x in letters:
                if u and u[-1] == -x:
                    continue
                v = u + (x,)
                if v not in seen:
                    seen.add(v)
                    nxt.append(v)
                    yield reduce(v + core + inverse(v))
        layer = nxt


def electric_conjugacy_length(S: ElectricSpace, c: Sequence[int], conjugator_bound: int = 1,
                              method: str = "auto") -> ElectricLength:
    """Minimum electric length over rotations of ``c`` and conjugates by short words.

    Always an upper bound; exact only through the letter formula.
    """
    core, _ = cyclic_reduce(reduce(c, S.rank))
    if not core:
        return ElectricLength(0, True, "trivial")
    if not S.peripherals.components:
        return ElectricLength(len(core), True, "plain")
    if method == "auto" and S.letter_peripheral:
        return ElectricLength(_cyclic_letter_formula(S, core), True, "formula")
    best = None
    n = len(core)
    cuts = range(n) if n <= ROTATION_LIMIT else range(0, n, -(-n // ROTATION_LIMIT))
    candidates = [core[i:] + core[:i] for i in cuts]
    if conjugator_bound > 0:
        candidates += list(_conjugates(core, S.rank, conjugator_bound))
    for cand in candidates:
        try:
            el = electric_length(S, cand, method)
        except OutOfBall:
            continue
        if best is None or el.value < best.value:
            best = el
    if best is None:
        raise OutOfBall("no representative of the class fits in the ball")
    return ElectricLength(best.value, False, best.method)


def comparability_constant(S: ElectricSpace, D, corpus: Sequence[Sequence[int]],
                           conjugator_bound: int = 1) -> dict:
    """Worst ratio between relative length and electric conjugacy length over a corpus."""
    from .laminations import relative_length
    from .subgroups import carries_conjugacy_class

    if not corpus:
        raise PreconditionError("empty corpus: no data for the comparison constant")
    g = D.f.graph
    worst = Fraction(0)
    items = []
    for c in corpus:
        if D.system.components and carries_conjugacy_class(D.system, c):
            raise PreconditionError(f"class {c} is carried by the nonattracting system")
        el = electric_conjugacy_length(S, c, conjugator_bound).value
        if el == 0:
            raise PreconditionError("zero electric length")
        rel = relative_length(g.circuit(c), D, cyclic=True)
        ratio = Fraction(rel, el)
        k = max(ratio, 1 / ratio) if ratio else None
        if k is None:
            raise PreconditionError(f"class {c} has relative length 0")
        items.append({"class": list(c), "relative": rel, "electric": el, "ratio": str(ratio)})
        worst = max(worst, k)
    return {"K": worst, "items": items, "conjugator_bound": conjugator_bound}
