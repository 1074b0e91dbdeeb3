"""Attracting laminations seen through finite leaf segments.

Everything here is bounded: attraction is tested by iterating up to a depth,
and the answers carry that depth with them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

from .graphs import (
    DomainError,
    GraphSelfMap,
    Path,
    classify_strata,
    closed_nielsen_paths,
    reverse_path,
    tighten,
    tighten_cyclic,
)
from .subgroups import SubgroupSystem, carries_conjugacy_class, fold
from .words import contains, cyclic_contains, reduce


class InconsistentNielsenData(ValueError):
    pass


def _require_eg(f: GraphSelfMap, r: int):
    strata = classify_strata(f)
    if not 1 <= r <= len(strata):
        raise DomainError(f"height {r} out of range")
    if strata[r - 1].kind != "EG":
        raise DomainError(f"stratum H_{r} is {strata[r - 1].kind}, not EG")
    return strata[r - 1]


@dataclass(frozen=True)
class LeafSegment:
    path: Path
    seed: int
    iterate: int

    def __len__(self):
        return len(self.path)


def generic_leaf_segment(f: GraphSelfMap, r: int, seed: int, k: int) -> LeafSegment:
    s = _require_eg(f, r)
    if abs(seed) not in s.edges:
        raise DomainError(f"seed edge {f.graph.edge_name(seed)} is not in H_{r}")
    return LeafSegment(f.iterate_path((seed,), k), seed, k)


@dataclass(frozen=True)
class AttractingNeighborhood:
    defining_segment: LeafSegment

    def contains(self, p: Sequence[int], cyclic: bool = True) -> bool:
        seg = self.defining_segment.path
        test = cyclic_contains if cyclic else contains
        return test(p, seg) or test(p, reverse_path(seg))


def standard_neighborhood(f: GraphSelfMap, r: int, k: int = 3) -> AttractingNeighborhood:
    """Neighbourhood defined by ``f^k`` of the first edge of ``H_r``."""
    seed = min(_require_eg(f, r).edges)
    return AttractingNeighborhood(generic_leaf_segment(f, r, seed, k))


@dataclass(frozen=True)
class AttractionVerdict:
    attracted: bool
    k: Optional[int]
    bound: int

    def __str__(self):
        return f"attracted_at {self.k}" if self.attracted else f"not_within {self.bound}"


def is_weakly_attracted(p: Sequence[int], V: AttractingNeighborhood, f: GraphSelfMap, N: int,
                        cyclic: bool = True, length_cap: int = 2_000_000) -> AttractionVerdict:
    """Smallest ``k <= N`` with ``f^k_#(p)`` in ``V``.

    ``p`` is an edge path (a circuit when ``cyclic``).  Iteration stops early if
    the iterate exceeds ``length_cap`` edges, which is reported as not attracted.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    q = tighten_cyclic(p) if cyclic else tighten(p)
    for k in range(N + 1):
        if V.contains(q, cyclic):
            return AttractionVerdict(True, k, N)
        if k == N or len(q) > length_cap:
            break
        q = f.map_circuit(q, check=False) if cyclic else f.map_path(q, check=False)
    return AttractionVerdict(False, None, N)


def nonattracting_subgraph(f: GraphSelfMap, r: int, N: int,
                           length_cap: int = 200_000) -> Tuple[FrozenSet[int], int]:
    """Edges of strata that show no sign of attraction to the lamination of ``H_r``.

    A stratum is attracted when some iterate of one of its edges crosses ``H_r``
    and the ``H_r``-crossing count is nondecreasing over the later half of the
    checked iterates.  Returns ``(Z, N)``.
    """
    hr = _require_eg(f, r).edges
    Z = set()
    for i in range(1, f.n_strata + 1):
        if i == r:
            continue
        stratum = f.stratum_edges(i)
        if not any(_edge_attracted(f, e, hr, N, length_cap) for e in sorted(stratum)):
            Z |= stratum
    return frozenset(Z), N


def _edge_attracted(f, e, hr, N, length_cap) -> bool:
    counts = []
    p = (e,)
    for _ in range(N):
        p = f.map_path(p, check=False)
        counts.append(sum(1 for x in p if abs(x) in hr))
        if len(p) > length_cap:
            break
    if not any(counts):
        return False
    tail = counts[-((len(counts) + 1) // 2):]
    return all(a <= b for a, b in zip(tail, tail[1:]))


@dataclass
class NonattractingData:
    f: GraphSelfMap
    r: int
    Z: FrozenSet[int]
    sigma_hat: Path
    K_graph: dict
    h_immersion: Dict[str, Path]
    system: SubgroupSystem
    search_depth: int

    def to_json(self) -> dict:
        g = self.f.graph
        return {
            "stratum": self.r,
            "Z": sorted(g.edge_name(e) for e in self.Z),
            "sigma_hat": g.format_path(self.sigma_hat) if self.sigma_hat else "",
            "K": self.K_graph,
            "system": self.system.to_json(g.names),
            "search_depth": self.search_depth,
        }


def build_nas(f: GraphSelfMap, r: int, Z: FrozenSet[int], nielsen: Optional[Sequence[int]] = None,
              search_depth: int = 0) -> NonattractingData:
    g = f.graph
    Z = frozenset(abs(e) for e in Z)
    rho = tuple(nielsen) if nielsen else ()
    zverts = g.vertices_of(Z)
    # K vertices are G-vertices of Z, plus up to two endpoints of E_rho
    k_vertices = {("G", v) for v in zverts}
    k_edges: List[Tuple[str, tuple, tuple, Path]] = []
    for e in sorted(Z):
        k_edges.append((g.edge_name(e), ("G", g.origin(e)), ("G", g.terminus(e)), (e,)))
    if rho:
        x, y = g.origin(rho[0]), g.terminus(rho[-1])
        start = ("G", x) if x in zverts else ("rho", 0)
        end = ("G", y) if y in zverts else ("rho", 1)
        if start == ("rho", 0) and end == ("rho", 1) and x == y:
            end = start
        k_vertices |= {start, end}
        k_edges.append(("E_rho", start, end, rho))
    # immersion: outgoing directions at each K-vertex have distinct first edges in G
    first: Dict[tuple, List[int]] = {v: [] for v in k_vertices}
    for _, u, v, p in k_edges:
        first[u].append(p[0])
        first[v].append(-p[-1])
    for v, dirs in first.items():
        if len(dirs) != len(set(dirs)):
            raise InconsistentNielsenData(f"h is not an immersion at K-vertex {v}")
    comps = _k_components(k_vertices, k_edges)
    gens_list = []
    for verts, edges in comps:
        gens = _component_generators(verts, edges, g)
        if gens:
            gens_list.append(gens)
    system = SubgroupSystem([fold(gens, g.rank) for gens in gens_list]).normalized(up_to_conjugacy=True)
    k_json = {
        "vertices": sorted(f"{kind}:{g.vertices[v] if kind == 'G' else v}" for kind, v in k_vertices),
        "edges": [[name, _vname(g, u), _vname(g, v)] for name, u, v, _ in k_edges],
    }
    h = {name: p for name, _, _, p in k_edges}
    return NonattractingData(f, r, Z, rho, k_json, h, system, search_depth)


def _vname(g, v):
    kind, x = v
    return f"G:{g.vertices[x]}" if kind == "G" else f"rho:{x}"


def _k_components(vertices, edges):
    adj: Dict[tuple, list] = {v: [] for v in vertices}
    for e in edges:
        adj[e[1]].append(e)
        adj[e[2]].append(e)
    seen = set()
    comps = []
    for v0 in sorted(vertices):
        if v0 in seen:
            continue
        seen.add(v0)
        queue, cedges = [v0], set()
        for u in queue:
            for e in adj[u]:
                cedges.add(e)
                for w in (e[1], e[2]):
                    if w not in seen:
                        seen.add(w)
                        queue.append(w)
        comps.append((queue, sorted(cedges)))
    return comps


def _component_generators(verts, edges, g):
    """Words in F of a basis of the image of one K-component's fundamental group."""
    base = verts[0]
    paths = {base: ()}
    tree = set()
    queue = [base]
    for u in queue:
        for e in edges:
            for a, b, p in ((e[1], e[2], e[3]), (e[2], e[1], reverse_path(e[3]))):
                if a == u and b not in paths:
                    paths[b] = tighten(paths[u] + p)
                    tree.add(e[0])
                    queue.append(b)
    gens = []
    for name, u, v, p in edges:
        if name in tree:
            continue
        loop = tighten(paths[u] + p + reverse_path(paths[v]))
        w = g.path_word(loop)
        if w:
            gens.append(w)
    return gens


def compute_nas(f: GraphSelfMap, r: int, N: int = 20, nielsen_length: int = 6,
                nielsen_period: int = 1) -> NonattractingData:
    """Z from bounded iteration, the unique closed Nielsen path of height r, then K."""
    Z, _ = nonattracting_subgraph(f, r, N)
    found = closed_nielsen_paths(f, r, nielsen_length, nielsen_period)
    if len(found) > 1:
        names = [f.graph.format_path(p) for p, _ in found]
        raise InconsistentNielsenData(f"several closed Nielsen paths of height {r}: {names}")
    rho = found[0][0] if found else None
    return build_nas(f, r, Z, rho, search_depth=N)


# groupoid of paths carried by Z and sigma_hat


def _longest_carried(p: Sequence[int], i: int, Z, blocks) -> int:
    """Longest ``j - i`` such that ``p[i:j]`` is a concatenation of Z-edges and sigma blocks."""
    n = len(p)
    reach = {i}
    frontier = [i]
    best = i
    while frontier:
        j = frontier.pop()
        best = max(best, j)
        nxt = []
        if j < n and abs(p[j]) in Z:
            nxt.append(j + 1)
        for b in blocks:
            if tuple(p[j:j + len(b)]) == b:
                nxt.append(j + len(b))
        for k in nxt:
            if k not in reach:
                reach.add(k)
                frontier.append(k)
    return best - i


def _decompose_linear(p, Z, blocks):
    pieces = []
    matched = 0
    i = 0
    loose: List[int] = []
    while i < len(p):
        m = _longest_carried(p, i, Z, blocks)
        if m > 0:
            if loose:
                pieces.append(("free", tuple(loose)))
                loose = []
            pieces.append(("carried", tuple(p[i:i + m])))
            matched += m
            i += m
        else:
            loose.append(p[i])
            i += 1
    if loose:
        pieces.append(("free", tuple(loose)))
    return pieces, len(p) - matched


def groupoid_decompose(p: Sequence[int], D: NonattractingData, cyclic: bool = False):
    """Greedy split of ``p`` into carried and free pieces; returns ``(pieces, relative_length)``.

    For circuits the rotation with the smallest relative length wins (first such
    rotation on ties).
    """
    Z = D.Z
    blocks = [b for b in (D.sigma_hat, reverse_path(D.sigma_hat)) if b]
    p = tuple(p)
    if not cyclic or not p:
        return _decompose_linear(p, Z, blocks)
    best = None
    for s in range(len(p)):
        q = p[s:] + p[:s]
        pieces, rel = _decompose_linear(q, Z, blocks)
        if best is None or rel < best[1]:
            best = (pieces, rel, s)
            if rel == 0:
                break
    return best[0], best[1]


def relative_length(p: Sequence[int], D: NonattractingData, cyclic: bool = False) -> int:
    if cyclic and D.Z and not D.sigma_hat:
        # without sigma the cyclic minimum has a closed form: loose edges only
        if all(abs(e) in D.Z for e in p):
            return 0
        return sum(1 for e in p if abs(e) not in D.Z)
    return groupoid_decompose(p, D, cyclic)[1]


def best_rotation(p: Sequence[int], D: NonattractingData) -> Tuple[int, ...]:
    """Rotation of a circuit realising its relative length."""
    p = tuple(p)
    if not p:
        return p
    blocks = [b for b in (D.sigma_hat, reverse_path(D.sigma_hat)) if b]
    if not blocks:
        for s in range(len(p)):
            if abs(p[s]) not in D.Z and abs(p[s - 1]) in D.Z:
                return p[s:] + p[:s]
        return p
    best_s, best_rel = 0, None
    for s in range(len(p)):
        rel = _decompose_linear(p[s:] + p[:s], D.Z, blocks)[1]
        if best_rel is None or rel < best_rel:
            best_s, best_rel = s, rel
    return p[best_s:] + p[:best_s]


# leaf libraries


class _SuffixAutomaton:
    """Generalised suffix automaton over integer sequences."""

    def __init__(self):
        self.next: List[Dict[int, int]] = [{}]
        self.link: List[int] = [-1]
        self.length: List[int] = [0]

    def _clone(self, q, length):
        self.next.append(dict(self.next[q]))
        self.link.append(self.link[q])
        self.length.append(length)
        return len(self.length) - 1

    def add(self, seq: Sequence[int]):
        last = 0
        for x in seq:
            if x in self.next[last]:
                q = self.next[last][x]
                if self.length[q] == self.length[last] + 1:
                    last = q
                    continue
                clone = self._clone(q, self.length[last] + 1)
                p = last
                while p != -1 and self.next[p].get(x) == q:
                    self.next[p][x] = clone
                    p = self.link[p]
                self.link[q] = clone
                last = clone
                continue
            cur = len(self.length)
            self.next.append({})
            self.link.append(-1)
            self.length.append(self.length[last] + 1)
            p = last
            while p != -1 and x not in self.next[p]:
                self.next[p][x] = cur
                p = self.link[p]
            if p == -1:
                self.link[cur] = 0
            else:
                q = self.next[p][x]
                if self.length[p] + 1 == self.length[q]:
                    self.link[cur] = q
                else:
                    clone = self._clone(q, self.length[p] + 1)
                    while p != -1 and self.next[p].get(x) == q:
                        self.next[p][x] = clone
                        p = self.link[p]
                    self.link[q] = clone
                    self.link[cur] = clone
            last = cur

    def matching_lengths(self, seq: Sequence[int]) -> List[int]:
        """``out[j]`` = length of the longest factor ending at ``seq[j]``."""
        out = []
        state, length = 0, 0
        for x in seq:
            while state and x not in self.next[state]:
                state = self.link[state]
                length = self.length[state]
            if x in self.next[state]:
                state = self.next[state][x]
                length += 1
            else:
                length = 0
            out.append(length)
        return out

    def contains(self, seq: Sequence[int]) -> bool:
        state = 0
        for x in seq:
            state = self.next[state].get(x)
            if state is None:
                return False
        return True


class LeafLibrary:
    """All iterates ``f^k(E)``, ``E`` in ``H_r``, ``k <= depth``, and their reverses."""

    def __init__(self, f: GraphSelfMap, r: int, depth: int):
        s = _require_eg(f, r)
        self.f, self.r, self.depth = f, r, depth
        self.segments: List[LeafSegment] = []
        for e in sorted(s.edges):
            for seed in (e, -e):
                p = (seed,)
                for k in range(depth + 1):
                    self.segments.append(LeafSegment(p, seed, k))
                    if k < depth:
                        p = f.map_path(p, check=False)
        self._sam = _SuffixAutomaton()
        for seg in self.segments:
            self._sam.add(seg.path)

    def contains(self, p: Sequence[int]) -> bool:
        return self._sam.contains(p)

    def longest_from(self, p: Sequence[int], lo: int = 0, hi: Optional[int] = None) -> List[int]:
        """``out[i]`` = length of the longest library factor of ``p[lo:hi]`` starting at ``lo + i``."""
        hi = len(p) if hi is None else hi
        q = p[lo:hi]
        ends = self._sam.matching_lengths(q)
        out = [0] * len(q)
        j = 0
        for i in range(len(q)):
            j = max(j, i)
            # start(j) = j - ends[j] + 1 is nondecreasing in j
            while j + 1 < len(q) and j + 1 - ends[j + 1] + 1 <= i:
                j += 1
            out[i] = j - i + 1 if j - ends[j] + 1 <= i else 0
        return out

    def words(self) -> List[Tuple[int, ...]]:
        g = self.f.graph
        return [g.path_word(seg.path) for seg in self.segments]


# the three alternatives of the weak attraction theorem


@dataclass(frozen=True)
class TrichotomyVerdict:
    kind: str  # in_V_minus | carried_by_NAS | pushed_to_V_plus | inconclusive
    l: Optional[int] = None
    bound: int = 0

    def __str__(self):
        if self.kind == "pushed_to_V_plus":
            return f"pushed_to_V_plus at {self.l}"
        return self.kind


def weak_attraction_trichotomy(c: Sequence[int], fwd, bwd, D: NonattractingData,
                               l_bound: int) -> TrichotomyVerdict:
    """``c`` is a word; ``fwd = (f, r, V_plus)`` and ``bwd = (f_inv, s, V_minus)``."""
    f, _, v_plus = fwd
    fb, _, v_minus = bwd
    word = reduce(c)
    if v_minus.contains(fb.graph.circuit(word)):
        return TrichotomyVerdict("in_V_minus", bound=l_bound)
    if D.system.components and carries_conjugacy_class(D.system, word):
        return TrichotomyVerdict("carried_by_NAS", bound=l_bound)
    verdict = is_weakly_attracted(f.graph.circuit(word), v_plus, f, max(l_bound, 1))
    if verdict.attracted and verdict.k <= l_bound:
        return TrichotomyVerdict("pushed_to_V_plus", verdict.k, l_bound)
    return TrichotomyVerdict("inconclusive", bound=l_bound)
