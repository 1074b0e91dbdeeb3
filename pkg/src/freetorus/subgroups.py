"""Finitely generated subgroups of F as folded (Stallings) graphs."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .words import DEFAULT_NAMES, Word, cyclic_reduce, format_word, inverse, reduce

# edge = (source, letter > 0, target)
Edge = Tuple[int, int, int]


def _letter_order(x: int):
    return (abs(x), x < 0)


class FoldedImmersion:
    """Folded labelled graph with a base vertex.

    Vertices are ``0..n-1`` in canonical BFS order from the base (vertex 0).
    The based graph may have a hair leading to the base; :meth:`core` drops it.
    """

    def __init__(self, n_vertices: int, edges: Sequence[Edge], rank_of_ambient: int, base: int = 0):
        out: Dict[int, Dict[int, int]] = {v: {} for v in range(n_vertices)}
        for u, x, v in edges:
            if x in out[u] or -x in out[v]:
                raise ValueError("graph is not folded")
            out[u][x] = v
            out[v][-x] = u
        self._canonicalise(out, base)
        self.ambient_rank = rank_of_ambient

    def _canonicalise(self, out, base):
        order = {base: 0}
        queue = [base]
        for u in queue:
            for x in sorted(out[u], key=_letter_order):
                v = out[u][x]
                if v not in order:
                    order[v] = len(order)
                    queue.append(v)
        self.n_vertices = len(order)
        self.out: List[Dict[int, int]] = [dict() for _ in range(self.n_vertices)]
        for u, i in order.items():
            for x, v in out[u].items():
                self.out[i][x] = order[v]

    @property
    def edges(self) -> List[Edge]:
        return sorted((u, x, v) for u in range(self.n_vertices) for x, v in self.out[u].items() if x > 0)

    @property
    def rank(self) -> int:
        return len(self.edges) - self.n_vertices + 1

    def key(self):
        return (self.n_vertices, tuple(self.edges))

    def __eq__(self, other):
        return isinstance(other, FoldedImmersion) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return f"FoldedImmersion(rank={self.rank}, generators={self.generators()})"

    def read(self, w: Sequence[int], start: int = 0) -> Optional[int]:
        v = start
        for x in w:
            v = self.out[v].get(x)
            if v is None:
                return None
        return v

    def contains(self, w: Sequence[int]) -> bool:
        """Membership of a reduced word in the based subgroup."""
        return self.read(reduce(w)) == 0

    def valence(self, v: int) -> int:
        return len(self.out[v])

    def is_core(self) -> bool:
        return all(self.valence(v) >= 2 for v in range(self.n_vertices)) and self.rank > 0

    def core(self) -> "FoldedImmersion":
        """Core graph (conjugate subgroup), based at the first surviving vertex."""
        alive = set(range(self.n_vertices))
        deg = {v: self.valence(v) for v in alive}
        stack = [v for v in alive if deg[v] <= 1]
        while stack:
            v = stack.pop()
            if v not in alive:
                continue
            alive.discard(v)
            for u in self.out[v].values():
                if u in alive:
                    deg[u] -= 1
                    if deg[u] <= 1:
                        stack.append(u)
        if not alive:
            raise ValueError("trivial subgroup has no core")
        edges = [(u, x, v) for (u, x, v) in self.edges if u in alive and v in alive]
        relabel = {v: i for i, v in enumerate(sorted(alive))}
        return FoldedImmersion(
            len(alive), [(relabel[u], x, relabel[v]) for u, x, v in edges],
            self.ambient_rank, base=relabel[min(alive)],
        )

    def conjugacy_key(self):
        """Basepoint-free isomorphism invariant of the core graph."""
        c = self.core()
        return min(
            FoldedImmersion(c.n_vertices, c.edges, c.ambient_rank, base=v).key()
            for v in range(c.n_vertices)
        )

    def spanning_tree_paths(self) -> Dict[int, Word]:
        paths = {0: ()}
        queue = [0]
        for u in queue:
            for x in sorted(self.out[u], key=_letter_order):
                v = self.out[u][x]
                if v not in paths:
                    paths[v] = paths[u] + (x,)
                    queue.append(v)
        return paths

    def generators(self) -> List[Word]:
        """Free basis read off a BFS spanning tree."""
        paths = self.spanning_tree_paths()
        tree = set()
        for v, p in paths.items():
            if p:
                u = self.read(p[:-1])
                tree.add((u, p[-1], v) if p[-1] > 0 else (v, -p[-1], u))
        gens = []
        for u, x, v in self.edges:
            if (u, x, v) not in tree:
                gens.append(reduce(paths[u] + (x,) + inverse(paths[v])))
        return gens

    def closed_walks(self, max_len: int) -> List[Word]:
        """All nontrivial elements of the based subgroup of length <= max_len."""
        found = []
        stack = [((), 0)]
        while stack:
            w, v = stack.pop()
            if w and v == 0:
                found.append(w)
            if len(w) < max_len:
                for x, u in self.out[v].items():
                    if w and x == -w[-1]:
                        continue
                    stack.append((w + (x,), u))
        found.sort(key=lambda w: (len(w), [_letter_order(x) for x in w]))
        return found

    def letter_generated(self) -> Optional[frozenset]:
        """If this is the subgroup generated by a set of basis letters, return that set."""
        if self.n_vertices != 1:
            return None
        return frozenset(x for x in self.out[0] if x > 0)

    def to_json(self, names: str = DEFAULT_NAMES) -> dict:
        return {
            "rank": self.rank,
            "vertices": self.n_vertices,
            "edges": [[u, names[x - 1], v] for u, x, v in self.edges],
            "generators": [format_word(g, names) for g in self.generators()],
        }

    def describe(self, names: str = DEFAULT_NAMES) -> str:
        return "⟨" + ", ".join(format_word(g, names, sep="") for g in self.generators()) + "⟩"


def fold(generators: Sequence[Sequence[int]], rank: int) -> FoldedImmersion:
    """Stallings folding of the wedge of generator loops."""
    gens = [reduce(g, rank) for g in generators]
    gens = [g for g in gens if g]
    if not gens:
        raise ValueError("trivial subgroup: represent it as an empty subgroup system")
    parent: List[int] = [0]
    edges: List[List[int]] = []  # mutable [u, x, v]

    def new_vertex():
        parent.append(len(parent))
        return len(parent) - 1

    for g in gens:
        u = 0
        for i, x in enumerate(g):
            v = 0 if i == len(g) - 1 else new_vertex()
            edges.append([u, x, v] if x > 0 else [v, -x, u])
            u = v

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    changed = True
    while changed:
        changed = False
        seen: Dict[Tuple[int, int], int] = {}
        for u, x, v in edges:
            u, v = find(u), find(v)
            for key, tgt in (((u, x), v), ((v, -x), u)):
                if key in seen and find(seen[key]) != find(tgt):
                    a, b = find(seen[key]), find(tgt)
                    parent[max(a, b)] = min(a, b)
                    changed = True
                seen.setdefault(key, tgt)
        uniq = set()
        for e in edges:
            e[0], e[2] = find(e[0]), find(e[2])
            uniq.add(tuple(e))
        edges = [list(e) for e in sorted(uniq)]
    verts = sorted({find(v) for e in edges for v in (e[0], e[2])} | {find(0)})
    idx = {v: i for i, v in enumerate(verts)}
    return FoldedImmersion(
        len(verts), [(idx[u], x, idx[v]) for u, x, v in edges], rank, base=idx[find(0)]
    )


@dataclass
class SubgroupSystem:
    components: List[FoldedImmersion] = field(default_factory=list)
    malnormal_checked: Optional[bool] = None

    @classmethod
    def from_generators(cls, gens_list, rank: int, dedupe: bool = True) -> "SubgroupSystem":
        comps = [fold(gens, rank) for gens in gens_list]
        s = cls(comps)
        return s.normalized() if dedupe else s

    def normalized(self, up_to_conjugacy: bool = False) -> "SubgroupSystem":
        """Drop repeated components (as based graphs, or up to conjugacy)."""
        keep, keys = [], set()
        for c in self.components:
            k = c.conjugacy_key() if up_to_conjugacy else c.key()
            if k not in keys:
                keys.add(k)
                keep.append(c)
        return SubgroupSystem(keep, self.malnormal_checked)

    @property
    def is_trivial(self) -> bool:
        return not self.components

    def carries(self, c: Sequence[int]) -> bool:
        return carries_conjugacy_class(self, c)

    def to_json(self, names: str = DEFAULT_NAMES):
        return [c.to_json(names) for c in self.components]

    def describe(self, names: str = DEFAULT_NAMES) -> str:
        return "{" + ", ".join(c.describe(names) for c in self.components) + "}"


def carries_conjugacy_class(system: SubgroupSystem, c: Sequence[int]) -> bool:
    core_word = cyclic_reduce(c)[0]
    if not core_word:
        raise ValueError("the trivial class is carried by every system")
    for comp in system.components:
        k = comp.core()
        for v in range(k.n_vertices):
            if k.read(core_word, v) == v:
                return True
    return False


def _product_components(a: FoldedImmersion, b: FoldedImmersion):
    """Connected components of the labelled fiber product of two core graphs."""
    a, b = a.core(), b.core()
    pairs = [(u, v) for u in range(a.n_vertices) for v in range(b.n_vertices)]
    seen = set()
    comps = []
    for start in pairs:
        if start in seen:
            continue
        comp_v = [start]
        seen.add(start)
        edges = []
        for (u, v) in comp_v:
            for x, u2 in a.out[u].items():
                v2 = b.out[v].get(x)
                if v2 is None:
                    continue
                if x > 0:
                    edges.append(((u, v), x, (u2, v2)))
                if (u2, v2) not in seen:
                    seen.add((u2, v2))
                    comp_v.append((u2, v2))
        comps.append((comp_v, edges))
    return comps


def _component_immersion(verts, edges, ambient_rank):
    idx = {p: i for i, p in enumerate(verts)}
    g = FoldedImmersion(len(verts), [(idx[u], x, idx[v]) for u, x, v in edges], ambient_rank)
    if g.rank <= 0:
        return None
    return g.core()


def intersection_core(a: FoldedImmersion, b: FoldedImmersion) -> List[FoldedImmersion]:
    out = []
    for verts, edges in _product_components(a, b):
        g = _component_immersion(verts, edges, a.ambient_rank)
        if g is not None:
            out.append(g)
    out.sort(key=lambda g: g.conjugacy_key())
    return out


def is_malnormal(system: SubgroupSystem):
    """Return ``(True, None)`` or ``(False, witness)`` for a nontrivial intersection."""
    comps = system.components
    for i, a in enumerate(comps):
        for j, b in enumerate(comps):
            if j < i:
                continue
            for verts, edges in _product_components(a, b):
                if i == j and all(u == v for u, v in verts):
                    continue
                g = _component_immersion(verts, edges, a.ambient_rank)
                if g is not None:
                    return False, g
    return True, None
