"""Marked graphs, topological representatives and their train-track data.

Oriented edges are signed integers: ``e`` (1-based) runs from ``origin[e]`` to
``terminus[e]`` and ``-e`` is its reversal.  An edge path is a tuple of signed
edges.  The marking collapses a spanning tree; every non-tree edge carries a
word of F, so the word of a path is the product of its edge labels.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

from .words import (
    DEFAULT_NAMES,
    FreeAutomorphism,
    NotAnAutomorphism,
    Word,
    canonical_class,
    inverse,
    invert,
    reduce,
)

Path = Tuple[int, ...]
Turn = Tuple[int, int]


class GraphError(ValueError):
    pass


class MalformedPath(GraphError):
    pass


class DomainError(ValueError):
    pass


def tighten(p: Sequence[int]) -> Path:
    out = []
    for e in p:
        if out and out[-1] == -e:
            out.pop()
        else:
            out.append(e)
    return tuple(out)


def tighten_cyclic(p: Sequence[int]) -> Path:
    p = tighten(p)
    i, j = 0, len(p) - 1
    while i < j and p[i] == -p[j]:
        i += 1
        j -= 1
    return p[i:j + 1]


def reverse_path(p: Sequence[int]) -> Path:
    return tuple(-e for e in reversed(p))


def make_turn(d1: int, d2: int) -> Turn:
    return (d1, d2) if (abs(d1), d1) <= (abs(d2), d2) else (d2, d1)


class MarkedGraph:
    """Finite connected graph with a marking by a spanning tree and edge words."""

    def __init__(self, vertices, edges, tree=(), labels=None, names=DEFAULT_NAMES):
        """``edges`` is a list of ``(name, from, to)``; ``labels`` maps edge name to a word."""
        self.vertices = tuple(vertices)
        self.edge_names = tuple(e[0] for e in edges)
        if len(set(self.edge_names)) != len(self.edge_names):
            raise GraphError("duplicate edge names")
        vindex = {v: i for i, v in enumerate(self.vertices)}
        try:
            self._origin = [None] + [vindex[e[1]] for e in edges]
            self._terminus = [None] + [vindex[e[2]] for e in edges]
        except KeyError as exc:
            raise GraphError(f"unknown vertex {exc}") from None
        self.names = names
        self._eindex = {n: i + 1 for i, n in enumerate(self.edge_names)}
        self.tree = frozenset(self._eindex[t] for t in tree)
        self.n_edges = len(self.edge_names)
        self._validate_shape()
        nontree = [e for e in range(1, self.n_edges + 1) if e not in self.tree]
        self.rank = len(nontree)
        if labels is None:
            labels = {self.edge_names[e - 1]: (k + 1,) for k, e in enumerate(nontree)}
        self.labels: Dict[int, Word] = {}
        for e in nontree:
            name = self.edge_names[e - 1]
            if name not in labels:
                raise GraphError(f"non-tree edge {name} has no marking label")
            self.labels[e] = reduce(labels[name], self.rank)
        # labels must form a basis; keep the inverse to realise words as loops
        marking = FreeAutomorphism(tuple(self.labels[e] for e in nontree))
        try:
            self._unmark = invert(marking)
        except NotAnAutomorphism as exc:
            raise GraphError(f"marking labels are not a basis: {exc}") from None
        self._nontree = nontree
        self._tree_paths = self._build_tree_paths()

    def _validate_shape(self):
        nv = len(self.vertices)
        if nv == 0:
            raise GraphError("empty graph")
        valence = [0] * nv
        adj = [[] for _ in range(nv)]
        for e in range(1, self.n_edges + 1):
            u, v = self._origin[e], self._terminus[e]
            valence[u] += 1
            valence[v] += 1
            adj[u].append(v)
            adj[v].append(u)
        seen = {0}
        stack = [0]
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        if len(seen) != nv:
            raise GraphError("graph is not connected")
        for i, val in enumerate(valence):
            if val < 2:
                raise GraphError(f"vertex {self.vertices[i]} has valence {val}")
        if len(self.tree) != nv - 1:
            raise GraphError("spanning tree must have |V|-1 edges")

    def _build_tree_paths(self):
        nv = len(self.vertices)
        paths = {0: ()}
        frontier = [0]
        while frontier:
            nxt = []
            for u in frontier:
                for e in sorted(self.tree):
                    for s in (e, -e):
                        if self.origin(s) == u and self.terminus(s) not in paths:
                            paths[self.terminus(s)] = paths[u] + (s,)
                            nxt.append(self.terminus(s))
            frontier = nxt
        if len(paths) != nv:
            raise GraphError("tree edges do not span the graph")
        return paths

    @classmethod
    def rose(cls, rank: int, names=DEFAULT_NAMES) -> "MarkedGraph":
        return cls(["v"], [(names[i], "v", "v") for i in range(rank)], names=names)

    def origin(self, e: int) -> int:
        return self._origin[e] if e > 0 else self._terminus[-e]

    def terminus(self, e: int) -> int:
        return self._terminus[e] if e > 0 else self._origin[-e]

    def edge(self, name: str) -> int:
        if name.endswith("'"):
            return -self._eindex[name[:-1]]
        return self._eindex[name]

    def edge_name(self, e: int) -> str:
        return self.edge_names[abs(e) - 1] + ("'" if e < 0 else "")

    def format_path(self, p: Sequence[int]) -> str:
        return " ".join(self.edge_name(e) for e in p) if p else "1"

    def parse_path(self, text: str) -> Path:
        return tuple(self.edge(t) for t in text.split())

    def is_rose(self) -> bool:
        return len(self.vertices) == 1

    def check_path(self, p: Sequence[int]):
        for e in p:
            if e == 0 or abs(e) > self.n_edges:
                raise MalformedPath(f"unknown edge {e}")
        for a, b in zip(p, p[1:]):
            if self.terminus(a) != self.origin(b):
                raise MalformedPath(
                    f"edges {self.edge_name(a)} and {self.edge_name(b)} are not composable"
                )

    def tree_path(self, u: int, v: int) -> Path:
        return tighten(reverse_path(self._tree_paths[u]) + self._tree_paths[v])

    def path_word(self, p: Sequence[int]) -> Word:
        out = []
        for e in p:
            if abs(e) in self.labels:
                w = self.labels[abs(e)]
                out.extend(w if e > 0 else inverse(w))
        return reduce(out)

    def word_loop(self, w: Sequence[int]) -> Path:
        """Tight closed path at the base vertex whose marking word is ``w``."""
        out = []
        for x in self._unmark.apply(w):
            e = self._nontree[abs(x) - 1]
            s = e if x > 0 else -e
            out.extend(self._tree_paths[self.origin(s)])
            out.append(s)
            out.extend(reverse_path(self._tree_paths[self.terminus(s)]))
        return tighten(out)

    def circuit(self, w: Sequence[int]) -> Path:
        """Tight circuit (cyclic edge path) realising the conjugacy class of ``w``."""
        return tighten_cyclic(self.word_loop(w))

    def circuit_class(self, c: Sequence[int]) -> Word:
        return canonical_class(self.path_word(c))

    def vertices_of(self, edges: Iterable[int]) -> set:
        vs = set()
        for e in edges:
            vs.add(self.origin(e))
            vs.add(self.terminus(e))
        return vs

    def directions(self):
        return [s for e in range(1, self.n_edges + 1) for s in (e, -e)]

    def to_json(self) -> dict:
        return {
            "vertices": list(self.vertices),
            "edges": [
                [n, self.vertices[self._origin[i + 1]], self.vertices[self._terminus[i + 1]]]
                for i, n in enumerate(self.edge_names)
            ],
            "marking": {
                "tree": sorted(self.edge_names[e - 1] for e in self.tree),
                "labels": {
                    self.edge_names[e - 1]: " ".join(
                        self.names[abs(x) - 1] + ("'" if x < 0 else "") for x in w
                    )
                    for e, w in sorted(self.labels.items())
                },
            },
        }


@dataclass
class Stratum:
    height: int
    edges: FrozenSet[int]
    kind: str  # "EG", "NEG" or "zero"
    matrix: List[List[int]]
    pf_lower: Optional[Fraction] = None
    pf_upper: Optional[Fraction] = None
    pf_vector: Optional[List[Fraction]] = None

    @property
    def pf_value(self) -> Optional[float]:
        if self.pf_lower is None:
            return None
        return float((self.pf_lower + self.pf_upper) / 2)


class GraphSelfMap:
    """Topological representative: vertex map, tight edge images, invariant filtration."""

    def __init__(self, graph: MarkedGraph, vertex_images, edge_images, filtration=None):
        self.graph = graph
        g = graph
        self.vertex_images = [None] * len(g.vertices)
        for v, w in vertex_images.items():
            self.vertex_images[g.vertices.index(v)] = g.vertices.index(w)
        if any(x is None for x in self.vertex_images):
            raise GraphError("every vertex needs an image")
        self._images: Dict[int, Path] = {}
        for name, path in edge_images.items():
            e = g.edge(name)
            p = tuple(path)
            g.check_path(p)
            if e < 0:
                e, p = -e, reverse_path(p)
            self._images[e] = p
        for e in range(1, g.n_edges + 1):
            if e not in self._images:
                raise GraphError(f"edge {g.edge_name(e)} has no image")
            p = self._images[e]
            if not p:
                raise GraphError(f"edge {g.edge_name(e)} maps to a trivial path")
            if p != tighten(p):
                raise GraphError(f"image of {g.edge_name(e)} is not tight")
            if g.origin(p[0]) != self.vertex_images[g.origin(e)] or g.terminus(
                p[-1]
            ) != self.vertex_images[g.terminus(e)]:
                raise GraphError(f"image of {g.edge_name(e)} does not match vertex images")
        if filtration is None:
            filtration = [frozenset(range(1, g.n_edges + 1))]
        self.filtration: List[FrozenSet[int]] = [frozenset(abs(e) for e in s) for s in filtration]
        self._validate_filtration()
        self.automorphism = self._induced_automorphism()

    def _validate_filtration(self):
        g = self.graph
        prev = frozenset()
        for k, gk in enumerate(self.filtration, 1):
            if not prev < gk:
                raise GraphError(f"filtration is not strictly increasing at level {k}")
            prev = gk
        if prev != frozenset(range(1, g.n_edges + 1)):
            raise GraphError("top filtration element must be the whole graph")
        for k, gk in enumerate(self.filtration, 1):
            for e in gk:
                if any(abs(x) not in gk for x in self._images[e]):
                    raise GraphError(f"f does not respect filtration element G_{k}")

    def _induced_automorphism(self) -> FreeAutomorphism:
        g = self.graph
        images = tuple(g.path_word(self.map_path(g.word_loop((i,))))
                       for i in range(1, g.rank + 1))
        phi = FreeAutomorphism(images, names=g.names)
        try:
            return invert(phi).inverse()
        except NotAnAutomorphism as exc:
            raise GraphError(f"map is not a homotopy equivalence: {exc}") from None

    # construction helpers

    @classmethod
    def rose(cls, phi: FreeAutomorphism, filtration=None) -> "GraphSelfMap":
        """Rose representative of ``phi``; filtration given as lists of generator indices."""
        g = MarkedGraph.rose(phi.rank, phi.names)
        images = {g.edge_names[i]: phi.images[i] for i in range(phi.rank)}
        if filtration is not None:
            filtration = [frozenset(s) for s in filtration]
        return cls(g, {"v": "v"}, images, filtration)

    @classmethod
    def from_json(cls, data) -> "GraphSelfMap":
        if isinstance(data, str):
            data = json.loads(data)
        marking = data.get("marking", {})
        labels = marking.get("labels")
        names = data.get("names", DEFAULT_NAMES)
        if labels is not None:
            labels = {k: _parse_letters(v, names) for k, v in labels.items()}
        g = MarkedGraph(
            data["vertices"],
            [tuple(e) for e in data["edges"]],
            tree=marking.get("tree", ()),
            labels=labels,
            names=names,
        )
        vimg = data.get("vertex_images")
        edge_images = {k: g.parse_path(v) for k, v in data["edge_images"].items()}
        if vimg is None:
            vimg = {}
            for name, p in edge_images.items():
                e = g.edge(name)
                vimg[g.vertices[g.origin(e)]] = g.vertices[g.origin(p[0])]
                vimg[g.vertices[g.terminus(e)]] = g.vertices[g.terminus(p[-1])]
        filtration = data.get("filtration")
        if filtration is not None:
            filtration = [frozenset(g.edge(n) for n in level) for level in filtration]
        return cls(g, vimg, edge_images, filtration)

    def to_json(self) -> dict:
        g = self.graph
        d = g.to_json()
        d["names"] = g.names
        d["vertex_images"] = {g.vertices[i]: g.vertices[w] for i, w in enumerate(self.vertex_images)}
        d["edge_images"] = {
            g.edge_names[e - 1]: g.format_path(self._images[e]) for e in sorted(self._images)
        }
        d["filtration"] = [sorted(g.edge_names[e - 1] for e in gk) for gk in self.filtration]
        return d

    # basic maps

    def edge_image(self, e: int) -> Path:
        return self._images[e] if e > 0 else reverse_path(self._images[-e])

    def vertex_image(self, v: int) -> int:
        return self.vertex_images[v]

    def map_path(self, p: Sequence[int], check: bool = True) -> Path:
        if check:
            self.graph.check_path(p)
        table = self._signed_images()
        out: List[int] = []
        push, pop = out.append, out.pop
        for e in p:
            for x in table[e]:
                if out and out[-1] == -x:
                    pop()
                else:
                    push(x)
        return tuple(out)

    def _signed_images(self) -> Dict[int, Path]:
        table = getattr(self, "_table", None)
        if table is None:
            table = {}
            for e, img in self._images.items():
                table[e] = img
                table[-e] = reverse_path(img)
            self._table = table
        return table

    def iterate_path(self, p: Sequence[int], k: int) -> Path:
        self.graph.check_path(p)
        p = tighten(p)
        for _ in range(k):
            p = self.map_path(p, check=False)
        return p

    def map_circuit(self, c: Sequence[int], check: bool = True) -> Path:
        return tighten_cyclic(self.map_path(c, check))

    def iterate_circuit(self, c: Sequence[int], k: int) -> Path:
        self.graph.check_path(c)
        c = tighten_cyclic(c)
        for _ in range(k):
            c = self.map_circuit(c, check=False)
        return c

    def compose(self, other: "GraphSelfMap") -> "GraphSelfMap":
        """``self ∘ other`` on the same graph and filtration."""
        g = self.graph
        vimg = {g.vertices[v]: g.vertices[self.vertex_images[w]]
                for v, w in enumerate(other.vertex_images)}
        eimg = {g.edge_names[e - 1]: self.map_path(other.edge_image(e))
                for e in range(1, g.n_edges + 1)}
        return GraphSelfMap(g, vimg, eimg, self.filtration)

    def power(self, k: int) -> "GraphSelfMap":
        result = self
        for _ in range(k - 1):
            result = self.compose(result)
        return result

    # filtration data

    @property
    def n_strata(self) -> int:
        return len(self.filtration)

    def stratum_edges(self, k: int) -> FrozenSet[int]:
        if not 1 <= k <= len(self.filtration):
            raise DomainError(f"height {k} out of range 1..{len(self.filtration)}")
        lower = self.filtration[k - 2] if k > 1 else frozenset()
        return self.filtration[k - 1] - lower

    def lower_edges(self, k: int) -> FrozenSet[int]:
        return self.filtration[k - 2] if k > 1 else frozenset()

    def height_of_edge(self, e: int) -> int:
        for k, gk in enumerate(self.filtration, 1):
            if abs(e) in gk:
                return k
        raise DomainError(f"edge {e} not in filtration")

    def height(self, p: Sequence[int]) -> int:
        return max((self.height_of_edge(e) for e in p), default=0)


def _parse_letters(text: str, names: str) -> Word:
    out = []
    for tok in text.split():
        inv = tok.endswith("'")
        x = names.index(tok.rstrip("'")) + 1
        out.append(-x if inv else x)
    return tuple(out)


# transition matrices and Perron-Frobenius data


def transition_matrix(f: GraphSelfMap, k: int) -> List[List[int]]:
    edges = sorted(f.stratum_edges(k))
    pos = {e: i for i, e in enumerate(edges)}
    m = [[0] * len(edges) for _ in edges]
    for j, e in enumerate(edges):
        for x in f.edge_image(e):
            i = pos.get(abs(x))
            if i is not None:
                m[i][j] += 1
    return m


def is_irreducible(m: Sequence[Sequence[int]]) -> bool:
    n = len(m)
    if n == 0:
        return False

    def reach(forward):
        seen = {0}
        stack = [0]
        while stack:
            i = stack.pop()
            for j in range(n):
                val = m[j][i] if forward else m[i][j]
                if val and j not in seen:
                    seen.add(j)
                    stack.append(j)
        return len(seen) == n

    return reach(True) and reach(False)


def _is_permutation(m) -> bool:
    n = len(m)
    return all(sorted(row) == [0] * (n - 1) + [1] for row in m) and all(
        sum(m[i][j] for i in range(n)) == 1 for j in range(n)
    )


def perron_frobenius(m: Sequence[Sequence[int]], tol: Fraction = Fraction(1, 10**9),
                     max_iter: int = 100_000):
    """Certified Perron-Frobenius bounds for an irreducible nonnegative integer matrix.

    Power iteration runs on ``M + I`` (primitive whenever ``M`` is irreducible);
    the returned positive rational vector ``v`` certifies
    ``min (Mv)_i/v_i <= λ <= max (Mv)_i/v_i`` by Collatz-Wielandt.
    """
    n = len(m)
    if not is_irreducible(m):
        raise DomainError("matrix is not irreducible")
    if _is_permutation(m):
        one = Fraction(1)
        return one, one, [one] * n
    v = [1.0] * n
    for it in range(max_iter):
        w = [v[i] + sum(m[i][j] * v[j] for j in range(n)) for i in range(n)]
        s = max(w)
        v = [x / s for x in w]
        if it % 8 == 7 or it == max_iter - 1:
            if min(v) <= 0:
                continue
            vq = [Fraction(x) for x in v]
            ratios = [sum(m[i][j] * vq[j] for j in range(n)) / vq[i] for i in range(n)]
            lo, hi = min(ratios), max(ratios)
            if hi - lo <= tol:
                return lo, hi, vq
    raise DomainError("power iteration did not reach the requested certificate width")


def classify_strata(f: GraphSelfMap) -> List[Stratum]:
    out = []
    for k in range(1, f.n_strata + 1):
        m = transition_matrix(f, k)
        edges = f.stratum_edges(k)
        if all(x == 0 for row in m for x in row):
            out.append(Stratum(k, edges, "zero", m))
            continue
        if not is_irreducible(m):
            raise GraphError(f"stratum H_{k} is neither zero nor irreducible; refine the filtration")
        lo, hi, v = perron_frobenius(m)
        kind = "NEG" if hi == 1 and lo == 1 else "EG"
        if kind == "EG" and lo <= 1:
            raise GraphError(f"stratum H_{k}: PF certificate does not separate λ from 1")
        out.append(Stratum(k, edges, kind, m, lo, hi, v))
    return out


def eg_heights(f: GraphSelfMap) -> List[int]:
    return [s.height for s in classify_strata(f) if s.kind == "EG"]


# turns and legality


def direction_map(f: GraphSelfMap, d: int) -> int:
    return f.edge_image(d)[0]


def all_turns(f: GraphSelfMap) -> List[Turn]:
    g = f.graph
    dirs = g.directions()
    turns = set()
    for d1 in dirs:
        for d2 in dirs:
            if g.origin(d1) == g.origin(d2):
                turns.add(make_turn(d1, d2))
    return sorted(turns, key=lambda t: (abs(t[0]), t[0], abs(t[1]), t[1]))


def illegal_turns(f: GraphSelfMap) -> set:
    """All turns whose Tf-orbit reaches a degenerate turn (degenerate turns included)."""
    status: Dict[Turn, bool] = {}
    for t in all_turns(f):
        orbit = []
        cur = t
        seen = set()
        result = None
        while True:
            if cur in status:
                result = status[cur]
                break
            if cur[0] == cur[1]:
                result = True
                break
            if cur in seen:
                result = False
                break
            seen.add(cur)
            orbit.append(cur)
            cur = make_turn(direction_map(f, cur[0]), direction_map(f, cur[1]))
        for u in orbit:
            status[u] = result
        status.setdefault(t, result)
    return {t for t, bad in status.items() if bad}


def path_turns(p: Sequence[int], cyclic: bool = False) -> List[Turn]:
    turns = [make_turn(-a, b) for a, b in zip(p, p[1:])]
    if cyclic and len(p) > 1:
        turns.append(make_turn(-p[-1], p[0]))
    return turns


def is_r_legal(p: Sequence[int], f: GraphSelfMap, r: int, illegal: Optional[set] = None,
               cyclic: bool = False) -> bool:
    if f.height(p) != r:
        return False
    if illegal is None:
        illegal = illegal_turns(f)
    lower = f.lower_edges(r)
    for t in path_turns(p, cyclic):
        if t in illegal and not (abs(t[0]) in lower and abs(t[1]) in lower):
            return False
    return True


def tight_paths(f: GraphSelfMap, max_len: int, allowed: Optional[FrozenSet[int]] = None):
    """Yield every nontrivial tight path of length <= max_len, optionally within an edge set."""
    g = f.graph
    dirs = [d for d in g.directions() if allowed is None or abs(d) in allowed]
    by_origin: Dict[int, List[int]] = {}
    for d in dirs:
        by_origin.setdefault(g.origin(d), []).append(d)
    stack = [(d,) for d in reversed(dirs)]
    while stack:
        p = stack.pop()
        yield p
        if len(p) < max_len:
            for d in reversed(by_origin.get(g.terminus(p[-1]), [])):
                if d != -p[-1]:
                    stack.append(p + (d,))


@dataclass
class RTTReport:
    depth: int
    strata: List[Stratum]
    violations: List[dict] = field(default_factory=list)
    not_checked: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json(self):
        return {
            "depth": self.depth,
            "ok": self.ok,
            "violations": self.violations,
            "not_checked": self.not_checked,
        }


def verify_rtt(f: GraphSelfMap, depth: int = 5, connecting_length: int = 3) -> RTTReport:
    if depth < 1:
        raise ValueError("depth must be >= 1")
    g = f.graph
    strata = classify_strata(f)
    report = RTTReport(depth, strata)
    illegal = illegal_turns(f)
    for s in strata:
        if s.kind != "EG":
            if s.kind == "zero":
                report.not_checked.append(
                    f"H_{s.height}: zero-stratum enveloping/taken conditions need complete splittings"
                )
            continue
        r = s.height
        hr = s.edges
        for e in sorted(hr):
            for d in (e, -e):
                first = direction_map(f, d)
                if abs(first) not in hr:
                    report.violations.append({
                        "stratum": r, "axiom": "Tf(E) in H_r",
                        "edge": g.edge_name(d), "first_edge": g.edge_name(first),
                    })
            p = (e,)
            for k in range(1, depth + 1):
                p = f.map_path(p)
                if not is_r_legal(p, f, r, illegal):
                    report.violations.append({
                        "stratum": r, "axiom": "r-legal images", "edge": g.edge_name(e),
                        "iterate": k, "path": g.format_path(p),
                    })
                    break
        lower = f.lower_edges(r)
        hverts = g.vertices_of(hr)
        if lower:
            for gamma in tight_paths(f, connecting_length, lower):
                if g.origin(gamma[0]) in hverts and g.terminus(gamma[-1]) in hverts:
                    img = f.map_path(gamma)
                    ends = (f.vertex_image(g.origin(gamma[0])), f.vertex_image(g.terminus(gamma[-1])))
                    if not img or ends[0] not in hverts or ends[1] not in hverts:
                        report.violations.append({
                            "stratum": r, "axiom": "connecting paths",
                            "path": g.format_path(gamma), "image": g.format_path(img),
                        })
    return report


# Nielsen paths and constants


def _periodic_within(f: GraphSelfMap, p: Path, period_bound: int) -> Optional[int]:
    g = f.graph
    o, t = g.origin(p[0]), g.terminus(p[-1])
    q, vo, vt = p, o, t
    for k in range(1, period_bound + 1):
        q = f.map_path(q, check=False)
        vo, vt = f.vertex_image(vo), f.vertex_image(vt)
        if vo == o and vt == t and q == p:
            return k
    return None


def _nielsen_sort_key(item):
    return (len(item[0]), [(abs(e), e) for e in item[0]])


def find_nielsen_paths(f: GraphSelfMap, length_bound: int, period_bound: int) -> List[Tuple[Path, int]]:
    """Exhaustive search for periodic Nielsen paths within the given bounds."""
    if length_bound < 1 or period_bound < 1:
        raise ValueError("bounds must be >= 1")
    found = []
    for p in tight_paths(f, length_bound):
        k = _periodic_within(f, p, period_bound)
        if k is not None:
            found.append((p, k))
    found.sort(key=_nielsen_sort_key)
    return found


def closed_nielsen_paths(f: GraphSelfMap, r: int, length_bound: int, period_bound: int):
    """Closed Nielsen paths of height r that are not concatenations of shorter ones.

    A path and its reverse are reported once.
    """
    if length_bound < 1 or period_bound < 1:
        raise ValueError("bounds must be >= 1")
    g = f.graph
    periodic = {}
    for p in tight_paths(f, length_bound):
        k = _periodic_within(f, p, period_bound)
        if k is not None:
            periodic[p] = k
    out = []
    for p, k in sorted(periodic.items(), key=_nielsen_sort_key):
        if f.height(p) != r or g.origin(p[0]) != g.terminus(p[-1]):
            continue
        if any(p[:i] in periodic and p[i:] in periodic for i in range(1, len(p))):
            continue
        if reverse_path(p) not in [q for q, _ in out]:
            out.append((p, k))
    return out


def bcc_bound(f: GraphSelfMap) -> int:
    return sum(len(f.edge_image(e)) for e in range(1, f.graph.n_edges + 1))


def critical_constant(f: GraphSelfMap, r: int) -> Fraction:
    strata = classify_strata(f)
    s = strata[r - 1]
    if s.kind != "EG":
        raise DomainError(f"stratum H_{r} is {s.kind}; the critical constant needs λ > 1")
    return Fraction(2 * bcc_bound(f)) / (s.pf_lower - 1)


def cyclic_words(rank: int, length: int):
    """Canonical representatives of all conjugacy classes of cyclic length ``length``."""
    from .words import least_rotation

    letters = sorted([x for i in range(1, rank + 1) for x in (i, -i)],
                     key=lambda x: (abs(x), x < 0))

    def extend(prefix):
        if len(prefix) == length:
            if length > 1 and prefix[0] == -prefix[-1]:
                return
            if least_rotation(prefix)[0] == tuple(prefix):
                yield tuple(prefix)
            return
        for x in letters:
            if prefix and prefix[-1] == -x:
                continue
            prefix.append(x)
            yield from extend(prefix)
            prefix.pop()

    yield from extend([])


def periodic_conjugacy_search(phi: FreeAutomorphism, period_bound: int, length_bound: int):
    """Smallest-period, then shortest, class ``c`` with ``φ^k[c] = [c]``; None if none within bounds."""
    if period_bound < 1 or length_bound < 1:
        raise ValueError("bounds must be >= 1")
    power = phi
    for k in range(1, period_bound + 1):
        for n in range(1, length_bound + 1):
            for c in cyclic_words(phi.rank, n):
                if canonical_class(power.apply(c)) == c:
                    return c, k
        power = phi.compose(power)
    return None
