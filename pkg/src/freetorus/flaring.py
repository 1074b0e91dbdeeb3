"""Legality ratios and bounded searches for the flaring inequalities."""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import List, Optional, Sequence, Tuple

from .electric import ElectricSpace, PreconditionError, electric_conjugacy_length, electric_length
from .graphs import (
    GraphSelfMap,
    critical_constant,
    illegal_turns,
    make_turn,
    reverse_path,
    transition_matrix,
)
from .laminations import (
    LeafLibrary,
    NonattractingData,
    _SuffixAutomaton,
    _decompose_linear,
    best_rotation,
    compute_nas,
    groupoid_decompose,
)
from .subgroups import carries_conjugacy_class
from .words import FreeAutomorphism, MissingInverse, inverse, is_inner, reduce

log = logging.getLogger(__name__)

CONJUGACY_FACTOR = 3
STRICT_FACTOR = 2
EPSILON_GRID = [Fraction(1, 2 ** k) for k in range(11)]


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("FREETORUS_WORKERS", "1")))
    except ValueError:
        return 1


def _pmap(fn, items):
    items = list(items)
    n = worker_count()
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * n))))


class ParameterError(ValueError):
    pass


class Dynamics:
    """An outer automorphism with representatives for it and for its inverse.

    ``fwd`` realises ``phi`` with EG stratum ``r``; ``bwd`` realises ``phi^-1``
    with EG stratum ``s``.  Laminations of the two top strata are paired.
    """

    def __init__(self, phi: FreeAutomorphism, fwd: GraphSelfMap, r: int, bwd: GraphSelfMap, s: int,
                 attraction_depth: int = 20, library_depth: int = 8, nielsen_length: int = 6):
        if phi.verified_inverse is None:
            raise MissingInverse("phi needs a verified inverse")
        if not is_inner(fwd.automorphism.compose(phi.inverse())):
            raise PreconditionError("forward representative does not realise phi")
        if not is_inner(bwd.automorphism.compose(phi)):
            raise PreconditionError("backward representative does not realise phi^-1")
        self.phi, self.fwd, self.r, self.bwd, self.s = phi, fwd, r, bwd, s
        self.attraction_depth = attraction_depth
        self.library_depth = library_depth
        self.nielsen_length = nielsen_length

    @cached_property
    def nas_fwd(self) -> NonattractingData:
        return compute_nas(self.fwd, self.r, self.attraction_depth, self.nielsen_length)

    @cached_property
    def nas_bwd(self) -> NonattractingData:
        return compute_nas(self.bwd, self.s, self.attraction_depth, self.nielsen_length)

    @cached_property
    def library_fwd(self) -> LeafLibrary:
        return LeafLibrary(self.fwd, self.r, self.library_depth)

    @cached_property
    def library_bwd(self) -> LeafLibrary:
        return LeafLibrary(self.bwd, self.s, self.library_depth)

    @cached_property
    def C_fwd(self) -> Fraction:
        return Fraction(math.floor(critical_constant(self.fwd, self.r)) + 1)

    @cached_property
    def C_bwd(self) -> Fraction:
        return Fraction(math.floor(critical_constant(self.bwd, self.s)) + 1)

    def bounds(self) -> dict:
        return {
            "attraction_depth": self.attraction_depth,
            "leaf_library_depth": self.library_depth,
            "nielsen_length_bound": self.nielsen_length,
        }


# legality


@dataclass
class LegalityReport:
    value: Fraction
    legal_segments: List[Tuple[tuple, int]]
    C_used: Fraction
    relative_length: int

    def to_json(self):
        return {
            "value": str(self.value),
            "segments": [len(s) for s, _ in self.legal_segments],
            "C": str(self.C_used),
            "relative_length": self.relative_length,
        }


def legality(p: Sequence[int], f: GraphSelfMap, r: int, C, D: NonattractingData,
             library, cyclic: bool = True, check_C: bool = True) -> LegalityReport:
    """Share of the relative length covered by long r-legal leaf segments.

    ``library`` is a :class:`LeafLibrary` or a depth.  Segments are found by a
    greedy left-to-right scan for the longest library factor inside each
    r-legal stretch; only those of length at least ``C`` count, and edges that
    the groupoid already absorbs are not counted again.
    """
    C = Fraction(C)
    if check_C and C <= critical_constant(f, r):
        raise ParameterError(f"C = {C} does not exceed the critical constant")
    if not isinstance(library, LeafLibrary):
        library = LeafLibrary(f, r, int(library))
    p = tuple(p)
    if cyclic:
        q = best_rotation(p, D)
    else:
        q = p
    blocks = [b for b in (D.sigma_hat, reverse_path(D.sigma_hat)) if b]
    pieces, rel = _decompose_linear(q, D.Z, blocks)
    if rel == 0:
        return LegalityReport(Fraction(0), [], C, 0)
    carried = []
    for kind, piece in pieces:
        carried.extend([kind == "carried"] * len(piece))
    illegal = illegal_turns(f)
    lower = f.lower_edges(r)
    hr = f.stratum_edges(r)
    cuts = [0]
    for i in range(len(q) - 1):
        t = make_turn(-q[i], q[i + 1])
        if t in illegal and not (abs(t[0]) in lower and abs(t[1]) in lower):
            cuts.append(i + 1)
    cuts.append(len(q))
    segments = []
    counted = 0
    for lo, hi in zip(cuts, cuts[1:]):
        if lo >= hi:
            continue
        longest = library.longest_from(q, lo, hi)
        i = lo
        while i < hi:
            m = longest[i - lo]
            if m >= C and any(abs(x) in hr for x in q[i:i + m]):
                segments.append((q[i:i + m], m))
                counted += sum(1 for k in range(i, i + m) if not carried[k])
                i += m
            else:
                i += 1
    return LegalityReport(Fraction(counted, rel), segments, C, rel)


def _quantize(x: Fraction) -> Fraction:
    for eps in EPSILON_GRID:
        if x >= eps:
            return eps
    return Fraction(0)


def legality_dichotomy_test(corpus: Sequence[Sequence[int]], dyn: Dynamics, M: int):
    """``min`` over the corpus of ``max(LEG(φ^M α), LEG(φ^-M α))``, rounded down to the grid."""
    D = dyn.nas_fwd
    items = []
    eps_found = None
    failures = []
    for c in corpus:
        w = reduce(c)
        if D.system.components and carries_conjugacy_class(D.system, w):
            raise PreconditionError(f"class {w} is carried by the nonattracting system")
        fwd_c = dyn.fwd.iterate_circuit(dyn.fwd.graph.circuit(w), M)
        bwd_c = dyn.bwd.iterate_circuit(dyn.bwd.graph.circuit(w), M)
        lf = legality(fwd_c, dyn.fwd, dyn.r, dyn.C_fwd, dyn.nas_fwd, dyn.library_fwd, check_C=False)
        lb = legality(bwd_c, dyn.bwd, dyn.s, dyn.C_bwd, dyn.nas_bwd, dyn.library_bwd, check_C=False)
        best = max(lf.value, lb.value)
        items.append({"class": list(w), "forward": str(lf.value), "backward": str(lb.value)})
        if best == 0:
            failures.append(list(w))
        eps_found = best if eps_found is None else min(eps_found, best)
    eps = _quantize(eps_found) if eps_found is not None else Fraction(0)
    return eps, failures, items


def growth_flare_test(alpha: Sequence[int], f: GraphSelfMap, r: int, D: NonattractingData, eps,
                      A, m_bound: int, C=None, library=None) -> Optional[int]:
    """Smallest ``m <= m_bound`` with relative length of ``f^m_#(α)`` at least ``A`` times that of ``α``."""
    if C is None:
        C = Fraction(math.floor(critical_constant(f, r)) + 1)
    if library is None:
        library = LeafLibrary(f, r, 8)
    leg = legality(alpha, f, r, C, D, library)
    if leg.value < Fraction(eps) or (Fraction(eps) > 0 and leg.value == 0):
        raise PreconditionError(f"legality {leg.value} is below ε = {eps}")
    base = groupoid_decompose(alpha, D, cyclic=True)[1]
    q = tuple(alpha)
    for m in range(m_bound + 1):
        if groupoid_decompose(q, D, cyclic=True)[1] >= A * base:
            return m
        q = f.map_circuit(q, check=False)
    return None


# flaring searches


@dataclass
class FlaringVerdict:
    constant_target: int
    M_found: Optional[int]
    per_item: List[dict]
    bounds: dict
    excluded: List[dict] = field(default_factory=list)

    def to_json(self):
        return {
            "constant_target": self.constant_target,
            "M_found": self.M_found,
            "status": "found" if self.M_found is not None else "no witness within bound",
            "bounds": self.bounds,
            "items": self.per_item,
            "excluded": self.excluded,
        }


def _persistent_start(passes: List[bool]) -> Optional[int]:
    """Smallest ``M`` (1-based) such that ``passes[m-1]`` holds for every ``m >= M``."""
    if not passes or not passes[-1]:
        return None
    M = len(passes)
    while M > 1 and passes[M - 2]:
        M -= 1
    return M


def _combine(per_item_starts, n_bound):
    if not per_item_starts or any(s is None for s in per_item_starts):
        return None
    return max(per_item_starts, default=1)


def _conj_item(args):
    c, phi, space, M_bound, cb, cap = args
    base = electric_conjugacy_length(space, c, cb).value
    fwd, bwd, passes = [], [], []
    cf, cbk = c, c
    inv = phi.inverse()
    for m in range(1, M_bound + 1):
        cf = phi.iterate_class(cf, 1)
        cbk = inv.iterate_class(cbk, 1)
        if len(cf) > cap or len(cbk) > cap:
            return {"class": list(c), "out_of_ball": m}
        lf = electric_conjugacy_length(space, cf, cb).value
        lb = electric_conjugacy_length(space, cbk, cb).value
        fwd.append(lf)
        bwd.append(lb)
        passes.append(CONJUGACY_FACTOR * base <= max(lf, lb))
    return {"class": list(c), "base": base, "forward": fwd, "backward": bwd, "passes": passes}


def conjugacy_flaring_search(corpus: Sequence[Sequence[int]], phi: FreeAutomorphism,
                             space: ElectricSpace, M_bound: int, conjugator_bound: int = 0,
                             length_cap: int = 1_000_000) -> FlaringVerdict:
    """Smallest ``M`` with ``3||α|| <= max(||φ^m α||, ||φ^-m α||)`` for all ``m`` in ``[M, M_bound]``."""
    if phi.verified_inverse is None:
        raise MissingInverse("conjugacy flaring needs φ^-1")
    classes = []
    for c in corpus:
        core = reduce(c)
        if not core:
            raise PreconditionError("trivial class in corpus")
        if space.peripherals.components and carries_conjugacy_class(space.peripherals, core):
            raise PreconditionError(f"class {core} is carried by the peripheral system")
        classes.append(core)
    results = _pmap(_conj_item, [(c, phi, space, M_bound, conjugator_bound, length_cap) for c in classes])
    kept = [r for r in results if "out_of_ball" not in r]
    excluded = [r for r in results if "out_of_ball" in r]
    for r in excluded:
        log.warning("class %s left the ball at m=%s and is excluded", r["class"], r["out_of_ball"])
    starts = [_persistent_start(r["passes"]) for r in kept]
    M_found = _combine(starts, M_bound)
    at = M_found or M_bound
    per_item = [
        {
            "class": r["class"],
            "electric": r["base"],
            "forward": r["forward"][at - 1],
            "backward": r["backward"][at - 1],
            "first_persistent_M": s,
            "pass": r["passes"][at - 1],
        }
        for r, s in zip(kept, starts)
    ]
    bounds = {"M_bound": M_bound, "conjugator_bound": conjugator_bound,
              "iterate_length_cap": length_cap, **space.describe()}
    return FlaringVerdict(CONJUGACY_FACTOR, M_found, per_item, bounds, excluded)


def _strict_item(args):
    w, Phi, space, N_bound, cap = args
    base = electric_length(space, w).value
    inv = Phi.inverse()
    wf, wb = w, w
    fwd, bwd, passes = [], [], []
    for n in range(1, N_bound + 1):
        wf = Phi.apply(wf)
        wb = inv.apply(wb)
        if len(wf) > cap or len(wb) > cap:
            return {"word": list(w), "out_of_ball": n}
        lf = electric_length(space, wf).value
        lb = electric_length(space, wb).value
        fwd.append(lf)
        bwd.append(lb)
        passes.append(STRICT_FACTOR * base <= max(lf, lb))
    return {"word": list(w), "base": base, "forward": fwd, "backward": bwd, "passes": passes}


def strict_flaring_search(words: Sequence[Sequence[int]], Phi: FreeAutomorphism, space: ElectricSpace,
                          N_bound: int, length_cap: int = 1_000_000) -> FlaringVerdict:
    """Smallest ``N`` with ``2|w| <= max(|Φ^n w|, |Φ^-n w|)`` (electric) for all ``n`` in ``[N, N_bound]``."""
    if Phi.verified_inverse is None:
        raise MissingInverse("strict flaring needs Φ^-1")
    ws = []
    for w in words:
        w = reduce(w)
        if not w:
            raise PreconditionError("identity in word corpus")
        if any(comp.contains(w) for comp in space.peripherals.components):
            raise PreconditionError(f"word {w} lies in a peripheral subgroup")
        ws.append(w)
    results = _pmap(_strict_item, [(w, Phi, space, N_bound, length_cap) for w in ws])
    kept = [r for r in results if "out_of_ball" not in r]
    excluded = [r for r in results if "out_of_ball" in r]
    starts = [_persistent_start(r["passes"]) for r in kept]
    N_found = _combine(starts, N_bound)
    at = N_found or N_bound
    per_item = [
        {
            "word": r["word"],
            "electric": r["base"],
            "forward": r["forward"][at - 1],
            "backward": r["backward"][at - 1],
            "first_persistent_N": s,
            "pass": r["passes"][at - 1],
        }
        for r, s in zip(kept, starts)
    ]
    bounds = {"N_bound": N_bound, "iterate_length_cap": length_cap, **space.describe()}
    return FlaringVerdict(STRICT_FACTOR, N_found, per_item, bounds, excluded)


# approximation by leaves


def approximation_fraction(c: Sequence[int], library: LeafLibrary, L: int) -> Fraction:
    """Fraction of positions of the circuit whose radius-``L`` window is a library factor."""
    if L < 1:
        raise ValueError("L must be >= 1")
    c = tuple(c)
    n = len(c)
    if n == 0:
        return Fraction(0)
    good = 0
    for i in range(n):
        window = tuple(c[(i + k) % n] for k in range(-L, L + 1))
        if library.contains(window):
            good += 1
    return Fraction(good, n)


# two automorphisms


def _is_primitive(m) -> bool:
    n = len(m)
    if n == 0:
        return False
    pos = [[1 if x > 0 else 0 for x in row] for row in m]
    p = [row[:] for row in pos]
    for _ in range(n * n - 2 * n + 2):
        if all(all(row) for row in p):
            return True
        p = [[1 if any(p[i][k] and pos[k][j] for k in range(n)) else 0 for j in range(n)] for i in range(n)]
    return all(all(row) for row in p)


def _word_automaton(words) -> _SuffixAutomaton:
    sam = _SuffixAutomaton()
    for w in words:
        sam.add(w)
        sam.add(inverse(w))
    return sam


def _laminations_differ(x_words, y_words) -> bool:
    """Some deepest segment of one library is not a factor of the other (either direction)."""
    sam_y = _word_automaton(y_words)
    sam_x = _word_automaton(x_words)
    longest_x = max(x_words, key=len)
    longest_y = max(y_words, key=len)
    return not sam_y.contains(longest_x) or not sam_x.contains(longest_y)


@dataclass
class StandingReport:
    items: dict

    @property
    def ok(self) -> bool:
        return all(v["status"] != "fail" for v in self.items.values())

    def to_json(self):
        return {"ok": self.ok, "items": self.items}


def standing_assumptions_check(phi: Dynamics, psi: Dynamics) -> StandingReport:
    items = {}
    # distinct laminations: compare deepest leaf segments as words
    lams = {
        "phi+": phi.library_fwd.words(), "phi-": phi.library_bwd.words(),
        "psi+": psi.library_fwd.words(), "psi-": psi.library_bwd.words(),
    }
    clashes = [
        f"{a} = {b}" for a in ("phi+", "phi-") for b in ("psi+", "psi-")
        if not _laminations_differ(lams[a], lams[b])
    ]
    items["1_distinct_laminations"] = {
        "status": "fail" if clashes else "bounded-evidence",
        "clashes": clashes,
        "library_depth": phi.library_depth,
    }
    nas = {
        "phi": phi.nas_fwd.system.describe(), "psi": psi.nas_fwd.system.describe(),
    }
    trivial = not phi.nas_fwd.system.components and not psi.nas_fwd.system.components
    items["2_trivial_nonattracting_systems"] = {
        "status": "pass" if trivial else "fail",
        "systems": nas,
        "attraction_depth": phi.attraction_depth,
    }
    prim = {}
    for label, f, r in (("phi", phi.fwd, phi.r), ("phi^-1", phi.bwd, phi.s),
                        ("psi", psi.fwd, psi.r), ("psi^-1", psi.bwd, psi.s)):
        prim[label] = _is_primitive(transition_matrix(f, r))
    items["3_invariant_laminations"] = {
        "status": "bounded-evidence" if all(prim.values()) else "fail",
        "primitive_top_strata": prim,
    }
    return StandingReport(items)


THREE_OF_FOUR_NOTE = (
    "for large m, n the group generated by φ^m and ψ^n is free of rank 2 and its extension "
    "is hyperbolic: implied by theorem, not certified"
)


def three_of_four_test(phi: Dynamics, psi: Dynamics, corpus: Sequence[Sequence[int]], M_bound: int,
                       space: Optional[ElectricSpace] = None, override: bool = False) -> dict:
    """Smallest ``M`` such that at least three of the four iterates triple the length of each class."""
    standing = standing_assumptions_check(phi, psi)
    if not standing.ok:
        if not override:
            raise PreconditionError("standing assumptions fail; rerun with override to force the test")
        log.warning("standing assumptions fail; running three-of-four test on override")
    space = space or ElectricSpace(phi.phi.rank)
    maps = [phi.phi, phi.phi.inverse(), psi.phi, psi.phi.inverse()]
    items = []
    starts = []
    for c in corpus:
        core = reduce(c)
        base = electric_conjugacy_length(space, core).value
        cur = [core] * 4
        passes, counts = [], []
        for m in range(1, M_bound + 1):
            cur = [f.iterate_class(x, 1) for f, x in zip(maps, cur)]
            lens = [electric_conjugacy_length(space, x).value for x in cur]
            hits = [CONJUGACY_FACTOR * base <= x for x in lens]
            passes.append(sum(hits) >= 3)
            counts.append(hits)
        s = _persistent_start(passes)
        starts.append(s)
        at = s or M_bound
        items.append({"class": list(core), "electric": base, "which": counts[at - 1], "first_persistent_M": s})
    M_found = _combine(starts, M_bound)
    return {
        "M_found": M_found,
        "status": "found" if M_found is not None else "no witness within bound",
        "items": items,
        "standing_assumptions": standing.to_json(),
        "override": override and not standing.ok,
        "note": THREE_OF_FOUR_NOTE,
        "bounds": {"M_bound": M_bound, **phi.bounds()},
    }
