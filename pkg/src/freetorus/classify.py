"""End-to-end analysis of a mapping torus: parsing, growth, recursion and the report."""

from __future__ import annotations

import json
import logging
import math
import random
from dataclasses import asdict, dataclass, field, fields
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .electric import ElectricSpace
from .flaring import Dynamics, conjugacy_flaring_search, legality_dichotomy_test, strict_flaring_search
from .graphs import (
    GraphError,
    GraphSelfMap,
    classify_strata,
    cyclic_words,
    direction_map,
    eg_heights,
    periodic_conjugacy_search,
    verify_rtt,
)
from .laminations import compute_nas
from .subgroups import FoldedImmersion, SubgroupSystem, carries_conjugacy_class, fold, is_malnormal
from .words import (
    DEFAULT_NAMES,
    FreeAutomorphism,
    canonical_class,
    format_word,
    invert,
    is_inner,
    reduce,
)

log = logging.getLogger(__name__)

ANNOTATION = "theorem-level; bounded evidence for hypotheses"


class ParseError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


# parsing


def _tokens(text: str, offset: int):
    i = 0
    while i < len(text):
        if text[i].isspace():
            i += 1
            continue
        j = i
        while j < len(text) and not text[j].isspace():
            j += 1
        yield text[i:j], offset + i
        i = j


def _parse_letter(tok: str, pos: int, names: str) -> int:
    base = tok[:-1] if tok.endswith("'") else tok
    if len(base) != 1 or base not in names:
        raise ParseError(f"unknown letter {tok!r}", pos)
    x = names.index(base) + 1
    return -x if tok.endswith("'") else x


def parse_word(text: str, names: str = DEFAULT_NAMES, offset: int = 0,
               rank: Optional[int] = None) -> Tuple[int, ...]:
    """Letters separated by spaces, ``a'`` for inverses, ``1`` for the identity.

    Juxtaposed letters such as ``ab'a`` are accepted too.
    """
    out = []
    for tok, pos in _tokens(text, offset):
        if tok == "1":
            continue
        k = 0
        while k < len(tok):
            end = k + 1
            if end < len(tok) and tok[end] == "'":
                end += 1
            x = _parse_letter(tok[k:end], pos + k, names)
            if rank is not None and abs(x) > rank:
                raise ParseError(f"letter {tok[k:end]!r} outside rank {rank}", pos + k)
            out.append(x)
            k = end
    return reduce(out)


def parse_automorphism(text: str, rank: Optional[int] = None, names: str = DEFAULT_NAMES,
                       effort_bound: int = 10_000) -> FreeAutomorphism:
    """Parse ``[name:] a -> a b ; b -> a ; ...`` and invert eagerly.

    Without ``rank`` the basis is the set of letters on the left-hand sides.
    """
    body, offset = text, 0
    colon = text.find(":")
    if colon >= 0 and "->" not in text[:colon]:
        body, offset = text[colon + 1:], colon + 1
    clauses = []
    pos = offset
    for clause in body.split(";"):
        start = pos
        pos += len(clause) + 1
        if not clause.strip():
            continue
        if "->" not in clause:
            raise ParseError("expected 'x -> word'", start + len(clause) - len(clause.lstrip()))
        lhs, rhs = clause.split("->", 1)
        lhs_tokens = list(_tokens(lhs, start))
        if len(lhs_tokens) != 1:
            raise ParseError("left-hand side must be one generator", start)
        tok, tpos = lhs_tokens[0]
        x = _parse_letter(tok, tpos, names)
        if x < 0:
            raise ParseError("left-hand side must be a positive generator", tpos)
        clauses.append((x, tpos, rhs, start + len(lhs) + 2))
    if not clauses:
        raise ParseError("no generator images", offset)
    n = rank if rank is not None else max(x for x, *_ in clauses)
    images: Dict[int, Tuple[int, ...]] = {}
    for x, tpos, rhs, rpos in clauses:
        if x > n:
            raise ParseError(f"generator {names[x - 1]} outside rank {n}", tpos)
        if x in images:
            raise ParseError(f"generator {names[x - 1]} defined twice", tpos)
        images[x] = parse_word(rhs, names, rpos, n)
    for i in range(1, n + 1):
        if i not in images:
            raise ParseError(f"missing image for generator {names[i - 1]}", offset + len(body))
    phi = FreeAutomorphism(tuple(images[i] for i in range(1, n + 1)), names=names)
    return invert(phi, effort_bound).inverse()


def load_automorphism(path: str, rank: Optional[int] = None) -> FreeAutomorphism:
    with open(path) as fh:
        text = " ".join(line.split("#", 1)[0] for line in fh)
    return parse_automorphism(text, rank)


def load_graph_map(path: str) -> GraphSelfMap:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", exc.pos) from None
    try:
        return GraphSelfMap.from_json(data)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, GraphError):
            raise
        raise ParseError(f"malformed graph-map file: {exc}", 0) from None


# configuration


@dataclass
class AnalysisConfig:
    N_attraction: int = 20
    M_flare: int = 12
    N_strict: int = 10
    ball_radius: int = 12
    peripheral_enumeration_bound: int = 24
    leaf_library_depth: int = 8
    nielsen_length_bound: int = 6
    periodic_period_bound: int = 4
    periodic_length_bound: int = 6
    growth_iterations: int = 24
    stabilization_depth: int = 8
    recursion_depth: int = 4
    corpus_size: int = 200
    corpus_min_length: int = 1
    corpus_max_length: int = 30
    strict_corpus_size: int = 500
    strict_max_length: int = 20
    seed: int = 1
    rotationless_power: Optional[int] = None
    legality_M: int = 5
    iterate_length_cap: int = 1_000_000
    stratum: Optional[int] = None

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name in ("rotationless_power", "stratum", "seed"):
                if v is not None and f.name != "seed" and v < 1:
                    raise ValueError(f"{f.name} must be positive")
                continue
            if not isinstance(v, int) or v < 1:
                raise ValueError(f"{f.name} must be a positive integer")
        if self.corpus_min_length > self.corpus_max_length:
            raise ValueError("corpus length range is empty")

    @classmethod
    def from_json(cls, data) -> "AnalysisConfig":
        if isinstance(data, str):
            data = json.loads(data)
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known - {"components"}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**{k: v for k, v in data.items() if k in known})

    def to_json(self) -> dict:
        return asdict(self)


# growth


@dataclass
class Growth:
    kind: str  # exponential | polynomial | finite_order
    degree: Optional[int] = None
    order: Optional[int] = None
    pf: Optional[dict] = None
    evidence: dict = field(default_factory=dict)

    def __str__(self):
        if self.kind == "polynomial":
            return f"polynomial({self.degree})"
        if self.kind == "finite_order":
            return f"finite_order({self.order})"
        return "exponential"

    def to_json(self):
        return {"kind": self.kind, "label": str(self), "degree": self.degree, "order": self.order,
                "pf": self.pf, "evidence": self.evidence}


def classify_growth(phi: FreeAutomorphism, f: Optional[GraphSelfMap] = None,
                    config: Optional[AnalysisConfig] = None, length_cap: int = 100_000) -> Growth:
    config = config or AnalysisConfig()
    K = config.growth_iterations
    power = phi
    for k in range(1, K + 1):
        if power.max_image_length() > length_cap:
            break
        if is_inner(power):
            return Growth("finite_order", order=k, evidence={"checked_powers": k})
        power = phi.compose(power)
    if f is not None:
        strata = classify_strata(f)
        eg = [s for s in strata if s.kind == "EG"]
        if eg:
            top = eg[-1]
            return Growth("exponential", pf={
                "stratum": top.height,
                "lower": str(top.pf_lower), "upper": str(top.pf_upper),
                "value": repr(top.pf_value),
            }, evidence={"method": "Perron-Frobenius certificate"})
    lengths = []
    w = [(i,) for i in range(1, phi.rank + 1)]
    for k in range(1, K + 1):
        w = [phi.apply(x) for x in w]
        lengths.append(max(len(x) for x in w))
        if lengths[-1] > length_cap:
            return Growth("exponential", evidence={"method": "iterate length exceeded cap",
                                                   "iterations": k, "cap": length_cap})
    half = lengths[K // 2 - 1] if K >= 2 else lengths[0]
    slope = math.log(lengths[-1] / half) / math.log(K / max(K // 2, 1)) if half else 0.0
    evidence = {"method": "log-log growth fit", "iterations": K, "slope": round(slope, 6),
                "lengths": lengths}
    if slope > phi.rank - 0.5:
        return Growth("exponential", evidence=evidence)
    return Growth("polynomial", degree=max(0, round(slope)), evidence=evidence)


def stabilize_power(phi: FreeAutomorphism, depth: int, f: Optional[GraphSelfMap] = None,
                    length_bound: int = 4) -> Tuple[int, bool]:
    """Smallest ``k`` at which fixed classes and fixed directions agree for ``k`` and ``2k``.

    Returns ``(k, stabilized)``; ``(depth, False)`` when nothing settles.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    f = f or GraphSelfMap.rose(phi)
    classes = [c for n in range(1, length_bound + 1) for c in cyclic_words(phi.rank, n)]
    dirs = f.graph.directions()

    def signature(k):
        pk = phi.power(k)
        fixed_classes = frozenset(c for c in classes if canonical_class(pk.apply(c)) == c)
        fixed_dirs = set()
        for d in dirs:
            x = d
            for _ in range(k):
                x = direction_map(f, x)
            if x == d:
                fixed_dirs.add(d)
        return fixed_classes, frozenset(fixed_dirs)

    for k in range(1, depth + 1):
        if signature(k) == signature(2 * k):
            return k, True
    log.warning("no stabilisation within depth %d", depth)
    return depth, False


# recursion into the nonattracting system


class RecursionRankError(ValueError):
    pass


@dataclass
class ComponentData:
    phi: FreeAutomorphism
    f: Optional[GraphSelfMap] = None
    r: Optional[int] = None


Supplier = Callable[[FoldedImmersion], Optional[ComponentData]]


def top_eg_height(f: GraphSelfMap) -> Optional[int]:
    hs = eg_heights(f)
    return hs[-1] if hs else None


def peripheral_recursion(root: ComponentData, supplier: Optional[Supplier] = None,
                         depth_bound: int = 4, config: Optional[AnalysisConfig] = None) -> dict:
    """Tree of nonattracting systems, one level per restriction."""
    config = config or AnalysisConfig()
    supplier = supplier or (lambda comp: None)

    def node(data: ComponentData, rank: int, label: str, depth: int) -> dict:
        out = {"component": label, "rank": rank}
        growth = classify_growth(data.phi, data.f, config)
        if growth.kind != "exponential":
            out["leaf"] = "polynomial"
            out["growth"] = str(growth)
            return out
        if data.f is None:
            out["leaf"] = "needs-data"
            return out
        r = data.r or top_eg_height(data.f)
        D = compute_nas(data.f, r, config.N_attraction, config.nielsen_length_bound)
        out["nas"] = D.system.describe(data.f.graph.names)
        if not D.system.components:
            out["leaf"] = "atoroidal-hyperbolic-evidence"
            return out
        children = []
        for comp in D.system.components:
            sub = comp.describe(data.f.graph.names)
            if comp.rank >= rank:
                raise RecursionRankError(f"component {sub} has rank {comp.rank} >= {rank}")
            if comp.rank <= 2:
                children.append({"component": sub, "rank": comp.rank, "leaf": "rank <= 2"})
                continue
            supplied = supplier(comp) if depth + 1 < depth_bound else None
            if supplied is None:
                children.append({"component": sub, "rank": comp.rank, "leaf": "needs-data"})
                continue
            if supplied.phi.rank != comp.rank:
                raise RecursionRankError(f"supplied data for {sub} has rank {supplied.phi.rank}")
            children.append(node(supplied, comp.rank, sub, depth + 1))
        out["children"] = children
        return out

    return node(root, root.phi.rank, "F", 0)


def tree_depth(tree: dict) -> int:
    return 1 + max((tree_depth(c) for c in tree.get("children", [])), default=0)


def tree_leaves(tree: dict) -> List[str]:
    if "children" not in tree:
        return [tree.get("leaf", "internal")]
    return [x for c in tree["children"] for x in tree_leaves(c)]


def component_supplier(entries: Sequence[dict], rank_of_ambient: int, base_dir: str = ".") -> Supplier:
    """Supplier reading per-component data ``{"generators", "automorphism", "graph_map", "stratum"}``."""
    import os

    table = {}
    for e in entries:
        gens = [parse_word(g) for g in e["generators"]]
        key = fold(gens, rank_of_ambient).conjugacy_key()
        phi = parse_automorphism(e["automorphism"])
        f = None
        if e.get("graph_map"):
            f = load_graph_map(os.path.join(base_dir, e["graph_map"]))
        table[key] = ComponentData(phi, f, e.get("stratum"))

    def supply(comp: FoldedImmersion) -> Optional[ComponentData]:
        return table.get(comp.conjugacy_key())

    return supply


# corpus


class CorpusError(ValueError):
    pass


def corpus_generate(seed: int, count: int, lengths: Tuple[int, int], rank: int,
                    cyclically_reduced: bool = True, not_carried_by: Optional[SubgroupSystem] = None,
                    retry_budget: int = 100_000, log_out: Optional[list] = None) -> List[Tuple[int, ...]]:
    """Seeded random reduced words, optionally cyclically reduced and avoiding a subgroup system."""
    lo, hi = lengths
    if lo > hi or lo < 1:
        raise ValueError("length range is empty")
    rng = random.Random(seed)
    letters = [x for i in range(1, rank + 1) for x in (i, -i)]
    out = []
    attempts = rejected = 0
    while len(out) < count:
        attempts += 1
        if attempts > retry_budget:
            raise CorpusError(f"constraints unsatisfiable within {retry_budget} attempts")
        n = rng.randint(lo, hi)
        w = [rng.choice(letters)]
        while len(w) < n:
            x = rng.choice(letters)
            if x != -w[-1]:
                w.append(x)
        if cyclically_reduced and len(w) > 1 and w[0] == -w[-1]:
            rejected += 1
            continue
        w = tuple(w)
        if not_carried_by is not None and not_carried_by.components and carries_conjugacy_class(not_carried_by, w):
            rejected += 1
            continue
        out.append(w)
    if log_out is not None:
        log_out.append({"seed": seed, "count": count, "lengths": [lo, hi], "attempts": attempts,
                        "rejected": rejected})
    return out


# verdicts


def peripheral_label(system_desc: str) -> str:
    inner = system_desc.strip("{}")
    parts = [p.strip() for p in inner.split("⟩,") if p.strip()]
    parts = [p if p.endswith("⟩") else p + "⟩" for p in parts]
    return "{" + ", ".join(f"{p} ⋊ Z" for p in parts) + "}"


def verdict_for(growth_kind: str, nas_desc: Optional[str], leaves: Sequence[str],
                periodic_found: bool) -> dict:
    """Pure map from sub-results to the final verdict."""
    notes = []
    if growth_kind == "finite_order":
        text = "finite order ⇒ not virtually acylindrically hyperbolic"
    elif growth_kind == "polynomial":
        text = "not relatively hyperbolic; acylindrically hyperbolic (virtually)"
        notes.append("quadratic isoperimetric inequality noted (no Dehn function computed)")
    elif nas_desc is None:
        text = "relatively hyperbolic; peripherals need a representative"
    elif leaves and all(x == "atoroidal-hyperbolic-evidence" for x in leaves) and not periodic_found:
        text = "hyperbolic"
        notes.append("atoroidal evidence at every leaf of the recursion")
    else:
        text = f"relatively hyperbolic w.r.t. {peripheral_label(nas_desc)}"
    return {"verdict": text, "annotation": ANNOTATION, "notes": notes}


def _word_list(ws, names):
    return [format_word(w, names) for w in ws]


def analyze(phi: FreeAutomorphism, f: Optional[GraphSelfMap] = None, f_inv: Optional[GraphSelfMap] = None,
            config: Optional[AnalysisConfig] = None, supplier: Optional[Supplier] = None,
            s: Optional[int] = None) -> dict:
    """Run the whole pipeline and return the report as a JSON-ready dict."""
    config = config or AnalysisConfig()
    names = phi.names
    report: dict = {"automorphism": phi.format(), "rank": phi.rank, "config": config.to_json()}
    growth = classify_growth(phi, f, config)
    report["growth"] = growth.to_json()
    periodic = periodic_conjugacy_search(phi, config.periodic_period_bound, config.periodic_length_bound)
    report["atoroidal_evidence"] = {
        "periodic_class": None if periodic is None else {
            "class": format_word(periodic[0], names), "period": periodic[1]},
        "period_bound": config.periodic_period_bound,
        "length_bound": config.periodic_length_bound,
        "status": "no periodic class within bounds" if periodic is None else "periodic class found",
    }
    if config.rotationless_power is not None:
        report["rotationless_power"] = {"k": config.rotationless_power, "source": "pinned"}
    else:
        k, ok = stabilize_power(phi, config.stabilization_depth, f)
        report["rotationless_power"] = {"k": k, "source": "stabilisation heuristic", "stabilized": ok,
                                        "depth": config.stabilization_depth}
    nas_desc = None
    leaves: List[str] = []
    if growth.kind == "exponential" and f is not None:
        r = config.stratum or top_eg_height(f)
        report["rtt"] = verify_rtt(f).to_json()
        D = compute_nas(f, r, config.N_attraction, config.nielsen_length_bound)
        ok, witness = is_malnormal(D.system)
        nas_desc = D.system.describe(names)
        report["nas"] = {**D.to_json(), "malnormal": ok,
                         "witness": None if witness is None else witness.describe(names),
                         "summary": nas_desc}
        tree = peripheral_recursion(ComponentData(phi, f, r), supplier, config.recursion_depth, config)
        report["peripheral_tree"] = tree
        leaves = tree_leaves(tree)
        report["flaring"] = _flaring_section(phi, f, r, f_inv, s, D.system, config)
    v = verdict_for(growth.kind, nas_desc, leaves, periodic is not None)
    report["verdict"] = v
    return report


def _flaring_section(phi, f, r, f_inv, s, system, config) -> dict:
    names = phi.names
    gen_log: list = []
    corpus = corpus_generate(config.seed, config.corpus_size,
                             (config.corpus_min_length, config.corpus_max_length), phi.rank,
                             not_carried_by=system, log_out=gen_log)
    space = ElectricSpace(phi.rank, system, config.ball_radius, config.peripheral_enumeration_bound)
    conj = conjugacy_flaring_search(corpus, phi, space, config.M_flare, length_cap=config.iterate_length_cap)
    words = [w for w in corpus_generate(config.seed + 1, config.strict_corpus_size * 2,
                                        (1, config.strict_max_length), phi.rank,
                                        cyclically_reduced=False, log_out=gen_log)
             if not any(c.contains(w) for c in system.components)][:config.strict_corpus_size]
    strict = strict_flaring_search(words, phi, space, config.N_strict, length_cap=config.iterate_length_cap)
    section = {
        "corpus_log": gen_log,
        "conjugacy": _summary(conj),
        "strict": _summary(strict),
    }
    if f_inv is not None:
        s = s or top_eg_height(f_inv)
        dyn = Dynamics(phi, f, r, f_inv, s, config.N_attraction, config.leaf_library_depth,
                       config.nielsen_length_bound)
        eps, failures, _ = legality_dichotomy_test(corpus, dyn, config.legality_M)
        section["legality"] = {"epsilon_found": str(eps), "failures": [format_word(w, names) for w in failures],
                               "M": config.legality_M}
    return section


def _summary(verdict) -> dict:
    d = verdict.to_json()
    d["items"] = len(verdict.per_item)
    d["failing_items"] = sum(1 for x in verdict.per_item if not x["pass"])
    return d


def emit_report(report: dict, fmt: str = "json") -> str:
    if fmt == "json":
        return json.dumps(report, sort_keys=True, indent=2, ensure_ascii=False, default=str) + "\n"
    if fmt == "text":
        return _text_report(report)
    raise ValueError(f"unknown format {fmt!r}")


def _text_report(rep: dict) -> str:
    lines = [f"automorphism: {rep['automorphism']}", f"growth: {rep['growth']['label']}"]
    ev = rep["atoroidal_evidence"]
    lines.append(f"periodic classes: {ev['status']} (period <= {ev['period_bound']}, "
                 f"length <= {ev['length_bound']})")
    if ev["periodic_class"]:
        lines.append(f"  witness: [{ev['periodic_class']['class']}] period {ev['periodic_class']['period']}")
    rp = rep["rotationless_power"]
    lines.append(f"rotationless power: {rp['k']} ({rp['source']})")
    if "nas" in rep:
        nas = rep["nas"]
        lines.append(f"nonattracting system: {nas['summary']} (malnormal: {nas['malnormal']}, "
                     f"depth {nas['search_depth']})")
        lines.append(f"Z: {', '.join(nas['Z']) or 'empty'}; sigma: {nas['sigma_hat'] or 'trivial'}")
        lines.append("peripheral tree:")
        lines.extend(_tree_lines(rep["peripheral_tree"], "  "))
    if "flaring" in rep:
        fl = rep["flaring"]
        for key in ("conjugacy", "strict"):
            v = fl[key]
            lines.append(f"{key} flaring (factor {v['constant_target']}): {v['status']}"
                         f" M={v['M_found']} over {v['items']} items")
        if "legality" in fl:
            lines.append(f"legality epsilon: {fl['legality']['epsilon_found']}")
    v = rep["verdict"]
    lines.append(f"verdict: {v['verdict']}")
    lines.append(f"  [{v['annotation']}]")
    for note in v["notes"]:
        lines.append(f"  note: {note}")
    return "\n".join(lines) + "\n"


def _tree_lines(node, indent):
    label = node.get("leaf") or f"nas {node.get('nas')}"
    out = [f"{indent}{node['component']} (rank {node['rank']}): {label}"]
    for c in node.get("children", []):
        out.extend(_tree_lines(c, indent + "  "))
    return out
