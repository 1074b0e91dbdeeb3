"""Command line front end.

Exit codes: 0 completed, 2 precondition violation, 3 parse error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from typing import List, Optional

from .classify import (
    AnalysisConfig,
    ParseError,
    analyze,
    component_supplier,
    corpus_generate,
    emit_report,
    load_automorphism,
    load_graph_map,
    parse_word,
    top_eg_height,
)
from .electric import ElectricSpace, OutOfBall, PreconditionError, electric_length
from .flaring import Dynamics, conjugacy_flaring_search, strict_flaring_search, three_of_four_test
from .graphs import DomainError, GraphError
from .laminations import InconsistentNielsenData, compute_nas
from .subgroups import SubgroupSystem, is_malnormal
from .words import EffortExhausted, MissingInverse, NotAnAutomorphism, WordError, format_word

EXIT_OK, EXIT_PRECONDITION, EXIT_PARSE = 0, 2, 3


def _load_config(path: Optional[str]):
    """Config, component entries and the directory relative paths resolve against."""
    if not path:
        return AnalysisConfig(), [], "."
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid config JSON: {exc.msg}", exc.pos) from None
    return AnalysisConfig.from_json(data), data.get("components", []), os.path.dirname(path) or "."


def _read_peripherals(path: Optional[str], rank: int) -> SubgroupSystem:
    if not path:
        return SubgroupSystem([])
    gens_list = []
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                gens_list.append([parse_word(g, rank=rank) for g in line.split(",")])
    return SubgroupSystem.from_generators(gens_list, rank)


def _read_corpus(source: str, rank: int, system: Optional[SubgroupSystem] = None, cyclic: bool = True):
    if source.startswith("random:"):
        opts = dict(kv.split("=") for kv in source[len("random:"):].split(",") if kv)
        return corpus_generate(int(opts.get("seed", 1)), int(opts.get("count", 200)),
                               (int(opts.get("min", 1)), int(opts.get("max", 30))), rank,
                               cyclically_reduced=cyclic, not_carried_by=system)
    words = []
    with open(source) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                words.append(parse_word(line, rank=rank))
    return words


def _write(text: str, out: Optional[str]):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_classify(args) -> int:
    config, components, base = _load_config(args.config)
    if args.stratum:
        config.stratum = args.stratum
    phi = load_automorphism(args.auto_file)
    f = load_graph_map(args.graph_map) if args.graph_map else None
    fi = load_graph_map(args.inverse_map) if args.inverse_map else None
    supplier = component_supplier(components, phi.rank, base) if components else None
    report = analyze(phi, f, fi, config, supplier)
    _write(emit_report(report, args.format), args.out)
    return EXIT_OK


def cmd_nas(args) -> int:
    f = load_graph_map(args.graph_map)
    D = compute_nas(f, args.stratum, args.depth, args.nielsen_length)
    ok, witness = is_malnormal(D.system)
    data = {**D.to_json(), "malnormal": ok,
            "witness": None if witness is None else witness.to_json(f.graph.names)}
    _write(json.dumps(data, sort_keys=True, indent=2, ensure_ascii=False) + "\n", args.out)
    return EXIT_OK


def _dynamics(auto, gmap, imap, stratum, config):
    phi = load_automorphism(auto)
    f, fi = load_graph_map(gmap), load_graph_map(imap)
    return Dynamics(phi, f, stratum or top_eg_height(f), fi, top_eg_height(fi),
                    config.N_attraction, config.leaf_library_depth, config.nielsen_length_bound)


def cmd_flare(args) -> int:
    config, _, _ = _load_config(args.config)
    phi = load_automorphism(args.auto)
    system = _read_peripherals(args.peripherals, phi.rank)
    space = ElectricSpace(phi.rank, system, config.ball_radius, config.peripheral_enumeration_bound)
    if args.kind == "conj":
        corpus = _read_corpus(args.corpus, phi.rank, system)
        result = conjugacy_flaring_search(corpus, phi, space, args.bound or config.M_flare).to_json()
    elif args.kind == "strict":
        corpus = _read_corpus(args.corpus, phi.rank, cyclic=False)
        result = strict_flaring_search(corpus, phi, space, args.bound or config.N_strict).to_json()
    else:
        if not (args.graph_map and args.inverse_map and args.psi and args.psi_graph_map
                and args.psi_inverse_map):
            raise PreconditionError("three-of-four needs representatives for φ, φ^-1, ψ and ψ^-1")
        dphi = _dynamics(args.auto, args.graph_map, args.inverse_map, None, config)
        dpsi = _dynamics(args.psi, args.psi_graph_map, args.psi_inverse_map, None, config)
        corpus = _read_corpus(args.corpus, phi.rank)
        result = three_of_four_test(dphi, dpsi, corpus, args.bound or config.M_flare,
                                    override=args.override)
    _write(json.dumps(result, sort_keys=True, indent=2, ensure_ascii=False, default=str) + "\n", args.out)
    return EXIT_OK


def cmd_electric(args) -> int:
    system = _read_peripherals(args.peripherals, args.rank)
    space = ElectricSpace(args.rank, system, args.radius, args.enumeration_bound)
    w = parse_word(args.word, rank=args.rank)
    el = electric_length(space, w, args.method)
    data = {"word": format_word(w), "electric_length": el.value, "exact": el.exact, "method": el.method,
            **space.describe()}
    _write(json.dumps(data, sort_keys=True, indent=2, ensure_ascii=False) + "\n", args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="freetorus", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def analysis_args(sp):
        sp.add_argument("auto_file")
        sp.add_argument("--graph-map")
        sp.add_argument("--inverse-map")
        sp.add_argument("--stratum", type=int)
        sp.add_argument("--config")

    c = sub.add_parser("classify", help="classify the mapping torus of an automorphism")
    analysis_args(c)
    c.add_argument("--format", choices=["json", "text"], default="text")
    c.add_argument("--out")
    c.set_defaults(func=cmd_classify)

    r = sub.add_parser("report", help="write the full classification report to a file")
    analysis_args(r)
    r.add_argument("--format", choices=["json", "text"], default="json")
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_classify)

    n = sub.add_parser("nas", help="nonattracting subgroup system of a graph map")
    n.add_argument("graph_map")
    n.add_argument("--stratum", type=int, required=True)
    n.add_argument("--depth", type=int, default=20)
    n.add_argument("--nielsen-length", type=int, default=6)
    n.add_argument("--out")
    n.set_defaults(func=cmd_nas)

    f = sub.add_parser("flare", help="flaring searches")
    f.add_argument("kind", choices=["conj", "strict", "three-of-four"])
    f.add_argument("--auto", required=True)
    f.add_argument("--corpus", required=True, help="word file or random:seed=1,count=200,min=1,max=30")
    f.add_argument("--peripherals")
    f.add_argument("--bound", type=int)
    f.add_argument("--graph-map")
    f.add_argument("--inverse-map")
    f.add_argument("--psi")
    f.add_argument("--psi-graph-map")
    f.add_argument("--psi-inverse-map")
    f.add_argument("--override", action="store_true")
    f.add_argument("--config")
    f.add_argument("--out")
    f.set_defaults(func=cmd_flare)

    e = sub.add_parser("electric-dist", help="electric length of a word")
    e.add_argument("word")
    e.add_argument("--peripherals")
    e.add_argument("--rank", type=int, default=3)
    e.add_argument("--radius", type=int, default=12)
    e.add_argument("--enumeration-bound", type=int)
    e.add_argument("--method", default="auto", choices=["auto", "ball", "formula", "prefix"])
    e.add_argument("--out")
    e.set_defaults(func=cmd_electric)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ParseError, WordError, GraphError, json.JSONDecodeError) as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (PreconditionError, DomainError, MissingInverse, NotAnAutomorphism, EffortExhausted,
            InconsistentNielsenData, OutOfBall, ValueError) as exc:
        print(f"precondition violation: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except OSError as exc:
        print(f"cannot read input: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
