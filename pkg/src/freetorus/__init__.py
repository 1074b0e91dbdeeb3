"""Free group automorphisms, relative train tracks and hyperbolicity of mapping tori."""

from .classify import AnalysisConfig, ParseError, analyze, emit_report, load_automorphism, load_graph_map, parse_automorphism, parse_word
from .electric import ElectricSpace, electric_conjugacy_length, electric_length
from .flaring import Dynamics, conjugacy_flaring_search, strict_flaring_search, three_of_four_test
from .graphs import GraphSelfMap, MarkedGraph, transition_matrix, verify_rtt
from .laminations import compute_nas, groupoid_decompose, relative_length
from .subgroups import FoldedImmersion, SubgroupSystem, fold, is_malnormal
from .words import FreeAutomorphism, canonical_class, inverse, reduce

__version__ = "0.1.0"

__all__ = [
    "AnalysisConfig", "ParseError", "analyze", "emit_report", "load_automorphism", "load_graph_map",
    "parse_automorphism", "parse_word", "ElectricSpace", "electric_conjugacy_length", "electric_length",
    "Dynamics", "conjugacy_flaring_search", "strict_flaring_search", "three_of_four_test",
    "GraphSelfMap", "MarkedGraph", "transition_matrix", "verify_rtt", "compute_nas",
    "groupoid_decompose", "relative_length", "FoldedImmersion", "SubgroupSystem", "fold",
    "is_malnormal", "FreeAutomorphism", "canonical_class", "inverse", "reduce",
]
