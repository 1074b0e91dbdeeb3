import json
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_automorphism
from freetorus.graphs import (
    DomainError,
    GraphError,
    GraphSelfMap,
    MalformedPath,
    MarkedGraph,
    bcc_bound,
    classify_strata,
    closed_nielsen_paths,
    critical_constant,
    find_nielsen_paths,
    illegal_turns,
    is_r_legal,
    make_turn,
    periodic_conjugacy_search,
    perron_frobenius,
    tight_paths,
    transition_matrix,
    verify_rtt,
)
from freetorus.words import FreeAutomorphism, canonical_class, invert


def crossing_counts(f, k):
    """Brute force: count edge names in the printed image of each edge of the stratum."""
    g = f.graph
    names = sorted(f.stratum_edges(k))
    out = [[0] * len(names) for _ in names]
    for j, e in enumerate(names):
        tokens = [t.rstrip("'") for t in g.format_path(f.edge_image(e)).split()]
        for i, d in enumerate(names):
            out[i][j] = tokens.count(g.edge_names[d - 1])
    return out


def rose(images, filtration=None):
    phi = invert(FreeAutomorphism(images)).inverse()
    return GraphSelfMap.rose(phi, filtration)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 100_000), st.integers(2, 4))
def test_transition_matrix_against_crossing_counts(seed, rank):
    phi = random_automorphism(rank, random.Random(seed), moves=5)
    f = GraphSelfMap.rose(phi)
    assert transition_matrix(f, 1) == crossing_counts(f, 1)


@pytest.mark.parametrize("images, poly", [
    (((1, 2), (1,)), [1, -1, -1]),
    (((2,), (3,), (1, 2)), [1, 0, -1, -1]),
])
def test_perron_frobenius_certificate_contains_largest_root(images, poly):
    f = rose(images)
    lo, hi, v = perron_frobenius(transition_matrix(f, 1))
    root = max(r.real for r in np.roots(poly) if abs(r.imag) < 1e-12)
    assert lo <= Fraction(root) + Fraction(1, 10**12)
    assert hi >= Fraction(root) - Fraction(1, 10**12)
    assert hi - lo <= Fraction(1, 10**9)
    assert all(x > 0 for x in v)


def test_perron_frobenius_rejects_reducible():
    with pytest.raises(DomainError):
        perron_frobenius([[1, 1], [0, 1]])


def test_permutation_stratum_is_neg():
    f = rose(((2,), (1,)))
    (s,) = classify_strata(f)
    assert s.kind == "NEG"


def test_strata_of_e1(e1_map):
    kinds = [(s.height, s.kind) for s in classify_strata(e1_map)]
    assert kinds == [(1, "NEG"), (2, "EG")]


def test_reducible_filtration_level_is_rejected():
    with pytest.raises(GraphError, match="refine"):
        classify_strata(rose(((1,), (2, 1)), [[1, 2]]))


def test_filtration_must_be_invariant():
    with pytest.raises(GraphError, match="respect"):
        rose(((1, 2), (1,), (3,)), [[1], [1, 2, 3]])


def test_e1_is_a_relative_train_track(e1_map):
    report = verify_rtt(e1_map)
    assert report.ok, report.violations


def test_violation_is_reported():
    f = rose(((2, -1), (2, 2, -1)))
    report = verify_rtt(f)
    assert not report.ok
    assert report.violations[0]["axiom"] == "r-legal images"


def test_illegal_turns_of_fibonacci():
    f = rose(((1, 2), (1,)))
    # Df sends a and b to a, and swaps a' with b'
    assert make_turn(1, 2) in illegal_turns(f)
    assert make_turn(-1, -2) not in illegal_turns(f)
    assert make_turn(1, -1) not in illegal_turns(f)
    assert is_r_legal(f.iterate_path((1,), 4), f, 1)


def test_bcc_and_critical_constant_for_e1(e1_map):
    assert bcc_bound(e1_map) == 4
    crit = critical_constant(e1_map, 2)
    golden = (1 + 5 ** 0.5) / 2
    assert abs(float(crit) - 8 / (golden - 1)) < 1e-6
    with pytest.raises(DomainError):
        critical_constant(e1_map, 1)


def test_map_path_is_tight_and_checks_composability(e1_map):
    g = e1_map.graph
    assert e1_map.map_path(g.parse_path("a b'")) == g.parse_path("a b a'")
    theta = MarkedGraph(["u", "v"], [("e", "u", "v"), ("x", "u", "v"), ("y", "u", "v")],
                        tree=["e"], labels={"x": (1,), "y": (2,)})
    with pytest.raises(MalformedPath):
        theta.check_path(theta.parse_path("x e"))


def test_theta_graph_marking_and_swap():
    theta = MarkedGraph(["u", "v"], [("e", "u", "v"), ("x", "u", "v"), ("y", "u", "v")],
                        tree=["e"], labels={"x": (1,), "y": (2,)})
    assert theta.rank == 2
    loop = theta.word_loop((1, -2))
    assert theta.path_word(loop) == (1, -2)
    f = GraphSelfMap(theta, {"u": "u", "v": "v"}, {"e": (1,), "x": (3,), "y": (2,)})
    assert f.automorphism.images == ((2,), (1,))


def test_json_round_trip(e1_map):
    data = json.loads(json.dumps(e1_map.to_json()))
    back = GraphSelfMap.from_json(data)
    assert back.to_json() == e1_map.to_json()
    assert back.automorphism == e1_map.automorphism


def test_homotopy_equivalence_required():
    with pytest.raises(GraphError, match="homotopy equivalence"):
        GraphSelfMap.rose(FreeAutomorphism(((1, 1), (2,))))


def test_tight_paths_count_on_rose():
    f = rose(((1, 2), (1,)))
    # 4 directions, then 3 continuations each
    assert sum(1 for _ in tight_paths(f, 3)) == 4 + 12 + 36


def test_nielsen_paths_of_e1(e1_map):
    fixed = [p for p, k in find_nielsen_paths(e1_map, 4, 1)]
    assert (3,) in fixed and (-3,) in fixed
    # the commutator is fixed up to orientation only by the square
    assert closed_nielsen_paths(e1_map, 2, 4, 1) == []
    two = closed_nielsen_paths(e1_map.power(2), 2, 4, 1)
    assert len(two) == 1 and canonical_class(two[0][0]) in {canonical_class(x) for x in [(-1, -2, 1, 2), (-2, -1, 2, 1), (1, 2, -1, -2), (2, 1, -2, -1)]}


def test_periodic_conjugacy_search():
    swap = invert(FreeAutomorphism(((2,), (1,)))).inverse()
    assert periodic_conjugacy_search(swap, 2, 2) == ((1, 2), 1)
    fib = invert(FreeAutomorphism(((1, 2), (1,)))).inverse()
    c, k = periodic_conjugacy_search(fib, 2, 4)
    assert k == 2 and len(c) == 4
    assert periodic_conjugacy_search(fib, 1, 4) is None
