"""Acceptance criteria 1-12, one test group per criterion.

The terminal summary prints one PASS/FAIL line per criterion (see conftest).
"""

import json
import os
import random
import time
from fractions import Fraction

import numpy as np
import pytest

from conftest import DATA, GOLDEN, random_automorphism, random_word
from test_electric import c_coset, coned_ball_oracle
from test_graphs import crossing_counts
from test_laminations import attracted_oracle
from freetorus.classify import (
    AnalysisConfig,
    analyze,
    corpus_generate,
    emit_report,
    load_automorphism,
    load_graph_map,
)
from freetorus.electric import ElectricSpace, PreconditionError, ball_distances, electric_length
from freetorus.flaring import (
    conjugacy_flaring_search,
    legality,
    standing_assumptions_check,
    strict_flaring_search,
    three_of_four_test,
)
from freetorus.graphs import GraphSelfMap, perron_frobenius, transition_matrix
from freetorus.laminations import compute_nas, is_weakly_attracted, relative_length, standard_neighborhood
from freetorus.subgroups import SubgroupSystem, carries_conjugacy_class, is_malnormal
from freetorus.words import canonical_class, invert, inverse, multiply, reduce

C_SYSTEM = SubgroupSystem.from_generators([[(3,)]], 3)

# regression values fixed by the first full run
E1_CONJUGACY_M_FOUND = 5
FIBONACCI_STRICT_N_FOUND = 4


# 1. word algebra


@pytest.mark.criterion(1)
def test_word_algebra_randomized():
    rng = random.Random(1)
    start = time.perf_counter()
    checks = 0
    while checks < 10_000:
        rank = rng.randint(2, 4)
        phi = random_automorphism(rank, rng)
        psi = random_automorphism(rank, rng)
        w = random_word(rank, rng.randint(0, 12), rng)
        r = reduce(w)
        assert reduce(r) == r
        assert phi.compose(psi).apply(w) == phi.apply(psi.apply(w))
        inv = invert(phi)
        assert all(inv.apply(phi.image(i)) == (i,) and phi.apply(inv.image(i)) == (i,)
                   for i in range(1, rank + 1))
        checks += 3
    assert time.perf_counter() - start < 30


# 2. Perron-Frobenius certificates


@pytest.mark.criterion(2)
@pytest.mark.parametrize("name, poly, expected", [
    ("fibonacci", [1, -1, -1], 1.6180339887),
    ("plastic", [1, 0, -1, -1], 1.3247179572),
])
def test_pf_certificates(name, poly, expected):
    f = load_graph_map(str(DATA / f"{name}.json"))
    start = time.perf_counter()
    lo, hi, _ = perron_frobenius(transition_matrix(f, 1))
    elapsed = time.perf_counter() - start
    root = max(r.real for r in np.roots(poly) if abs(r.imag) < 1e-12)
    mid = float((lo + hi) / 2)
    assert hi - lo <= Fraction(1, 10**9)
    assert abs(mid - root) <= 1e-9
    assert abs(mid - expected) <= 1e-9
    assert elapsed < 1


# 3. transition matrices against crossing counts


@pytest.mark.criterion(3)
def test_transition_matrices_on_random_roses():
    rng = random.Random(3)
    done = 0
    while done < 100:
        phi = random_automorphism(rng.randint(2, 4), rng, moves=6)
        if phi.max_image_length() > 6:
            continue
        f = GraphSelfMap.rose(phi)
        assert transition_matrix(f, 1) == crossing_counts(f, 1)
        done += 1


# 4. NAS of E1


@pytest.mark.criterion(4)
def test_e1_nas_baseline(e1, e1_map):
    start = time.perf_counter()
    D = compute_nas(e1_map, 2, N=20)
    ok, _ = is_malnormal(D.system)
    elapsed = time.perf_counter() - start
    assert D.Z == frozenset({3})
    assert D.system.describe() == "{⟨c⟩}"
    assert ok
    assert elapsed < 5
    seg = e1_map.iterate_path((1,), 3)
    assert {i for i in (1, 2, 3) if not attracted_oracle(e1, (i,), seg, 20)} == {3}


# 5. carried iff not attracted


def _e1_corpus():
    rng = random.Random(5)
    out = corpus_generate(5, 100, (1, 12), 3)
    while len(out) < 200:
        u = random_word(3, rng.randint(0, 6), rng)
        k = rng.choice([1, 2, 3, -1, -2])
        ck = (3,) * k if k > 0 else (-3,) * -k
        out.append(canonical_class(multiply(u, ck, inverse(u))))
    return out


@pytest.mark.criterion(5)
@pytest.mark.xfail(strict=True, reason=(
    "E1 is not rotationless: c'a'b'ab is periodic under E1^2, never attracted, "
    "and not carried by <c>; see the decisions ledger"))
def test_carried_iff_not_attracted(e1_map):
    _check_carried_iff_not_attracted(e1_map)


def test_carried_iff_not_attracted_for_rotationless_power(e1_map):
    D = _check_carried_iff_not_attracted(e1_map.power(2))
    assert D.system.describe() == "{⟨c, a'b'ab⟩}"


def _check_carried_iff_not_attracted(f):
    D = compute_nas(f, 2, N=20)
    V = standard_neighborhood(f, 2)
    g = f.graph
    exceptions = []
    carried_count = 0
    for w in _e1_corpus():
        carried = carries_conjugacy_class(D.system, w)
        attracted = is_weakly_attracted(g.circuit(w), V, f, 20).attracted
        carried_count += carried
        if carried == attracted:
            exceptions.append(w)
    assert not exceptions, exceptions
    assert 100 <= carried_count < 200
    return D


# 6. electric lengths against a coned BFS oracle


@pytest.mark.criterion(6)
def test_dijkstra_matches_coned_bfs():
    start = time.perf_counter()
    rng = random.Random(6)
    queries = 0
    for radius, sample in ((4, 200), (5, 200), (6, 50)):
        oracle = coned_ball_oracle(3, radius, c_coset)
        S = ElectricSpace(3, C_SYSTEM, ball_radius=radius)
        for g, d in ball_distances(S).items():
            assert 2 * d == oracle[g]
            queries += 1
        elements = sorted(k for k in oracle if isinstance(k, tuple) and (not k or k[0] not in ("mid", "cone")))
        for g in rng.sample(elements, sample):
            assert 2 * electric_length(S, g, "ball").value == oracle[g]
            queries += 1
    assert queries >= 500
    assert time.perf_counter() - start < 60


# 7. conjugacy flaring on E1


@pytest.mark.criterion(7)
def test_e1_conjugacy_flaring(e1):
    start = time.perf_counter()
    corpus = corpus_generate(1, 200, (1, 30), 3, not_carried_by=C_SYSTEM)
    v = conjugacy_flaring_search(corpus, e1, ElectricSpace(3, C_SYSTEM), 12)
    assert not v.excluded and len(v.per_item) == 200
    assert v.M_found is not None and v.M_found <= 12
    assert all(item["first_persistent_M"] <= v.M_found for item in v.per_item)
    assert v.M_found == E1_CONJUGACY_M_FOUND
    assert time.perf_counter() - start < 300


# 8. strict flaring on Fibonacci


@pytest.mark.criterion(8)
def test_fibonacci_strict_single_letter(fibonacci):
    (item,) = strict_flaring_search([(1,)], fibonacci, ElectricSpace(2), 10).per_item
    assert item["first_persistent_N"] <= 2
    assert len(fibonacci.iterate((1,), 2)) == 3


@pytest.mark.criterion(8)
def test_fibonacci_strict_corpus(fibonacci):
    words = corpus_generate(8, 500, (1, 20), 2, cyclically_reduced=False)
    v = strict_flaring_search(words, fibonacci, ElectricSpace(2), 10)
    assert v.M_found is not None and v.M_found <= 10
    assert v.M_found == FIBONACCI_STRICT_N_FOUND


# 9. legality bounds


@pytest.mark.criterion(9)
def test_legality_bounds(e1_dynamics):
    dyn = e1_dynamics
    rng = random.Random(9)
    seen = 0
    while seen < 1000:
        c = dyn.fwd.graph.circuit(random_word(3, rng.randint(1, 12), rng))
        if not c:
            continue
        c = dyn.fwd.iterate_circuit(c, rng.randint(0, 5))
        rep = legality(c, dyn.fwd, 2, dyn.C_fwd, dyn.nas_fwd, dyn.library_fwd)
        assert 0 <= rep.value <= 1
        zero = relative_length(c, dyn.nas_fwd, cyclic=True) == 0 or not rep.legal_segments
        assert (rep.value == 0) == zero
        seen += 1


# 10. standing assumptions negative control


@pytest.mark.criterion(10)
def test_standing_assumptions_fail_for_identical_pair(e1_dynamics):
    rep = standing_assumptions_check(e1_dynamics, e1_dynamics)
    assert rep.items["1_distinct_laminations"]["status"] == "fail"
    assert rep.items["2_trivial_nonattracting_systems"]["status"] == "fail"
    with pytest.raises(PreconditionError):
        three_of_four_test(e1_dynamics, e1_dynamics, [(1, 3)], 5)


# 11 and 12. classifier verdicts and determinism


def _e1_report():
    return analyze(load_automorphism(str(DATA / "e1.aut")), load_graph_map(str(DATA / "e1.json")),
                   load_graph_map(str(DATA / "e1_inverse.json")), AnalysisConfig())


@pytest.fixture(scope="module")
def e1_report():
    return _e1_report()


@pytest.mark.criterion(11)
def test_verdicts_match_golden_file(e1_report):
    golden = json.loads((GOLDEN / "verdicts.json").read_text())
    got = {
        "swap": analyze(load_automorphism(str(DATA / "swap.aut")))["verdict"]["verdict"],
        "linear": analyze(load_automorphism(str(DATA / "linear.aut")))["verdict"]["verdict"],
        "e1": e1_report["verdict"]["verdict"],
    }
    assert got == golden
    assert "not virtually acylindrically hyperbolic" in got["swap"]
    assert got["linear"].startswith("not relatively hyperbolic")
    assert got["e1"] == "relatively hyperbolic w.r.t. {⟨c⟩ ⋊ Z}"
    assert analyze(load_automorphism(str(DATA / "linear.aut")))["growth"]["label"] == "polynomial(1)"


@pytest.mark.criterion(12)
def test_e1_pipeline_is_deterministic(e1_report, monkeypatch):
    monkeypatch.setenv("FREETORUS_WORKERS", "2")
    again = _e1_report()
    assert emit_report(e1_report, "json").encode() == emit_report(again, "json").encode()
    assert os.environ["FREETORUS_WORKERS"] == "2"
