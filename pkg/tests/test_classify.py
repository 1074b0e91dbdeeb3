import json

import pytest

from conftest import DATA
from freetorus.classify import (
    AnalysisConfig,
    ComponentData,
    CorpusError,
    RecursionRankError,
    analyze,
    classify_growth,
    component_supplier,
    corpus_generate,
    emit_report,
    load_graph_map,
    parse_automorphism,
    peripheral_label,
    peripheral_recursion,
    stabilize_power,
    tree_depth,
    tree_leaves,
    verdict_for,
)
from freetorus.subgroups import SubgroupSystem, carries_conjugacy_class
from freetorus.words import is_cyclically_reduced


@pytest.mark.parametrize("text, expected", [
    ("a -> b ; b -> a", "finite_order(2)"),
    ("a -> c ; b -> a ; c -> b", "finite_order(3)"),
    ("a -> a ; b -> b a", "polynomial(1)"),
    ("a -> a ; b -> b a ; c -> c b", "polynomial(2)"),
    ("a -> a b ; b -> a ; c -> c", "exponential"),
    ("a -> b ; b -> c ; c -> a b", "exponential"),
])
def test_growth(text, expected):
    assert str(classify_growth(parse_automorphism(text))) == expected


def test_growth_uses_pf_certificate(e1, e1_map):
    g = classify_growth(e1, e1_map)
    assert g.kind == "exponential" and g.pf is not None


@pytest.mark.parametrize("text, k", [
    ("a -> b ; b -> a", 2),
    ("a -> a ; b -> b a", 1),
])
def test_stabilize_power(text, k):
    assert stabilize_power(parse_automorphism(text), 8)[0] == k


def test_verdict_table_by_injection():
    fin = verdict_for("finite_order", None, [], True)
    assert fin["verdict"] == "finite order ⇒ not virtually acylindrically hyperbolic"
    poly = verdict_for("polynomial", None, [], True)
    assert poly["verdict"].startswith("not relatively hyperbolic")
    assert "quadratic isoperimetric" in poly["notes"][0]
    rel = verdict_for("exponential", "{⟨c⟩}", ["rank <= 2"], True)
    assert rel["verdict"] == "relatively hyperbolic w.r.t. {⟨c⟩ ⋊ Z}"
    hyp = verdict_for("exponential", "{}", ["atoroidal-hyperbolic-evidence"], False)
    assert hyp["verdict"] == "hyperbolic"
    # a periodic class blocks the hyperbolic verdict even with atoroidal leaves
    assert verdict_for("exponential", "{}", ["atoroidal-hyperbolic-evidence"], True)["verdict"] != "hyperbolic"
    assert verdict_for("exponential", None, [], False)["verdict"].endswith("need a representative")
    for v in (fin, poly, rel, hyp):
        assert v["annotation"] == "theorem-level; bounded evidence for hypotheses"


def test_peripheral_label():
    assert peripheral_label("{⟨c⟩, ⟨a, b⟩}") == "{⟨c⟩ ⋊ Z, ⟨a, b⟩ ⋊ Z}"


# recursion


@pytest.fixture(scope="module")
def two_level():
    phi = parse_automorphism(open(DATA / "two_level.aut").read())
    f = load_graph_map(str(DATA / "two_level.json"))
    entries = json.load(open(DATA / "two_level_config.json"))["components"]
    return ComponentData(phi, f, 3), component_supplier(entries, 4, str(DATA))


def test_two_level_recursion(two_level):
    root, supplier = two_level
    tree = peripheral_recursion(root, supplier)
    assert tree_depth(tree) == 2
    assert tree_leaves(tree) == ["polynomial"]
    (child,) = tree["children"]
    assert child["rank"] == 3 and child["growth"] == "polynomial(1)"


def test_recursion_without_data(two_level):
    root, _ = two_level
    assert tree_leaves(peripheral_recursion(root)) == ["needs-data"]


def test_recursion_depth_bound(two_level):
    root, supplier = two_level
    assert tree_leaves(peripheral_recursion(root, supplier, depth_bound=1)) == ["needs-data"]


def test_recursion_rejects_wrong_rank(two_level):
    root, _ = two_level
    wrong = ComponentData(parse_automorphism("a -> a ; b -> b a"))
    with pytest.raises(RecursionRankError):
        peripheral_recursion(root, lambda comp: wrong)


# corpus


def test_corpus_is_seeded_and_filtered():
    S = SubgroupSystem.from_generators([[(3,)]], 3)
    log = []
    a = corpus_generate(7, 100, (1, 12), 3, not_carried_by=S, log_out=log)
    b = corpus_generate(7, 100, (1, 12), 3, not_carried_by=S)
    assert a == b and len(a) == 100
    assert all(is_cyclically_reduced(w) and 1 <= len(w) <= 12 for w in a)
    assert not any(carries_conjugacy_class(S, w) for w in a)
    assert log[0]["seed"] == 7 and log[0]["rejected"] >= 1


def test_corpus_unsatisfiable():
    S = SubgroupSystem.from_generators([[(1,)]], 1)
    with pytest.raises(CorpusError):
        corpus_generate(1, 5, (1, 3), 1, not_carried_by=S, retry_budget=200)


# configuration and reports


def test_config_round_trip_and_validation():
    cfg = AnalysisConfig(M_flare=7)
    assert AnalysisConfig.from_json(json.dumps(cfg.to_json())) == cfg
    with pytest.raises(ValueError):
        AnalysisConfig(N_attraction=0)
    with pytest.raises(ValueError):
        AnalysisConfig.from_json({"bogus": 1})
    with pytest.raises(ValueError):
        AnalysisConfig(corpus_min_length=9, corpus_max_length=3)


def test_analyze_polynomial_report():
    rep = analyze(parse_automorphism("a -> a ; b -> b a"))
    assert rep["growth"]["label"] == "polynomial(1)"
    assert rep["verdict"]["verdict"].startswith("not relatively hyperbolic")
    text = emit_report(rep, "text")
    assert "verdict: not relatively hyperbolic" in text
    assert json.loads(emit_report(rep, "json"))["verdict"] == rep["verdict"]


def test_analyze_plastic_is_hyperbolic():
    phi = parse_automorphism(open(DATA / "plastic.aut").read())
    cfg = AnalysisConfig(corpus_size=20, strict_corpus_size=20, M_flare=6, N_strict=6)
    rep = analyze(phi, load_graph_map(str(DATA / "plastic.json")),
                  load_graph_map(str(DATA / "plastic_inverse.json")), cfg)
    assert rep["verdict"]["verdict"] == "hyperbolic"
    assert rep["nas"]["summary"] == "{}" and rep["nas"]["system"] == []
