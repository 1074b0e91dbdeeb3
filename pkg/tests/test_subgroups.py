import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_word
from freetorus.subgroups import (
    SubgroupSystem,
    carries_conjugacy_class,
    fold,
    intersection_core,
    is_malnormal,
)
from freetorus.words import inverse, multiply, reduce

gen_lists = st.lists(
    st.lists(st.sampled_from([1, -1, 2, -2, 3, -3]), min_size=1, max_size=6).map(tuple),
    min_size=1, max_size=3,
).filter(lambda gs: any(reduce(g) for g in gs))


@settings(max_examples=80, deadline=None)
@given(gen_lists, st.lists(st.tuples(st.integers(0, 2), st.sampled_from([1, -1])), max_size=6))
def test_products_of_generators_are_members(gens, choice):
    H = fold(gens, 3)
    w = ()
    for i, s in choice:
        g = gens[i % len(gens)]
        w = multiply(w, g if s > 0 else inverse(g))
    assert H.contains(w)


@settings(max_examples=80, deadline=None)
@given(gen_lists, st.lists(st.sampled_from([1, -1, 2, -2, 3, -3]), max_size=5).map(tuple))
def test_conjugacy_key_is_conjugation_invariant(gens, u):
    H = fold(gens, 3)
    K = fold([multiply(u, g, inverse(u)) for g in gens], 3)
    assert H.conjugacy_key() == K.conjugacy_key()
    assert H.rank == K.rank


@settings(max_examples=60, deadline=None)
@given(gen_lists)
def test_generators_regenerate_the_same_graph(gens):
    H = fold(gens, 3)
    assert fold(H.generators(), 3) == H


def test_fold_known_ranks():
    assert fold([(1, 2), (1, -2)], 2).rank == 2
    assert fold([(1, 1), (1, 1, 1)], 2).rank == 1
    assert fold([(1, 2, -1)], 2).rank == 1
    with pytest.raises(ValueError):
        fold([(1, -1)], 2)


def test_membership_negative_cases():
    H = fold([(1, 1)], 2)
    assert H.contains((1, 1, 1, 1))
    assert not H.contains((1,))
    assert not H.contains((2, 1, 1, -2))


def test_intersection_of_cyclic_subgroups():
    (K,) = intersection_core(fold([(1, 1)], 2), fold([(1, 1, 1)], 2))
    assert K.generators() == [(1,) * 6]
    assert intersection_core(fold([(1,)], 2), fold([(2,)], 2)) == []


def test_malnormality():
    assert is_malnormal(SubgroupSystem.from_generators([[(3,)]], 3)) == (True, None)
    ok, witness = is_malnormal(SubgroupSystem.from_generators([[(1,)], [(1, 1)]], 2))
    assert not ok and witness.generators() == [(1, 1)]
    # a conjugates a^2 to itself while a lies outside <a^2>
    ok, witness = is_malnormal(SubgroupSystem.from_generators([[(1, 1)]], 2))
    assert not ok and witness.generators() == [(1, 1)]
    ok, witness = is_malnormal(SubgroupSystem.from_generators([[(1, 2, -1)], [(2,)]], 2))
    assert not ok and witness.generators() == [(2,)]


def test_malnormal_rank_two_factor():
    assert is_malnormal(SubgroupSystem.from_generators([[(1,), (2,)]], 3))[0]
    assert not is_malnormal(SubgroupSystem.from_generators([[(1, 1), (2,)]], 3))[0]


def test_normalized_up_to_conjugacy():
    s = SubgroupSystem.from_generators([[(1, 2, -1)], [(2,)]], 2)
    assert len(s.components) == 2
    assert len(s.normalized(up_to_conjugacy=True).components) == 1


def test_carries_conjugacy_class(rng):
    s = SubgroupSystem.from_generators([[(3,)]], 3)
    for _ in range(50):
        u = random_word(3, rng.randint(0, 6), rng)
        k = rng.choice([1, 2, -3])
        assert carries_conjugacy_class(s, multiply(u, (3,) * abs(k) if k > 0 else (-3,) * -k, inverse(u)))
    assert not carries_conjugacy_class(s, (3, 1))
    with pytest.raises(ValueError):
        carries_conjugacy_class(s, ())


def test_json_and_describe():
    s = SubgroupSystem.from_generators([[(3,)]], 3)
    assert s.describe() == "{⟨c⟩}"
    (comp,) = s.to_json()
    assert comp["rank"] == 1
