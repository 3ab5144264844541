import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _trees import random_tree, reference_cut_sets
from fvkit import quant
from fvkit.errors import CombinatorialLimit, ExactTooLarge, InputError, MissingProbability, TooManyEvents
from fvkit.ftree import parse_fault_tree
from fvkit.quant import CutSetList, Method

ABC = "event A prob=0.01\nevent B prob=0.1\nevent C prob=0.2\ngate BC AND B C\ngate T OR A BC\ntop T"


@pytest.fixture
def abc():
    return parse_fault_tree(ABC)


def test_or_and_cut_sets(abc):
    assert quant.minimal_cut_sets(abc).sets == (("A",), ("B", "C"))


def test_absorption():
    t = parse_fault_tree("event A prob=0.1\nevent B prob=0.1\ngate AB AND A B\ngate T OR A AB\ntop T")
    assert quant.minimal_cut_sets(t).sets == (("A",),)


def test_si_cut_sets_match_enumeration(si_tree):
    cuts = quant.minimal_cut_sets(si_tree)
    assert {("SI-P1-RF", "SI-P2-DF"), ("SI-P1-RF", "SI-P2-RF"), ("CCF-SI-RF2-ALL",),
            ("BUS-A-UN",), ("BUS-B-UN",)} == set(cuts.sets)
    assert list(cuts.sets) == reference_cut_sets(si_tree)
    assert cuts == quant.brute_force_cut_sets(si_tree)


def test_max_order_truncates(si_tree):
    assert all(len(cs) == 1 for cs in quant.minimal_cut_sets(si_tree, max_order=1))
    with pytest.raises(InputError):
        quant.minimal_cut_sets(si_tree, max_order=0)


def test_combinatorial_cap(si_tree, monkeypatch):
    with pytest.raises(CombinatorialLimit):
        quant.minimal_cut_sets(si_tree, cap=2)
    monkeypatch.setenv("FVKIT_CUTSET_CAP", "2")
    with pytest.raises(CombinatorialLimit):
        quant.minimal_cut_sets(si_tree)
    monkeypatch.setenv("FVKIT_CUTSET_CAP", "lots")
    with pytest.raises(InputError):
        quant.minimal_cut_sets(si_tree)


@pytest.mark.parametrize("method, expected", [("rare", 0.03), ("exact", 0.0298), ("mcub", 1 - 0.99 * 0.98)])
def test_top_probability_hand_values(method, expected):
    cuts = CutSetList((("A",), ("B", "C")))
    q = {"A": 0.01, "B": 0.1, "C": 0.2}
    assert quant.top_probability(cuts, q, method) == pytest.approx(expected, rel=1e-14)


def test_zero_probabilities_give_zero_top(abc):
    cuts = quant.minimal_cut_sets(abc)
    q = dict.fromkeys("ABC", 0.0)
    assert all(quant.top_probability(cuts, q, m) == 0.0 for m in Method)


def test_exact_cap():
    cuts = CutSetList(tuple((f"E{i}",) for i in range(21)))
    q = {f"E{i}": 0.1 for i in range(21)}
    with pytest.raises(ExactTooLarge):
        quant.top_probability(cuts, q, "exact")


def test_missing_probability(abc):
    with pytest.raises(MissingProbability):
        quant.top_probability(quant.minimal_cut_sets(abc), {"A": 0.1}, "rare")


def test_unknown_method():
    with pytest.raises(InputError):
        Method.coerce("bdd")


def test_fv_rare_hand_values(abc):
    res = quant.fv_importance(abc, method="rare")
    assert res.fv_cutset["A"] == pytest.approx(1 / 3, rel=1e-14)
    assert res.fv_cutset["B"] == res.fv_cutset["C"] == pytest.approx(2 / 3, rel=1e-14)


def test_oracle_hand_value(abc):
    assert quant.brute_force_fv(abc).fv_cutset["A"] == pytest.approx(0.01 / 0.0298, rel=1e-13)
    assert f"{0.01 / 0.0298:.5f}" == "0.33557"


@pytest.mark.parametrize("text, top, fv_a", [
    ("event A prob=0.3\ngate T OR A\ntop T", 0.3, 1.0),
    ("event A prob=0.5\nevent B prob=0.5\ngate T AND A B\ntop T", 0.25, 1.0),
])
def test_oracle_trivial_trees(text, top, fv_a):
    res = quant.brute_force_fv(parse_fault_tree(text))
    assert res.top_probability == pytest.approx(top, rel=1e-15)
    assert res.fv_cutset["A"] == fv_a


def test_si_case_study(si_tree):
    res = quant.fv_importance(si_tree)
    assert res.method is Method.MCUB
    assert res.fv_cutset["SI-P1-RF"] == pytest.approx(1.0, rel=0.01)
    assert res.fv_cutset["SI-P2-RF"] == pytest.approx(0.0102, rel=0.05)
    assert res.fv_cutset["CCF-SI-RF2-ALL"] == pytest.approx(2.02e-5, rel=0.05)
    assert res.fv_cutset["BUS-A-UN"] == pytest.approx(5.55e-7, rel=0.05)
    assert res.fv_cutset["BUS-B-UN"] == res.fv_cutset["BUS-A-UN"]
    # the non-reproducing cell: SI-P2-DF misses the {SI-P1-RF, SI-P2-RF} cut set
    assert res.fv_cutset["SI-P2-DF"] == pytest.approx(0.9998, abs=1e-4)
    assert quant.fv_importance(si_tree, method="rare").fv_cutset["SI-P2-DF"] == pytest.approx(0.990, abs=1e-3)


def test_zero_top_gives_zero_fv(abc, caplog):
    res = quant.fv_importance(abc, dict.fromkeys("ABC", 0.0))
    assert res.top_probability == 0.0
    assert set(res.fv_cutset.values()) == {0.0} and set(res.fv_exact.values()) == {0.0}
    assert "zero" in caplog.text


def test_event_outside_cut_sets_has_zero_fv():
    t = parse_fault_tree("event A prob=0.1\nevent B prob=0.1\ngate AB AND A B\ngate T OR A AB\ntop T")
    res = quant.fv_importance(t)
    assert res.fv_cutset["B"] == 0.0 and res.fv_exact["B"] == 0.0


def test_ranking_ties_by_name(si_tree):
    ranking = quant.fv_importance(si_tree).ranking()
    assert ranking.index("BUS-A-UN") + 1 == ranking.index("BUS-B-UN")


def test_brute_force_event_limit():
    body = "".join(f"event E{i} prob=0.1\n" for i in range(21))
    t = parse_fault_tree(body + "gate T OR " + " ".join(f"E{i}" for i in range(21)) + "\ntop T")
    with pytest.raises(TooManyEvents):
        quant.brute_force_fv(t)


def _enumerated_top(tree, q):
    """Exact top probability by direct state enumeration through tree.evaluate."""
    names = tree.event_names
    total = 0.0
    for bits in itertools.product((0, 1), repeat=len(names)):
        failed = [n for n, b in zip(names, bits) if b]
        if tree.evaluate(failed):
            total += math.prod(q[n] if b else 1 - q[n] for n, b in zip(names, bits))
    return total


tree_seeds = st.integers(0, 2**32 - 1)


@settings(max_examples=60, deadline=None)
@given(seed=tree_seeds, n=st.integers(1, 7), k=st.integers(1, 4))
def test_oracle_top_matches_direct_enumeration(seed, n, k):
    t = random_tree(np.random.default_rng(seed), n, k)
    q = t.unavailabilities()
    assert quant.brute_force_fv(t).top_probability == pytest.approx(_enumerated_top(t, q), rel=1e-12, abs=1e-15)


@settings(max_examples=150, deadline=None)
@given(seed=tree_seeds, n=st.integers(1, 10), k=st.integers(1, 6))
def test_cut_sets_exact_and_minimal(seed, n, k):
    t = random_tree(np.random.default_rng(seed), n, k)
    cuts = quant.minimal_cut_sets(t)
    assert list(cuts.sets) == reference_cut_sets(t)
    sets = [frozenset(c) for c in cuts]
    assert len(set(sets)) == len(sets)
    assert not any(a < b for a in sets for b in sets)


@settings(max_examples=150, deadline=None)
@given(seed=tree_seeds, n=st.integers(1, 8), k=st.integers(1, 4))
def test_exact_method_matches_oracle(seed, n, k):
    t = random_tree(np.random.default_rng(seed), n, k)
    cuts = quant.minimal_cut_sets(t)
    if len(cuts) > quant.EXACT_MAX_CUTS:
        return
    got = quant.fv_importance(t, method="exact", cuts=cuts)
    ref = quant.brute_force_fv(t)
    assert got.top_probability == pytest.approx(ref.top_probability, abs=1e-12)
    for e in t.ranked_events:
        assert abs(got.fv_cutset[e] - ref.fv_cutset[e]) <= 1e-12
        assert abs(got.fv_exact[e] - ref.fv_exact[e]) <= 1e-6 + 2 * max(t.unavailabilities().values())


@settings(max_examples=150, deadline=None)
@given(seed=tree_seeds, n=st.integers(1, 8), k=st.integers(1, 4))
def test_rare_event_error_scales_with_q(seed, n, k):
    # the rare-event share differs from the exact one by terms of order q
    rng = np.random.default_rng(seed)
    t = random_tree(rng, n, k, q_high=1e-3)
    q_max = max(t.unavailabilities().values())
    rare = quant.fv_importance(t, method="rare")
    ref = quant.brute_force_fv(t)
    bound = 4 * n * q_max
    for e in t.ranked_events:
        assert abs(rare.fv_cutset[e] - ref.fv_cutset[e]) <= bound


@settings(max_examples=150, deadline=None)
@given(seed=tree_seeds, n=st.integers(1, 8), k=st.integers(1, 5))
def test_bounds(seed, n, k):
    t = random_tree(np.random.default_rng(seed), n, k, q_high=0.9)
    cuts = quant.minimal_cut_sets(t)
    q = t.unavailabilities()
    assert 0.0 <= quant.top_probability(cuts, q, "mcub") <= 1.0
    for m in (Method.RARE, Method.MCUB):
        res = quant.fv_importance(t, q, m, cuts=cuts)
        assert all(0.0 <= v <= 1.0 for v in (*res.fv_cutset.values(), *res.fv_exact.values()))
        for e in t.ranked_events:
            assert quant.top_probability(cuts.containing(e), q, m) <= res.top_probability * (1 + 1e-12)


@settings(max_examples=150, deadline=None)
@given(seed=tree_seeds, n=st.integers(1, 8), k=st.integers(1, 5), scale=st.floats(1.0, 50.0))
def test_fv_exact_monotone_in_own_probability(seed, n, k, scale):
    rng = np.random.default_rng(seed)
    t = random_tree(rng, n, k, q_high=0.02)
    q = t.unavailabilities()
    cuts = quant.minimal_cut_sets(t)
    e = t.event_names[int(rng.integers(n))]
    lo = quant.fv_importance(t, q, cuts=cuts).fv_exact[e]
    hi = quant.fv_importance(t, {**q, e: min(1.0, q[e] * scale)}, cuts=cuts).fv_exact[e]
    assert hi >= lo - 1e-12


@settings(max_examples=50, deadline=None)
@given(seed=tree_seeds, n=st.integers(1, 8), k=st.integers(1, 5))
def test_zero_probability_event_has_zero_fv(seed, n, k):
    rng = np.random.default_rng(seed)
    t = random_tree(rng, n, k)
    e = t.event_names[int(rng.integers(n))]
    q = {**t.unavailabilities(), e: 0.0}
    for m in Method:
        try:
            res = quant.fv_importance(t, q, m)
        except ExactTooLarge:
            continue
        assert res.fv_cutset[e] == 0.0 and res.fv_exact[e] == 0.0
