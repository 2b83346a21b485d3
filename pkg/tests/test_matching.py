import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import alg1_trace, brute_force_best
from matchbandit.matching import (BindingCapacityError, Edge, InstanceTooLargeError, Matching,
                                  MatchingError, MatchingInstance, StructureMismatchError,
                                  UncoverableEdgeError, check_lemma1, decompose, exact_match,
                                  greedy_match, hungarian_match, initial_cover, matching_from_pairs,
                                  random_instance, violations)


@st.composite
def instances(draw, max_side=4, max_classes=3):
    ma = draw(st.integers(1, max_side))
    mi = draw(st.integers(1, max_side))
    q = draw(st.integers(1, max_classes))
    cls = draw(st.lists(st.integers(0, q - 1), min_size=ma * mi, max_size=ma * mi))
    caps = draw(st.lists(st.integers(0, max(ma, mi)), min_size=q, max_size=q))
    w = draw(st.lists(st.floats(0, 1, allow_nan=False), min_size=ma * mi, max_size=ma * mi))
    return MatchingInstance(np.reshape(w, (ma, mi)), np.reshape(cls, (ma, mi)), caps)


# --- construction ------------------------------------------------------------

def test_negative_weight_rejected():
    with pytest.raises(MatchingError):
        MatchingInstance([[-0.1]], [[0]], [1])


def test_nonfinite_weight_rejected():
    with pytest.raises(MatchingError):
        MatchingInstance([[np.nan]], [[0]], [1])


@pytest.mark.parametrize("caps", [[-1], [1.5]])
def test_bad_capacity_rejected(caps):
    with pytest.raises(MatchingError):
        MatchingInstance([[0.3]], [[0]], caps)


def test_class_index_out_of_range():
    with pytest.raises(MatchingError):
        MatchingInstance([[0.3]], [[2]], [1])


def test_instance_json_round_trip(rng):
    inst = random_instance(rng, 3, 4, 3)
    back = MatchingInstance.from_json(inst.to_json())
    assert back.same_structure(inst)
    assert np.array_equal(back.weights, inst.weights)


def test_json_rejects_double_listed_edge():
    d = {"agents": 1, "incentives": 1, "classes": [[[0, 0]], [[0, 0]]], "capacities": [1, 1],
         "weights": [[0.5]]}
    with pytest.raises(MatchingError):
        MatchingInstance.from_dict(d)


def test_json_rejects_uncovered_edge():
    d = {"agents": 1, "incentives": 2, "classes": [[[0, 0]]], "capacities": [1],
         "weights": [[0.5, 0.2]]}
    with pytest.raises(MatchingError):
        MatchingInstance.from_dict(d)


def test_matching_is_a_set():
    assert Matching(((0, 1), (1, 0))) == Matching(((1, 0), (0, 1)))
    assert matching_from_pairs([[1, 0]]).sorted() == [Edge(1, 0)]


# --- greedy ------------------------------------------------------------------

def test_greedy_example1_weights():
    mu = 1 / 1.1
    inst = MatchingInstance.single_class([[mu, 0.5], [0.5, mu]], 2)
    assert greedy_match(inst).edge_set == {(0, 0), (1, 1)}


def test_greedy_single_edge():
    inst = MatchingInstance([[0.7]], [[0]], [1])
    assert greedy_match(inst).edges == (Edge(0, 0),)


def test_greedy_empty_instance():
    inst = MatchingInstance(np.zeros((0, 3)), np.zeros((0, 3), dtype=int), [1])
    assert len(greedy_match(inst)) == 0


def test_greedy_saturated_class_trace():
    # the three heaviest edges share class 0 with capacity 1
    w = [[0.9, 0.8, 0.1], [0.7, 0.2, 0.3], [0.15, 0.25, 0.05]]
    cls = [[0, 0, 1], [0, 1, 1], [1, 1, 1]]
    inst = MatchingInstance(w, cls, [1, 3])
    g = greedy_match(inst)
    assert [tuple(e) for e in g.edges] == alg1_trace(w, cls, [1, 3]) == [(0, 0), (1, 2), (2, 1)]
    assert g.weight(inst) >= brute_force_best(inst) / 3


def test_greedy_ties_break_lexicographically():
    inst = MatchingInstance.single_class(np.full((3, 3), 0.5))
    assert [tuple(e) for e in greedy_match(inst).edges] == [(0, 0), (1, 1), (2, 2)]


@given(instances())
def test_greedy_matches_reference_transcription(inst):
    g = greedy_match(inst)
    ref = alg1_trace(inst.weights, inst.class_of.tolist(), inst.capacities.tolist())
    assert [tuple(e) for e in g.edges] == ref


@given(instances())
def test_greedy_feasible_and_ordered(inst):
    g = greedy_match(inst)
    assert not violations(inst, g.edges)
    w = [inst.weights[e] for e in g.edges]
    assert all(x >= y for x, y in zip(w, w[1:]))


@given(instances(max_side=3))
def test_greedy_third_of_optimum(inst):
    assert greedy_match(inst).weight(inst) >= brute_force_best(inst) / 3 - 1e-12


# --- exact / hungarian -------------------------------------------------------

def test_exact_diagonal():
    inst = MatchingInstance.single_class([[2, 1], [1, 2]])
    assert exact_match(inst).weight(inst) == 4


def test_exact_all_zero():
    inst = MatchingInstance.single_class(np.zeros((3, 3)))
    m = exact_match(inst)
    assert m.weight(inst) == 0
    assert not violations(inst, m.edges)


def test_exact_guard():
    inst = MatchingInstance.single_class(np.full((5, 5), 0.5))
    with pytest.raises(InstanceTooLargeError):
        exact_match(inst)
    assert exact_match(inst, max_edges=25).weight(inst) == pytest.approx(2.5)


def test_exact_guard_counts_positive_edges_only():
    w = np.zeros((6, 6))
    w[0, :] = 1.0
    inst = MatchingInstance.single_class(w)
    assert exact_match(inst).weight(inst) == 1.0


@pytest.mark.parametrize("seed", range(25))
def test_exact_binding_4x4_matches_enumeration(seed):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, 4, 4, 3, max_capacity=2)
    m = exact_match(inst, max_edges=16)
    assert not violations(inst, m.edges)
    assert m.weight(inst) == pytest.approx(brute_force_best(inst))


@given(instances(max_side=3))
def test_exact_equals_enumeration(inst):
    assert exact_match(inst).weight(inst) == pytest.approx(brute_force_best(inst))


def test_hungarian_diagonal():
    inst = MatchingInstance.single_class([[2, 1], [1, 2]])
    assert hungarian_match(inst).weight(inst) == 4


def test_hungarian_single():
    inst = MatchingInstance([[0.4]], [[0]], [1])
    assert hungarian_match(inst).edge_set == {(0, 0)}


def test_hungarian_binding_rejected():
    inst = MatchingInstance.single_class(np.ones((3, 3)), 2)
    with pytest.raises(BindingCapacityError):
        hungarian_match(inst)


@pytest.mark.parametrize("seed", range(10))
def test_hungarian_equals_exact_5x5(seed):
    rng = np.random.default_rng(seed)
    w = rng.random((5, 5))
    w[w < 0.45] = 0.0          # keep the positive-edge count within the exact guard
    inst = MatchingInstance.single_class(w)
    assert hungarian_match(inst).weight(inst) == pytest.approx(exact_match(inst, 25).weight(inst))


# --- decomposition -----------------------------------------------------------

def test_decompose_2x2():
    inst = MatchingInstance.single_class([[4, 2], [1, 3]], 2)
    d = decompose(inst)
    assert d.greedy_edges == (Edge(0, 0), Edge(1, 1))
    assert d.marginal_sets == (frozenset({Edge(0, 1), Edge(1, 0)}), frozenset())
    assert d.owner((1, 0)) == 0
    assert d.owner((0, 0)) is None


def test_decompose_single():
    d = decompose(MatchingInstance([[0.3]], [[0]], [1]))
    assert d.greedy_edges == (Edge(0, 0),)
    assert d.marginal_sets == (frozenset(),)


@given(instances())
def test_decompose_partitions_non_greedy_edges(inst):
    d = decompose(inst)
    g = set(d.greedy_edges)
    union = set()
    for ls in d.marginal_sets:
        assert not (union & ls)
        union |= ls
    if g:
        assert union == set(inst.edges()) - g
        assert sum(len(ls) for ls in d.marginal_sets) == inst.weights.size - len(g)
    # edges of zero-capacity classes are infeasible from the start; the ordering
    # holds for every edge that could ever be feasible
    for j, ls in enumerate(d.marginal_sets):
        for e in ls:
            if inst.capacities[inst.class_of[e]] > 0:
                assert inst.weights[d.greedy_edges[j]] >= inst.weights[e]


# --- ordering witnesses ---------------------------------------------------------

def test_ordering_identical():
    inst = MatchingInstance.single_class([[0.9, 0.2], [0.3, 0.8]])
    assert check_lemma1(inst, inst).kind == "identical"


def test_ordering_e2_witness():
    w = MatchingInstance.single_class([[0.9, 0.5], [0.4, 0.8]])
    w2 = w.with_weights([[0.6, 0.95], [0.4, 0.8]])
    rep = check_lemma1(w, w2)
    assert rep.kind == "E2"
    assert rep.witness == (Edge(0, 0), Edge(0, 1))


def test_ordering_structure_mismatch():
    a = MatchingInstance.single_class(np.ones((2, 2)))
    b = MatchingInstance.single_class(np.ones((2, 2)), 1)
    with pytest.raises(StructureMismatchError):
        check_lemma1(a, b)


@given(instances(max_side=5), st.integers(0, 2 ** 31))
def test_ordering_dichotomy_property(inst, seed):
    rng = np.random.default_rng(seed)
    w1 = inst.weights + rng.random(inst.shape) * 1e-6     # break ties
    w2 = rng.random(inst.shape)
    rep = check_lemma1(inst.with_weights(w1), inst.with_weights(w2))
    assert rep.kind in ("identical", "E1", "E2")


# --- initial cover -----------------------------------------------------------

def test_cover_2x2():
    cover = initial_cover(MatchingInstance.single_class(np.zeros((2, 2))))
    assert [m.edge_set for m in cover] == [{(0, 0), (1, 1)}, {(0, 1), (1, 0)}]


def test_cover_singleton_classes_worst_case():
    m = 3
    cls = np.arange(m * m).reshape(m, m)
    inst = MatchingInstance(np.zeros((m, m)), cls, np.ones(m * m, dtype=int))
    assert len(initial_cover(inst)) == 3   # permutations still fit; capacity 1 per edge
    tight = MatchingInstance(np.zeros((m, m)), np.zeros((m, m), dtype=int), [1])
    assert len(initial_cover(tight)) == m * m


def test_cover_zero_capacity_rejected():
    inst = MatchingInstance(np.zeros((2, 2)), [[0, 1], [0, 0]], [2, 0])
    with pytest.raises(UncoverableEdgeError):
        initial_cover(inst)


def test_cover_6x6_counts(rng):
    inst = random_instance(rng, 6, 6, 3)
    inst = MatchingInstance(inst.weights, inst.class_of, np.maximum(inst.capacities, 1))
    cover = initial_cover(inst)
    seen = np.zeros((6, 6), dtype=int)
    for m in cover:
        for e in m:
            seen[e] += 1
    assert np.all(seen == 1)


@given(instances(max_side=4))
def test_cover_exact_once_and_maximal(inst):
    inst = MatchingInstance(inst.weights, inst.class_of, np.maximum(inst.capacities, 1))
    cover = initial_cover(inst)
    counts = {}
    for m in cover:
        assert not violations(inst, m.edges)
        for e in m:
            counts[e] = counts.get(e, 0) + 1
    assert counts == {e: 1 for e in inst.edges()}
    # maximal among edges still uncovered when the matching was formed
    left = set(inst.edges())
    for m in cover:
        for e in left - m.edge_set:
            assert violations(inst, list(m.edges) + [e])
        left -= m.edge_set
    m_ = max(inst.shape)
    assert len(cover) <= inst.weights.size
    if inst.shape[0] == inst.shape[1] and inst.nonbinding():
        assert len(cover) == m_
