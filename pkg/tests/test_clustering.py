import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from autoblock import (
    TooFewSamplesError,
    complete_linkage,
    correlation_matrix,
    cut,
    distance_matrix,
    plan_from_partition,
)
from autoblock.samplers import SamplerPlan

from oracles import brute_force_complete_linkage, brute_force_cut


def random_distance_matrix(rng, d):
    m = rng.random((d, d))
    m = 0.5 * (m + m.T)
    np.fill_diagonal(m, 0.0)
    return m


# ---------------------------------------------------------------------------
# correlation_matrix
# ---------------------------------------------------------------------------

class _FakeChain:
    def __init__(self, samples):
        self.samples = np.asarray(samples, dtype=float)


def test_identical_columns_correlate_one():
    rng = np.random.default_rng(0)
    col = rng.standard_normal(200)
    corr = correlation_matrix(_FakeChain(np.column_stack([col, col])), 0.5)
    assert corr[0, 1] == pytest.approx(1.0)


def test_negated_column_correlates_minus_one():
    rng = np.random.default_rng(1)
    col = rng.standard_normal(200)
    corr = correlation_matrix(_FakeChain(np.column_stack([col, -col])), 0.5)
    assert corr[0, 1] == pytest.approx(-1.0)


def test_independent_columns_near_zero():
    rng = np.random.default_rng(2)
    samples = rng.standard_normal((20_000, 4))
    corr = correlation_matrix(_FakeChain(samples), 0.5)
    off = corr[~np.eye(4, dtype=bool)]
    assert np.all(np.abs(off) < 0.05)


def test_zero_variance_column_convention():
    rng = np.random.default_rng(3)
    samples = np.column_stack([rng.standard_normal(100),
                               np.full(100, 2.0),
                               rng.standard_normal(100)])
    corr = correlation_matrix(_FakeChain(samples), 0.0)
    assert corr[1, 1] == 1.0
    assert corr[0, 1] == 0.0 and corr[2, 1] == 0.0
    # stuck parameter sits at distance 1 from everything
    dist = distance_matrix(corr)
    assert dist[0, 1] == 1.0 and dist[1, 2] == 1.0 and dist[1, 1] == 0.0


def test_discard_fraction_actually_discards():
    head = np.zeros((50, 2))
    rng = np.random.default_rng(4)
    tail = rng.standard_normal((50, 2))
    corr = correlation_matrix(_FakeChain(np.vstack([head, tail])), 0.5)
    # head was constant; if it were retained the correlation would be huge
    assert abs(corr[0, 1]) < 0.5


def test_too_few_samples():
    with pytest.raises(TooFewSamplesError):
        correlation_matrix(_FakeChain(np.zeros((12, 2))), 0.5)


# ---------------------------------------------------------------------------
# complete linkage
# ---------------------------------------------------------------------------

def test_three_point_example():
    # d(0,1)=0.1, d(0,2)=0.9, d(1,2)=0.8: merge {0,1} at 0.1, then at 0.9
    dist = np.array([[0.0, 0.1, 0.9],
                     [0.1, 0.0, 0.8],
                     [0.9, 0.8, 0.0]])
    tree = complete_linkage(dist)
    assert tree.merges == ((0, 1, 0.1), (3, 2, 0.9))
    assert cut(tree, 0.5) == ((0, 1), (2,))
    assert cut(tree, 0.05) == ((0,), (1,), (2,))
    assert cut(tree, 0.95) == ((0, 1, 2),)


def test_all_equal_distances_merge_at_one():
    d = 5
    dist = np.ones((d, d))
    np.fill_diagonal(dist, 0.0)
    tree = complete_linkage(dist)
    assert all(h == 1.0 for _, _, h in tree.merges)
    # deterministic lexicographic tie-breaking
    oracle = brute_force_complete_linkage(dist)
    assert [tuple(m) for m in tree.merges] == oracle


def test_single_leaf():
    tree = complete_linkage(np.zeros((1, 1)))
    assert tree.merges == ()
    assert cut(tree, 0.0) == ((0,),)
    assert cut(tree, 1.0) == ((0,),)


def test_heights_nondecreasing_and_match_max_pairwise():
    rng = np.random.default_rng(5)
    for _ in range(25):
        d = rng.integers(2, 9)
        dist = random_distance_matrix(rng, d)
        tree = complete_linkage(dist)
        heights = [h for _, _, h in tree.merges]
        assert heights == sorted(heights)
        members = tree.members()
        for m, (a, b, h) in enumerate(tree.merges):
            expect = max(dist[x, y] for x in members[a] for y in members[b])
            assert h == pytest.approx(expect, abs=0.0)


def test_matches_brute_force_oracle_on_random_matrices():
    rng = np.random.default_rng(6)
    for _ in range(60):
        d = int(rng.integers(2, 8))
        dist = random_distance_matrix(rng, d)
        tree = complete_linkage(dist)
        assert [tuple(m) for m in tree.merges] == \
            brute_force_complete_linkage(dist)
        for h in (0.0, 0.25, 0.5, 0.75, 1.0):
            assert cut(tree, h) == brute_force_cut(d, tree.merges, h)


def test_matches_scipy_complete_linkage_heights():
    scipy_hierarchy = pytest.importorskip("scipy.cluster.hierarchy")
    from scipy.spatial.distance import squareform
    rng = np.random.default_rng(7)
    for _ in range(20):
        d = int(rng.integers(3, 12))
        dist = random_distance_matrix(rng, d)
        tree = complete_linkage(dist)
        link = scipy_hierarchy.linkage(squareform(dist), method="complete")
        assert np.allclose([h for _, _, h in tree.merges], link[:, 2])


def test_cut_boundaries():
    rng = np.random.default_rng(8)
    dist = random_distance_matrix(rng, 6)
    tree = complete_linkage(dist)
    assert cut(tree, 0.0) == tuple((i,) for i in range(6))
    assert cut(tree, 1.0) == (tuple(range(6)),)


def test_cut_zero_with_zero_height_merges_still_singletons():
    dist = np.array([[0.0, 0.0, 1.0],
                     [0.0, 0.0, 1.0],
                     [1.0, 1.0, 0.0]])
    tree = complete_linkage(dist)
    assert tree.merges[0][2] == 0.0
    assert cut(tree, 0.0) == ((0,), (1,), (2,))
    assert cut(tree, 0.1) == ((0, 1), (2,))


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=2, max_value=7), st.integers(min_value=0, max_value=10**6))
def test_cut_monotonic_refinement(d, seed):
    rng = np.random.default_rng(seed)
    dist = random_distance_matrix(rng, d)
    tree = complete_linkage(dist)
    heights = sorted(rng.random(3))
    partitions = [cut(tree, h) for h in heights]
    for finer, coarser in zip(partitions, partitions[1:]):
        finer_groups = [set(g) for g in finer]
        coarser_groups = [set(g) for g in coarser]
        for g in finer_groups:
            assert any(g <= big for big in coarser_groups)


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=2, max_value=7), st.integers(min_value=0, max_value=10**6))
def test_intra_group_distance_bounded_by_cut_height(d, seed):
    rng = np.random.default_rng(seed)
    dist = random_distance_matrix(rng, d)
    tree = complete_linkage(dist)
    h = float(rng.random())
    for group in cut(tree, h):
        for i in group:
            for j in group:
                assert dist[i, j] <= h + 1e-12


def test_sign_invariance_of_pipeline():
    rng = np.random.default_rng(9)
    samples = rng.multivariate_normal(
        np.zeros(3), [[1.0, 0.8, 0.0], [0.8, 1.0, 0.0], [0.0, 0.0, 1.0]],
        size=4000)
    flipped = samples.copy()
    flipped[:, 1] *= -1.0
    c1 = correlation_matrix(_FakeChain(samples), 0.0)
    c2 = correlation_matrix(_FakeChain(flipped), 0.0)
    d1, d2 = distance_matrix(c1), distance_matrix(c2)
    assert np.allclose(d1, d2)
    t1, t2 = complete_linkage(d1), complete_linkage(d2)
    assert t1.merges == t2.merges
    for h in (0.1, 0.4, 0.9):
        assert cut(t1, h) == cut(t2, h)


# ---------------------------------------------------------------------------
# plan_from_partition
# ---------------------------------------------------------------------------

def test_plan_from_partition_shapes():
    assert plan_from_partition(((0,), (1,), (2,))).groups == ((0,), (1,), (2,))
    plan = plan_from_partition(((2,), (0, 1)))
    assert plan == SamplerPlan(3, ((0, 1), (2,)))
    full = plan_from_partition((tuple(range(5)),))
    assert full == SamplerPlan.all_blocked(5)


def test_dendrogram_serialization_and_leaf_order():
    dist = np.array([[0.0, 0.1, 0.9],
                     [0.1, 0.0, 0.8],
                     [0.9, 0.8, 0.0]])
    tree = complete_linkage(dist)
    payload = tree.to_dict()
    assert payload["n_leaves"] == 3
    assert payload["merges"] == [[0, 1, 0.1], [3, 2, 0.9]]
    assert sorted(tree.leaf_order()) == [0, 1, 2]
