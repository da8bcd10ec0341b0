import math
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from logtrees.families import fbbst, mary, quadtree
from logtrees.treesim import (
    SimStats,
    TreeMeasures,
    build_mary_tree,
    monte_carlo,
    sample_split,
    simulate_recursion,
)

FIG_SEQUENCE = [6, 2, 4, 8, 7, 1, 5, 3, 10, 9]


def test_reference_trees():
    assert build_mary_tree(FIG_SEQUENCE, 2) == TreeMeasures(10, 19, 19)
    assert build_mary_tree(FIG_SEQUENCE, 3) == TreeMeasures(6, 11, 7)
    assert build_mary_tree(FIG_SEQUENCE, 4) == TreeMeasures(6, 8, 6)


def test_duplicate_keys_rejected():
    with pytest.raises(ValueError):
        build_mary_tree([1, 2, 2], 3)


@settings(max_examples=60, deadline=None)
@given(st.permutations(list(range(1, 13))), st.integers(2, 6))
def test_tree_measure_invariants(perm, m):
    meas = build_mary_tree(perm, m)
    n = len(perm)
    assert meas.N <= meas.K
    assert 1 <= meas.S <= n
    if n < m:
        assert meas.S == 1 and meas.K == 0 and meas.N == 0


def test_split_threshold_enforced():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        sample_split(mary(3), 2, rng)
    with pytest.raises(ValueError):
        sample_split(fbbst(2), 4, rng)


def test_mary_split_law_frequencies():
    # n=3, m=3: composition of 1 into 3 parts, each with probability 1/3
    rng = np.random.default_rng(np.random.Philox(key=[7, 0]))
    counts = Counter(sample_split(mary(3), 3, rng) for _ in range(3000))
    assert set(counts) == {(1, 0, 0), (0, 1, 0), (0, 0, 1)}
    for v in counts.values():
        assert abs(v - 1000) < 5 * math.sqrt(3000 * (1 / 3) * (2 / 3))


def test_mary_split_law_vs_pi():
    # exact frequency test against the marginal law pi_{n,j}, 1e6 draws
    from logtrees.moments import split_weights
    from logtrees.treesim import _mary_splits
    n, m, draws = 12, 4, 1_000_000
    rng = np.random.default_rng(np.random.Philox(key=[11, 0]))
    sizes = _mary_splits(rng, m, np.full(draws, n, dtype=np.int64))[:, 0]
    pi = split_weights(n, m).pi
    for j, p in pi.items():
        emp = (sizes == j).mean()
        p = float(p)
        se = math.sqrt(p * (1 - p) / draws)
        assert abs(emp - p) < 5 * se + 1e-12, j


def test_fbbst_split_degenerate_case():
    rng = np.random.default_rng(1)
    for _ in range(10):
        assert sample_split(fbbst(1), 3, rng) == (1, 1)


def test_fbbst_split_pmf_normalisation_and_printed_defect():
    from logtrees.treesim import fbbst_split_pmf
    for (n, t) in ((3, 1), (9, 1), (11, 2), (25, 3)):
        assert sum(fbbst_split_pmf(n, t).values()) == 1, (n, t)
    # the quoted index-shifted law loses mass; at (3,1) it sums to zero
    assert sum(fbbst_split_pmf(3, 1, as_printed=True).values()) == 0
    assert sum(fbbst_split_pmf(9, 1, as_printed=True).values()) != 1
    # the in-use law matches the empirical sampler (cross-checked elsewhere)
    pmf = fbbst_split_pmf(5, 1)
    assert pmf == {1: Fraction(3, 10), 2: Fraction(4, 10), 3: Fraction(3, 10)}


def test_fbbst_split_law_frequencies():
    from logtrees.treesim import _fbbst_splits, fbbst_split_pmf
    t, n, draws = 1, 9, 1_000_000
    rng = np.random.default_rng(np.random.Philox(key=[13, 0]))
    lefts = _fbbst_splits(rng, t, np.full(draws, n, dtype=np.int64))[:, 0]
    for j, p in fbbst_split_pmf(n, t).items():
        p = float(p)
        emp = (lefts == j).mean()
        se = math.sqrt(p * (1 - p) / draws)
        assert abs(emp - p) < 5 * se, j


def test_quadtree_d1_split_is_uniform():
    # d=1 reduces to the BST split law: left size uniform on {0..n-1}
    from logtrees.treesim import _multinomial_rows, _quadtree_volumes
    n, draws = 8, 1_000_000
    rng = np.random.default_rng(np.random.Philox(key=[17, 0]))
    probs = _quadtree_volumes(rng, 1, draws)
    lefts = _multinomial_rows(rng, np.full(draws, n - 1, dtype=np.int64), probs)[:, 0]
    for j in range(n):
        emp = (lefts == j).mean()
        se = math.sqrt((1 / n) * (1 - 1 / n) / draws)
        assert abs(emp - 1 / n) < 5 * se, j


def test_quadtree_split_sums():
    rng = np.random.default_rng(3)
    parts = sample_split(quadtree(3), 50, rng)
    assert len(parts) == 8 and sum(parts) == 49


def test_recursion_small_cases():
    rng = np.random.default_rng(5)
    assert simulate_recursion(mary(3), 3, rng) == TreeMeasures(2, 1, 1)
    assert simulate_recursion(fbbst(1), 3, rng) == (1, 2)
    assert simulate_recursion(quadtree(4), 1, rng) == (1, 0)
    assert simulate_recursion(quadtree(2), 0, rng) == (0, 0)


@pytest.mark.parametrize("m", [3, 4])
def test_recursion_matches_builder_and_exact_table(m):
    # tree builder (via the permutation oracle) and split recursion agree
    # with the exact table: 1e5 replicates, 4 standard errors
    from logtrees.moments import permutation_oracle
    n, reps = 8, 100_000
    oracle = permutation_oracle(n, m)  # exhaustive tree construction
    stats = monte_carlo(mary(m), n, reps, seed=99)
    for name, attr in (("S", "mu"), ("K", "kappa"), ("N", "nu")):
        se = max(stats.sem(name), 1e-12)
        assert abs(stats.mean(name) - float(getattr(oracle, attr))) < 4 * se + 1e-9, name
    for name, attr in (("S", "VS"), ("K", "VK"), ("N", "VN")):
        want = float(getattr(oracle, attr))
        se = max(want * math.sqrt(8.0 / reps), 1e-12)
        assert abs(stats.var(name) - want) < 4 * se + 1e-9, name


def test_monte_carlo_deterministic_across_threads():
    a = monte_carlo(mary(3), 500, 3000, seed=42, threads=1)
    b = monte_carlo(mary(3), 500, 3000, seed=42, threads=4)
    assert a.count == b.count and a._sum == b._sum and a._prod == b._prod


def test_monte_carlo_rejects_tiny_reps():
    with pytest.raises(ValueError):
        monte_carlo(mary(3), 10, 1, seed=0)


def test_simstats_merge_exact_and_associative():
    s1, s2, s3 = (SimStats(("a", "b")) for _ in range(3))
    s1.update_arrays([np.array([1, 2]), np.array([3, 4])])
    s2.update_arrays([np.array([5]), np.array([6])])
    s3.update_arrays([np.array([7, 8, 9]), np.array([1, 1, 2])])
    left = s1.merge(s2).merge(s3)
    right = s1.merge(s2.merge(s3))
    assert left._sum == right._sum and left._prod == right._prod
    assert left.mean_exact("a") == Fraction(1 + 2 + 5 + 7 + 8 + 9, 6)
    assert -1.0 <= left.corr("a", "b") <= 1.0


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 10**9), st.integers(0, 10**9)),
                min_size=2, max_size=25),
       st.integers(1, 24))
def test_simstats_properties(pairs, cut):
    # merge associativity and exactness for arbitrary large-count batches
    xs = np.array([p[0] for p in pairs], dtype=np.int64)
    ys = np.array([p[1] for p in pairs], dtype=np.int64)
    cut = min(cut, len(pairs) - 1)
    a, b, whole = SimStats(("x", "y")), SimStats(("x", "y")), SimStats(("x", "y"))
    a.update_arrays([xs[:cut], ys[:cut]])
    b.update_arrays([xs[cut:], ys[cut:]])
    whole.update_arrays([xs, ys])
    merged = a.merge(b)
    assert merged._sum == whole._sum and merged._prod == whole._prod
    assert -1.0 <= merged.corr("x", "y") <= 1.0
    assert merged.var("x") >= 0.0


def test_deterministic_case_zero_variance():
    stats = monte_carlo(mary(3), 3, 100, seed=1)
    assert stats.var("S") == 0.0 and stats.var("K") == 0.0 and stats.var("N") == 0.0
    assert stats.mean("S") == 2.0


def test_quadtree_mean_internal_path_length():
    # E[Xi_n] / (n ln n) -> 2/d
    d, n = 2, 10_000
    stats = monte_carlo(quadtree(d), n, 400, seed=7)
    ratio = stats.mean("Xi") / (n * math.log(n))
    assert abs(ratio - 2 / d) < 0.1 * (2 / d)
