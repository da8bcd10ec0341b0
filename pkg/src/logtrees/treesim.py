"""Monte Carlo simulation of random search trees.

Two routes are provided and cross-checked: explicit m-ary tree construction
from a permutation (the insertion procedure), and split-size recursion that
samples subtree sizes directly from each family's split law

    mary:      uniform composition of n-m+1 into m parts
               (equivalently: m-1 distinct root-key ranks out of n),
    fbbst:     left size j with probability C(j,t) C(n-1-j,t) / C(n,2t+1),
    quadtree:  multinomial over the 2^d cell volumes of a uniform point.

Replicates are simulated level-synchronously in fixed blocks of 1024, each
block on its own counter-based Philox stream keyed by (seed, block index),
so results are bit-identical for a given seed regardless of thread count.
Statistics accumulate as exact integer power sums and merge associatively.
"""
from __future__ import annotations

import math
from bisect import bisect_right, insort
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .families import Family, FamilyInstance

BLOCK = 1024  # replicates per RNG stream; fixed so --threads cannot change draws


class DepthCapError(RuntimeError):
    """Recursion exceeded 64 log2(n) + 64 levels (pathological stream guard)."""


@dataclass(frozen=True)
class TreeMeasures:
    """Shape measures of one m-ary search tree: node count S, key path
    length K, node path length N."""

    S: int
    K: int
    N: int


def build_mary_tree(permutation, m: int) -> TreeMeasures:
    """Insert the keys in order and measure (S, K, N).

    A node stores up to m-1 sorted keys; once full it routes new keys into
    one of its m child intervals.  Measures accumulate incrementally: a key
    stored at depth delta adds delta to K, a node created at depth delta
    adds delta to N and one to S.
    """
    if m < 2:
        raise ValueError("m must be >= 2")
    keys_seen = set()
    cap = m - 1
    root = None
    S = K = N = 0
    for x in permutation:
        if x in keys_seen:
            raise ValueError(f"duplicate key {x!r}")
        keys_seen.add(x)
        if root is None:
            root = [[x], None]
            S += 1
            continue
        node = root
        depth = 0
        while True:
            keys = node[0]
            if len(keys) < cap:
                insort(keys, x)
                K += depth
                break
            if node[1] is None:
                node[1] = [None] * m
            idx = bisect_right(keys, x)
            depth += 1
            child = node[1][idx]
            if child is None:
                node[1][idx] = [[x], None]
                S += 1
                K += depth
                N += depth
                break
            node = child
    return TreeMeasures(S, K, N)


# ---------------------------------------------------------------------------
# split sampling
# ---------------------------------------------------------------------------

def _floyd_distinct(rng, n_arr: np.ndarray, k: int) -> np.ndarray:
    """Floyd's algorithm, vectorised across rows: k distinct uniform values
    from {1..n_arr[i]} per row (unsorted)."""
    rows = n_arr.shape[0]
    chosen = np.zeros((rows, k), dtype=np.int64)
    for i in range(k):
        j = n_arr - k + 1 + i
        t = rng.integers(1, j + 1)
        if i:
            dup = (chosen[:, :i] == t[:, None]).any(axis=1)
            chosen[:, i] = np.where(dup, j, t)
        else:
            chosen[:, 0] = t
    return chosen


def _mary_splits(rng, m: int, sizes: np.ndarray) -> np.ndarray:
    """Subtree sizes for splitting m-ary nodes: gaps between m-1 distinct
    root-key ranks.  Returns (rows, m) array."""
    ranks = np.sort(_floyd_distinct(rng, sizes, m - 1), axis=1)
    rows = sizes.shape[0]
    bounds = np.empty((rows, m + 1), dtype=np.int64)
    bounds[:, 0] = 0
    bounds[:, 1:m] = ranks
    bounds[:, m] = sizes + 1
    return np.diff(bounds, axis=1) - 1


def _fbbst_splits(rng, t: int, sizes: np.ndarray) -> np.ndarray:
    """(left, right) subtree sizes under the median-of-(2t+1) law."""
    ranks = np.sort(_floyd_distinct(rng, sizes, 2 * t + 1), axis=1)
    med = ranks[:, t]
    return np.stack([med - 1, sizes - med], axis=1)


def _quadtree_volumes(rng, d: int, rows: int) -> np.ndarray:
    """Cell volumes q_1..q_{2^d} of a uniform point in [0,1]^d."""
    x = rng.random((rows, d))
    vol = np.ones((rows, 1))
    for l in range(d):
        xl = x[:, l : l + 1]
        vol = np.hstack([vol * xl, vol * (1.0 - xl)])
    return vol


def _multinomial_rows(rng, counts: np.ndarray, probs: np.ndarray) -> np.ndarray:
    """Multinomial per row via a chain of binomials (works on any numpy
    version, deterministic draw order)."""
    rows, cells = probs.shape
    out = np.zeros((rows, cells), dtype=np.int64)
    rem = counts.astype(np.int64).copy()
    remp = np.ones(rows)
    for h in range(cells - 1):
        p = np.clip(probs[:, h] / np.maximum(remp, 1e-300), 0.0, 1.0)
        c = rng.binomial(rem, p)
        out[:, h] = c
        rem -= c
        remp -= probs[:, h]
    out[:, cells - 1] = rem
    return out


def fbbst_split_pmf(n: int, t: int, as_printed: bool = False) -> dict[int, Fraction]:
    """Left-subtree-size law of the median-of-(2t+1) split, exact rationals.

    The law in use is P(left = j) = C(j,t) C(n-1-j,t) / C(n,2t+1) for
    t <= j <= n-1-t (the root key is the sample median at rank j+1), which
    sums to one.  The sometimes-quoted index shift C(j-1,t) C(n-j,t) on the
    same range fails to normalise (its total is 0 at n = 3, t = 1); it is
    kept behind ``as_printed`` so the defect can be demonstrated.
    """
    if n < 2 * t + 1:
        raise ValueError(f"n = {n} below the splitting threshold {2 * t + 1}")
    denom = math.comb(n, 2 * t + 1)
    out = {}
    for j in range(t, n - t):
        if as_printed:
            num = math.comb(j - 1, t) * math.comb(n - j, t)
        else:
            num = math.comb(j, t) * math.comb(n - 1 - j, t)
        out[j] = Fraction(num, denom)
    return out


def sample_split(instance: FamilyInstance, n: int, rng) -> tuple[int, ...]:
    """One draw of subtree sizes below a size-n splitting node."""
    if n < instance.split_threshold:
        raise ValueError(
            f"n = {n} below the splitting threshold {instance.split_threshold} of {instance}")
    sizes = np.array([n], dtype=np.int64)
    if instance.family is Family.MARY:
        return tuple(int(v) for v in _mary_splits(rng, instance.parameter, sizes)[0])
    if instance.family is Family.FBBST:
        return tuple(int(v) for v in _fbbst_splits(rng, instance.parameter, sizes)[0])
    d = instance.parameter
    probs = _quadtree_volumes(rng, d, 1)
    return tuple(int(v) for v in _multinomial_rows(rng, sizes - 1, probs)[0])


# ---------------------------------------------------------------------------
# split-size recursion
# ---------------------------------------------------------------------------

def _depth_cap(n: int) -> int:
    return 64 * max(1, math.ceil(math.log2(max(2, n)))) + 64


def _simulate_block(instance: FamilyInstance, n: int, reps: int, rng):
    """Level-synchronous split recursion for a block of replicates.
    Returns the per-replicate measure columns as int64 arrays."""
    fam = instance.family
    p = instance.parameter
    thresh = instance.split_threshold
    cap = _depth_cap(n)

    a = np.zeros(reps, dtype=np.int64)
    b = np.zeros(reps, dtype=np.int64)
    c = np.zeros(reps, dtype=np.int64) if fam is Family.MARY else None

    if n == 0:
        return (a, b, c) if fam is Family.MARY else (a, b)

    sizes = np.full(reps, n, dtype=np.int64)
    rep = np.arange(reps, dtype=np.int64)
    depth = 0
    while sizes.size:
        if depth > cap:
            raise DepthCapError(f"depth {depth} exceeded cap {cap} at n={n}")
        if fam is Family.MARY:
            a += np.bincount(rep, minlength=reps)  # S: one per node
            if depth:
                c += depth * np.bincount(rep, minlength=reps)  # N
            keycount = np.where(sizes >= p, p - 1, sizes)
            if depth:
                b += depth * np.bincount(rep, weights=keycount, minlength=reps).astype(np.int64)
            split = sizes >= thresh
            if not split.any():
                break
            gaps = _mary_splits(rng, p, sizes[split])
        elif fam is Family.FBBST:
            split = sizes >= thresh
            if not split.any():
                break
            a += np.bincount(rep[split], minlength=reps)  # partition stages
            b += np.bincount(rep[split], weights=sizes[split] - 1,
                             minlength=reps).astype(np.int64)  # path length toll
            gaps = _fbbst_splits(rng, p, sizes[split])
        else:
            leaf = sizes == 1
            if leaf.any():
                a += np.bincount(rep[leaf], minlength=reps)  # leaves
            split = sizes >= thresh
            if not split.any():
                break
            b += np.bincount(rep[split], weights=sizes[split] - 1,
                             minlength=reps).astype(np.int64)  # internal path length
            vols = _quadtree_volumes(rng, p, int(split.sum()))
            gaps = _multinomial_rows(rng, sizes[split] - 1, vols)

        branches = gaps.shape[1]
        child_rep = np.repeat(rep[split], branches).reshape(-1, branches)
        keep = gaps > 0
        sizes = gaps[keep]
        rep = child_rep[keep]
        depth += 1

    if fam is Family.MARY:
        return a, b, c
    return a, b


def simulate_recursion(instance: FamilyInstance, n: int, rng):
    """One replicate of the split-size recursion.

    Returns TreeMeasures for mary, (stages, path_length) for fbbst, and
    (leaves, internal_path_length) for quadtree.
    """
    cols = _simulate_block(instance, n, 1, rng)
    if instance.family is Family.MARY:
        return TreeMeasures(int(cols[0][0]), int(cols[1][0]), int(cols[2][0]))
    return int(cols[0][0]), int(cols[1][0])


# ---------------------------------------------------------------------------
# streaming statistics
# ---------------------------------------------------------------------------

class SimStats:
    """Joint moments of integer-valued measures, kept as exact integer power
    sums so that merging is associative and bit-reproducible.  Means,
    (co)variances, and correlations are materialised on demand."""

    def __init__(self, names):
        self.names = tuple(names)
        self.count = 0
        self._sum = {a: 0 for a in self.names}
        self._prod = {}
        for i, x in enumerate(self.names):
            for y in self.names[i:]:
                self._prod[(x, y)] = 0

    def update_arrays(self, columns) -> None:
        cols = {a: np.asarray(col).astype(object) for a, col in zip(self.names, columns)}
        counts = {len(col) for col in cols.values()}
        if len(counts) != 1:
            raise ValueError("measure columns must share a length")
        self.count += counts.pop()
        for a in self.names:
            self._sum[a] += int(cols[a].sum())
        for (x, y) in self._prod:
            self._prod[(x, y)] += int((cols[x] * cols[y]).sum())

    def merge(self, other: "SimStats") -> "SimStats":
        if self.names != other.names:
            raise ValueError("cannot merge stats over different measures")
        out = SimStats(self.names)
        out.count = self.count + other.count
        out._sum = {a: self._sum[a] + other._sum[a] for a in self.names}
        out._prod = {k: self._prod[k] + other._prod[k] for k in self._prod}
        return out

    def _pair(self, x, y):
        return self._prod[(x, y) if (x, y) in self._prod else (y, x)]

    def mean(self, a) -> float:
        if self.count == 0:
            raise ValueError("no samples")
        return self._sum[a] / self.count

    def mean_exact(self, a) -> Fraction:
        return Fraction(self._sum[a], self.count)

    def cov(self, x, y) -> float:
        if self.count < 2:
            raise ValueError("need at least 2 replicates for (co)variance")
        c = self.count
        num = Fraction(self._pair(x, y)) - Fraction(self._sum[x] * self._sum[y], c)
        return float(num / (c - 1))

    def var(self, a) -> float:
        return self.cov(a, a)

    def corr(self, x, y) -> float:
        vx, vy = self.var(x), self.var(y)
        if vx == 0.0 or vy == 0.0:
            return 0.0
        r = self.cov(x, y) / math.sqrt(vx * vy)
        return max(-1.0, min(1.0, r))

    def sem(self, a) -> float:
        return math.sqrt(max(self.var(a), 0.0) / self.count)

    def to_dict(self) -> dict:
        d = {"count": self.count, "measures": list(self.names), "mean": {}, "sem": {},
             "var": {}, "cov": {}, "corr": {}}
        for a in self.names:
            d["mean"][a] = self.mean(a)
            if self.count >= 2:
                d["var"][a] = self.var(a)
                d["sem"][a] = self.sem(a)
        for i, x in enumerate(self.names):
            for y in self.names[i + 1:]:
                if self.count >= 2:
                    d["cov"][f"{x},{y}"] = self.cov(x, y)
                    d["corr"][f"{x},{y}"] = self.corr(x, y)
        return d


def _measure_names(instance: FamilyInstance):
    if instance.family is Family.MARY:
        return ("S", "K", "N")
    if instance.family is Family.FBBST:
        return ("S", "X")
    return ("L", "Xi")


def _block_stats(instance, n, reps, seed, block_idx):
    rng = np.random.Generator(np.random.Philox(key=[seed, block_idx]))
    stats = SimStats(_measure_names(instance))
    stats.update_arrays(_simulate_block(instance, n, reps, rng))
    return stats


def monte_carlo(instance: FamilyInstance, n: int, reps: int, seed: int,
                threads: int = 1) -> SimStats:
    """Replicated split-recursion simulation with exact merged statistics.

    The replicate set is partitioned into fixed blocks of 1024; block i
    draws from Philox key (seed, i) and blocks merge in index order, so the
    result is independent of ``threads``.
    """
    if reps < 2:
        raise ValueError("reps must be >= 2 for variance estimates")
    blocks = [(i, min(BLOCK, reps - i * BLOCK)) for i in range((reps + BLOCK - 1) // BLOCK)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(_block_stats, instance, n, size, seed, i)
                       for i, size in blocks]
            parts = [f.result() for f in futures]
    else:
        parts = [_block_stats(instance, n, size, seed, i) for i, size in blocks]
    merged = parts[0]
    for part in parts[1:]:
        merged = merged.merge(part)
    return merged


def corr_profile(instance: FamilyInstance, n_grid, reps: int, seed: int,
                 threads: int = 1) -> list[dict]:
    """Empirical-vs-predicted profile rows over a grid of sizes.

    Each row: n, stat name, empirical value, standard error (when available),
    prediction from the asymptotics module, and the regime label.
    """
    from . import asymptotics  # deferred: avoid import cycle at module load

    rows = []
    for n in n_grid:
        stats = monte_carlo(instance, int(n), reps, seed, threads)
        rows.extend(asymptotics.profile_rows(instance, int(n), stats))
    return rows
