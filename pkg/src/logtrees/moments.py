"""Exact and floating-point moment tables for the tree recurrences.

Every tracked quantity solves a recurrence of the shape

    a_n = (branches) * sum_j w_{n,j} a_j + b_n

where w is the family's split law.  For m-ary trees w_{n,j} =
C(n-1-j, m-2)/C(n, m-1); the binomial weight is a pure difference kernel,
so the weighted sums are maintained as an (m-1)-level running prefix-sum
cascade, O(m) work per step.  Second moments go through centred tolls:
with Delta = 1 - mu_n + sum_l mu(I_l), nabla = n-m+1 - kappa_n +
sum_l kappa(I_l), delta = -nu_n + sum_l (nu+mu)(I_l), the six rows use

    b[S]  = E Delta^2          b[SK] = E Delta nabla    b[K] = E nabla^2
    b[SN] = m sum pi V[S]  + E Delta delta
    b[N]  = m sum pi (V[S] + 2 V[SN]) + E delta^2
    b[KN] = m sum pi V[SK] + E nabla delta

and composition sums reduce to E sum_l f(I_l) sum_r g(I_r) =
m sum_j pi f(j) g(j) + m(m-1) sum_{j,k} pi2 f(j) g(k), the double sum
being a convolution against C(n-2-s, m-3).

Fringe-balanced tables use the scalar median split law directly (the two
subtree sizes are determined by one draw, so conditional-(co)variance
decomposition is exact).  Quadtree mean tables use the fact that the
marginal cell-count law is a d-fold iterated uniform thinning, which turns
the weighted sum into d nested prefix averages.  Quadtree second moments
would need the pairwise cell-count law (a genuine d-dimensional integral
with no scalar DP) and are deliberately not provided; use Monte Carlo.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Sequence

import numpy as np

from .families import Family, FamilyInstance
from .treesim import build_mary_tree

EXACT_CAP_DEFAULT = 300
FLOAT_CAP_DEFAULT = 20_000
FLOAT_DRIFT_TOL = 1e-8

MARY_ROWS = ("mu", "kappa", "nu", "VS", "VSK", "VK", "VSN", "VN", "VKN")
FBBST_ROWS = ("s_mean", "x_mean", "VS", "VSX", "VX")
QUADTREE_ROWS = ("l_mean", "xi_mean")


class TableModeError(ValueError):
    pass


class FloatDriftError(ArithmeticError):
    """Float-mode weight normalisation drifted beyond 1e-8."""


class UnsupportedTableError(NotImplementedError):
    pass


# ---------------------------------------------------------------------------
# split weights
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SplitWeights:
    """Exact split law of a size-n m-ary node: the marginal pi_{n,j} of a
    single subtree size and the pairwise law pi2 of two distinct subtrees."""

    n: int
    m: int

    def __post_init__(self):
        if self.m < 3:
            raise ValueError("split weights need m >= 3")
        if self.n < self.m - 1:
            raise ValueError(f"n must be >= m-1 = {self.m - 1}")

    @cached_property
    def pi(self) -> dict[int, Fraction]:
        n, m = self.n, self.m
        denom = math.comb(n, m - 1)
        return {j: Fraction(math.comb(n - 1 - j, m - 2), denom)
                for j in range(0, n - m + 2)}

    @cached_property
    def pi2(self) -> dict[tuple[int, int], Fraction]:
        n, m = self.n, self.m
        denom = math.comb(n, m - 1)
        out = {}
        for j in range(0, n - m + 2):
            for k in range(0, n - m + 2 - j):
                out[(j, k)] = Fraction(math.comb(n - 2 - j - k, m - 3), denom)
        return out


def split_weights(n: int, m: int) -> SplitWeights:
    return SplitWeights(n=n, m=m)


# ---------------------------------------------------------------------------
# cascade helper: running sums against binomial difference kernels
# ---------------------------------------------------------------------------

class _Cascade:
    """After pushing a_0..a_F in order, level k-1 holds
    sum_j C(F-j+k-1, k-1) a_j."""

    __slots__ = ("levels",)

    def __init__(self, depth: int, zero):
        self.levels = [zero] * depth

    def push(self, value) -> None:
        acc = value
        levels = self.levels
        for i in range(len(levels)):
            levels[i] += acc
            acc = levels[i]

    @property
    def top(self):
        return self.levels[-1]


# ---------------------------------------------------------------------------
# m-ary engine
# ---------------------------------------------------------------------------

def _check_caps(n_max: int, mode: str, cap: int | None):
    if mode not in ("exact", "float"):
        raise TableModeError(f"mode must be 'exact' or 'float', got {mode!r}")
    limit = cap if cap is not None else (
        EXACT_CAP_DEFAULT if mode == "exact" else FLOAT_CAP_DEFAULT)
    if n_max > limit:
        raise TableModeError(
            f"n_max = {n_max} exceeds the {mode}-mode cap {limit}; "
            "pass cap explicitly to override")


def _mary_engine(m: int, n_max: int, exact: bool) -> dict[str, list]:
    zero = Fraction(0) if exact else 0.0
    one = Fraction(1) if exact else 1.0

    size = n_max + 1
    rows = {name: [zero] * size for name in MARY_ROWS}
    mu, ka, nu = rows["mu"], rows["kappa"], rows["nu"]
    VS, VSK, VK = rows["VS"], rows["VSK"], rows["VK"]
    VSN, VN, VKN = rows["VSN"], rows["VN"], rows["VKN"]
    for n in range(1, min(m - 1, size)):
        mu[n] = one

    if n_max < m - 1:
        return rows

    denoms = [math.comb(n, m - 1) for n in range(size)]
    if not exact:
        denoms = [float(x) for x in denoms]

    depth1, depth2 = m - 1, m - 2
    casc = {name: _Cascade(depth1, zero)
            for name in ("mu", "ka", "nu", "mm", "mk", "kk", "mw", "kw", "ww",
                         "VS", "VSK", "VK", "VSN", "VN", "VKN")}
    conv_pairs = ("mm", "mk", "kk", "mw", "kw", "ww")
    casc2 = {name: _Cascade(depth2, zero) for name in conv_pairs}
    drift = _Cascade(depth1, 0.0) if not exact else None

    w_row = [zero] * size  # nu + mu, filled as nu becomes available
    if exact:
        seqs = {"mm": (mu, mu), "mk": (mu, ka), "kk": (ka, ka),
                "mw": (mu, w_row), "kw": (ka, w_row), "ww": (w_row, w_row)}
    else:
        # float mode convolves with numpy slices for speed
        fa = {name: np.zeros(size) for name in ("mu", "ka", "w")}
        seqs = {"mm": ("mu", "mu"), "mk": ("mu", "ka"), "kk": ("ka", "ka"),
                "mw": ("mu", "w"), "kw": ("ka", "w"), "ww": ("w", "w")}

    def conv_at(pair: str, s: int):
        if exact:
            f, g = seqs[pair]
            return sum((f[j] * g[s - j] for j in range(s + 1)), Fraction(0))
        fname, gname = seqs[pair]
        f, g = fa[fname], fa[gname]
        return float(f[: s + 1] @ g[s::-1])

    for n in range(0, min(m - 1, size)):
        w_row[n] = nu[n] + mu[n]
        if not exact:
            fa["mu"][n] = mu[n]
            fa["ka"][n] = ka[n]
            fa["w"][n] = w_row[n]

    for n in range(m - 1, size):
        s = n - m + 1  # new front index for all cascades
        casc["mu"].push(mu[s]); casc["ka"].push(ka[s]); casc["nu"].push(nu[s])
        casc["mm"].push(mu[s] * mu[s]); casc["mk"].push(mu[s] * ka[s])
        casc["kk"].push(ka[s] * ka[s]); casc["mw"].push(mu[s] * w_row[s])
        casc["kw"].push(ka[s] * w_row[s]); casc["ww"].push(w_row[s] * w_row[s])
        for name in ("VS", "VSK", "VK", "VSN", "VN", "VKN"):
            casc[name].push(rows[name][s])
        for pair in conv_pairs:
            casc2[pair].push(conv_at(pair, s))
        if drift is not None:
            drift.push(1.0)
            rel = abs(drift.top / denoms[n] - 1.0)
            if rel > FLOAT_DRIFT_TOL:
                raise FloatDriftError(
                    f"weight normalisation drift {rel:.2e} at n = {n}")

        denom = denoms[n]
        if not exact and math.isinf(denom):
            raise FloatDriftError(f"binomial overflow at n = {n}; use exact mode")

        def m1(name):
            return m * casc[name].top / denom

        def pair_sum(name):
            return (m * casc[name].top + m * (m - 1) * casc2[name].top) / denom

        # means
        mu[n] = m1("mu") + one
        ka[n] = m1("ka") + (n - m + 1)
        nu[n] = m1("nu") + (mu[n] - one)
        w_row[n] = nu[n] + mu[n]
        if not exact:
            fa["mu"][n] = mu[n]
            fa["ka"][n] = ka[n]
            fa["w"][n] = w_row[n]

        # centred-toll constants
        c_d = one - mu[n]
        c_n = (n - m + 1) - ka[n]
        c_e = -nu[n]
        m1mu, m1ka, m1w = m1("mu"), m1("ka"), m1("mu") + m1("nu")

        e_dd = c_d * c_d + 2 * c_d * m1mu + pair_sum("mm")
        e_dn = c_d * c_n + c_d * m1ka + c_n * m1mu + pair_sum("mk")
        e_nn = c_n * c_n + 2 * c_n * m1ka + pair_sum("kk")
        e_de = c_d * c_e + c_d * m1w + c_e * m1mu + pair_sum("mw")
        e_ne = c_n * c_e + c_n * m1w + c_e * m1ka + pair_sum("kw")
        e_ee = c_e * c_e + 2 * c_e * m1w + pair_sum("ww")

        VS[n] = m1("VS") + e_dd
        VSK[n] = m1("VSK") + e_dn
        VK[n] = m1("VK") + e_nn
        VSN[n] = m1("VSN") + m1("VS") + e_de
        VN[n] = m1("VN") + m1("VS") + 2 * m1("VSN") + e_ee
        VKN[n] = m1("VKN") + m1("VSK") + e_ne

    return rows


# ---------------------------------------------------------------------------
# fbbst engine
# ---------------------------------------------------------------------------

def _fbbst_engine(t: int, n_max: int, exact: bool) -> dict[str, list]:
    zero = Fraction(0) if exact else 0.0
    size = n_max + 1
    rows = {name: [zero] * size for name in FBBST_ROWS}
    eS, eX = rows["s_mean"], rows["x_mean"]
    VS, VSX, VX = rows["VS"], rows["VSX"], rows["VX"]
    lo = 2 * t + 1
    if n_max < lo:
        return rows

    if exact:
        ct = [math.comb(x, t) for x in range(size)]
        c2t1 = [math.comb(x, 2 * t + 1) for x in range(size)]
        for n in range(lo, size):
            denom = c2t1[n]
            pj = [(j, Fraction(ct[j] * ct[n - 1 - j], denom))
                  for j in range(t, n - t)]
            gS = {j: eS[j] + eS[n - 1 - j] + 1 for j, _ in pj}
            gX = {j: eX[j] + eX[n - 1 - j] + (n - 1) for j, _ in pj}
            eS[n] = sum((p * gS[j] for j, p in pj), Fraction(0))
            eX[n] = sum((p * gX[j] for j, p in pj), Fraction(0))
            vS = sum((p * gS[j] ** 2 for j, p in pj), Fraction(0)) - eS[n] ** 2
            vX = sum((p * gX[j] ** 2 for j, p in pj), Fraction(0)) - eX[n] ** 2
            cXS = sum((p * gX[j] * gS[j] for j, p in pj), Fraction(0)) - eX[n] * eS[n]
            VS[n] = sum((p * (VS[j] + VS[n - 1 - j]) for j, p in pj), Fraction(0)) + vS
            VX[n] = sum((p * (VX[j] + VX[n - 1 - j]) for j, p in pj), Fraction(0)) + vX
            VSX[n] = sum((p * (VSX[j] + VSX[n - 1 - j]) for j, p in pj), Fraction(0)) + cXS
        return rows

    ct = np.array([math.comb(x, t) for x in range(size)], dtype=float)
    c2t1 = np.array([math.comb(x, 2 * t + 1) for x in range(size)], dtype=float)
    aeS = np.zeros(size); aeX = np.zeros(size)
    aVS = np.zeros(size); aVSX = np.zeros(size); aVX = np.zeros(size)
    for n in range(lo, size):
        js = np.arange(t, n - t)
        p = ct[js] * ct[n - 1 - js] / c2t1[n]
        gS = aeS[js] + aeS[n - 1 - js] + 1.0
        gX = aeX[js] + aeX[n - 1 - js] + (n - 1.0)
        aeS[n] = p @ gS
        aeX[n] = p @ gX
        vS = p @ (gS * gS) - aeS[n] ** 2
        vX = p @ (gX * gX) - aeX[n] ** 2
        cXS = p @ (gX * gS) - aeX[n] * aeS[n]
        aVS[n] = p @ (aVS[js] + aVS[n - 1 - js]) + vS
        aVX[n] = p @ (aVX[js] + aVX[n - 1 - js]) + vX
        aVSX[n] = p @ (aVSX[js] + aVSX[n - 1 - js]) + cXS
    for n in range(size):
        eS[n] = float(aeS[n]); eX[n] = float(aeX[n])
        VS[n] = float(aVS[n]); VSX[n] = float(aVSX[n]); VX[n] = float(aVX[n])
    return rows


# ---------------------------------------------------------------------------
# quadtree mean engine
# ---------------------------------------------------------------------------

def _quadtree_means(d: int, n_max: int, exact: bool) -> dict[str, list]:
    """Means of leaves and internal path length.

    The marginal law of one cell count is a d-fold iterated uniform thinning
    of n-1, so sum_j P(J=j) e(j) = (T^d e)(n-1) with T the prefix-average
    operator; each T is one running sum, hence O(d) per step.
    """
    zero = Fraction(0) if exact else 0.0
    one = Fraction(1) if exact else 1.0
    size = n_max + 1
    rows = {name: [zero] * size for name in QUADTREE_ROWS}
    eL, eXi = rows["l_mean"], rows["xi_mean"]
    if n_max >= 1:
        eL[1] = one
    if n_max < 2:
        return rows

    branches = 2 ** d
    sums_L = [zero] * d
    sums_Xi = [zero] * d

    def push(sums, value, count):
        # one prefix-average pass per dimension; count = N+1 when pushing e(N)
        acc = value
        for i in range(d):
            sums[i] += acc
            acc = sums[i] / count
        return acc  # (T^d e)(count-1)

    # prime with e(0)
    tL = push(sums_L, eL[0], 1)
    tXi = push(sums_Xi, eXi[0], 1)
    for n in range(2, size):
        tL = push(sums_L, eL[n - 1], n)
        tXi = push(sums_Xi, eXi[n - 1], n)
        eL[n] = branches * tL
        eXi[n] = branches * tXi + (n - 1)
    if exact:
        return rows
    return {k: [float(v) for v in vs] for k, vs in rows.items()}


# ---------------------------------------------------------------------------
# public tables
# ---------------------------------------------------------------------------

@dataclass
class MomentTable:
    """Per-n exact or floating moment rows for one family instance."""

    instance: FamilyInstance
    n_max: int
    mode: str
    columns: dict[str, list] = field(repr=False)

    @property
    def row_names(self) -> tuple[str, ...]:
        if self.instance.family is Family.MARY:
            return MARY_ROWS
        if self.instance.family is Family.FBBST:
            return FBBST_ROWS
        return QUADTREE_ROWS

    def column(self, name: str) -> list:
        return self.columns[name]

    def cauchy_schwarz_ok(self) -> bool:
        if self.instance.family is Family.MARY:
            trips = (("VSK", "VS", "VK"), ("VSN", "VS", "VN"), ("VKN", "VK", "VN"))
        elif self.instance.family is Family.FBBST:
            trips = (("VSX", "VS", "VX"),)
        else:
            return True
        for cov, va, vb in trips:
            c, a, b = self.columns[cov], self.columns[va], self.columns[vb]
            for n in range(self.n_max + 1):
                bound = a[n] * b[n]
                slack = 0 if self.mode == "exact" else 1e-9 * (1.0 + abs(bound))
                if c[n] * c[n] > bound + slack:
                    return False
        return True

    def write_csv(self, fh) -> None:
        names = self.row_names
        fh.write("n," + ",".join(names) + "\n")
        for n in range(self.n_max + 1):
            cells = [str(n)]
            for name in names:
                v = self.columns[name][n]
                if isinstance(v, Fraction):
                    cells.append(f"{v.numerator}/{v.denominator}")
                else:
                    cells.append(f"{float(v):.17g}")
            fh.write(",".join(cells) + "\n")


def mean_tables(instance: FamilyInstance, n_max: int, mode: str = "exact",
                cap: int | None = None):
    """Family mean rows: (mu, kappa, nu) for mary, (s_mean, x_mean) for
    fbbst, (l_mean, xi_mean) for quadtree."""
    _check_caps(n_max, mode, cap)
    exact = mode == "exact"
    if instance.family is Family.MARY:
        rows = _mary_means_only(instance.parameter, n_max, exact)
        return rows["mu"], rows["kappa"], rows["nu"]
    if instance.family is Family.FBBST:
        rows = _fbbst_engine(instance.parameter, n_max, exact)
        return rows["s_mean"], rows["x_mean"]
    rows = _quadtree_means(instance.parameter, n_max, exact)
    return rows["l_mean"], rows["xi_mean"]


def _mary_means_only(m: int, n_max: int, exact: bool) -> dict[str, list]:
    zero = Fraction(0) if exact else 0.0
    one = Fraction(1) if exact else 1.0
    size = n_max + 1
    rows = {"mu": [zero] * size, "kappa": [zero] * size, "nu": [zero] * size}
    mu, ka, nu = rows["mu"], rows["kappa"], rows["nu"]
    for n in range(1, min(m - 1, size)):
        mu[n] = one
    if n_max < m - 1:
        return rows
    denoms = [math.comb(n, m - 1) for n in range(size)]
    if not exact:
        denoms = [float(x) for x in denoms]
    casc = {name: _Cascade(m - 1, zero) for name in ("mu", "ka", "nu")}
    for n in range(m - 1, size):
        s = n - m + 1
        casc["mu"].push(mu[s]); casc["ka"].push(ka[s]); casc["nu"].push(nu[s])
        denom = denoms[n]
        mu[n] = m * casc["mu"].top / denom + one
        ka[n] = m * casc["ka"].top / denom + (n - m + 1)
        nu[n] = m * casc["nu"].top / denom + (mu[n] - one)
    return rows


def second_moment_tables(instance: FamilyInstance, n_max: int, mode: str = "exact",
                         cap: int | None = None) -> MomentTable:
    """Full moment table (means plus all second-order rows)."""
    _check_caps(n_max, mode, cap)
    exact = mode == "exact"
    if instance.family is Family.MARY:
        rows = _mary_engine(instance.parameter, n_max, exact)
    elif instance.family is Family.FBBST:
        rows = _fbbst_engine(instance.parameter, n_max, exact)
    else:
        raise UnsupportedTableError(
            "quadtree second moments need the pairwise cell-count law, which "
            "has no scalar dynamic program; use treesim.monte_carlo")
    return MomentTable(instance=instance, n_max=n_max, mode=mode, columns=rows)



# ---------------------------------------------------------------------------
# generic recurrence with user tolls
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TollSpec:
    """Toll sequence description for the generic recurrence."""

    kind: str  # constant_plus_decay | linear_plus_tn | custom_sequence
    payload: tuple

    @staticmethod
    def constant(c, decay: Sequence | None = None) -> "TollSpec":
        return TollSpec("constant_plus_decay", (c, tuple(decay) if decay else None))

    @staticmethod
    def linear(c, t_seq: Sequence) -> "TollSpec":
        return TollSpec("linear_plus_tn", (c, tuple(t_seq)))

    @staticmethod
    def custom(seq: Sequence) -> "TollSpec":
        return TollSpec("custom_sequence", (tuple(seq),))

    def materialize(self, n_max: int) -> list:
        if self.kind == "constant_plus_decay":
            c, decay = self.payload
            out = [c] * (n_max + 1)
            if decay is not None:
                if len(decay) < n_max + 1:
                    raise ValueError("decay sequence shorter than horizon")
                out = [c + decay[n] for n in range(n_max + 1)]
            return out
        if self.kind == "linear_plus_tn":
            c, t_seq = self.payload
            if len(t_seq) < n_max + 1:
                raise ValueError("t_n sequence shorter than horizon")
            return [c * (n + 1) + t_seq[n] for n in range(n_max + 1)]
        (seq,) = self.payload
        if len(seq) < n_max + 1:
            raise ValueError("toll sequence shorter than horizon")
        return list(seq[: n_max + 1])

    def transfer_report(self, horizon: int) -> dict:
        """Empirical check of the linear-toll transfer condition: t_n = o(n)
        and absolutely convergent sum of t_n / n^2.  The partial sums of
        |t_n| n^-2 are bounded octave by octave; reported, not proved."""
        if self.kind != "linear_plus_tn":
            raise ValueError("transfer condition applies to linear_plus_tn tolls")
        _, t_seq = self.payload
        hi = min(horizon, len(t_seq) - 1)
        if hi < 8:
            raise ValueError("horizon too short for a transfer report")
        partial = 0.0
        partials = [0.0]
        for n in range(1, hi + 1):
            partial += abs(t_seq[n]) / n**2
            partials.append(partial)
        inc_last = partials[hi] - partials[hi // 2]
        inc_prev = partials[hi // 2] - partials[hi // 4]
        ratio_tail = max(abs(t_seq[n]) / n for n in range(hi // 2, hi + 1))
        return {
            "horizon": hi,
            "max_ratio_tail": ratio_tail,
            "abs_partial_sum": partials[hi],
            "last_octave_increment": inc_last,
            "looks_convergent": bool(inc_last <= inc_prev + 1e-12),
        }


def generic_recurrence(toll: TollSpec, instance: FamilyInstance, n_max: int,
                       mode: str = "float", initial: Sequence | None = None,
                       cap: int | None = None) -> list:
    """Solve a_n = branches * sum_j w_{n,j} a_j + b_n with a user toll and
    user initial segment (defaults to zeros below the splitting threshold)."""
    _check_caps(n_max, mode, cap)
    exact = mode == "exact"
    zero = Fraction(0) if exact else 0.0
    b = toll.materialize(n_max)
    if instance.family is Family.MARY:
        lo = instance.parameter - 1
    elif instance.family is Family.FBBST:
        lo = 2 * instance.parameter + 1
    else:
        lo = 2
    init = list(initial) if initial is not None else [zero] * lo
    if len(init) != lo:
        raise ValueError(f"initial segment must have length {lo}")
    if len(b) < len(init):
        raise ValueError("toll shorter than initial segment")

    size = n_max + 1
    a = [zero] * size
    for n in range(min(lo, size)):
        a[n] = init[n] if exact else float(init[n])
    if n_max < lo:
        return a

    fam = instance.family
    if fam is Family.MARY:
        m = instance.parameter
        denoms = [math.comb(n, m - 1) for n in range(size)]
        if not exact:
            denoms = [float(x) for x in denoms]
        casc = _Cascade(m - 1, zero)
        for n in range(m - 1, size):
            casc.push(a[n - m + 1])
            a[n] = m * casc.top / denoms[n] + b[n]
        return a
    if fam is Family.FBBST:
        t = instance.parameter
        ct = [math.comb(x, t) for x in range(size)]
        c2t1 = [math.comb(x, 2 * t + 1) for x in range(size)]
        for n in range(lo, size):
            if exact:
                tot = sum((Fraction(ct[j] * ct[n - 1 - j], c2t1[n]) * (a[j] + a[n - 1 - j])
                           for j in range(t, n - t)), Fraction(0))
            else:
                tot = sum(ct[j] * ct[n - 1 - j] * (a[j] + a[n - 1 - j])
                          for j in range(t, n - t)) / c2t1[n]
            a[n] = tot + b[n]
        return a
    d = instance.parameter
    branches = 2 ** d
    sums = [zero] * d

    def push(value, count):
        acc = value
        for i in range(d):
            sums[i] += acc
            acc = sums[i] / count
        return acc

    push(a[0], 1)
    for n in range(2, size):
        acc = push(a[n - 1], n)
        a[n] = branches * acc + b[n]
    return a


# ---------------------------------------------------------------------------
# permutation oracle
# ---------------------------------------------------------------------------

ORACLE_LIMIT = 9


@dataclass(frozen=True)
class OracleMoments:
    """Exact joint moments of (S, K, N) over all n! permutations."""

    n: int
    m: int
    mu: Fraction
    kappa: Fraction
    nu: Fraction
    VS: Fraction
    VSK: Fraction
    VK: Fraction
    VSN: Fraction
    VN: Fraction
    VKN: Fraction


def permutation_oracle(n: int, m: int) -> OracleMoments:
    """Ground truth by exhaustive tree construction over every permutation
    of {1..n}.  Refuses n > 9 (9! = 362880 trees is the budget)."""
    from itertools import permutations

    if n > ORACLE_LIMIT:
        raise ValueError(f"permutation oracle supports n <= {ORACLE_LIMIT}")
    if n == 0:
        zero = Fraction(0)
        return OracleMoments(n, m, *([zero] * 9))
    tot = [0] * 9  # S K N S2 SK K2 SN N2 KN
    for perm in permutations(range(1, n + 1)):
        meas = build_mary_tree(perm, m)
        s, k, nn = meas.S, meas.K, meas.N
        tot[0] += s; tot[1] += k; tot[2] += nn
        tot[3] += s * s; tot[4] += s * k; tot[5] += k * k
        tot[6] += s * nn; tot[7] += nn * nn; tot[8] += k * nn
    cnt = math.factorial(n)
    es, ek, en = (Fraction(tot[i], cnt) for i in range(3))
    return OracleMoments(
        n=n, m=m, mu=es, kappa=ek, nu=en,
        VS=Fraction(tot[3], cnt) - es * es,
        VSK=Fraction(tot[4], cnt) - es * ek,
        VK=Fraction(tot[5], cnt) - ek * ek,
        VSN=Fraction(tot[6], cnt) - es * en,
        VN=Fraction(tot[7], cnt) - en * en,
        VKN=Fraction(tot[8], cnt) - ek * en,
    )


# ---------------------------------------------------------------------------
# growth-exponent fitting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GrowthFit:
    slope: float
    intercept: float
    residual: float            # max |log residual| of the fit
    detrended_amplitude: float  # (max - min)/2 of fit residuals


def growth_exponent(values, n_grid) -> GrowthFit:
    """Least-squares slope of log(value) against log(n) on the grid.

    ``values`` is indexable by n (a table column).  Non-positive entries
    abort with the first offending n named.
    """
    xs, ys = [], []
    for n in n_grid:
        v = float(values[n])
        if not v > 0.0:
            raise ValueError(f"non-positive value {v} at n = {n}")
        xs.append(math.log(n))
        ys.append(math.log(v))
    A = np.vstack([xs, np.ones(len(xs))]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, np.array(ys), rcond=None)
    resid = np.array(ys) - A @ np.array([slope, intercept])
    return GrowthFit(
        slope=float(slope),
        intercept=float(intercept),
        residual=float(np.abs(resid).max()),
        detrended_amplitude=float((resid.max() - resid.min()) / 2.0),
    )
