"""Population-dynamics approximation of the limit-law fixed points.

A pool of samples is pushed through the distributional map of the family:
each new sample combines `branches` uniform-with-replacement draws from the
previous pool with a fresh split sample,

    x' = sum_r V_r x^(r) + toll(V),

and for the bivariate maps a second slot

    periodic:  w' = sum_r V_r^(lambda_2 - 1) w^(r)      (complex)
    normal:    w' = sum_r V_r^(1/2) N_r                 (fresh standard
               normals; the normal law is closed under this combination,
               so the slot can be injected exactly instead of iterated --
               a fully iterated variant stays available behind a flag).

Tolls (natural logarithm throughout):

    b_K = 1 + 2 phi sum V_r log V_r          mary KPL scale
    b_N = phi b_K                            mary NPL scale
    b_M = 1 + (V log V + (1-V) log(1-V)) / (H_{2t+2} - H_{t+1})
    b_Q = 1 + (2/d) sum q_r log q_r

The maps are strict L2 contractions (factors asserted numerically before
iterating), so generation error decays geometrically; pool-resampling bias
is O(1/pool).  Periodic pools start at the mean-constraint point (0, theta);
normalised (normal-map) pools start from iid standard normals, because the
point-mass start has zero variance and the normalised map preserves it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .asymptotics import (
    RegimeMismatchError,
    fbbst_tpl_variance_constant,
    kpl_variance_constant,
    quadtree_ipl_variance_constant,
)
from .families import Family, FamilyInstance, occupancy_constant
from .roots import Spectrum, solve_spectrum, theta as spectrum_theta

CHUNK = 16_384

MAP_KINDS = ("uniK", "TN_periodic", "TNprime_normal", "Tmed_periodic",
             "Tmed_normal", "Tquad_periodic", "Tquad_normal")

_PERIODIC = {"TN_periodic": Family.MARY, "Tmed_periodic": Family.FBBST,
             "Tquad_periodic": Family.QUADTREE}
_NORMAL = {"TNprime_normal": Family.MARY, "Tmed_normal": Family.FBBST,
           "Tquad_normal": Family.QUADTREE}


class PoolDegeneracyError(RuntimeError):
    pass


class ContractionError(RuntimeError):
    pass


@dataclass(frozen=True)
class FixedPointSpec:
    """A fixed-point map bound to an instance, with its mean constraint and
    the data needed to evaluate coefficients."""

    instance: FamilyInstance
    map_kind: str
    mean_constraint: tuple
    lambda2: complex | None
    phi: float | None
    scale_constant: float  # C_K / D_X / E_X of the family

    @property
    def bivariate(self) -> bool:
        return self.map_kind != "uniK"

    @property
    def is_periodic(self) -> bool:
        return self.map_kind in _PERIODIC


def variance_scale(instance: FamilyInstance) -> float:
    if instance.family is Family.MARY:
        return kpl_variance_constant(instance.parameter)
    if instance.family is Family.FBBST:
        return fbbst_tpl_variance_constant(instance.parameter)
    return quadtree_ipl_variance_constant(instance.parameter)


def fixed_point_spec(instance: FamilyInstance, map_kind: str,
                     spectrum: Spectrum | None = None,
                     theta: complex | None = None) -> FixedPointSpec:
    """Build a FixedPointSpec, enforcing regime consistency.

    For the quadtree periodic map the mean constraint depends on an
    amplitude the theory leaves to external work; supply ``theta`` (default
    1) in that case.
    """
    if map_kind not in MAP_KINDS:
        raise ValueError(f"unknown map kind {map_kind!r}")
    fam = instance.family
    p = instance.parameter
    if map_kind in _PERIODIC and _PERIODIC[map_kind] is not fam:
        raise RegimeMismatchError(f"{map_kind} needs a {_PERIODIC[map_kind].value} instance")
    if map_kind in _NORMAL and _NORMAL[map_kind] is not fam:
        raise RegimeMismatchError(f"{map_kind} needs a {_NORMAL[map_kind].value} instance")

    lam2 = None
    phi = None
    if fam in (Family.MARY, Family.FBBST):
        phi = float(occupancy_constant(instance))
    if map_kind == "TN_periodic":
        if p < 27:
            raise RegimeMismatchError("TN_periodic needs m >= 27")
    if map_kind == "TNprime_normal" and p > 26:
        raise RegimeMismatchError("TNprime_normal needs 3 <= m <= 26")
    if map_kind == "Tmed_periodic" and p < 59:
        raise RegimeMismatchError("Tmed_periodic needs t >= 59")
    if map_kind == "Tmed_normal" and p > 58:
        raise RegimeMismatchError("Tmed_normal needs 1 <= t <= 58")
    if map_kind == "Tquad_periodic" and p < 9:
        raise RegimeMismatchError("Tquad_periodic needs d >= 9")
    if map_kind == "Tquad_normal" and p > 8:
        raise RegimeMismatchError("Tquad_normal needs 1 <= d <= 8")

    if map_kind in ("TN_periodic", "Tmed_periodic"):
        if spectrum is None:
            spectrum = solve_spectrum(instance)
        lam2 = spectrum.lambda2
        mean = (0.0, spectrum_theta(spectrum))
    elif map_kind == "Tquad_periodic":
        from .roots import quadtree_exponents
        qe = quadtree_exponents(p)
        lam2 = complex(qe.alpha_hat + 1.0, qe.beta_hat)  # exponent + 1
        mean = (0.0, 1.0 + 0.0j if theta is None else complex(theta))
    elif map_kind in _NORMAL:
        mean = (0.0, 0.0)
    else:
        mean = (0.0,)
    return FixedPointSpec(
        instance=instance, map_kind=map_kind, mean_constraint=mean,
        lambda2=lam2, phi=phi, scale_constant=variance_scale(instance))


# ---------------------------------------------------------------------------
# split samplers
# ---------------------------------------------------------------------------

def sample_spacings(m: int, rng, size: int) -> np.ndarray:
    """Spacings of m-1 iid uniforms: (size, m) rows summing to 1."""
    for _ in range(8):
        u = np.sort(rng.random((size, m - 1)), axis=1)
        out = np.diff(u, axis=1, prepend=0.0, append=1.0)
        bad = (out <= 0.0).any(axis=1)
        if not bad.any():
            return out
        # resample rows hit by floating ties (probability-zero event)
        u2 = np.sort(rng.random((int(bad.sum()), m - 1)), axis=1)
        out[bad] = np.diff(u2, axis=1, prepend=0.0, append=1.0)
        if (out > 0.0).all():
            return out
    raise RuntimeError("persistent zero spacing; broken RNG stream?")


def sample_median(t: int, rng, size: int) -> np.ndarray:
    """Median of 2t+1 iid uniforms, i.e. Beta(t+1, t+1)."""
    v = rng.beta(t + 1, t + 1, size)
    while ((v <= 0.0) | (v >= 1.0)).any():
        bad = (v <= 0.0) | (v >= 1.0)
        v[bad] = rng.beta(t + 1, t + 1, int(bad.sum()))
    return v


def sample_volumes(d: int, rng, size: int) -> np.ndarray:
    """Cell volumes of a uniform point of [0,1]^d: (size, 2^d) rows."""
    x = rng.random((size, d))
    while ((x <= 0.0) | (x >= 1.0)).any():
        bad = ((x <= 0.0) | (x >= 1.0)).any(axis=1)
        x[bad] = rng.random((int(bad.sum()), d))
    vol = np.ones((size, 1))
    for l in range(d):
        xl = x[:, l : l + 1]
        vol = np.hstack([vol * xl, vol * (1.0 - xl)])
    return vol


# ---------------------------------------------------------------------------
# tolls
# ---------------------------------------------------------------------------

def toll(spec: FixedPointSpec, split_sample: np.ndarray) -> np.ndarray:
    """Toll of the map for a batch of split samples (natural log)."""
    fam = spec.instance.family
    if fam is Family.MARY:
        ent = (split_sample * np.log(split_sample)).sum(axis=1)
        b_k = 1.0 + 2.0 * spec.phi * ent
        if spec.map_kind == "uniK":
            return b_k
        b_n = spec.phi * b_k
        if spec.map_kind == "TNprime_normal":
            c_n = spec.phi ** 2 * spec.scale_constant
            return b_n / math.sqrt(c_n)
        return b_n
    if fam is Family.FBBST:
        v = split_sample
        t = spec.instance.parameter
        h = 1.0 / (2.0 * (t + 1) * spec.phi)  # H_{2t+2} - H_{t+1}
        b_m = 1.0 + (v * np.log(v) + (1 - v) * np.log1p(-v)) / h
        if spec.map_kind == "Tmed_normal":
            return b_m / math.sqrt(spec.scale_constant)
        return b_m
    d = spec.instance.parameter
    ent = (split_sample * np.log(split_sample)).sum(axis=1)
    b_q = 1.0 + (2.0 / d) * ent
    if spec.map_kind == "Tquad_normal":
        return b_q / math.sqrt(spec.scale_constant)
    return b_q


# ---------------------------------------------------------------------------
# contraction factors
# ---------------------------------------------------------------------------

def _log_beta(a: float, b: float) -> float:
    return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)


def contraction_factor(spec: FixedPointSpec) -> float:
    """Numeric L2 contraction factor asserted < 1 before iterating.

    mary periodic uses the classical m^2 B(m, 2 alpha - 1) bound; the normal
    maps use branches * E[V^(3/2)]; uniK uses branches * E[V^2]."""
    inst = spec.instance
    fam = inst.family
    p = inst.parameter
    if fam is Family.MARY:
        if spec.map_kind == "TN_periodic":
            alpha = spec.lambda2.real
            return p * p * math.exp(_log_beta(p, 2 * alpha - 1))
        if spec.map_kind == "TNprime_normal":
            return p * (p - 1) * math.exp(_log_beta(2.5, p - 1))
        return 2.0 / (p + 1)
    if fam is Family.FBBST:
        def beta_moment(s: float) -> float:
            return math.exp(math.lgamma(p + 1 + s) + math.lgamma(2 * p + 2)
                            - math.lgamma(2 * p + 2 + s) - math.lgamma(p + 1))
        if spec.map_kind == "Tmed_periodic":
            return 2.0 * beta_moment(2 * spec.lambda2.real - 2)
        if spec.map_kind == "Tmed_normal":
            return 2.0 * beta_moment(1.5)
        return 2.0 * beta_moment(2.0)
    if spec.map_kind == "Tquad_periodic":
        return (2.0 / (2 * spec.lambda2.real - 1)) ** p
    if spec.map_kind == "Tquad_normal":
        return 0.8 ** p
    return (2.0 / 3.0) ** p


# ---------------------------------------------------------------------------
# pool iteration
# ---------------------------------------------------------------------------

@dataclass
class SamplePool:
    spec: FixedPointSpec
    x: np.ndarray
    w: np.ndarray | None
    generation: int
    trace: list = field(default_factory=list)

    def moments(self) -> dict:
        out = {"mean_x": float(self.x.mean()), "var_x": float(self.x.var())}
        if self.w is not None:
            mw = complex(self.w.mean())
            out.update({
                "mean_re_w": mw.real, "mean_im_w": mw.imag,
                "var_w": float(np.mean(np.abs(self.w - mw) ** 2)),
                "cov": float(np.mean((self.x - self.x.mean())
                                     * (self.w.real - mw.real))),
            })
        else:
            out.update({"mean_re_w": 0.0, "mean_im_w": 0.0, "var_w": 0.0, "cov": 0.0})
        return out

    def write_pool_csv(self, fh) -> None:
        fh.write("x,re_w,im_w\n")
        if self.w is None:
            for xv in self.x:
                fh.write(f"{xv:.17g},0,0\n")
        else:
            for xv, wv in zip(self.x, self.w):
                wc = complex(wv)
                fh.write(f"{xv:.17g},{wc.real:.17g},{wc.imag:.17g}\n")

    def write_trace_csv(self, fh) -> None:
        fh.write("generation,mean_x,var_x,mean_re_w,mean_im_w,var_w,cov\n")
        for i, row in enumerate(self.trace):
            fh.write(",".join([str(i)] + [f"{row[k]:.17g}" for k in
                                          ("mean_x", "var_x", "mean_re_w",
                                           "mean_im_w", "var_w", "cov")]) + "\n")


def _draw_split(spec: FixedPointSpec, rng, size: int) -> np.ndarray:
    fam = spec.instance.family
    if fam is Family.MARY:
        return sample_spacings(spec.instance.parameter, rng, size)
    if fam is Family.FBBST:
        return sample_median(spec.instance.parameter, rng, size)
    return sample_volumes(spec.instance.parameter, rng, size)


def _coefficients(spec: FixedPointSpec, split: np.ndarray) -> np.ndarray:
    """First-slot combination weights as a (size, branches) array."""
    if spec.instance.family is Family.FBBST:
        return np.stack([split, 1.0 - split], axis=1)
    return split


def iterate(spec: FixedPointSpec, pool_size: int, generations: int, seed: int,
            full_bivariate: bool = False) -> SamplePool:
    """Evolve a sample pool through the map.

    Each generation resamples the previous pool with replacement;
    generation g draws from Philox key (seed, g), processed in fixed-size
    chunks, so results are reproducible for a given seed.
    """
    if pool_size < 1000:
        raise ValueError("pool_size must be >= 1000")
    factor = contraction_factor(spec)
    if not factor < 1.0:
        raise ContractionError(f"contraction factor {factor:.4f} >= 1 for {spec.map_kind}")

    rng0 = np.random.Generator(np.random.Philox(key=[seed, 2**32]))
    x = np.zeros(pool_size)
    w = None
    if spec.is_periodic:
        w = np.full(pool_size, complex(spec.mean_constraint[1]), dtype=complex)
    elif spec.bivariate:
        # normalised map: the point-mass start is a fixed point of the
        # normalisation with zero variance; start from the constraint set
        x = rng0.standard_normal(pool_size)
        w = rng0.standard_normal(pool_size)

    pool = SamplePool(spec=spec, x=x, w=w, generation=0)
    pool.trace.append(pool.moments())
    branches = spec.instance.branches
    exponent = None if spec.lambda2 is None else spec.lambda2 - 1.0

    for gen in range(1, generations + 1):
        rng = np.random.Generator(np.random.Philox(key=[seed, gen]))
        new_x = np.empty(pool_size)
        new_w = None if w is None else np.empty_like(w)
        for lo in range(0, pool_size, CHUNK):
            hi = min(lo + CHUNK, pool_size)
            size = hi - lo
            idx = rng.integers(0, pool_size, (size, branches))
            split = _draw_split(spec, rng, size)
            coef = _coefficients(spec, split)
            tolls = toll(spec, split)
            new_x[lo:hi] = (coef * pool.x[idx]).sum(axis=1) + tolls
            if new_w is None:
                continue
            if spec.is_periodic:
                powers = np.exp(exponent * np.log(coef))
                new_w[lo:hi] = (powers * pool.w[idx]).sum(axis=1)
            elif full_bivariate:
                new_w[lo:hi] = (np.sqrt(coef) * pool.w[idx]).sum(axis=1)
            else:
                fresh = rng.standard_normal((size, branches))
                new_w[lo:hi] = (np.sqrt(coef) * fresh).sum(axis=1)
        if new_w is not None and not spec.is_periodic and full_bivariate:
            # the sqrt-coefficient combination amplifies an off-zero pool
            # mean by branches * E[sqrt(V)] > 1 per generation; the map is
            # defined on the zero-mean unit-variance constraint set, so
            # project back (re-standardise) after every step
            new_w = (new_w - new_w.mean()) / new_w.std()
        pool = SamplePool(spec=spec, x=new_x, w=new_w,
                          generation=gen, trace=pool.trace)
        pool.trace.append(pool.moments())
        if gen >= 5 and pool.x.var() < 1e-12 * (1.0 + spec.scale_constant):
            raise PoolDegeneracyError(
                f"pool variance collapsed at generation {gen}")
    return pool


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------

def _distance_correlation(a: np.ndarray, b: np.ndarray) -> float:
    n = len(a)
    A = np.abs(a[:, None] - a[None, :])
    B = np.abs(b[:, None] - b[None, :])
    A = A - A.mean(axis=0) - A.mean(axis=1)[:, None] + A.mean()
    B = B - B.mean(axis=0) - B.mean(axis=1)[:, None] + B.mean()
    dcov2 = (A * B).mean()
    dvar_a = (A * A).mean()
    dvar_b = (B * B).mean()
    if dvar_a <= 0 or dvar_b <= 0:
        return 0.0
    return math.sqrt(max(dcov2, 0.0) / math.sqrt(dvar_a * dvar_b))


def diagnose(pool: SamplePool, subsample: int = 2048, seed: int = 0) -> dict:
    """Moments plus normality and independence screens of a converged pool."""
    from scipy import stats as sstats

    if len(pool.x) < 1000:
        raise ValueError("pool too small to diagnose")
    out = {"map_kind": pool.spec.map_kind, "generation": pool.generation,
           "pool": len(pool.x)}
    out.update(pool.moments())
    x = pool.x
    out["skew_x"] = float(sstats.skew(x))
    if pool.w is not None:
        wr = pool.w.real if np.iscomplexobj(pool.w) else pool.w
        if not pool.spec.is_periodic:
            ks = sstats.kstest(wr, "norm")
            out["ks_stat"] = float(ks.statistic)
            out["ks_pvalue"] = float(ks.pvalue)
        out["slot_correlation"] = float(np.corrcoef(x, wr)[0, 1])
        rng = np.random.Generator(np.random.Philox(key=[seed, 2**40]))
        pick = rng.choice(len(x), size=min(subsample, len(x)), replace=False)
        out["distance_correlation"] = _distance_correlation(x[pick], wr[pick])
    if pool.spec.is_periodic:
        th = complex(pool.spec.mean_constraint[1])
        mw = complex(pool.w.mean())
        out["mean_w_minus_theta"] = abs(mw - th)
        out["theta_re"], out["theta_im"] = th.real, th.imag
    return out
