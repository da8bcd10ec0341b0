import cmath
import math

import numpy as np
import pytest

from logtrees.asymptotics import RegimeMismatchError, kpl_variance_constant
from logtrees.families import fbbst, mary, quadtree, harmonic
from logtrees.fixpoint import (
    ContractionError,
    FixedPointSpec,
    contraction_factor,
    diagnose,
    fixed_point_spec,
    iterate,
    sample_median,
    sample_spacings,
    sample_volumes,
    toll,
    variance_scale,
)
from logtrees.roots import solve_spectrum


def rng_for(seed):
    return np.random.Generator(np.random.Philox(key=[seed, 0]))


def test_spacings_partition_unit_interval():
    v = sample_spacings(27, rng_for(1), 5000)
    assert v.shape == (5000, 27)
    assert np.abs(v.sum(axis=1) - 1.0).max() < 1e-12
    assert (v > 0).all()


def test_median_beta_moments():
    t = 3
    v = sample_median(t, rng_for(2), 200_000)
    # Beta(4,4): mean 1/2, var 1/36
    assert abs(v.mean() - 0.5) < 4 * math.sqrt(1 / 36 / 200_000)
    assert abs(v.var() - 1 / 36) < 3e-4


def test_volumes_partition_cube():
    q = sample_volumes(3, rng_for(3), 2000)
    assert q.shape == (2000, 8)
    assert np.abs(q.sum(axis=1) - 1.0).max() < 1e-12


def test_spacing_fractional_moment_identity_m27():
    # E[V_1^(lambda_2 - 1)] = 1/m within 3 standard errors
    m = 27
    spec = solve_spectrum(mary(m))
    lam = spec.lambda2
    draws = 1_000_000
    v = sample_spacings(m, rng_for(5), draws)[:, 0]
    vals = np.exp((lam - 1.0) * np.log(v))
    err_re = vals.real.std(ddof=1) / math.sqrt(draws)
    err_im = vals.imag.std(ddof=1) / math.sqrt(draws)
    assert abs(vals.real.mean() - 1 / m) < 3 * err_re
    assert abs(vals.imag.mean()) < 3 * err_im


def test_toll_bk_mean_zero():
    inst = mary(10)
    spec = fixed_point_spec(inst, "uniK")
    draws = 1_000_000
    v = sample_spacings(10, rng_for(7), draws)
    b = toll(spec, v)
    assert abs(b.mean()) < 3 * b.std(ddof=1) / math.sqrt(draws)


def test_toll_bn_is_phi_times_bk():
    inst = mary(27)
    spec_uni = fixed_point_spec(inst, "uniK")
    spec_tn = fixed_point_spec(inst, "TN_periodic")
    v = sample_spacings(27, rng_for(8), 512)
    phi = spec_uni.phi
    assert np.allclose(toll(spec_tn, v), phi * toll(spec_uni, v), rtol=1e-12)


def test_toll_bq_d1_matches_binary_entropy_form():
    inst = quadtree(1)
    spec = fixed_point_spec(inst, "uniK")
    q = sample_volumes(1, rng_for(9), 256)
    x = q[:, 0]
    want = 1 + 2 * (x * np.log(x) + (1 - x) * np.log(1 - x))
    assert np.allclose(toll(spec, q), want, rtol=1e-12)


def test_toll_bm_mean_zero():
    spec = fixed_point_spec(fbbst(2), "uniK")
    draws = 400_000
    v = sample_median(2, rng_for(10), draws)
    b = toll(spec, v)
    assert abs(b.mean()) < 3 * b.std(ddof=1) / math.sqrt(draws)


def test_contraction_factors_below_one():
    assert contraction_factor(fixed_point_spec(mary(27), "TN_periodic")) < 1
    assert contraction_factor(fixed_point_spec(mary(3), "TNprime_normal")) < 1
    assert contraction_factor(fixed_point_spec(fbbst(59), "Tmed_periodic")) < 1
    assert contraction_factor(fixed_point_spec(fbbst(5), "Tmed_normal")) < 1
    assert contraction_factor(fixed_point_spec(quadtree(9), "Tquad_periodic")) < 1
    assert contraction_factor(fixed_point_spec(quadtree(3), "Tquad_normal")) < 1
    assert contraction_factor(fixed_point_spec(mary(3), "uniK")) == 0.5


def test_regime_mismatch_rejected():
    with pytest.raises(RegimeMismatchError):
        fixed_point_spec(mary(26), "TN_periodic")
    with pytest.raises(RegimeMismatchError):
        fixed_point_spec(mary(27), "TNprime_normal")
    with pytest.raises(RegimeMismatchError):
        fixed_point_spec(fbbst(58), "Tmed_periodic")
    with pytest.raises(RegimeMismatchError):
        fixed_point_spec(quadtree(8), "Tquad_periodic")
    with pytest.raises(RegimeMismatchError):
        fixed_point_spec(mary(27), "Tmed_periodic")


def test_pool_size_floor():
    with pytest.raises(ValueError):
        iterate(fixed_point_spec(mary(3), "uniK"), 10, 5, seed=0)


@pytest.mark.parametrize("m", [3, 10])
def test_unik_variance_matches_ck(m):
    spec = fixed_point_spec(mary(m), "uniK")
    gens = 30
    pool = iterate(spec, 60_000, gens, seed=101)
    ck = kpl_variance_constant(m)
    assert abs(pool.x.var() - ck) < 0.05 * ck
    # the pool mean performs an O(sigma/sqrt(P)) random walk per generation
    assert abs(pool.x.mean()) < 5 * math.sqrt(gens * ck / 60_000)


def test_npl_toll_limit_is_phi_times_kpl_limit():
    # the first slot of the periodic bivariate map iterates the NPL-scale
    # toll b_N = phi b_K; its limit variance is phi^2 C_K
    m = 27
    spec = fixed_point_spec(mary(m), "TN_periodic")
    pool = iterate(spec, 60_000, 30, seed=41)
    want = spec.phi**2 * kpl_variance_constant(m)
    assert abs(pool.x.var() - want) < 0.05 * want


def test_unik_variance_matches_exact_table_grid_top():
    # pool variance vs the exact-table VK/n^2 at the top of the float grid
    from logtrees.moments import second_moment_tables
    m = 3
    table = second_moment_tables(mary(m), 8192, "float", cap=8192)
    top = table.column("VK")[8192] / 8192**2
    pool = iterate(fixed_point_spec(mary(m), "uniK"), 50_000, 30, seed=13)
    assert abs(pool.x.var() - top) < 0.05 * top


def test_unik_fbbst_and_quadtree_variances():
    spec = fixed_point_spec(fbbst(1), "uniK")
    pool = iterate(spec, 50_000, 30, seed=21)
    dx = variance_scale(fbbst(1))
    assert abs(pool.x.var() - dx) < 0.06 * dx

    spec = fixed_point_spec(quadtree(2), "uniK")
    pool = iterate(spec, 50_000, 30, seed=22)
    ex = variance_scale(quadtree(2))
    assert abs(pool.x.var() - ex) < 0.06 * ex


def test_unik_pool_skewed():
    # the KPL limit is non-normal: visible skewness
    pool = iterate(fixed_point_spec(mary(3), "uniK"), 50_000, 30, seed=31)
    from scipy import stats as sstats
    assert abs(sstats.skew(pool.x)) > 0.1


def test_tn_periodic_mean_preserved():
    inst = mary(27)
    spec = fixed_point_spec(inst, "TN_periodic")
    pool = iterate(spec, 30_000, 12, seed=41)
    th = complex(spec.mean_constraint[1])
    sew = math.sqrt(pool.moments()["var_w"] / len(pool.x))
    drift = abs(complex(pool.w.mean()) - th)
    assert drift < 4 * sew + 1e-9
    # mean drift over the last 5 generations stays within noise
    for row in pool.trace[-5:]:
        assert abs(complex(row["mean_re_w"], row["mean_im_w"]) - th) < 5 * sew + 1e-9


def test_tmed_periodic_mean_preserved():
    inst = fbbst(59)
    spec = fixed_point_spec(inst, "Tmed_periodic")
    pool = iterate(spec, 20_000, 10, seed=43)
    th = complex(spec.mean_constraint[1])
    sew = math.sqrt(pool.moments()["var_w"] / len(pool.x)) if pool.moments()["var_w"] else 1e-6
    assert abs(complex(pool.w.mean()) - th) < 5 * sew + 1e-9


def test_tquad_periodic_mean_preserved_with_synthetic_theta():
    spec = fixed_point_spec(quadtree(9), "Tquad_periodic", theta=0.5 + 0.25j)
    pool = iterate(spec, 20_000, 8, seed=44)
    th = 0.5 + 0.25j
    sew = math.sqrt(pool.moments()["var_w"] / len(pool.x))
    assert abs(complex(pool.w.mean()) - th) < 5 * sew + 1e-9


def test_tnprime_normal_slot_and_independence():
    spec = fixed_point_spec(mary(3), "TNprime_normal")
    pool = iterate(spec, 100_000, 25, seed=51)
    d = diagnose(pool)
    assert d["ks_pvalue"] > 0.01
    assert abs(d["slot_correlation"]) < 0.05
    assert d["distance_correlation"] < 0.08
    # first slot of the normalised map has unit variance
    assert abs(pool.x.var() - 1.0) < 0.05


def test_tnprime_fully_iterated_variant_agrees():
    spec = fixed_point_spec(mary(3), "TNprime_normal")
    pool = iterate(spec, 60_000, 25, seed=52, full_bivariate=True)
    d = diagnose(pool)
    assert d["ks_pvalue"] > 0.01
    assert abs(d["slot_correlation"]) < 0.05


def test_tmed_and_tquad_normal_maps():
    for spec, seed in ((fixed_point_spec(fbbst(1), "Tmed_normal"), 61),
                       (fixed_point_spec(quadtree(2), "Tquad_normal"), 62)):
        pool = iterate(spec, 30_000, 25, seed=seed)
        d = diagnose(pool)
        assert d["ks_pvalue"] > 0.01, spec.map_kind
        assert abs(d["slot_correlation"]) < 0.05, spec.map_kind
        # normalised first slot has unit limit variance
        assert abs(pool.x.var() - 1.0) < 0.06, spec.map_kind


def test_deterministic_replay():
    spec = fixed_point_spec(mary(4), "uniK")
    p1 = iterate(spec, 5000, 8, seed=77)
    p2 = iterate(spec, 5000, 8, seed=77)
    assert np.array_equal(p1.x, p2.x)
    p3 = iterate(spec, 5000, 8, seed=78)
    assert not np.array_equal(p1.x, p3.x)


def test_pool_csv_exports(tmp_path):
    spec = fixed_point_spec(mary(27), "TN_periodic")
    pool = iterate(spec, 2000, 3, seed=3)
    with open(tmp_path / "pool.csv", "w") as fh:
        pool.write_pool_csv(fh)
    with open(tmp_path / "trace.csv", "w") as fh:
        pool.write_trace_csv(fh)
    lines = (tmp_path / "pool.csv").read_text().splitlines()
    assert lines[0] == "x,re_w,im_w" and len(lines) == 2001
    tlines = (tmp_path / "trace.csv").read_text().splitlines()
    assert tlines[0] == "generation,mean_x,var_x,mean_re_w,mean_im_w,var_w,cov"
    assert len(tlines) == 5  # initial pool + 3 generations
