"""Closed-form asymptotic constants and periodic functions.

Linear-mean and quadratic-variance constants:

    phi  = 1/(2(H_m - 1))                      occupancy constant
    c1   = -1/2 - 4 phi + 2 phi^2 (H_m^(2)-1) + 2 phi gamma
    C_K  = 4 phi^2 (((m+1) H_m^(2) - 2)/(m-1) - pi^2/6)
    D_X  = ((2t+3)/(t+1) H_{2t+2}^(2) - (t+2)/(t+1) H_{t+1}^(2) - pi^2/6)
           / (H_{2t+2} - H_{t+1})^2
    E_X  = 3^d/(3^d - 2^d) * (21 - 2 pi^2)/(9 d)

The c1 constant carries 2 phi gamma, not the sometimes-quoted plus-gamma:
re-deriving through the asymptotic transfer with toll n-m+1 gives the
2 phi gamma form, and at m=2 it reproduces the classical quicksort value
2 gamma - 4.  The quoted variant stays available behind ``as_printed``.

Periodic second-order factors (z = beta log n):

    Var(S_n)      ~ F1(z) n^(2 alpha - 2)      (m >= 27)
    Cov(S_n, K_n) ~ F2(z) n^alpha              (m >= 14)
    rho(S_n, K_n) ~ F2(z)/sqrt(C_K F1(z))      (m >= 27)

with fbbst analogues G1 (t >= 59), G2 (t >= 29) and quadtree analogues
P1 (d >= 9), P2 (d >= 6).  F2 and G2 are derived from the Dirichlet
derivative identity and the asymptotic transfer; the sometimes-quoted
displays drop the conjugate-pair factor and carry inconsistent digamma
coefficients, and are rejected by the exact moment tables (the toll
amplitudes extracted from the tables match the forms used here).
Every gamma ratio runs through log space, so branching degrees in the
hundreds stay in range.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction

from .families import Family, FamilyInstance, harmonic, occupancy_constant
from .gammafn import digamma, gamma, log_gamma
from .roots import (
    Spectrum,
    amplitude,
    classify_regime,
    quadtree_exponents,
    solve_spectrum,
    theta,
)

EULER_GAMMA = 0.57721566490153286061
PI = 3.14159265358979323846


class RegimeMismatchError(ValueError):
    """Requested a periodic function outside its parameter range."""


# ---------------------------------------------------------------------------
# scalar constants
# ---------------------------------------------------------------------------

def kpl_variance_constant(m: int) -> float:
    """C_K: quadratic variance constant of the key path length, m >= 2."""
    if m < 2:
        raise ValueError("m >= 2 required")
    h2 = float(harmonic(m, 2))
    phi = float(1 / (2 * (harmonic(m) - 1)))
    return 4 * phi * phi * (((m + 1) * h2 - 2) / (m - 1) - PI * PI / 6)


def fbbst_tpl_variance_constant(t: int) -> float:
    """D_X: quadratic variance constant of the fringe-balanced total path
    length, t >= 0 (t = 0 is plain quicksort)."""
    if t < 0:
        raise ValueError("t >= 0 required")
    h = float(harmonic(2 * t + 2) - harmonic(t + 1))
    bracket = ((2 * t + 3) / (t + 1) * float(harmonic(2 * t + 2, 2))
               - (t + 2) / (t + 1) * float(harmonic(t + 1, 2)) - PI * PI / 6)
    return bracket / (h * h)


def quadtree_ipl_variance_constant(d: int) -> float:
    """E_X: quadratic variance constant of the quadtree internal path
    length, d >= 1 (d = 1 is again quicksort)."""
    if d < 1:
        raise ValueError("d >= 1 required")
    return 3.0**d / (3.0**d - 2.0**d) * (21 - 2 * PI * PI) / (9 * d)


def c1_constant(m: int, as_printed: bool = False) -> float:
    """Linear coefficient of E[K_n] = 2 phi n log n + c1 n + o(n)."""
    phi = float(1 / (2 * (harmonic(m) - 1)))
    base = -0.5 - 4 * phi + 2 * phi * phi * (float(harmonic(m, 2)) - 1)
    return base + (EULER_GAMMA if as_printed else 2 * phi * EULER_GAMMA)


def c2_minus_phi_c1(spectrum: Spectrum) -> float:
    """c2 - phi c1 = 2 phi (phi - 1/(m-1) + sum_l A_l/(2 - lambda_l)) from
    high-precision roots; a rational number in disguise."""
    inst = spectrum.instance
    if inst.family is not Family.MARY:
        raise ValueError("c2 - phi c1 is an m-ary quantity")
    m = inst.parameter
    phi = float(1 / (2 * (harmonic(m) - 1)))
    tot = 0.0 + 0.0j
    for k in range(2, spectrum.degree + 1):
        lam = complex(spectrum.roots[k - 1])
        tot += amplitude(spectrum, k) / (2.0 - lam)
    if abs(tot.imag) > 1e-9 * max(1.0, abs(tot.real)):
        raise ArithmeticError(f"root sum not real: {tot}")
    return 2 * phi * (phi - 1 / (m - 1) + tot.real)


# exact rational values of c2 - phi c1, m = 3..30 (reproduced numerically
# to 1e-9 relative by the root-sum formula; see the acceptance suite)
REFERENCE_C2C1: dict[int, Fraction] = {
    3: Fraction(12, 125),
    4: Fraction(222, 2197),
    5: Fraction(44670, 456533),
    6: Fraction(710, 7569),
    7: Fraction(8990170, 99806103),
    8: Fraction(86959460, 1001561769),
    9: Fraction(8225243460, 97908438529),
    10: Fraction(9368632980, 114862129381),
    11: Fraction(13941168359580, 175531341607271),
    12: Fraction(15364018080180, 198165483844901),
    13: Fraction(36778736979244260, 484907780151231137),
    14: Fraction(39706104830251860, 534148059351752117),
    15: Fraction(42542306175669300, 583013664848115773),
    16: Fraction(362341148683714200, 5051607560589134719),
    17: Fraction(60809828396490973800, 861420713064800471777),
    18: Fraction(220781849887636437400, 3174476111482140491583),
    19: Fraction(1589879045909940738152200, 23180880112213178399314917),
    20: Fraction(66535629228892650939112, 982905224931956375768865),
    21: Fraction(69399644946307963559272, 1037954891250806970920625),
    22: Fraction(72191400913204902200872, 1092384284013327674677545),
    23: Fraction(911488027263952226045421464, 13945777153309079949132939375),
    24: Fraction(943834826916499599456679304, 14593082411910111966602252205),
    25: Fraction(3048229719576792424490262245800, 47603282606571951420821994029889),
    26: Fraction(3144754504512378111611222765800, 49580602253255626178697360169689),
    27: Fraction(787117453959995151898324789769400, 12523181563980976087610969389067627),
    28: Fraction(809570585901011449194661971389400, 12992983079952314295925927936613927),
    29: Fraction(20280854972612671613961769087339836600,
                 328217277361176269245342166728792498003),
    30: Fraction(20806237502125190663861808383733444600,
                 339424705221771320114642916145949390923),
}


@dataclass(frozen=True)
class FamilyConstants:
    """Bundle of closed-form asymptotic constants for one instance."""

    instance: FamilyInstance
    phi: Fraction | None
    harmonic_1: Fraction
    harmonic_2: Fraction
    c1: float | None
    c2_minus_phi_c1: float | None
    c2_minus_phi_c1_exact: Fraction | None
    cK: float
    theta: complex | None

    def to_dict(self) -> dict:
        ex = self.c2_minus_phi_c1_exact
        return {
            "instance": str(self.instance),
            "phi": None if self.phi is None else f"{self.phi.numerator}/{self.phi.denominator}",
            "phi_float": None if self.phi is None else float(self.phi),
            "harmonic_1": f"{self.harmonic_1.numerator}/{self.harmonic_1.denominator}",
            "harmonic_2": f"{self.harmonic_2.numerator}/{self.harmonic_2.denominator}",
            "c1": self.c1,
            "c2_minus_phi_c1": self.c2_minus_phi_c1,
            "c2_minus_phi_c1_exact": None if ex is None else f"{ex.numerator}/{ex.denominator}",
            "cK": self.cK,
            "theta_re": None if self.theta is None else self.theta.real,
            "theta_im": None if self.theta is None else self.theta.imag,
        }


def constants(instance: FamilyInstance, spectrum: Spectrum | None = None) -> FamilyConstants:
    """All closed-form constants of one instance (solving the spectrum on
    demand for the root-dependent ones)."""
    fam = instance.family
    p = instance.parameter
    if fam is Family.MARY:
        if spectrum is None:
            spectrum = solve_spectrum(instance)
        return FamilyConstants(
            instance=instance,
            phi=occupancy_constant(instance),
            harmonic_1=harmonic(p),
            harmonic_2=harmonic(p, 2),
            c1=c1_constant(p),
            c2_minus_phi_c1=c2_minus_phi_c1(spectrum),
            c2_minus_phi_c1_exact=REFERENCE_C2C1.get(p),
            cK=kpl_variance_constant(p),
            theta=theta(spectrum),
        )
    if fam is Family.FBBST:
        if spectrum is None:
            spectrum = solve_spectrum(instance)
        return FamilyConstants(
            instance=instance,
            phi=occupancy_constant(instance),
            harmonic_1=harmonic(2 * p + 2) - harmonic(p + 1),
            harmonic_2=harmonic(2 * p + 2, 2),
            c1=None,
            c2_minus_phi_c1=None,
            c2_minus_phi_c1_exact=None,
            cK=fbbst_tpl_variance_constant(p),
            theta=theta(spectrum),
        )
    return FamilyConstants(
        instance=instance,
        phi=None,
        harmonic_1=harmonic(p),
        harmonic_2=harmonic(p, 2),
        c1=None,
        c2_minus_phi_c1=None,
        c2_minus_phi_c1_exact=None,
        cK=quadtree_ipl_variance_constant(p),
        theta=None,
    )


# ---------------------------------------------------------------------------
# Dirichlet integrals over the simplex
# ---------------------------------------------------------------------------

def dirichlet_I(u: complex, v: complex, m: int) -> complex:
    """Closed form of the simplex integral of (sum x_l^(u-1))(sum x_r^(v-1)):
    (m Gamma(u+v-1) + m(m-1) Gamma(u) Gamma(v)) / Gamma(u+v+m-2)."""
    if m < 2:
        raise ValueError("m >= 2 required")
    num = m * gamma(u + v - 1) + m * (m - 1) * gamma(u) * gamma(v)
    return num / gamma(u + v + m - 2)


def dirichlet_dv(u: complex, m: int) -> complex:
    """d/dv of dirichlet_I at v = 2: the simplex integral of
    (sum x_l^(u-1))(sum x_r log x_r)."""
    u = complex(u)
    return (m * gamma(u) / gamma(u + m)
            * (u * digamma(u + 1) + (m - 1) * (1 - EULER_GAMMA)
               - (m + u - 1) * digamma(m + u)))


def dirichlet_dudv(m: int, as_printed: bool = False) -> float:
    """d^2/du dv of dirichlet_I at u = v = 2: the simplex integral of
    (sum x_r log x_r)^2.

    The closed form is (H_m^(2) + (H_m-1)^2 - 2/(m+1)
    - (m-1) pi^2 / (6(m+1))) / (m-1)!, which matches adaptive quadrature
    and the quadratic-toll identity behind C_K.  The sometimes-quoted
    variant with 4/phi^2 in place of (H_m-1)^2 = 1/(4 phi^2) and without
    the 1/(m-1)! normalisation is kept behind ``as_printed``.
    """
    h1 = float(harmonic(m))
    h2 = float(harmonic(m, 2))
    if as_printed:
        phi = 1 / (2 * (h1 - 1))
        return h2 + 4 / phi**2 - 2 / (m + 1) - (m - 1) * PI * PI / (6 * (m + 1))
    return ((h2 + (h1 - 1) ** 2 - 2 / (m + 1) - (m - 1) * PI * PI / (6 * (m + 1)))
            / math.factorial(m - 1))


# ---------------------------------------------------------------------------
# periodic functions
# ---------------------------------------------------------------------------

def _lg(z) -> complex:
    return log_gamma(complex(z))


def _f1_coefficients(m: int, lam: complex, a2: complex) -> tuple[float, complex]:
    alpha = lam.real
    log_mf = math.lgamma(m + 1)
    # constant block: -1 + m!(m-1)|Gamma(lam)|^2 / (Gamma(2a+m-2) - m!Gamma(2a-1))
    r_real = math.exp(log_mf + math.lgamma(2 * alpha - 1) - math.lgamma(2 * alpha + m - 2))
    amp2 = abs(a2) ** 2 * math.exp(-2 * _lg(lam).real)
    big = (m - 1) * abs(a2) ** 2 * math.exp(log_mf - math.lgamma(2 * alpha + m - 2))
    c0 = 2 * (-amp2 + big / (1 - r_real))
    # oscillating block at frequency 2 beta
    q = a2 * cmath.exp(-_lg(lam))
    r_cplx = cmath.exp(log_mf + _lg(2 * lam - 1) - _lg(2 * lam + m - 2))
    big_c = (m - 1) * a2 * a2 * cmath.exp(log_mf - _lg(2 * lam + m - 2))
    c2 = -q * q + big_c / (1 - r_cplx)
    return c0, c2


def _f2_coefficient(m: int, lam: complex, a2: complex, phi: float) -> complex:
    inner = (lam + m - 1) + 2 * phi * (
        lam * digamma(lam + 1) + (m - 1) * (1 - EULER_GAMMA)
        - (m + lam - 1) * digamma(m + lam))
    return a2 * cmath.exp(-_lg(lam)) * inner / (m - 1)


def _beta_moment(s: complex, t: int) -> complex:
    """E[V^s] for V ~ Beta(t+1, t+1)."""
    return cmath.exp(_lg(t + 1 + s) + math.lgamma(2 * t + 2)
                     - _lg(2 * t + 2 + s) - math.lgamma(t + 1))


def _g1_coefficients(t: int, rho: complex, c2amp: complex) -> tuple[float, complex]:
    at = rho.real
    log_b0 = 2 * math.lgamma(t + 1) - math.lgamma(2 * t + 2)
    r23 = math.exp(2 * _lg(t + rho).real - math.lgamma(2 * t + 2 * at) - log_b0)
    m_real = _beta_moment(2 * at - 2, t).real
    amp2 = abs(c2amp) ** 2 * math.exp(-2 * _lg(rho).real)
    c0 = 2 * amp2 * (-1 + 2 * r23 / (1 - 2 * m_real))
    r22 = cmath.exp(2 * _lg(t + rho) - _lg(2 * t + 2 * rho) - log_b0)
    m_cplx = _beta_moment(2 * rho - 2, t)
    q = c2amp * cmath.exp(-_lg(rho))
    c2 = q * q * (-1 + 2 * r22 / (1 - 2 * m_cplx))
    return c0, c2


def _g2_coefficient(t: int, rho: complex, c2amp: complex) -> complex:
    h = float(harmonic(2 * t + 2) - harmonic(t + 1))
    m_rho = _beta_moment(rho, t)
    e_vlogv = m_rho * (digamma(t + 1 + rho) - digamma(2 * t + 2 + rho))
    log_b0 = 2 * math.lgamma(t + 1) - math.lgamma(2 * t + 2)
    n1 = cmath.exp(_lg(t + rho) + math.lgamma(t + 2) - _lg(2 * t + 2 + rho) - log_b0)
    e_cross = n1 * (digamma(t + 2) - digamma(2 * t + 2 + rho))
    stuff = 1.0 + (2.0 / h) * (e_vlogv + e_cross)
    return c2amp * cmath.exp(-_lg(rho)) * stuff / (1 - 2 * m_rho)


def _eta(u: complex, v: complex, d: int) -> complex:
    base = 1 / (u + v + 1) + cmath.exp(_lg(u + 1) + _lg(v + 1) - _lg(u + v + 2))
    return base ** d


def _eta_dv_at_one(u: complex, d: int) -> complex:
    base = 1 / (u + 2) + 1 / ((u + 1) * (u + 2))
    inner = (-1 / (u + 2) ** 2
             + (1 / ((u + 1) * (u + 2))) * (digamma(2.0) - digamma(u + 3)))
    return d * base ** (d - 1) * inner


def _quadtree_cl(u: complex, v: complex, d: int) -> complex:
    return 1 - _eta(0.0, u, d) - _eta(0.0, v, d) + 2 ** d * _eta(u, v, d)


def _quadtree_ck(u: complex, d: int) -> complex:
    # printed with two arguments but used with one; the single-argument
    # reading eta(0,u) + 2^(d+1)/d * d/dv eta(u,v)|_{v=1} is implemented
    return _eta(0.0, u, d) + (2 ** (d + 1) / d) * _eta_dv_at_one(u, d)


class PeriodicFunction:
    """Pointwise-evaluable periodic factor; real-valued, period pi or 2 pi."""

    KINDS = ("F1", "F2", "Frho", "G1", "G2", "P1", "P2")

    def __init__(self, kind: str, instance: FamilyInstance, const: float,
                 osc: complex, frequency: int, extra=None):
        self.kind = kind
        self.instance = instance
        self.const = const          # non-oscillating part
        self.osc = osc              # coefficient of e^(i * frequency * z)
        self.frequency = frequency  # 1 or 2
        self._extra = extra         # (F2fn, F1fn, cK) for Frho

    @property
    def period(self) -> float:
        return 2 * math.pi / self.frequency

    def __call__(self, z: float) -> float:
        if self.kind == "Frho":
            f2, f1, c_k = self._extra
            denom = c_k * f1(z)
            if denom <= 0:
                raise ArithmeticError(f"F1({z}) <= 0; correlation factor undefined")
            return f2(z) / math.sqrt(denom)
        return self.const + 2 * (self.osc * cmath.exp(1j * self.frequency * z)).real

    def evaluate(self, z: float) -> float:
        return self(z)

    def sample(self, points: int):
        """(z, value) pairs over one full 2 pi window."""
        zs = [2 * math.pi * i / points for i in range(points)]
        return [(z, self(z)) for z in zs]

    def write_csv(self, fh, points: int = 512) -> None:
        fh.write("z,value\n")
        for z, val in self.sample(points):
            fh.write(f"{z:.17g},{val:.17g}\n")


def periodic(kind: str, instance: FamilyInstance,
             spectrum: Spectrum | None = None,
             cplus: complex = 1.0 + 0.0j) -> PeriodicFunction:
    """Construct one of the periodic factors, enforcing its regime.

    P1/P2 depend on an amplitude the theory leaves to external work; it is
    caller-supplied (default 1) and only the shape of P1/P2 is meaningful.
    """
    fam = instance.family
    p = instance.parameter
    if kind in ("F1", "F2", "Frho"):
        if fam is not Family.MARY:
            raise RegimeMismatchError(f"{kind} is an m-ary factor")
        need = 27 if kind in ("F1", "Frho") else 14
        if p < need:
            raise RegimeMismatchError(f"{kind} needs m >= {need}, got m = {p}")
        if spectrum is None:
            spectrum = solve_spectrum(instance)
        lam = spectrum.lambda2
        a2 = amplitude(spectrum, 2)
        phi = float(occupancy_constant(instance))
        if kind == "F1":
            c0, c2 = _f1_coefficients(p, lam, a2)
            return PeriodicFunction("F1", instance, c0, c2, 2)
        if kind == "F2":
            q = _f2_coefficient(p, lam, a2, phi)
            return PeriodicFunction("F2", instance, 0.0, q, 1)
        f1 = periodic("F1", instance, spectrum)
        f2 = periodic("F2", instance, spectrum)
        return PeriodicFunction("Frho", instance, 0.0, 0.0, 2,
                                extra=(f2, f1, kpl_variance_constant(p)))
    if kind in ("G1", "G2"):
        if fam is not Family.FBBST:
            raise RegimeMismatchError(f"{kind} is a fringe-balanced factor")
        need = 59 if kind == "G1" else 29
        if p < need:
            raise RegimeMismatchError(f"{kind} needs t >= {need}, got t = {p}")
        if spectrum is None:
            spectrum = solve_spectrum(instance)
        rho = spectrum.lambda2
        c2amp = amplitude(spectrum, 2)
        if kind == "G1":
            c0, c2 = _g1_coefficients(p, rho, c2amp)
            return PeriodicFunction("G1", instance, c0, c2, 2)
        q = _g2_coefficient(p, rho, c2amp)
        return PeriodicFunction("G2", instance, 0.0, q, 1)
    if kind in ("P1", "P2"):
        if fam is not Family.QUADTREE:
            raise RegimeMismatchError(f"{kind} is a quadtree factor")
        need = 9 if kind == "P1" else 6
        if p < need:
            raise RegimeMismatchError(f"{kind} needs d >= {need}, got d = {p}")
        qe = quadtree_exponents(p)
        u = complex(qe.alpha_hat, qe.beta_hat)
        d = p
        if kind == "P1":
            mult_r = ((2 * qe.alpha_hat + 1) ** d
                      / ((2 * qe.alpha_hat + 1) ** d - 2.0 ** d))
            c0 = 2 * mult_r * abs(cplus) ** 2 * _quadtree_cl(u, u.conjugate(), d).real
            zmult = (2 * u + 1) ** d / ((2 * u + 1) ** d - 2.0 ** d)
            c2 = zmult * cplus * cplus * _quadtree_cl(u, u, d)
            return PeriodicFunction("P1", instance, c0, c2, 2)
        zmult = (u + 2) ** d / ((u + 2) ** d - 2.0 ** d)
        q = zmult * cplus * _quadtree_ck(u, d)
        return PeriodicFunction("P2", instance, 0.0, q, 1)
    raise ValueError(f"unknown periodic kind {kind!r}")


# ---------------------------------------------------------------------------
# prediction rows for corr_profile
# ---------------------------------------------------------------------------

def profile_rows(instance: FamilyInstance, n: int, stats) -> list[dict]:
    """Empirical-vs-predicted rows for one grid point; used by
    treesim.corr_profile."""
    fam = instance.family
    p = instance.parameter
    rows = []
    count = stats.count

    def add(stat, empirical, stderr, predicted, regime):
        rows.append({"n": n, "stat": stat, "empirical": empirical,
                     "stderr": stderr, "predicted": predicted, "regime": regime})

    if fam is Family.MARY:
        spectrum = solve_spectrum(instance)
        regime = classify_regime(spectrum)
        tag = f"cov={regime.covariance_phase.value},dist={regime.distribution_phase.value}"
        phi = float(occupancy_constant(instance))
        add("mean_S_over_n", stats.mean("S") / n, stats.sem("S") / n, phi, tag)
        add("var_K_over_n2", stats.var("K") / n**2,
            stats.var("K") / n**2 * math.sqrt(2 / (count - 1)),
            kpl_variance_constant(p), tag)
        rho_sk = stats.corr("S", "K")
        if p >= 27:
            pred = periodic("Frho", instance, spectrum)(spectrum.beta * math.log(n))
        else:
            pred = 0.0
        add("rho_SK", rho_sk, (1 - rho_sk**2) / math.sqrt(count), pred, tag)
        rho_kn = stats.corr("K", "N")
        add("rho_KN", rho_kn, (1 - rho_kn**2) / math.sqrt(count), 1.0, tag)
        return rows
    if fam is Family.FBBST:
        spectrum = solve_spectrum(instance)
        regime = classify_regime(spectrum)
        tag = f"cov={regime.covariance_phase.value},dist={regime.distribution_phase.value}"
        phi = float(occupancy_constant(instance))
        add("mean_S_over_n", stats.mean("S") / n, stats.sem("S") / n, phi, tag)
        add("var_X_over_n2", stats.var("X") / n**2,
            stats.var("X") / n**2 * math.sqrt(2 / (count - 1)),
            fbbst_tpl_variance_constant(p), tag)
        rho = stats.corr("S", "X")
        if p >= 59:
            z = spectrum.beta * math.log(n)
            g1 = periodic("G1", instance, spectrum)
            g2 = periodic("G2", instance, spectrum)
            pred = g2(z) / math.sqrt(fbbst_tpl_variance_constant(p) * g1(z))
        else:
            pred = 0.0
        add("rho_SX", rho, (1 - rho**2) / math.sqrt(count), pred, tag)
        return rows
    qe = quadtree_exponents(p)
    regime = classify_regime(qe)
    tag = f"cov={regime.covariance_phase.value},dist={regime.distribution_phase.value}"
    add("mean_Xi_over_nlogn", stats.mean("Xi") / (n * math.log(n)),
        stats.sem("Xi") / (n * math.log(n)), 2.0 / p, tag)
    add("var_Xi_over_n2", stats.var("Xi") / n**2,
        stats.var("Xi") / n**2 * math.sqrt(2 / (count - 1)),
        quadtree_ipl_variance_constant(p), tag)
    rho = stats.corr("Xi", "L")
    pred = 0.0 if p <= 8 else None  # d >= 9 needs the external amplitude
    add("rho_XiL", rho, (1 - rho**2) / math.sqrt(count), pred, tag)
    return rows
