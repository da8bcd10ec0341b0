"""Indicial equations of the tree families and their spectra.

The growth exponents of the moment recurrences are driven by the zeros of

    mary:   z (z+1) ... (z+m-2) - m!
    fbbst:  (z+t) (z+t+1) ... (z+2t) - 2 (2t+1)!/t!

z = 2 is always a zero (the principal one); the real part alpha of the
second-largest zero decides the phase of second-order moments.  Quadtrees
need no polynomial: their exponents are 2 e^(2 pi i / d) in closed form.

Roots are found by Aberth-Ehrlich simultaneous iteration started from a
perturbed circle, run in double precision on the factored form (in log
space, so huge factorial constants never overflow), then Newton-polished
with mpmath at twice the requested working precision.  Residuals of the
returned roots are certified against the exact integer coefficients.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np
from mpmath import mp, mpc

from .families import Family, FamilyInstance
from .gammafn import reciprocal_gamma


class NoPolynomialError(ValueError):
    """Quadtrees have closed-form exponents, not an indicial polynomial."""


class RootConvergenceError(RuntimeError):
    def __init__(self, message: str, residuals=None):
        super().__init__(message)
        self.residuals = residuals


class IndeterminateRegimeError(ValueError):
    """alpha sits inside the guard band around a phase threshold."""


class AmplitudeError(ValueError):
    pass


REGIME_GUARD_BAND = 1e-6


def indicial_shifts(instance: FamilyInstance) -> tuple[list[int], int]:
    """Factored form of the indicial polynomial: (shifts s_i, constant c)
    such that P(z) = prod_i (z + s_i) - c."""
    if instance.family is Family.MARY:
        m = instance.parameter
        return list(range(0, m - 1)), math.factorial(m)
    if instance.family is Family.FBBST:
        t = instance.parameter
        return list(range(t, 2 * t + 1)), 2 * math.factorial(2 * t + 1) // math.factorial(t)
    raise NoPolynomialError("no polynomial for quadtree; use quadtree_exponents")


def build_indicial(instance: FamilyInstance) -> list[int]:
    """Exact integer coefficients of the indicial polynomial, descending
    powers, monic leading term."""
    shifts, c = indicial_shifts(instance)
    coeffs = [1]
    for s in shifts:
        # multiply by (z + s)
        nxt = [0] * (len(coeffs) + 1)
        for i, a in enumerate(coeffs):
            nxt[i] += a
            nxt[i + 1] += a * s
        coeffs = nxt
    coeffs[-1] -= c
    return coeffs


def eval_indicial(instance: FamilyInstance, z: complex) -> complex:
    """P(z) via the factored form (no large intermediate coefficients)."""
    shifts, c = indicial_shifts(instance)
    prod = complex(1.0)
    for s in shifts:
        prod *= z + s
    return prod - c


@dataclass(frozen=True)
class Spectrum:
    """All indicial roots of one instance, sorted by decreasing real part
    (ties by decreasing imaginary part), with certified residuals."""

    instance: FamilyInstance
    roots: tuple  # mpmath mpc values, high precision
    principal_root: complex
    alpha: float
    beta: float
    certified_error: float
    precision: int
    scale: int = field(repr=False, default=1)  # max |integer coefficient|

    @property
    def degree(self) -> int:
        return len(self.roots)

    @property
    def roots_complex(self) -> tuple[complex, ...]:
        return tuple(complex(r) for r in self.roots)

    @property
    def lambda2(self) -> complex:
        """Second-largest root with nonnegative imaginary part (exactly real
        when beta = 0)."""
        return complex(self.alpha, self.beta)


def _aberth_double(shifts: Sequence[int], const: int, maxiter: int = 400) -> np.ndarray:
    """Aberth-Ehrlich in double precision on the factored polynomial.

    Works in log space: p/p' = (1 - exp(log c - log prod)) / sum 1/(z+s),
    so degree-260 instances with 500-digit constants stay in range.
    """
    deg = len(shifts)
    sh = np.asarray(shifts, dtype=float)
    log_c = math.log(const) if const < 1e300 else _log_big_int(const)
    center = -sh.mean()
    radius = math.exp(log_c / deg) + (sh.max() - sh.min()) / 2.0 + 1.0
    angles = 2.0 * np.pi * np.arange(deg) / deg + 0.4
    z = center + radius * np.exp(1j * angles) * (1.0 + 1e-3 * np.cos(7.0 * angles))

    for _ in range(maxiter):
        zs = z[:, None] + sh[None, :]
        # nudge any exact collision with a factor root off the pole
        bad = zs == 0
        if bad.any():
            z = z + 1e-12 * (1 + 1j)
            zs = z[:, None] + sh[None, :]
        log_q = np.log(zs).sum(axis=1)
        s1 = (1.0 / zs).sum(axis=1)
        newton = (1.0 - np.exp(log_c - log_q)) / s1
        diff = z[:, None] - z[None, :]
        np.fill_diagonal(diff, np.inf)
        repulse = (1.0 / diff).sum(axis=1)
        w = newton / (1.0 - newton * repulse)
        z = z - w
        if np.max(np.abs(w) / (1.0 + np.abs(z))) < 5e-15:
            break
    return z


def _log_big_int(n: int) -> float:
    bits = n.bit_length() - 64
    if bits <= 0:
        return math.log(n)
    return math.log(n >> bits) + bits * math.log(2.0)


def solve_spectrum(instance: FamilyInstance, precision: int = 64) -> Spectrum:
    """Locate all indicial roots, certify residuals, extract (alpha, beta).

    ``precision`` is the working precision in bits (>= 64); polishing and
    certification run at twice that.
    """
    if precision < 64:
        raise ValueError("precision must be >= 64 bits")
    shifts, const = indicial_shifts(instance)
    deg = len(shifts)
    if deg < 2:
        raise RootConvergenceError(f"degree {deg} < 2, nothing to solve")

    approx = _aberth_double(shifts, const)

    coeffs = build_indicial(instance)
    scale = max(abs(a) for a in coeffs)
    polish_prec = 2 * precision
    with mp.workprec(polish_prec):
        roots = []
        residuals = []
        for z0 in approx:
            z = mpc(z0.real, z0.imag)
            for _ in range(6):
                prod = mpc(1)
                s1 = mpc(0)
                for s in shifts:
                    term = z + s
                    prod *= term
                    s1 += 1 / term
                f = prod - const
                step = f / (prod * s1)
                z -= step
                if abs(step) <= 2.0 ** (-polish_prec + 8) * (1 + abs(z)):
                    break
            prod = mpc(1)
            for s in shifts:
                prod *= z + s
            residuals.append(abs(prod - const))
            roots.append(z)

    # evaluation slack: deg multiplications at polish precision near |c|
    slack = (deg + 2) * const * mp.mpf(2) ** (-polish_prec + 1)
    worst = max(residuals)
    certified = float((worst + slack) / scale)
    if certified > 1e-10:
        raise RootConvergenceError(
            f"residuals not certified below 1e-10*scale for {instance} "
            f"(best effort {certified:.3e})",
            residuals=[float(r) for r in residuals],
        )

    roots.sort(key=lambda r: (-float(r.real), -float(r.imag)))
    principal = complex(roots[0])
    if abs(principal - 2.0) > 1e-10:
        raise RootConvergenceError(
            f"principal root {principal} is not 2 for {instance}")

    lam2 = complex(roots[1])
    imag_tol = 1e-12 * max(1.0, abs(lam2.real))
    beta = abs(lam2.imag) if abs(lam2.imag) > imag_tol else 0.0
    alpha = lam2.real

    if instance.family is Family.FBBST and beta > 0.0:
        # the second and third roots must be a conjugate pair strictly above
        # the rest; verified rather than assumed
        lam3 = complex(roots[2])
        if abs(lam3.real - alpha) > 1e-9 * max(1.0, abs(alpha)):
            raise RootConvergenceError(
                f"fbbst ordering violated: Re({lam2}) != Re({lam3})")
        if deg > 3 and complex(roots[3]).real >= alpha - 1e-9:
            raise RootConvergenceError(
                f"fbbst ordering violated: fourth root not strictly below alpha")

    return Spectrum(
        instance=instance,
        roots=tuple(roots),
        principal_root=principal,
        alpha=alpha,
        beta=beta,
        certified_error=certified,
        precision=precision,
        scale=scale,
    )


@dataclass(frozen=True)
class QuadtreeExponents:
    """Closed-form secondary exponent data for d-dimensional quadtrees:
    2 e^(2 pi i / d) = alpha_hat + 1 + i beta_hat."""

    d: int
    alpha_hat: float
    beta_hat: float


def quadtree_exponents(d: int) -> QuadtreeExponents:
    if d < 1:
        raise ValueError("quadtree dimension must be >= 1")

    def snap(x: float) -> float:
        # trig at rational multiples of pi: clean up representable exact values
        return round(x) if abs(x - round(x)) < 1e-12 else x

    return QuadtreeExponents(
        d=d,
        alpha_hat=snap(2.0 * math.cos(2.0 * math.pi / d) - 1.0),
        beta_hat=snap(2.0 * math.sin(2.0 * math.pi / d)),
    )


class CovariancePhase(str, Enum):
    LINEAR = "linear"
    PERIODIC = "periodic"


class DistributionPhase(str, Enum):
    GAUSSIAN = "gaussian"
    PERIODIC = "periodic"


@dataclass(frozen=True)
class Regime:
    covariance_phase: CovariancePhase
    distribution_phase: DistributionPhase


def _threshold(value: float, cut: float, what: str) -> bool:
    if abs(value - cut) <= REGIME_GUARD_BAND:
        raise IndeterminateRegimeError(
            f"{what}: alpha = {value!r} within guard band of threshold {cut}")
    return value > cut


def classify_regime(spectrum_or_exponents) -> Regime:
    """Phase classification.

    mary / fbbst: covariance turns periodic for alpha > 1, the distribution
    for alpha > 3/2.  Quadtrees: covariance periodic for alpha_hat >= 0
    (d = 6 sits exactly on the boundary and belongs to the periodic branch),
    variance/distribution periodic for alpha_hat > 1/2.  d = 1 is the
    degenerate binary-search-tree case: both phases are in the convergent
    branch even though the formal exponent collides with the principal one.
    """
    if isinstance(spectrum_or_exponents, QuadtreeExponents):
        qe = spectrum_or_exponents
        if qe.d == 1:
            return Regime(CovariancePhase.LINEAR, DistributionPhase.GAUSSIAN)
        cov_periodic = qe.alpha_hat >= -REGIME_GUARD_BAND
        dist_periodic = _threshold(qe.alpha_hat, 0.5, f"quadtree d={qe.d}")
        return Regime(
            CovariancePhase.PERIODIC if cov_periodic else CovariancePhase.LINEAR,
            DistributionPhase.PERIODIC if dist_periodic else DistributionPhase.GAUSSIAN,
        )
    spectrum = spectrum_or_exponents
    label = str(spectrum.instance)
    cov = _threshold(spectrum.alpha, 1.0, label)
    dist = _threshold(spectrum.alpha, 1.5, label)
    return Regime(
        CovariancePhase.PERIODIC if cov else CovariancePhase.LINEAR,
        DistributionPhase.PERIODIC if dist else DistributionPhase.GAUSSIAN,
    )


def amplitude(spectrum: Spectrum, k: int = 2) -> complex:
    """Mean-expansion amplitude attached to the k-th root (1-based, k >= 2).

    mary:  A_k = 1 / (lam (lam-1) sum_{0<=j<=m-2} 1/(j+lam))
    fbbst: C_k = t! / (2 (rho-1) rho (rho+1)...(rho+t-1)
                       sum_{t<=j<=2t} 1/(j+rho))
    """
    if k < 2 or k > spectrum.degree:
        raise AmplitudeError(f"k must index a non-principal root (2..{spectrum.degree})")
    lam = complex(spectrum.roots[k - 1])
    inst = spectrum.instance
    if inst.family is Family.MARY:
        m = inst.parameter
        if min(abs(lam), abs(lam - 1)) < 1e-12:
            raise AmplitudeError(f"amplitude undefined at lambda = {lam}")
        s = sum(1.0 / (j + lam) for j in range(0, m - 1))
        if abs(s) < 1e-300:
            raise AmplitudeError("zero harmonic-type sum")
        return 1.0 / (lam * (lam - 1.0) * s)
    if inst.family is Family.FBBST:
        t = inst.parameter
        prod = lam - 1.0
        for i in range(0, t):
            prod *= lam + i
        if abs(prod) < 1e-300:
            raise AmplitudeError(f"amplitude undefined at rho = {lam}")
        s = sum(1.0 / (j + lam) for j in range(t, 2 * t + 1))
        return math.factorial(t) / (2.0 * prod * s)
    raise AmplitudeError("amplitudes are defined for mary and fbbst spectra")


def theta(spectrum: Spectrum) -> complex:
    """Oscillation amplitude of the linear-mean correction: 2 A_2 / Gamma(lambda_2)
    (fbbst analogue 2 C_2 / Gamma(rho_2)).  Zero when lambda_2 is a negative
    integer, where 1/Gamma vanishes."""
    lam = spectrum.lambda2
    return 2.0 * amplitude(spectrum, 2) * reciprocal_gamma(lam)
