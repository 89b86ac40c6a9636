"""Closed-form side-band inequivalence (SI) as a function of photon number.

Every routine here is a pure function of an :class:`OmParams` (or
:class:`DimGroups`) and the intracavity photon number ``nbar``.  Results are
returned as :class:`SiResult` values carrying the method that produced them,
so the five expressions can be compared side by side.

Sign convention: a positive ``delta`` means the red side-band sits further
from the pump than the blue one.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .errors import CouplingZero, ParameterError, SingularDenominator, TailUndefined
from .params import DimGroups, OmParams, dimensionless_groups, mean_displacement, require_damped

VALIDITY_LIMIT = 0.1
IMAG_RATIO_LIMIT = 0.1
REGIME_MARGIN = 10.0
DIVERGENCE_REPORT = 0.01

METHODS = ("full", "quadratic", "resolved", "linearized", "dimensionless")


@dataclass(frozen=True)
class SiCoefficients:
    A: complex
    B: float
    C: complex
    D: float


@dataclass(frozen=True)
class SiResult:
    """One SI evaluation.

    ``delta`` is in rad/s and ``delta_normalized`` is ``delta / Omega``.
    ``valid`` turns false once the normalized SI exceeds 0.1 (or, for the
    quadratic route, when the discarded imaginary part is not small), which
    marks values outside the perturbative domain of the formulas.
    """

    delta: float
    delta_normalized: float
    method: str
    valid: bool
    diagnostics: dict = field(default_factory=dict, compare=False)


def _result(delta, omega, method, extra_ok=True, **diag):
    norm = delta / omega
    return SiResult(
        delta=float(delta),
        delta_normalized=float(norm),
        method=method,
        valid=bool(extra_ok and abs(norm) <= VALIDITY_LIMIT),
        diagnostics=diag,
    )


def _check_nbar(nbar):
    if not (nbar >= 0 and math.isfinite(nbar)):
        raise ParameterError(f"nbar must be finite and >= 0, got {nbar!r}")


def coefficients(p: OmParams, nbar=0.0) -> SiCoefficients:
    require_damped(p)
    _check_nbar(nbar)
    om, gm, k, g0 = p.mech_freq, p.mech_decay, p.optical_decay, p.coupling
    lor = om**2 + 0.25 * gm**2
    A = gm * (2j * om - k) + 4 * g0**2 * nbar * (1 + 1j) * gm * om / lor
    B = 4 * g0**2 * (om - 0.5 * gm) ** 2 / lor
    C = 1j * p.gamma_total + 2 * om
    D = 4 * g0**2 * om / lor
    return SiCoefficients(complex(A), float(B), complex(C), float(D))


def si_full(p: OmParams, nbar) -> SiResult:
    """SI from the rational form (A + B n)/(C - i D n), expanded real line.

    The compact complex form, evaluated with the complete photon-dependent
    ``A``, is returned in ``diagnostics["complex_form"]``; the two are
    flagged in ``diagnostics["forms_diverge"]`` when they differ by more
    than 1 %.
    """
    c = coefficients(p, nbar)
    om, gm = p.mech_freq, p.mech_decay
    # |C|^2 - 4 Omega D n + D^2 n^2, regrouped to avoid cancellation near the pole
    den = (c.C.real - c.D * nbar) ** 2 + c.C.imag**2
    if not den > 0:
        raise SingularDenominator(f"expanded SI denominator is {den:g}")
    delta = (2 * gm**2 * om + 2 * om * (c.B - gm * c.D) * nbar) / den
    compact = ((c.A + c.B * nbar) / (c.C - 1j * c.D * nbar)).real
    diverge = abs(compact - delta) > DIVERGENCE_REPORT * abs(delta)
    return _result(delta, om, "full", complex_form=compact, forms_diverge=bool(diverge))


def quadratic_roots(p: OmParams, nbar):
    """Both complex roots of the SI quadratic, smaller modulus first."""
    require_damped(p)
    _check_nbar(nbar)
    om, gm, k, g0 = p.mech_freq, p.mech_decay, p.optical_decay, p.coupling
    _, x0 = mean_displacement(p, nbar)
    b = 2 * om + 1j * p.gamma_total + 2 * g0 * x0
    c = (2j * om - k) * gm + 4 * g0**2 * nbar + 2j * gm * g0 * x0
    # delta^2 - b delta + c = 0, cancellation-free form
    sq = np.sqrt(complex(b * b - 4 * c))
    if (b.conjugate() * sq).real < 0:
        sq = -sq
    big = 0.5 * (b + sq)
    small = c / big if big != 0 else 0j
    return complex(small), complex(big)


def si_linear_in_delta(p: OmParams, nbar) -> complex:
    """Root of the quadratic with its delta**2 term dropped (complex)."""
    require_damped(p)
    _check_nbar(nbar)
    om, gm, k, g0 = p.mech_freq, p.mech_decay, p.optical_decay, p.coupling
    _, x0 = mean_displacement(p, nbar)
    num = (2j * om - k) * gm + 4 * g0**2 * nbar + 2j * gm * g0 * x0
    return complex(num / (2 * om + 1j * p.gamma_total + 2 * g0 * x0))


def si_quadratic(p: OmParams, nbar):
    """Solve the complex SI quadratic and keep the small root's real part.

    Returns
    -------
    result : SiResult
    roots : tuple of complex
        ``(selected, discarded)``; the discarded root is of order 2*Omega.
    """
    small, big = quadratic_roots(p, nbar)
    ratio = abs(small.imag) / abs(small.real) if small.real != 0 else math.inf
    res = _result(
        small.real,
        p.mech_freq,
        "quadratic",
        extra_ok=ratio <= IMAG_RATIO_LIMIT,
        root=small,
        other_root=big,
        imag_ratio=ratio,
    )
    return res, (small, big)


def si_resolved(p: OmParams, nbar) -> SiResult:
    require_damped(p)
    _check_nbar(nbar)
    om, gm, g0 = p.mech_freq, p.mech_decay, p.coupling
    gamma = p.gamma_total
    num = 2 * gm**2 * om + 8 * g0**2 * om * nbar
    den = gamma**2 + 4 * om**2 * (1 - 2 * (g0 / om) ** 2 * nbar) ** 2
    return _result(num / den, om, "resolved")


def si_linearized(p: OmParams, nbar) -> SiResult:
    """SI to first order in ``nbar``; meant for nbar << Omega**2/g0**2.

    ``diagnostics["coarse"]`` holds the cruder estimate 2 g0^2 nbar / Omega.
    """
    require_damped(p)
    _check_nbar(nbar)
    om, gm, g0 = p.mech_freq, p.mech_decay, p.coupling
    gamma = p.gamma_total
    if g0 > 0 and nbar > 0.1 * om**2 / g0**2:
        warnings.warn("linearized SI used outside nbar << Omega^2/g0^2", RuntimeWarning, stacklevel=2)
    cc = gamma**2 + 4 * om**2
    intercept = 2 * gm**2 * om / cc
    slope = 8 * g0**2 * om * (cc + gm**2) / cc**2
    coarse = 2 * g0**2 * nbar / om
    return _result(intercept + slope * nbar, om, "linearized", intercept=intercept, slope=slope, coarse=coarse)


def si_normalized_form(g: DimGroups, omega, nbar) -> SiResult:
    _check_nbar(nbar)
    delta = omega * g.psi * (1 + g.alpha * nbar) / (g.theta**2 + (1 - g.beta * nbar) ** 2)
    return _result(delta, omega, "dimensionless")


def normalized_curve(g: DimGroups, nbar):
    """Vectorised ``delta / (Omega psi)`` of the dimensionless form."""
    n = np.asarray(nbar, dtype=float)
    return (1 + g.alpha * n) / (g.theta**2 + (1 - g.beta * n) ** 2)


def si_all(p: OmParams, nbar):
    """Dictionary of SiResult keyed by method name."""
    quad, _ = si_quadratic(p, nbar)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        lin = si_linearized(p, nbar)
    return {
        "full": si_full(p, nbar),
        "quadratic": quad,
        "resolved": si_resolved(p, nbar),
        "linearized": lin,
        "dimensionless": si_normalized_form(dimensionless_groups(p), p.mech_freq, nbar),
    }


@dataclass(frozen=True)
class SiLimits:
    delta_at_zero: float
    tail_coefficient: float


def si_limits(p: OmParams) -> SiLimits:
    """Zero-photon SI and the coefficient of its 1/nbar tail."""
    require_damped(p)
    om, gm = p.mech_freq, p.mech_decay
    if p.coupling == 0:
        raise TailUndefined("tail coefficient Omega/beta is infinite for g0 = 0")
    at_zero = 2 * gm**2 * om / (4 * om**2 + p.gamma_total**2)
    return SiLimits(at_zero, om**3 / (2 * p.coupling**2))


def optimum_nbar(g: DimGroups):
    """Exact maximiser of the dimensionless SI curve."""
    if g.alpha <= 0 or g.beta <= 0:
        raise CouplingZero("optimum undefined without coupling")
    a, b, t = g.alpha, g.beta, g.theta
    return math.sqrt((a + b) ** 2 + a**2 * t**2) / (a * b) - 1 / a


def argmax_numeric(g: DimGroups, decades=6, points=4001):
    """Locate the SI maximum by scanning, then Brent refinement.

    Independent of :func:`optimum_nbar`: a log-spaced scan brackets the
    peak and ``scipy.optimize.minimize_scalar`` polishes it.
    """
    if g.alpha <= 0 or g.beta <= 0:
        raise CouplingZero("optimum undefined without coupling")
    centre = 1.0 / g.beta
    grid = centre * np.logspace(-decades / 2, decades / 2, points)
    vals = normalized_curve(g, grid)
    i = int(np.clip(np.argmax(vals), 1, points - 2))
    bracket = (grid[i - 1], grid[i], grid[i + 1])
    # log f is smoother than f near a narrow peak
    res = optimize.minimize_scalar(
        lambda n: -math.log(normalized_curve(g, n)),
        bracket=bracket,
        method="brent",
        options={"xtol": 1e-12},
    )
    return float(res.x)


class Regime(str, enum.Enum):
    FULLY_LINEAR = "FullyLinear"
    WEAKLY_NONLINEAR = "WeaklyNonlinear"
    STRONGLY_NONLINEAR = "StronglyNonlinear"


@dataclass(frozen=True)
class RegimeReport:
    """Operating regime and the quantities that define its borders.

    ``delta_max`` is the SI at the exact optimum; the approximations
    Omega^2/(2 g0^2) and 4 Omega^3/gamma^2 are kept beside it, along with the
    numerically located maximum used as a cross-check.
    """

    regime: Regime
    nbar_max: float
    delta_max: float
    nbar_linewidth: float
    asymptotic_delta: float
    nbar: float = float("nan")
    nbar_max_approx: float = float("nan")
    delta_max_approx: float = float("nan")
    nbar_max_numeric: float = float("nan")

    def __post_init__(self):
        if not self.nbar_max > 0:
            raise ParameterError("nbar_max must be positive")


def _peak_quantities(p: OmParams):
    if p.coupling == 0:
        raise CouplingZero("regimes are undefined for g0 = 0")
    g = dimensionless_groups(p)
    nmax = optimum_nbar(g)
    dmax = si_normalized_form(g, p.mech_freq, nmax).delta
    return g, nmax, dmax


def optimum(p: OmParams) -> RegimeReport:
    g, nmax, dmax = _peak_quantities(p)
    om = p.mech_freq
    return RegimeReport(
        regime=Regime.WEAKLY_NONLINEAR,
        nbar_max=nmax,
        delta_max=dmax,
        nbar_linewidth=g.theta * nmax,
        asymptotic_delta=dmax,
        nbar=nmax,
        nbar_max_approx=om**2 / (2 * p.coupling**2),
        delta_max_approx=4 * om**3 / p.gamma_total**2,
        nbar_max_numeric=argmax_numeric(g),
    )


def regime_asymptote(regime, nbar, nbar_max, delta_max, theta):
    """Per-regime asymptotic SI: linear rise, Lorentzian peak, 1/nbar fall.

    These are scaling forms anchored at the optimum.  The exact curve
    follows them up to a constant factor in each outer zone: theta^2/(1+theta^2)
    on the linear side and theta^2 on the 1/nbar side.
    """
    x = nbar / nbar_max
    if regime is Regime.FULLY_LINEAR:
        return x * delta_max
    if regime is Regime.STRONGLY_NONLINEAR:
        return delta_max / x
    return delta_max / (1 + (x - 1) ** 2 / theta**2)


def classify_regime(p: OmParams, nbar, margin=REGIME_MARGIN) -> RegimeReport:
    """Classify ``nbar`` against the optimum photon number.

    Fully linear below (1 - theta) nbar_max / margin, strongly nonlinear
    above (1 + theta) nbar_max * margin, weakly nonlinear in between.
    """
    _check_nbar(nbar)
    g, nmax, dmax = _peak_quantities(p)
    w = g.theta
    if nbar < max(1 - w, 0.0) * nmax / margin:
        regime = Regime.FULLY_LINEAR
    elif nbar > (1 + w) * nmax * margin:
        regime = Regime.STRONGLY_NONLINEAR
    else:
        regime = Regime.WEAKLY_NONLINEAR
    return RegimeReport(
        regime=regime,
        nbar_max=nmax,
        delta_max=dmax,
        nbar_linewidth=w * nmax,
        asymptotic_delta=regime_asymptote(regime, nbar, nmax, dmax, w),
        nbar=float(nbar),
        nbar_max_approx=p.mech_freq**2 / (2 * p.coupling**2),
        delta_max_approx=4 * p.mech_freq**3 / p.gamma_total**2,
    )


@dataclass(frozen=True)
class AsymmetryResult:
    population_difference: float
    normalized: float


def population_asymmetry(p: OmParams, nbar) -> AsymmetryResult:
    """Red-minus-blue scattered photon number and its normalized form."""
    g = dimensionless_groups(p)
    om, gm = p.mech_freq, p.mech_decay
    delta = si_full(p, nbar).delta
    diff = om * nbar / (om**2 + 0.25 * gm**2) * delta
    norm = g.psi * (1 + g.alpha * nbar) / (g.theta**2 + (1 - g.beta * nbar) ** 2)
    return AsymmetryResult(float(diff), float(norm))


def raman_line_si(omega, mech_decay, optical_decay):
    """Weak-coupling normalized SI of a single vibrational line.

    Returns
    -------
    (float, float)
        The estimate including the total linewidth and the cruder
        ``Gamma**2 / (2 Omega**2)``.
    """
    gamma = mech_decay + optical_decay
    return (
        0.5 * mech_decay**2 / (omega**2 + 0.25 * gamma**2),
        0.5 * mech_decay**2 / omega**2,
    )
