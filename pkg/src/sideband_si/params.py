"""Physical parameters, dimensionless groups and the optical steady state.

All rates and frequencies are angular (rad/s).  Use :func:`hz_to_rad` to
convert values quoted in Hz.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.constants import hbar

from .errors import NoPhysicalRoot, ParameterError

RESOLVED_THRESHOLD = 0.25


def hz_to_rad(value):
    return 2.0 * math.pi * value


@dataclass(frozen=True)
class OmParams:
    """Cavity and mechanical rates of an optomechanical system.

    Attributes
    ----------
    mech_freq : float
        Mechanical angular frequency Omega.
    optical_decay : float
        Optical energy decay rate kappa.
    mech_decay : float
        Mechanical decay rate Gamma.  Zero is accepted here so the time-domain
        simulator can model a lossless oscillator; closed-form routines
        reject it.
    coupling : float
        Single-photon coupling rate g0.
    detuning : float
        Pump detuning Delta = omega_c - omega.
    """

    mech_freq: float
    optical_decay: float
    mech_decay: float
    coupling: float = 0.0
    detuning: float = 0.0

    def __post_init__(self):
        for name in ("mech_freq", "optical_decay", "mech_decay", "coupling", "detuning"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ParameterError(f"{name} must be finite, got {v!r}")
        if self.mech_freq <= 0:
            raise ParameterError("mech_freq must be > 0")
        if self.optical_decay <= 0:
            raise ParameterError("optical_decay must be > 0")
        if self.mech_decay < 0:
            raise ParameterError("mech_decay must be >= 0")
        if self.coupling < 0:
            raise ParameterError("coupling must be >= 0")

    @property
    def gamma_total(self):
        return self.optical_decay + self.mech_decay

    def scaled(self, factor):
        """Return a copy with every rate multiplied by ``factor``."""
        return OmParams(
            self.mech_freq * factor,
            self.optical_decay * factor,
            self.mech_decay * factor,
            self.coupling * factor,
            self.detuning * factor,
        )

    def replace(self, **changes):
        values = dict(
            mech_freq=self.mech_freq,
            optical_decay=self.optical_decay,
            mech_decay=self.mech_decay,
            coupling=self.coupling,
            detuning=self.detuning,
        )
        values.update(changes)
        return OmParams(**values)


def require_damped(p: OmParams):
    if p.mech_decay <= 0:
        raise ParameterError("closed-form expressions need mech_decay > 0")


@dataclass(frozen=True)
class DriveParams:
    """Optical pump: power (W), angular frequency and external coupling."""

    pump_power: float
    pump_freq: float
    external_coupling: float = 1.0

    def __post_init__(self):
        if not all(map(math.isfinite, (self.pump_power, self.pump_freq, self.external_coupling))):
            raise ParameterError("drive parameters must be finite")
        if self.pump_power < 0:
            raise ParameterError("pump_power must be >= 0")
        if self.pump_freq <= 0:
            raise ParameterError("pump_freq must be > 0")
        if not 0.0 <= self.external_coupling <= 1.0:
            raise ParameterError("external_coupling must lie in [0, 1]")

    def photon_flux_rate(self, optical_decay):
        """Squared drive rate eta*kappa*P/(hbar*omega_L), in photons/s^2."""
        return self.external_coupling * optical_decay * self.pump_power / (hbar * self.pump_freq)


@dataclass(frozen=True)
class DimGroups:
    """Dimensionless groups alpha, beta, theta, psi and the total decay rate."""

    alpha: float
    beta: float
    theta: float
    psi: float
    gamma_total: float = float("nan")

    def __post_init__(self):
        for name in ("alpha", "beta", "theta", "psi"):
            if getattr(self, name) < 0:
                raise ParameterError(f"{name} must be non-negative")


def dimensionless_groups(p: OmParams) -> DimGroups:
    require_damped(p)
    om, gm, g0 = p.mech_freq, p.mech_decay, p.coupling
    gamma = p.gamma_total
    return DimGroups(
        alpha=4.0 * g0**2 / gm**2,
        beta=2.0 * g0**2 / om**2,
        theta=gamma / (2.0 * om),
        psi=gm**2 / (2.0 * om**2),
        gamma_total=gamma,
    )


def sideband_resolution_ratio(p: OmParams) -> float:
    return p.optical_decay / p.mech_freq


def resolution_class(p: OmParams, threshold=RESOLVED_THRESHOLD) -> str:
    """Label the cavity as "resolved", "Doppler" or "unresolved"."""
    r = sideband_resolution_ratio(p)
    if r < threshold:
        return "resolved"
    if r <= 1.0:
        return "Doppler"
    return "unresolved"


def mean_displacement(p: OmParams, nbar):
    """Static mechanical amplitude b0 and displacement x0 = 2 Re b0.

    Returns
    -------
    b0 : complex
    x0 : float
    """
    if nbar < 0:
        raise ParameterError("nbar must be >= 0")
    om, gm, g0 = p.mech_freq, p.mech_decay, p.coupling
    b0 = 1j * g0 * nbar / (1j * om + 0.5 * gm)
    x0 = 2.0 * g0 * nbar * om / (om**2 + 0.25 * gm**2)
    return b0, x0


def _shift_per_photon(p: OmParams):
    # cavity frequency pull per intracavity photon, g0 * x0 / nbar
    om, gm, g0 = p.mech_freq, p.mech_decay, p.coupling
    return 2.0 * g0**2 * om / (om**2 + 0.25 * gm**2)


@dataclass(frozen=True)
class PhotonSteadyState:
    roots: tuple
    bistable: bool
    coefficients: tuple = field(default=(), compare=False)

    def __post_init__(self):
        if not 1 <= len(self.roots) <= 3:
            raise ParameterError("between one and three roots expected")


def real_cubic_roots(a, b, c, d, polish=3):
    """Real roots of a*x^3 + b*x^2 + c*x + d, sorted ascending.

    Trigonometric form when three real roots exist, Cardano otherwise,
    followed by a few Newton steps on the undepressed polynomial.
    Degenerate leading coefficients fall back to the quadratic/linear case.
    """
    if a == 0.0:
        if b == 0.0:
            if c == 0.0:
                return []
            return [-d / c]
        disc = c * c - 4 * b * d
        if disc < 0:
            return []
        s = math.sqrt(disc)
        q = -0.5 * (c + math.copysign(s, c))
        roots = [q / b] + ([d / q] if q != 0 else [])
        return sorted(roots)

    B, C, D = b / a, c / a, d / a
    shift = B / 3.0
    pp = C - B * B / 3.0
    qq = 2.0 * B**3 / 27.0 - B * C / 3.0 + D
    disc = (qq / 2.0) ** 2 + (pp / 3.0) ** 3
    if disc < 0:
        r = 2.0 * math.sqrt(-pp / 3.0)
        arg = 3.0 * qq / (pp * r) if pp != 0 else 0.0
        phi = math.acos(max(-1.0, min(1.0, arg)))
        ts = [r * math.cos((phi - 2.0 * math.pi * k) / 3.0) for k in range(3)]
    else:
        s = math.sqrt(max(disc, 0.0))
        u = np.cbrt(-qq / 2.0 + s)
        v = np.cbrt(-qq / 2.0 - s)
        ts = [float(u + v)]
    roots = []
    for t in ts:
        x = t - shift
        for _ in range(polish):
            f = ((a * x + b) * x + c) * x + d
            df = (3 * a * x + 2 * b) * x + c
            if df == 0:
                break
            step = f / df
            x -= step
            if abs(step) <= 1e-16 * max(abs(x), 1.0):
                break
        roots.append(x)
    return sorted(roots)


def steady_state_photon(p: OmParams, d: DriveParams) -> PhotonSteadyState:
    """Intracavity photon number(s) for a continuous pump.

    Solves n [(kappa/2)^2 + (Delta + g0 x0(n))^2] = eta kappa P / (hbar omega_L),
    a cubic in n because x0 is linear in n.  Three distinct positive roots
    flag the bistable window.
    """
    drive = d.photon_flux_rate(p.optical_decay)
    return _photon_roots(p, drive)


def _photon_roots(p: OmParams, drive):
    shift = _shift_per_photon(p)
    k2 = 0.25 * p.optical_decay**2
    delta = p.detuning
    coeffs = (shift**2, 2.0 * delta * shift, k2 + delta**2, -drive)
    if drive == 0.0:
        return PhotonSteadyState((0.0,), False, coeffs)
    raw = real_cubic_roots(*coeffs)
    if not raw:
        raise NoPhysicalRoot("cubic has no real root")
    top = max(abs(r) for r in raw)
    cleaned = []
    for r in raw:
        if abs(r) < 1e-12 * top:
            r = 0.0
        if r < 0:
            continue
        if cleaned and abs(r - cleaned[-1]) <= 1e-9 * max(r, 1e-300):
            continue
        cleaned.append(r)
    if not cleaned:
        raise NoPhysicalRoot("all roots of the photon-number cubic are negative")
    bistable = len(cleaned) == 3 and cleaned[0] > 0
    return PhotonSteadyState(tuple(cleaned), bistable, coeffs)


def photon_cubic_residual(p: OmParams, drive, nbar):
    """Left side minus drive term of the photon-number balance."""
    shift = _shift_per_photon(p)
    return nbar * (0.25 * p.optical_decay**2 + (p.detuning + shift * nbar) ** 2) - drive


def resonant_detuning(p: OmParams, nbar):
    """Detuning that cancels the static cavity pull at photon number ``nbar``."""
    return -_shift_per_photon(p) * nbar
