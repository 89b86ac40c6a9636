"""Classical-field Langevin dynamics in the frame rotating with the pump.

    da/dt = (i Delta - kappa/2) a + i g0 a (b + b*) + E
    db/dt = (-i Omega - Gamma/2) b + i g0 |a|^2 + sqrt(Gamma n_th) xi(t)

``E`` is the drive amplitude (sqrt of photon flux).  With every operator
replaced by a c-number there is no quantum back-action, so the first-order
side-bands of a(t) sit symmetrically at the mechanical frequency; the
spectra produced here are the classical reference against which a
side-band inequivalence is measured.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import welch

from .errors import Instability, NoPeaksFound, ParameterError, SegmentTooLong
from .params import OmParams, _photon_roots, mean_displacement
from .spectral import LorentzianPeak, SiEstimate, Spectrum, Z95, fit_lorentzians

MAX_STEP = 0.05  # largest dt * Omega accepted
MIN_SAMPLES = 2**14
BLOWUP = 1e6
CHECK_EVERY = 256


@dataclass(frozen=True)
class SimConfig:
    """Integration settings.

    Attributes
    ----------
    dt : float
        Time step (s); ``dt * Omega`` must not exceed 0.05.
    duration : float
        Total integrated time, at least 2**14 steps.
    drive : float
        Drive amplitude E in sqrt(photons/s).
    n_th : float
        Thermal phonon occupation of the mechanical bath; 0 gives a
        deterministic run.
    seed : int
    transient_fraction : float
        Leading fraction of samples dropped from the returned trajectory.
    a_init, b_init : complex, optional
        Initial amplitudes.  By default the run starts on the (largest)
        static solution for this drive.
    kick : complex
        Added to the initial mechanical amplitude, to ring up the
        side-bands in deterministic runs.
    """

    dt: float
    duration: float
    drive: float
    n_th: float = 0.0
    seed: int = 0
    transient_fraction: float = 0.0
    a_init: complex | None = None
    b_init: complex | None = None
    kick: complex = 0.0

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ParameterError("dt must be positive")
        if self.duration < MIN_SAMPLES * self.dt:
            raise ParameterError(f"duration must cover at least {MIN_SAMPLES} steps")
        if not (math.isfinite(self.drive) and self.drive >= 0):
            raise ParameterError("drive must be finite and >= 0")
        if not self.n_th >= 0:
            raise ParameterError("n_th must be >= 0")
        if not 0.0 <= self.transient_fraction < 1.0:
            raise ParameterError("transient_fraction must lie in [0, 1)")

    @property
    def n_steps(self):
        return int(round(self.duration / self.dt))

    @property
    def n_kept(self):
        return self.n_steps + 1 - int(math.floor(self.transient_fraction * (self.n_steps + 1)))


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        if not (self.t.shape == self.a.shape == self.b.shape):
            raise ParameterError("trajectory arrays differ in length")
        if not (np.all(np.isfinite(self.a)) and np.all(np.isfinite(self.b))):
            raise ParameterError("trajectory contains non-finite samples")

    @property
    def dt(self):
        return float(self.t[1] - self.t[0])

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "re_a", "im_a", "re_b", "im_b"])
            for row in zip(self.t, self.a.real, self.a.imag, self.b.real, self.b.imag):
                w.writerow([repr(float(v)) for v in row])


def drive_for_photon_number(p: OmParams, nbar):
    """Drive amplitude E that makes ``nbar`` a static solution at detuning p.detuning."""
    _, x0 = mean_displacement(p, nbar)
    d_eff = p.detuning + p.coupling * x0
    return math.sqrt(nbar * (0.25 * p.optical_decay**2 + d_eff**2))


def static_solution(p: OmParams, drive):
    """Largest-photon-number fixed point (a, b) of the noiseless equations."""
    if drive == 0:
        return 0j, 0j
    nbar = max(_photon_roots(p, drive * drive).roots)
    b0, x0 = mean_displacement(p, nbar)
    a0 = drive / (0.5 * p.optical_decay - 1j * (p.detuning + p.coupling * x0))
    return complex(a0), complex(b0)


def integrate_classical(p: OmParams, cfg: SimConfig) -> Trajectory:
    """Fixed-step RK4 integration of the c-number equations.

    With ``n_th > 0`` the thermal force is added as an Euler-Maruyama
    increment after each deterministic RK4 step; it is additive, so the
    scheme stays consistent.

    Raises
    ------
    Instability
        When ``dt * Omega`` exceeds 0.05, or when |a| or |b| grows past 1e6
        times the initial scale.
    """
    om, k, gm, g0, dl = p.mech_freq, p.optical_decay, p.mech_decay, p.coupling, p.detuning
    h = cfg.dt
    if h * om > MAX_STEP * (1 + 1e-12):
        raise Instability(f"dt*Omega = {h * om:.3g} exceeds the stable limit {MAX_STEP}; reduce dt")
    n = cfg.n_steps
    a_s, b_s = static_solution(p, cfg.drive)
    a = a_s if cfg.a_init is None else complex(cfg.a_init)
    b = (b_s if cfg.b_init is None else complex(cfg.b_init)) + cfg.kick
    scale = max(abs(a), abs(b), 2 * cfg.drive / k, 1.0)
    limit = BLOWUP * scale

    la = 1j * dl - 0.5 * k
    lb = -1j * om - 0.5 * gm
    E = cfg.drive
    ig = 1j * g0

    def fa(a, b):
        return la * a + ig * a * (b + b.conjugate()) + E

    def fb(a, b):
        return lb * b + ig * (a.real * a.real + a.imag * a.imag)

    noise = None
    if cfg.n_th > 0 and gm > 0:
        rng = np.random.default_rng(cfg.seed)
        sig = math.sqrt(gm * cfg.n_th * h / 2.0)
        noise = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) * sig

    A = np.empty(n + 1, dtype=complex)
    B = np.empty(n + 1, dtype=complex)
    A[0], B[0] = a, b
    h2, h6 = 0.5 * h, h / 6.0
    for i in range(n):
        k1a, k1b = fa(a, b), fb(a, b)
        k2a, k2b = fa(a + h2 * k1a, b + h2 * k1b), fb(a + h2 * k1a, b + h2 * k1b)
        k3a, k3b = fa(a + h2 * k2a, b + h2 * k2b), fb(a + h2 * k2a, b + h2 * k2b)
        k4a, k4b = fa(a + h * k3a, b + h * k3b), fb(a + h * k3a, b + h * k3b)
        a = a + h6 * (k1a + 2 * k2a + 2 * k3a + k4a)
        b = b + h6 * (k1b + 2 * k2b + 2 * k3b + k4b)
        if noise is not None:
            b = b + noise[i]
        A[i + 1], B[i + 1] = a, b
        if i % CHECK_EVERY == 0 and not (abs(a) < limit and abs(b) < limit):
            raise Instability(f"amplitude exceeded {BLOWUP:g} x initial scale at step {i}; reduce dt")
    if not (np.all(np.abs(A) < limit) and np.all(np.abs(B) < limit)):
        raise Instability(f"amplitude exceeded {BLOWUP:g} x initial scale; reduce dt")
    start = n + 1 - cfg.n_kept
    t = np.arange(start, n + 1) * h
    return Trajectory(t, A[start:], B[start:])


def psd(traj: Trajectory, segment_length=2**14, overlap=0.5, window="hann", nfft=None) -> Spectrum:
    """Two-sided Welch PSD of a(t) on an angular offset-from-pump axis.

    A component a ~ exp(i nu t) appears at +nu.  The density is per unit
    angular frequency, so sum(S) * d_nu equals the variance of a(t).
    """
    x = traj.a
    if segment_length > x.size:
        raise SegmentTooLong(f"segment of {segment_length} samples exceeds trajectory of {x.size}")
    fs = 1.0 / traj.dt
    f, s = welch(
        x,
        fs=fs,
        window=window,
        nperseg=segment_length,
        noverlap=int(overlap * segment_length),
        nfft=nfft,
        detrend="constant",
        return_onesided=False,
        scaling="density",
    )
    f = np.fft.fftshift(f)
    s = np.fft.fftshift(s)
    return Spectrum(2.0 * math.pi * f, s / (2.0 * math.pi))


def inject_shift(traj: Trajectory, shift):
    """Move every positive-offset component of a(t) up by ``shift``.

    Test hook: a known inequivalence added to a classical trajectory must be
    recovered by the measurement chain.
    """
    X = np.fft.fft(traj.a - traj.a.mean())
    nu = 2.0 * math.pi * np.fft.fftfreq(traj.a.size, traj.dt)
    pos = np.where(nu > 0, X, 0)
    rest = X - pos
    a = traj.a.mean() + np.fft.ifft(rest) + np.fft.ifft(pos) * np.exp(1j * shift * (traj.t - traj.t[0]))
    return Trajectory(traj.t, a, traj.b)


def _fit_line(spec: Spectrum, lo, hi, half_width):
    sel = (spec.freq >= lo) & (spec.freq <= hi)
    if not np.any(sel) or np.max(spec.values[sel]) <= 0:
        raise NoPeaksFound(f"no spectral weight in [{lo:.4g}, {hi:.4g}]")
    f, v = spec.freq[sel], spec.values[sel]
    k = int(np.argmax(v))
    fc = f[k]
    win = (spec.freq >= fc - half_width) & (spec.freq <= fc + half_width)
    local = Spectrum(spec.freq[win], spec.values[win])
    init = [LorentzianPeak(float(fc), float(half_width), float(v[k]))]
    fit = fit_lorentzians(local, 1, init=init, baseline=float(np.min(local.values)))
    return fit


def measure_si_from_trajectory(p: OmParams, traj: Trajectory, segment_length=2**14, zero_pad=8, fit_bins=3.0,
                               shift=0.0):
    """Measure delta from the first side-bands of a simulated trajectory.

    Each side-band is fitted separately with a Lorentzian plus baseline in a
    window of +-``fit_bins`` Welch bins around its maximum.  The Welch
    segments are zero-padded ``zero_pad`` times so the line shape is finely
    sampled.  The 95% interval is +-1.96 combined standard errors.

    Parameters
    ----------
    shift : float
        Known inequivalence injected into the trajectory before the PSD
        (test hook, see :func:`inject_shift`).

    Returns
    -------
    (SiEstimate, Spectrum)
    """
    om = p.mech_freq
    if p.optical_decay / om >= 0.25:
        raise ParameterError("side-bands must be resolved (kappa < Omega/4)")
    if np.max(np.abs(traj.a - traj.a.mean())) == 0:
        raise NoPeaksFound("trajectory carries no fluctuations (zero drive?)")
    if shift:
        traj = inject_shift(traj, shift)
    spec = psd(traj, segment_length, nfft=zero_pad * segment_length)
    bin_width = 2.0 * math.pi / (segment_length * traj.dt)
    hw = fit_bins * bin_width
    red = _fit_line(spec, 0.5 * om, 1.5 * om, hw)
    blue = _fit_line(spec, -1.5 * om, -0.5 * om, hw)
    cr, cb = red.peaks[0].center, blue.peaks[0].center
    d = cr + cb
    se = math.hypot(red.stderr(0), blue.stderr(0))
    om_hat = 0.5 * (cr - cb)
    extras = {
        "ci_method": "covariance",
        "bin_width": bin_width,
        "red_center": cr,
        "blue_center": cb,
        "injected_shift": shift,
        "consistent_with_zero": bool(abs(d) < 3 * se and abs(d) < bin_width),
    }
    rms = math.hypot(red.rms, blue.rms)
    est = SiEstimate(d, d / om_hat, d - Z95 * se, d + Z95 * se, rms, 2, om_hat, se, 1, extras)
    return est, spec


def measure_si_from_sim(p: OmParams, cfg: SimConfig, segment_length=2**14, zero_pad=8, fit_bins=3.0, shift=0.0):
    """Integrate, estimate the PSD and fit the side-bands; returns a SiEstimate.

    ``extras["consistent_with_zero"]`` records whether |delta| is below both
    three standard errors and one Welch bin, the resolution available to a
    classical run.
    """
    traj = integrate_classical(p, cfg)
    return measure_si_from_trajectory(p, traj, segment_length, zero_pad, fit_bins, shift)[0]
