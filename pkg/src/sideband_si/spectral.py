"""Multi-Lorentzian spectra: synthesis, fitting and side-band offset extraction.

Centers are signed offsets from the pump.  Each first-order side-band sits at
+-Omega + delta/2, so the red/blue pair carries the full delta between them;
:func:`extract_si` is the only place that turns fitted centers into delta.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.signal import find_peaks, peak_widths

from .errors import FitDiverged, InvalidConfig, NoPeaksFound, OrderingViolation, ParameterError

Z95 = 1.959963984540054
MAX_FAILED_FRACTION = 0.2


@dataclass(frozen=True)
class Spectrum:
    """Power spectral density on a strictly increasing frequency grid.

    Descending grids are re-sorted (with a warning); repeated grid points are
    rejected.
    """

    freq: np.ndarray
    values: np.ndarray
    sigma: np.ndarray | None = None

    def __post_init__(self):
        f = np.asarray(self.freq, dtype=float)
        v = np.asarray(self.values, dtype=float)
        sg = None if self.sigma is None else np.asarray(self.sigma, dtype=float)
        if f.ndim != 1 or f.shape != v.shape or (sg is not None and sg.shape != f.shape):
            raise ParameterError("freq, values and sigma must be 1-D arrays of equal length")
        if f.size < 2:
            raise ParameterError("a spectrum needs at least two points")
        if not (np.all(np.isfinite(f)) and np.all(np.isfinite(v))):
            raise ParameterError("spectrum contains non-finite values")
        if np.any(np.diff(f) <= 0):
            order = np.argsort(f, kind="stable")
            f, v = f[order], v[order]
            if sg is not None:
                sg = sg[order]
            if np.any(np.diff(f) <= 0):
                raise ParameterError("frequency grid has repeated points")
            warnings.warn("frequency grid was not increasing; re-sorted", stacklevel=3)
        if sg is not None and not np.all(sg > 0):
            raise ParameterError("sigma must be positive")
        object.__setattr__(self, "freq", f)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "sigma", sg)

    @property
    def step(self):
        return float(np.median(np.diff(self.freq)))

    def scaled(self, c):
        return Spectrum(self.freq, self.values * c, None if self.sigma is None else self.sigma * c)

    def shifted(self, f0):
        return Spectrum(self.freq + f0, self.values, self.sigma)


@dataclass(frozen=True)
class LorentzianPeak:
    center: float
    fwhm: float
    amplitude: float

    def __post_init__(self):
        if not all(map(math.isfinite, (self.center, self.fwhm, self.amplitude))):
            raise ParameterError("peak parameters must be finite")
        if self.fwhm <= 0:
            raise ParameterError("fwhm must be > 0")
        if self.amplitude <= 0:
            raise ParameterError("amplitude must be > 0")


def lorentzian(f, peak: LorentzianPeak):
    u = 2.0 * (np.asarray(f, dtype=float) - peak.center) / peak.fwhm
    return peak.amplitude / (1.0 + u * u)


def peak_model(f, peaks, baseline=0.0):
    out = np.full(np.shape(f), float(baseline))
    for pk in peaks:
        out = out + lorentzian(f, pk)
    return out


def reference_doublet(omega=1.0, delta_bar=0.02, heights=(0.6, 0.8, 1.0)):
    """Reference doublet: central line plus blue and red side-bands.

    Side-bands have fwhm 0.1*omega at -omega + delta/2 and +omega + delta/2;
    the central line has fwhm 0.2*omega.  ``heights`` are (central, blue, red).
    """
    d = delta_bar * omega
    hc, hb, hr = heights
    return [
        LorentzianPeak(0.0, 0.2 * omega, hc),
        LorentzianPeak(-omega + 0.5 * d, 0.1 * omega, hb),
        LorentzianPeak(omega + 0.5 * d, 0.1 * omega, hr),
    ]


def synth_spectrum(peaks, grid, snr_db=None, seed=0, baseline=0.0):
    """Sum of Lorentzians plus seeded white noise.

    The noise standard deviation is ``max(peak amplitude) / 10**(snr_db/10)``,
    i.e. the SNR is a power ratio because S is already a power density.
    ``snr_db=None`` gives the noiseless spectrum.
    """
    grid = np.asarray(grid, dtype=float)
    lo, hi = grid.min(), grid.max()
    for pk in peaks:
        if not lo <= pk.center <= hi:
            raise ParameterError(f"peak at {pk.center} lies outside the grid")
    s = peak_model(grid, peaks, baseline)
    sigma = None
    if snr_db is not None:
        noise = max(pk.amplitude for pk in peaks) / 10.0 ** (snr_db / 10.0)
        rng = np.random.default_rng(seed)
        s = s + rng.normal(0.0, noise, size=grid.shape)
        sigma = np.full(grid.shape, noise)
    return Spectrum(grid, s, sigma)


def snr_db(s: Spectrum, noise_sigma):
    return 10.0 * math.log10(float(np.max(s.values)) / noise_sigma)


# ---------------------------------------------------------------- fitting


@dataclass(frozen=True)
class LorentzFit:
    """Result of :func:`fit_lorentzians`.

    ``covariance`` is ordered as [baseline, center_1, fwhm_1, amplitude_1,
    center_2, ...] with peaks sorted by center.
    """

    peaks: tuple
    baseline: float
    covariance: np.ndarray
    cost: float
    cost_history: tuple
    rms: float
    iterations: int
    n_points: int = 0
    theta: np.ndarray = field(default=None, repr=False, compare=False)
    scales: tuple = field(default=(0.0, 1.0, 1.0), repr=False, compare=False)

    def index(self, i, name):
        return 1 + 3 * i + ("center", "fwhm", "amplitude").index(name)

    def stderr(self, i, name="center"):
        j = self.index(i, name)
        return float(math.sqrt(max(self.covariance[j, j], 0.0)))

    def model(self, f):
        return peak_model(f, self.peaks, self.baseline)


def _unpack(theta):
    b = theta[0]
    c = theta[1::3]
    w = np.exp(theta[2::3])
    A = np.exp(theta[3::3])
    return b, c, w, A


def _model_jac(x, theta):
    b, c, w, A = _unpack(theta)
    u = 2.0 * (x[:, None] - c) / w
    q = 1.0 / (1.0 + u * u)
    L = A * q
    m = b + L.sum(axis=1)
    J = np.empty((x.size, theta.size))
    J[:, 0] = 1.0
    t = 2.0 * u * L * q
    J[:, 1::3] = t * 2.0 / w
    J[:, 2::3] = t * u
    J[:, 3::3] = L
    return m, J


def _lm(x, y, wts, theta, max_iter, ftol, xtol):
    """Levenberg-Marquardt on r = w*(model - y); returns theta, cost, J, history."""
    m, J = _model_jac(x, theta)
    r = wts * (m - y)
    J = J * wts[:, None]
    cost = 0.5 * float(r @ r)
    hist = [cost]
    lam = 1e-3
    it = 0
    for it in range(1, max_iter + 1):
        A = J.T @ J
        g = J.T @ r
        d = np.diag(A).copy()
        d[d <= 0] = 1e-300
        improved = False
        while lam < 1e16:
            try:
                step = np.linalg.solve(A + lam * np.diag(d), -g)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            tn = theta + step
            mn, Jn = _model_jac(x, tn)
            rn = wts * (mn - y)
            cn = 0.5 * float(rn @ rn)
            if np.isfinite(cn) and cn <= cost:
                improved = True
                break
            lam *= 10.0
        if not improved:
            break
        small_step = np.linalg.norm(step) <= xtol * (np.linalg.norm(theta) + xtol)
        small_drop = cost - cn <= ftol * cost
        theta, r, J, cost = tn, rn, Jn * wts[:, None], cn
        hist.append(cost)
        lam = max(lam / 3.0, 1e-12)
        if small_step or small_drop or cost == 0.0:
            break
    else:
        raise FitDiverged(f"no convergence in {max_iter} iterations")
    return theta, cost, J, hist, it


def _initial_peaks(s: Spectrum, n_peaks):
    v = s.values
    base = float(np.median(v))
    idx, props = find_peaks(v - base, prominence=0.0)
    prom = props["prominences"]
    keep = idx[prom > 0]
    prom = prom[prom > 0]
    if keep.size < n_peaks:
        raise NoPeaksFound(f"found {keep.size} local maxima, need {n_peaks}")
    order = np.argsort(prom)[::-1][:n_peaks]
    sel = np.sort(keep[order])
    widths, _, left, right = peak_widths(v, sel, rel_height=0.5)
    pos = np.arange(v.size)
    peaks = []
    for i, k in enumerate(sel):
        fl, fr = np.interp([left[i], right[i]], pos, s.freq)
        w = max(fr - fl, s.step)
        amp = max(v[k] - base, 1e-12 * max(abs(v[k]), 1e-300))
        peaks.append(LorentzianPeak(float(s.freq[k]), float(w), float(amp)))
    return peaks, base


def fit_lorentzians(s: Spectrum, n_peaks, init=None, baseline=None, max_iter=500, ftol=1e-14, xtol=1e-12):
    """Fit ``n_peaks`` Lorentzians plus a constant baseline.

    Parameters
    ----------
    s : Spectrum
    n_peaks : int
    init : list of LorentzianPeak, optional
        Starting peaks; when absent, local maxima ranked by prominence.
    baseline : float, optional
        Starting baseline (median of S by default).

    Returns
    -------
    LorentzFit

    Raises
    ------
    NoPeaksFound
        Fewer local maxima than ``n_peaks``.
    FitDiverged
        Non-finite covariance or no convergence.
    """
    if n_peaks < 1:
        raise ParameterError("n_peaks must be >= 1")
    if init is None:
        init, b0 = _initial_peaks(s, n_peaks)
    else:
        if len(init) != n_peaks:
            raise ParameterError("init must list n_peaks peaks")
        b0 = float(np.median(s.values))
    if baseline is not None:
        b0 = float(baseline)

    # work on a grid centered at the span midpoint and unit-scaled values
    f0 = 0.5 * (s.freq[0] + s.freq[-1])
    fs = 0.5 * (s.freq[-1] - s.freq[0])
    ys = float(np.max(np.abs(s.values))) or 1.0
    x = (s.freq - f0) / fs
    y = s.values / ys
    wts = np.ones_like(x) if s.sigma is None else ys / s.sigma
    theta = [b0 / ys]
    for pk in init:
        theta += [(pk.center - f0) / fs, math.log(pk.fwhm / fs), math.log(pk.amplitude / ys)]
    theta = np.array(theta, dtype=float)
    return _finish_fit(x, y, wts, theta, (f0, fs, ys), n_peaks, max_iter, ftol, xtol)


def _finish_fit(x, y, wts, theta, scales, n_peaks, max_iter, ftol, xtol):
    f0, fs, ys = scales
    theta, cost, J, hist, it = _lm(x, y, wts, theta, max_iter, ftol, xtol)
    npts, npar = x.size, theta.size
    dof = max(npts - npar, 1)
    s2 = 2.0 * cost / dof
    try:
        cov_t = s2 * np.linalg.inv(J.T @ J)
    except np.linalg.LinAlgError as exc:
        raise FitDiverged("singular normal matrix at optimum") from exc
    b, c, w, A = _unpack(theta)
    # chain rule back to natural parameters in original units
    D = np.empty(npar)
    D[0] = ys
    D[1::3] = fs
    D[2::3] = fs * w
    D[3::3] = ys * A
    cov = cov_t * np.outer(D, D)
    if not np.all(np.isfinite(cov)):
        raise FitDiverged("non-finite covariance")
    order = np.argsort(c)
    peaks = tuple(LorentzianPeak(float(f0 + fs * c[i]), float(fs * w[i]), float(ys * A[i])) for i in order)
    perm = [0] + [1 + 3 * i + k for i in order for k in range(3)]
    cov = cov[np.ix_(perm, perm)]
    theta = theta[perm]
    resid = (peak_model(x * fs + f0, peaks, b * ys) - y * ys)
    rms = float(math.sqrt(np.mean(resid**2)))
    # weighted residuals are already in units of sigma (cost = chi^2 / 2)
    scale2 = ys * ys if np.all(wts == 1.0) else 1.0
    return LorentzFit(
        peaks, float(b * ys), cov, cost * scale2, tuple(h * scale2 for h in hist), rms, it, npts, theta, scales
    )


# ---------------------------------------------------------------- extraction


@dataclass(frozen=True)
class SiEstimate:
    delta_hat: float
    delta_normalized: float
    ci_low: float
    ci_high: float
    fit_rms: float
    n_peaks_used: int = 2
    omega: float = float("nan")
    stderr: float = float("nan")
    order: int = 1
    extras: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.ci_low <= self.delta_hat <= self.ci_high:
            raise ParameterError("confidence interval must contain the estimate")

    @property
    def delta_normalized_by_order(self):
        """delta divided by order*Omega, the alternative for higher-order lines."""
        return self.delta_hat / (self.order * self.omega)

    def to_dict(self):
        d = asdict(self)
        d.update(d.pop("extras"))
        d["delta_normalized_by_order"] = self.delta_normalized_by_order
        return {k: _jsonable(v) for k, v in d.items()}

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def _jsonable(v):
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def _delta_from_centers(c_red, c_blue, pump_offset, folded):
    if folded:
        return abs(c_red) - abs(c_blue)
    return c_red + c_blue - 2.0 * pump_offset


def extract_si(red: LorentzianPeak, blue: LorentzianPeak, pump_offset=0.0, folded=False, omega=None, order=1):
    """Side-band inequivalence from a red/blue pair of fitted peaks.

    Unfolded: delta = red.center + blue.center - 2*pump_offset, since the
    pair sits at pump + (+-Omega + delta/2).  Folded (absolute-frequency
    spectra): delta = |red.center| - |blue.center|.  ``omega`` defaults to
    the fitted half-separation of the pair.

    The returned CI is degenerate; use :func:`estimate_from_fit` or
    :func:`bootstrap_ci` for uncertainties.
    """
    if folded:
        om =0.5 * (abs(red.center) + abs(blue.center)) if omega is None else omega
    else:
        if red.center <= blue.center:
            raise OrderingViolation("red side-band must lie above the blue one")
        om = 0.5 * (red.center - blue.center) if omega is None else omega
    om = om / order
    d = _delta_from_centers(red.center, blue.center, pump_offset, folded)
    return SiEstimate(d, d / om, d, d, 0.0, 2, om, 0.0, order)


def sideband_pair(fit: LorentzFit):
    """Indices (red, blue) of the outermost fitted peaks."""
    if len(fit.peaks) < 2:
        raise NoPeaksFound("need at least two peaks for a side-band pair")
    return len(fit.peaks) - 1, 0


def _delta_stderr(fit, ir, ib, folded):
    jr, jb = fit.index(ir, "center"), fit.index(ib, "center")
    gr, gb = 1.0, 1.0
    if folded:
        gr = math.copysign(1.0, fit.peaks[ir].center)
        gb = -math.copysign(1.0, fit.peaks[ib].center)
    C = fit.covariance
    var = gr * gr * C[jr, jr] + gb * gb * C[jb, jb] + 2 * gr * gb * C[jr, jb]
    return math.sqrt(max(var, 0.0))


def estimate_from_fit(fit: LorentzFit, pump_offset=0.0, folded=False, omega=None, order=1):
    """SiEstimate with a covariance-based 95% interval (+-1.96 standard errors)."""
    ir, ib = sideband_pair(fit)
    base = extract_si(fit.peaks[ir], fit.peaks[ib], pump_offset, folded, omega, order)
    se = _delta_stderr(fit, ir, ib, folded)
    d = base.delta_hat
    return SiEstimate(
        d,
        base.delta_normalized,
        d - Z95 * se,
        d + Z95 * se,
        fit.rms,
        2,
        base.omega,
        se,
        order,
        {"ci_method": "covariance", "peaks": [asdict(p) for p in fit.peaks], "baseline": fit.baseline},
    )


def _refit_delta(args):
    x, y_model, resid, wts, theta, scales, n_peaks, seq, pump_offset, folded = args
    rng = np.random.default_rng(seq)
    y = y_model + rng.choice(resid, size=resid.size, replace=True)
    try:
        fit = _finish_fit(x, y, wts, theta.copy(), scales, n_peaks, 200, 1e-10, 1e-9)
    except (FitDiverged, np.linalg.LinAlgError, ParameterError):
        return None
    ir, ib = sideband_pair(fit)
    return _delta_from_centers(fit.peaks[ir].center, fit.peaks[ib].center, pump_offset, folded)


def bootstrap_ci(s: Spectrum, fit: LorentzFit, resamples=200, seed=0, pump_offset=0.0, folded=False,
                 level=0.95, workers=1):
    """Residual-resampling bootstrap interval for delta.

    Each resample adds residuals drawn with replacement to the fitted model
    and refits from the converged parameters.  Per-resample generators are
    spawned from ``seed``, so the result does not depend on ``workers``.

    Returns
    -------
    (ci_low, ci_high, n_failed)
    """
    if resamples is None or resamples < 1:
        raise InvalidConfig("resamples must be >= 1")
    f0, fs, ys = fit.scales
    x = (s.freq - f0) / fs
    y = s.values / ys
    wts = np.ones_like(x) if s.sigma is None else ys / s.sigma
    y_model = fit.model(s.freq) / ys
    resid = y - y_model
    seqs = np.random.SeedSequence(seed).spawn(resamples)
    jobs = [(x, y_model, resid, wts, fit.theta, fit.scales, len(fit.peaks), q, pump_offset, folded) for q in seqs]
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(_refit_delta, jobs))
    else:
        out = [_refit_delta(j) for j in jobs]
    good = np.array([d for d in out if d is not None])
    failed = resamples - good.size
    if failed > MAX_FAILED_FRACTION * resamples:
        raise FitDiverged(f"{failed} of {resamples} bootstrap refits failed")
    a = 100.0 * (1.0 - level) / 2.0
    lo, hi = np.percentile(good, [a, 100.0 - a])
    return float(lo), float(hi), int(failed)


def estimate_with_bootstrap(s, fit, resamples=200, seed=0, pump_offset=0.0, folded=False, omega=None,
                            order=1, workers=1):
    """SiEstimate whose interval comes from :func:`bootstrap_ci`.

    The interval is widened to include the point estimate if needed.
    """
    est = estimate_from_fit(fit, pump_offset, folded, omega, order)
    lo, hi, failed = bootstrap_ci(s, fit, resamples, seed, pump_offset, folded, workers=workers)
    d = est.delta_hat
    extras = dict(est.extras, ci_method="bootstrap", resamples=resamples, failed_resamples=failed)
    return SiEstimate(d, est.delta_normalized, min(lo, d), max(hi, d), est.fit_rms, 2, est.omega, est.stderr,
                      order, extras)


# ---------------------------------------------------------------- CSV


def read_spectrum_csv(path):
    """Read ``f, S[, sigma]`` columns; lines starting with '#' are comments."""
    rows = []
    with open(path, newline="") as fh:
        lines = csv.reader(row for row in fh if row.strip() and not row.lstrip().startswith("#"))
        for i, line in enumerate(lines):
            try:
                vals = [float(v) for v in line]
            except ValueError as exc:
                if i == 0:
                    continue  # header line
                raise ParameterError(f"malformed spectrum row: {line}") from exc
            if len(vals) not in (2, 3):
                raise ParameterError(f"expected 2 or 3 columns, got {len(vals)}")
            rows.append(vals)
    if not rows:
        raise ParameterError(f"no data rows in {path}")
    if len({len(r) for r in rows}) != 1:
        raise ParameterError("inconsistent column count")
    arr = np.array(rows)
    return Spectrum(arr[:, 0], arr[:, 1], arr[:, 2] if arr.shape[1] == 3 else None)


def write_spectrum_csv(path, s: Spectrum, header=None):
    with open(path, "w", newline="") as fh:
        if header:
            fh.write(f"# {header}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["f", "S"] + (["sigma"] if s.sigma is not None else []))
        for i in range(s.freq.size):
            row = [repr(float(s.freq[i])), repr(float(s.values[i]))]
            if s.sigma is not None:
                row.append(repr(float(s.sigma[i])))
            w.writerow(row)
