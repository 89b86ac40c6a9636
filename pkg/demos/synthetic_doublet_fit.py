"""Synthetic side-band doublet: synthesize, fit, and bound delta.

A central line plus blue and red side-bands displaced by delta_bar = 0.02
is drawn at 30 dB SNR.  Three Lorentzians are fitted and the inequivalence
is reported with covariance and bootstrap intervals.
"""

import numpy as np

from sideband_si import spectral as sp

grid = np.linspace(-1.5, 1.5, 1201)
s = sp.synth_spectrum(sp.reference_doublet(1.0, 0.02), grid, snr_db=30, seed=0)
fit = sp.fit_lorentzians(s, 3)
for pk in fit.peaks:
    print(f"center {pk.center:+.5f}  fwhm {pk.fwhm:.4f}  amplitude {pk.amplitude:.4f}")

cov = sp.estimate_from_fit(fit)
boot = sp.estimate_with_bootstrap(s, fit, resamples=200, seed=0)
print(f"delta_bar = {cov.delta_normalized:.5f}")
print(f"covariance 95% CI [{cov.ci_low:.5f}, {cov.ci_high:.5f}]")
print(f"bootstrap  95% CI [{boot.ci_low:.5f}, {boot.ci_high:.5f}]")
