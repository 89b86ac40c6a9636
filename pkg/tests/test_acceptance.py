"""Acceptance criteria, one verdict line each.

Run alone with ``pytest tests/test_acceptance.py -s`` to see the lines as
they are produced; they are also repeated in the pytest terminal summary.
"""

import time
import warnings

import numpy as np
import pytest

import oracles
from acceptance_log import record
from sideband_si import closed_form as cf
from sideband_si import harmonic_balance as hb
from sideband_si import langevin as lv
from sideband_si import spectral as sp
from sideband_si.params import DimGroups, OmParams, dimensionless_groups, resonant_detuning


def resolved_grid(n, seed, n_lo=-3, n_hi=0, n_frac=0.1):
    """kappa/Omega, Gamma/Omega <= 0.1 and nbar <= n_frac * nbar_max."""
    rng = np.random.default_rng(seed)
    pts = []
    for _ in range(n):
        p = OmParams(1.0, 10 ** rng.uniform(-3, -1), 10 ** rng.uniform(-4, -1), 10 ** rng.uniform(-4, -2))
        nmax = cf.optimum_nbar(dimensionless_groups(p))
        pts.append((p, n_frac * nmax * 10 ** rng.uniform(n_lo, n_hi)))
    return pts


def test_ac1_optimum_location():
    t0 = time.perf_counter()
    g = DimGroups(0.1, 1e-3, 0.1, 1.0)
    exact = cf.optimum_nbar(g)
    numeric = cf.argmax_numeric(g)
    ref = oracles.argmax_mp(0.1, 1e-3, 0.1)
    rel = abs(numeric - exact) / exact
    approx_gap = abs(1 / g.beta - exact) / exact
    dt = time.perf_counter() - t0
    ok = rel <= 1e-6 and abs(ref - exact) / exact <= 1e-9 and approx_gap <= 0.005 and dt < 1.0
    record("AC1", ok, f"nbar_max exact={exact:.4f} numeric={numeric:.4f} rel={rel:.1e}; "
                      f"1/beta gap={approx_gap:.2%}", dt)
    assert ok


def test_ac2_limits():
    t0 = time.perf_counter()
    worst_zero, worst_tail = 0.0, 0.0
    for p in (OmParams(1.0, 0.1, 1e-3, 0.01), OmParams(2.0, 0.05, 1e-3, 3e-3), OmParams(1.0, 0.01, 1e-4, 1e-3)):
        om, gm = p.mech_freq, p.mech_decay
        want = 2 * gm**2 * om / (4 * om**2 + p.gamma_total**2)
        worst_zero = max(worst_zero, abs(cf.si_full(p, 0.0).delta - want))
        beta = dimensionless_groups(p).beta
        n = 1e3 / beta
        tail = om**3 / (2 * p.coupling**2)
        worst_tail = max(worst_tail, abs(n * cf.si_full(p, n).delta - tail) / tail)
    dt = time.perf_counter() - t0
    ok = worst_zero == 0.0 and worst_tail <= 0.01 and dt < 1.0
    record("AC2", ok, f"zero-photon mismatch={worst_zero:.1e} (exact); tail rel err={worst_tail:.2e}", dt)
    assert ok


def test_ac3_cross_oracle_chain():
    t0 = time.perf_counter()
    tol = 1e-9
    worst_hb, worst_bound, failures = 0.0, 0.0, 0
    for p, n in resolved_grid(100, seed=2024):
        try:
            sol = hb.hb_solve(p, n, tol=tol)
        except Exception:
            failures += 1
            continue
        q, (small, _) = cf.si_quadratic(p, n)
        worst_hb = max(worst_hb, abs(sol.state.delta - small) / p.mech_freq)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            lin = cf.si_linearized(p, n).delta
        worst_bound = max(worst_bound, abs(small.real - lin) / (abs(small) ** 2 / p.mech_freq))
    dt = time.perf_counter() - t0
    ok = failures == 0 and worst_hb <= 1e-8 and worst_bound <= 1.0 and dt < 30.0
    record("AC3", ok, f"max|dHB-dq|/Omega={worst_hb:.1e}; max gap/(|d|^2/Omega)={worst_bound:.2f}; "
                      f"solver failures={failures}/100", dt)
    assert ok


def test_ac4_positivity_and_gamma_scaling():
    t0 = time.perf_counter()
    negatives = 0
    for p, n in resolved_grid(200, seed=4, n_lo=-6, n_hi=4, n_frac=1.0):
        q, _ = cf.si_quadratic(p, n)
        vals = [cf.si_full(p, n).delta, cf.si_resolved(p, n).delta, q.delta]
        negatives += sum(v <= 0 for v in vals)
    worst = 0.0
    for p, _ in resolved_grid(50, seed=5):
        for s in (0.1, 0.5, 2.0, 7.0):
            gm = p.mech_decay * s
            if gm >= p.gamma_total:
                continue
            # scale Gamma at fixed total linewidth
            q = p.replace(mech_decay=gm, optical_decay=p.gamma_total - gm)
            r = cf.si_full(q, 0.0).delta / cf.si_full(p, 0.0).delta
            worst = max(worst, abs(r / s**2 - 1))
    dt = time.perf_counter() - t0
    ok = negatives == 0 and worst <= 1e-10
    record("AC4", ok, f"non-positive values={negatives}; max |ratio/s^2 - 1|={worst:.1e}", dt)
    assert ok


def test_ac5_synthetic_roundtrip():
    t0 = time.perf_counter()
    grid = np.linspace(-1.5, 1.5, 1201)
    peaks = sp.reference_doublet(1.0, 0.02)
    covered, worst = 0, 0.0
    for seed in range(100):
        s = sp.synth_spectrum(peaks, grid, snr_db=30, seed=seed)
        fit = sp.fit_lorentzians(s, 3)
        est = sp.estimate_with_bootstrap(s, fit, resamples=200, seed=seed)
        worst = max(worst, abs(est.delta_normalized - 0.02))
        covered += est.ci_low <= 0.02 <= est.ci_high
    dt = time.perf_counter() - t0
    ok = worst <= 0.001 and covered >= 90 and dt < 60.0
    record("AC5", ok, f"max |dbar-0.02|={worst:.1e}; bootstrap CI coverage {covered}/100", dt)
    assert ok


@pytest.mark.slow
def test_ac6_classical_symmetry():
    t0 = time.perf_counter()
    base = OmParams(1.0, 0.1, 1e-4, coupling=1e-3)
    dt_step = 0.05
    rows = []
    ok_levels = True
    for nbar in (5e7, 8e7, 1.2e8, 2e8, 3e8):
        p = base.replace(detuning=resonant_detuning(base, nbar))
        assert cf.classify_regime(p, nbar).regime is cf.Regime.STRONGLY_NONLINEAR
        cfg = lv.SimConfig(dt=dt_step, duration=2**17 * dt_step, drive=lv.drive_for_photon_number(p, nbar),
                           kick=0.01)
        est = lv.measure_si_from_sim(p, cfg)
        bin_w = est.extras["bin_width"]
        good = abs(est.delta_hat) < 3 * est.stderr and abs(est.delta_hat) < bin_w
        ok_levels &= good
        rows.append(f"{nbar:.1e}:{est.delta_hat:+.1e}")
    p = base.replace(detuning=resonant_detuning(base, 1e8))
    cfg = lv.SimConfig(dt=dt_step, duration=2**17 * dt_step, drive=lv.drive_for_photon_number(p, 1e8), kick=0.01)
    inj = lv.measure_si_from_sim(p, cfg, shift=0.01)
    recovered = inj.ci_low <= 0.01 <= inj.ci_high
    dt = time.perf_counter() - t0
    ok = ok_levels and recovered and dt < 300.0
    record("AC6", ok, f"delta_hat per nbar {' '.join(rows)}; injected 0.01 -> {inj.delta_hat:.5f} "
                      f"[{inj.ci_low:.5f}, {inj.ci_high:.5f}]", dt)
    assert ok


def test_ac7_second_order_ratio():
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    ratios = []
    for _ in range(10):
        p = OmParams(1.0, 10 ** rng.uniform(-2, -1), 10 ** rng.uniform(-4, -2.5), 10 ** rng.uniform(-3.5, -2))
        nmax = cf.optimum_nbar(dimensionless_groups(p))
        cap = min(0.1 * nmax, (0.1 / p.coupling) ** 2)
        ratios.append(hb.hb_solve_order2(p, cap * 10 ** rng.uniform(-2, 0)).order2_ratio)
    dt = time.perf_counter() - t0
    ok = all(1.8 <= r <= 2.2 for r in ratios)
    record("AC7", ok, f"delta2/delta in [{min(ratios):.4f}, {max(ratios):.4f}]", dt)
    assert ok


AC8_PARAMS = OmParams(1.0, 0.1, 1e-3, coupling=0.01)


def _ac8_sweep():
    p = AC8_PARAMS
    r = cf.optimum(p)
    nmax, dmax = r.nbar_max, r.delta_max
    n = nmax * np.logspace(-3, 3, 121)
    reports = [cf.classify_regime(p, x) for x in n]
    exact = np.array([cf.si_full(p, x).delta for x in n])
    return p, n, nmax, dmax, reports, exact


def test_ac8_regime_sequence_and_scaling():
    t0 = time.perf_counter()
    p, n, nmax, dmax, reports, exact = _ac8_sweep()
    seq = [rep.regime for rep in reports]
    collapsed = [s for i, s in enumerate(seq) if i == 0 or s != seq[i - 1]]
    order_ok = collapsed == list(cf.Regime)
    low = n <= 0.01 * nmax
    high = n >= 100 * nmax
    # the curve must follow each line's n-dependence: exact/line constant to 10 %
    r_low = exact[low] / (n[low] / nmax)
    r_high = exact[high] * (n[high] / nmax)
    spread_low = r_low.max() / r_low.min() - 1
    spread_high = r_high.max() / r_high.min() - 1
    dt = time.perf_counter() - t0
    ok = order_ok and spread_low <= 0.1 and spread_high <= 0.1
    record("AC8", ok, f"sequence {'->'.join(r.value for r in collapsed)}; linear-zone spread={spread_low:.2%}, "
                      f"1/n-zone spread={spread_high:.2%} (scaling reading of the asymptotes)", dt)
    assert ok


@pytest.mark.xfail(strict=True, reason="the asymptotic lines hold as scaling laws; their literal prefactors differ "
                   "from the exact curve by theta^2/(1+theta^2) and theta^2")
def test_ac8_literal_prefactors():
    t0 = time.perf_counter()
    p, n, nmax, dmax, reports, exact = _ac8_sweep()
    theta = dimensionless_groups(p).theta
    zone = (n <= 0.01 * nmax) | (n >= 100 * nmax)
    line = np.array([cf.regime_asymptote(rep.regime, x, nmax, dmax, theta) for rep, x in zip(reports, n)])
    err = np.abs(exact[zone] / line[zone] - 1)
    dt = time.perf_counter() - t0
    ok = bool(np.all(err <= 0.1))
    record("AC8-literal", ok, f"max |exact/line - 1|={err.max():.3f} with the printed prefactors "
                              f"(expected factors {theta**2 / (1 + theta**2):.4f} and {theta**2:.4f})", dt)
    assert ok
