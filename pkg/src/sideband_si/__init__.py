"""Side-band inequivalence of a driven cavity-oscillator system.

Closed-form expressions, a harmonic-balance solver, a classical Langevin
simulator and a Lorentzian spectrum fitter, all in angular units.
"""

from .closed_form import (
    Regime,
    RegimeReport,
    SiResult,
    classify_regime,
    optimum,
    population_asymmetry,
    si_all,
    si_full,
    si_limits,
    si_linearized,
    si_normalized_form,
    si_quadratic,
    si_resolved,
)
from .harmonic_balance import HbSolution, HbState, hb_residual, hb_solve, hb_solve_order2
from .langevin import SimConfig, Trajectory, integrate_classical, measure_si_from_sim, psd
from .params import DimGroups, DriveParams, OmParams, dimensionless_groups, mean_displacement, steady_state_photon
from .spectral import LorentzianPeak, SiEstimate, Spectrum, bootstrap_ci, extract_si, fit_lorentzians, synth_spectrum

__all__ = [
    "DimGroups",
    "DriveParams",
    "HbSolution",
    "HbState",
    "LorentzianPeak",
    "OmParams",
    "Regime",
    "RegimeReport",
    "SiEstimate",
    "SiResult",
    "SimConfig",
    "Spectrum",
    "Trajectory",
    "bootstrap_ci",
    "classify_regime",
    "dimensionless_groups",
    "extract_si",
    "fit_lorentzians",
    "hb_residual",
    "hb_solve",
    "hb_solve_order2",
    "integrate_classical",
    "mean_displacement",
    "measure_si_from_sim",
    "optimum",
    "population_asymmetry",
    "psd",
    "si_all",
    "si_full",
    "si_limits",
    "si_linearized",
    "si_normalized_form",
    "si_quadratic",
    "si_resolved",
    "steady_state_photon",
    "synth_spectrum",
]
