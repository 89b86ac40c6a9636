"""``sideband-si`` command-line tool.

Subcommands: si, sweep, optimum, classify, simulate, fit, synth.
Exit codes: 0 success, 2 invalid input, 3 computation failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import closed_form as cf
from .config import RunConfig, load_config
from .errors import InvalidConfig, NoPhysicalRoot, ParameterError, SidebandError
from .langevin import SimConfig, drive_for_photon_number, integrate_classical, measure_si_from_trajectory
from .params import dimensionless_groups, resolution_class, resonant_detuning, steady_state_photon
from .spectral import (
    estimate_with_bootstrap,
    reference_doublet,
    fit_lorentzians,
    read_spectrum_csv,
    synth_spectrum,
    write_spectrum_csv,
)

EXIT_OK, EXIT_INVALID, EXIT_FAILED = 0, 2, 3


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _clean(v):
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, complex):
        return {"re": v.real, "im": v.imag}
    if hasattr(v, "value"):
        return v.value
    return v


def dumps(obj):
    return json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n"


def _out_dir(args, cfg: RunConfig):
    d = Path(args.out or cfg.output.get("dir") or ".")
    try:
        d.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise InvalidConfig(f"cannot create output directory {d}: {exc}") from exc
    if not os.access(d, os.W_OK):
        raise InvalidConfig(f"output directory {d} is not writable")
    return d


def _fmt(args, cfg, default="json"):
    f = args.format or cfg.output.get("format") or default
    if f not in ("json", "csv"):
        raise InvalidConfig("format must be csv or json")
    return f


def _write(path: Path, text: str):
    path.write_text(text)
    return str(path)


# ---------------------------------------------------------------- closed form


def _nbar_values(cfg: RunConfig, p):
    """(selected nbar, all roots or None) from params.nbar or the drive block."""
    drive = cfg.drive_params()
    if drive is not None:
        try:
            ss = steady_state_photon(p, drive)
        except NoPhysicalRoot as exc:
            raise CliError(str(exc), EXIT_FAILED) from exc
        return max(ss.roots), {"roots": list(ss.roots), "bistable": ss.bistable}
    if "nbar" not in cfg.params:
        raise InvalidConfig("give params.nbar or a [drive] block")
    n = cfg.params["nbar"]
    if not (isinstance(n, (int, float)) and n >= 0):
        raise InvalidConfig("params.nbar must be a number >= 0")
    return float(n), None


def _method_table(p, nbar):
    res = cf.si_all(p, nbar)
    out = {}
    for name, r in res.items():
        out[name] = {"delta": r.delta, "delta_normalized": r.delta_normalized, "valid": r.valid}
    return out


def si_report(cfg: RunConfig):
    p = cfg.om_params()
    nbar, steady = _nbar_values(cfg, p)
    rep = {
        "units_in": cfg.units,
        "params": {
            "mech_freq": p.mech_freq,
            "optical_decay": p.optical_decay,
            "mech_decay": p.mech_decay,
            "coupling": p.coupling,
            "detuning": p.detuning,
        },
        "nbar": nbar,
        "resolution": resolution_class(p),
        "methods": _method_table(p, nbar),
        "limits": {"delta_at_zero": cf.si_full(p, 0.0).delta},
    }
    if steady is not None:
        rep["steady_state"] = steady
    if p.coupling > 0:
        rep["limits"]["tail_coefficient"] = cf.si_limits(p).tail_coefficient
        c = cf.classify_regime(p, nbar)
        rep["regime"] = c.regime.value
        rep["optimum"] = _optimum_dict(cf.optimum(p))
        rep["population_asymmetry"] = cf.population_asymmetry(p, nbar).normalized
    else:
        rep["regime"] = None
        rep["optimum"] = None
        rep["limits"]["tail_coefficient"] = None
    return rep


def _optimum_dict(r):
    return {
        "nbar_max": r.nbar_max,
        "nbar_max_approx": r.nbar_max_approx,
        "nbar_max_numeric": r.nbar_max_numeric,
        "delta_max": r.delta_max,
        "delta_max_approx": r.delta_max_approx,
        "nbar_linewidth": r.nbar_linewidth,
    }


def cmd_si(args, cfg):
    rep = si_report(cfg)
    out = _out_dir(args, cfg)
    if _fmt(args, cfg) == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["method", "nbar", "delta", "delta_normalized", "valid"])
        for name, m in rep["methods"].items():
            w.writerow([name, repr(rep["nbar"]), repr(m["delta"]), repr(m["delta_normalized"]), m["valid"]])
        path = _write(out / "si.csv", buf.getvalue())
    else:
        path = _write(out / "si.json", dumps(rep))
    return rep, [path]


SWEEP_COLUMNS = ["index", "variable", "value", "nbar"] + [f"delta_{m}" for m in cf.METHODS] + [
    "delta_normalized",
    "regime",
    "population_asymmetry",
]


def _sweep_row(cfg, var, value, i):
    if var == "nbar":
        p = cfg.om_params()
        nbar = float(value)
    else:
        p = cfg.om_params(**{var: float(value)})
        nbar, _ = _nbar_values(cfg, p)
    res = cf.si_all(p, nbar)
    row = {"index": i, "variable": var, "value": float(value), "nbar": nbar}
    for m in cf.METHODS:
        row[f"delta_{m}"] = res[m].delta
    row["delta_normalized"] = res["full"].delta_normalized
    if p.coupling > 0:
        row["regime"] = cf.classify_regime(p, nbar).regime.value
        row["population_asymmetry"] = cf.population_asymmetry(p, nbar).normalized
    else:
        row["regime"] = ""
        row["population_asymmetry"] = float("nan")
    return row


def sweep_rows(cfg: RunConfig, workers=None):
    var, values = cfg.sweep_grid()
    cfg.om_params()  # validate before dispatching
    with ThreadPoolExecutor(max_workers=workers or os.cpu_count() or 1) as pool:
        # map preserves submission order whatever the completion order
        return list(pool.map(lambda iv: _sweep_row(cfg, var, iv[1], iv[0]), enumerate(values)))


def cmd_sweep(args, cfg):
    rows = sweep_rows(cfg, args.workers)
    out = _out_dir(args, cfg)
    if _fmt(args, cfg, "csv") == "json":
        path = _write(out / "sweep.json", dumps({"columns": SWEEP_COLUMNS, "rows": rows}))
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for r in rows:
            w.writerow([repr(r[c]) if isinstance(r[c], float) else r[c] for c in SWEEP_COLUMNS])
        path = _write(out / "sweep.csv", buf.getvalue())
    return {"rows": len(rows)}, [path]


def cmd_optimum(args, cfg):
    p = cfg.om_params()
    g = dimensionless_groups(p)
    rep = _optimum_dict(cf.optimum(p))
    rep["groups"] = {"alpha": g.alpha, "beta": g.beta, "theta": g.theta, "psi": g.psi}
    out = _out_dir(args, cfg)
    return rep, [_write(out / "optimum.json", dumps(rep))]


def cmd_classify(args, cfg):
    p = cfg.om_params()
    nbar, _ = _nbar_values(cfg, p)
    r = cf.classify_regime(p, nbar)
    rep = {
        "nbar": nbar,
        "regime": r.regime.value,
        "nbar_max": r.nbar_max,
        "delta_max": r.delta_max,
        "nbar_linewidth": r.nbar_linewidth,
        "asymptotic_delta": r.asymptotic_delta,
        "delta": cf.si_full(p, nbar).delta,
    }
    out = _out_dir(args, cfg)
    return rep, [_write(out / "classify.json", dumps(rep))]


# ---------------------------------------------------------------- simulation and spectra


def cmd_simulate(args, cfg):
    s = cfg.simulate
    p = cfg.om_params()
    if "nbar" in s:
        # pin the static cavity pull to zero at the requested photon number
        nbar = float(s["nbar"])
        if s.get("resonant", True):
            p = p.replace(detuning=resonant_detuning(p, nbar))
        drive = drive_for_photon_number(p, nbar)
    elif "drive" in s:
        drive = float(s["drive"])
    else:
        raise InvalidConfig("[simulate] needs nbar or drive")
    try:
        sim = SimConfig(
            dt=float(s.get("dt", 0.05 / p.mech_freq)),
            duration=float(s.get("duration", 0.05 / p.mech_freq * 2**17)),
            drive=drive,
            n_th=float(s.get("n_th", 0.0)),
            seed=int(args.seed if args.seed is not None else s.get("seed", 0)),
            transient_fraction=float(s.get("transient_fraction", 0.0)),
            kick=float(s.get("kick", 0.01)),
        )
    except ParameterError as exc:
        raise InvalidConfig(str(exc)) from exc
    traj = integrate_classical(p, sim)
    est, spec = measure_si_from_trajectory(
        p, traj, int(s.get("segment_length", 2**14)), shift=float(s.get("inject_shift", 0.0))
    )
    out = _out_dir(args, cfg)
    rep = est.to_dict()
    rep["classical_regime"] = (
        "delta consistent with 0" if est.extras["consistent_with_zero"] else "delta resolved from 0"
    )
    if p.coupling > 0 and p.mech_decay > 0:
        rep["regime"] = cf.classify_regime(p, float(np.mean(np.abs(traj.a) ** 2))).regime.value
    paths = [str(out / "trajectory.csv"), str(out / "spectrum.csv")]
    traj.to_csv(paths[0])
    write_spectrum_csv(paths[1], spec, "angular offset from pump (rad/s), PSD of a(t)")
    paths.append(_write(out / "si_estimate.json", dumps(rep)))
    return rep, paths


def cmd_fit(args, cfg):
    f = cfg.fit
    path = args.spectrum or f.get("spectrum")
    if not path:
        raise InvalidConfig("give a spectrum file (positional or fit.spectrum)")
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            spec = read_spectrum_csv(path)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
    except (OSError, ParameterError) as exc:
        raise InvalidConfig(f"cannot read spectrum: {exc}") from exc
    if cfg.factor != 1.0:
        spec = type(spec)(spec.freq * cfg.factor, spec.values, spec.sigma)
    n = int(f.get("n_peaks", 3))
    pump = float(f.get("pump_offset", 0.0)) * cfg.factor
    omega = f.get("omega", cfg.params.get("mech_freq"))
    omega = None if omega is None else float(omega) * cfg.factor
    fit = fit_lorentzians(spec, n)
    seed = args.seed if args.seed is not None else int(f.get("seed", 0))
    est = estimate_with_bootstrap(
        spec,
        fit,
        resamples=int(f.get("resamples", 200)),
        seed=seed,
        pump_offset=pump,
        folded=bool(f.get("folded", False)),
        omega=omega,
        order=int(f.get("order", 1)),
        workers=args.workers or 1,
    )
    rep = est.to_dict()
    out = _out_dir(args, cfg)
    return rep, [_write(out / "si_estimate.json", dumps(rep))]


def cmd_synth(args, cfg):
    s = cfg.synth
    om = float(s.get("omega", cfg.params.get("mech_freq", 1.0))) * cfg.factor
    span = float(s.get("span", 1.5))
    n = int(s.get("points", 1201))
    snr = s.get("snr_db", 30.0)
    snr = None if snr in (None, "none", "") else float(snr)
    seed = args.seed if args.seed is not None else int(s.get("seed", 0))
    grid = np.linspace(-span * om, span * om, n)
    heights = tuple(float(v) for v in str(s.get("heights", "0.6,0.8,1.0")).split(","))
    if len(heights) != 3:
        raise InvalidConfig("synth.heights needs three values: central, blue, red")
    peaks = reference_doublet(om, float(s.get("delta_bar", 0.02)), heights)
    spec = synth_spectrum(peaks, grid, snr, seed)
    out = _out_dir(args, cfg)
    path = out / "synth_spectrum.csv"
    write_spectrum_csv(path, spec, f"side-band doublet, delta_bar={s.get('delta_bar', 0.02)}, snr_db={snr}")
    return {"points": n, "file": str(path)}, [str(path)]


COMMANDS = {
    "si": cmd_si,
    "sweep": cmd_sweep,
    "optimum": cmd_optimum,
    "classify": cmd_classify,
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "synth": cmd_synth,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI or JSON configuration file")
    common.add_argument("--units", choices=("hz", "rad"), help="unit system of the config values")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--out", help="output directory")
    common.add_argument("--format", choices=("csv", "json"), default=None)
    common.add_argument("--workers", type=int, default=None)
    ap = argparse.ArgumentParser(prog="sideband-si", description="Side-band inequivalence toolkit")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common])
        if name == "fit":
            sp.add_argument("spectrum", nargs="?", help="CSV spectrum file (f, S[, sigma])")
    return ap


def main(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    if args.workers is not None and args.workers < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return EXIT_INVALID
    try:
        cfg = load_config(args.config, args.units)
        rep, paths = COMMANDS[args.command](args, cfg)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (InvalidConfig, ParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except SidebandError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILED
    for p in paths:
        print(p)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
