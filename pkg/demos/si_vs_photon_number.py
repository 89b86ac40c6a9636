"""SI across the three operating regimes.

Evaluates every closed form along a log-spaced photon-number axis for the
parameter set alpha = 0.1, beta = 1e-3, theta = 0.1 (Omega = 1) and prints
the optimum and a coarse table.  Pass a path to also write the full table
as CSV.
"""

import csv
import math
import sys

import numpy as np

from sideband_si import closed_form as cf
from sideband_si.params import OmParams, dimensionless_groups

g0 = math.sqrt(5e-4)
gm = math.sqrt(0.02)
p = OmParams(1.0, 0.2 - gm, gm, coupling=g0)
g = dimensionless_groups(p)
print(f"alpha={g.alpha:.3g} beta={g.beta:.3g} theta={g.theta:.3g} psi={g.psi:.3g}")

r = cf.optimum(p)
print(f"nbar_max = {r.nbar_max:.4f} (1/beta = {1 / g.beta:.0f}, scan = {r.nbar_max_numeric:.4f})")
print(f"delta_max = {r.delta_max:.5g}, photon-number linewidth = {r.nbar_linewidth:.1f}")

nbar = np.logspace(0, 6, 25)
print(f"\n{'nbar':>10} {'full':>11} {'resolved':>11} {'quadratic':>11} regime")
rows = []
for n in nbar:
    res = cf.si_all(p, n)
    reg = cf.classify_regime(p, n).regime.value
    rows.append([n] + [res[m].delta for m in cf.METHODS] + [reg])
    mark = lambda m: f"{res[m].delta:10.4g}{' ' if res[m].valid else '*'}"
    print(f"{n:10.3g} {mark('full')} {mark('resolved')} {mark('quadratic')} {reg}")

print("* outside the perturbative domain of that form (valid = False)")

if len(sys.argv) > 1:
    with open(sys.argv[1], "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["nbar"] + list(cf.METHODS) + ["regime"])
        w.writerows(rows)
    print(f"\nwrote {sys.argv[1]}")
