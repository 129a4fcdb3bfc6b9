"""The surface energy along the horosphere limit.

Vertically shifted unit spheres interpolate between a round sphere and a
horosphere as the shift decreases to 1; the energy has a closed form and
diverges to minus infinity, so the functional is unbounded below.  The
numeric curve is written next to the closed form as CSV.
"""

import numpy as np

from cmc_hyp import build_grid, energy_E, horosphere_energy, make_params
from cmc_hyp.chart import SphereField, omega_field
from cmc_hyp.energy import energy_curve

params = make_params(2.0)
grid = build_grid(32)

print("== closed form versus quadrature ==")
om = omega_field(grid)
for t in (2.0, 1.5, 1.1, 1.05):
    u = SphereField(grid, om.values + np.array([0, 0, t]), om.dx, om.dy)
    num = energy_E(u, params)
    print(f"  t = {t:5.2f}: E = {num:14.8f}   closed form "
          f"{horosphere_energy(params.k, t):14.8f}")

print("\n== divergence toward the horosphere ==")
ts = np.array([1.1, 1.05, 1.02, 1.01, 1.005, 1.002])
rows = energy_curve(params, ts, grid)
for t, e in rows:
    print(f"  t = {t:6.3f}: E = {e:12.2f}")

path = "energy_curve_demo.csv"
with open(path, "w") as fh:
    fh.write("t,E0,closed_form\n")
    for t, e in rows:
        fh.write(f"{t},{e},{horosphere_energy(params.k, t)}\n")
print(f"\nwrote {path}")
