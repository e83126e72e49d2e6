#!/usr/bin/env python3
# Pair interactions between charged wires, and their closed-form transforms.
#
# Two wires interact through an equal-time Coulomb kernel (the quantum
# constraint), a classical wire-wire kernel (no constraint), and a magnetic
# current-current kernel mediated by the transverse field.  The difference of
# the first two decays like a dipole; the closed-form Fourier kernels used by
# the large-separation analysis are checked against quadrature oracles.

import numpy as np

from thermocasimir import (FormFactor, Loop, SpeciesParams, ThermoState,
                           coulomb_force_kernel, coulomb_force_kernel_oracle,
                           sample_bridge, v_transverse_partial,
                           v_transverse_partial_oracle, vc_pair, vel_pair,
                           wm_pair_fourier)
from thermocasimir.force import fit_loglog_slope

thermo = ThermoState(beta=1.0, hbar=0.5, c=12.0)
sp = SpeciesParams.from_thermo("demo", charge=1.0, mass=1.0, thermo=thermo)
l1 = Loop(0.0, sp, 1, sample_bridge(1, 24, [1, 0]))

print("=== equal-time vs wire-wire Coulomb coupling ===")
print(f"{'r':>6} {'equal-time':>12} {'wire-wire':>12} {'difference':>12}")
rs = np.geomspace(10.0, 640.0, 4)
vals = []
for r in rs:
    l2 = Loop(r, sp, 1, sample_bridge(1, 24, [1, 1]))
    vc, vel = vc_pair(l1, l2), vel_pair(l1, l2)
    vals.append(abs(vc - vel))
    print(f"{r:6.0f} {vc:12.3e} {vel:12.3e} {vc - vel:+12.3e}")
slope, _ = fit_loglog_slope(rs, vals)
print(f"difference decays with log-log slope {slope:.2f} (dipolar -3)")

print("\n=== magnetic kernel with the photon occupation factor ===")
ff = FormFactor(k_cut=3.0)
l2 = Loop(0.5, sp, 1, sample_bridge(1, 24, [1, 2]))
for kmag in (0.3, 1.0, 3.0):
    kvec = np.array([kmag, 0.2, 0.0])
    wq = wm_pair_fourier(l1, l2, kvec, thermo, ff)
    wcl = wm_pair_fourier(l1, l2, kvec, thermo, ff, photon="classical")
    print(f"  |K| ~ {kmag:4.1f}:  quantum {wq:+.4e}   classical-field {wcl:+.4e}")

print("\n=== closed forms vs quadrature oracles ===")
args = (-0.8, 1.3, 1.7, 25.0)
closed = coulomb_force_kernel(*args)
oracle = coulomb_force_kernel_oracle(*args)
print(f"slab Coulomb force kernel:     closed {closed:.10f}   "
      f"Hankel oracle {oracle:.10f}")
vt_closed = v_transverse_partial(0.7, [1.3, 0.4], 1, 0)
vt_oracle = v_transverse_partial_oracle(0.7, [1.3, 0.4], 1, 0)
print(f"transverse partial transform:  closed {vt_closed:.10f}")
print(f"                               oracle {vt_oracle:.10f}")
