#!/usr/bin/env python3
"""
Device budget
=============

Start from the tabulated device parameters and check that they hang together:

1. transmon f01 from E_J and E_C, and E_C from the island capacitance;
2. the dispersive and dressed shifts of the readout resonator;
3. the junction plasma frequency, which caps how high the qubit can sit;
4. the thermal population bound from the measured excited fraction;
5. the Purcell limit, analytic and from the admittance of a lumped circuit.

Everything prints as a small table; nothing here integrates dynamics.
"""
import numpy as np

from mmtransmon import device as dev
from mmtransmon.fitting import dephasing_decomposition, quality_factor
from mmtransmon.purcell import analytic_purcell, coupled_circuit, mode_frequencies, purcell_time


def main():
    p = dev.DeviceParams()
    rows = [
        ("f01 from E_J, E_C", dev.transmon_f01(p.E_J, p.E_C), p.f01, "GHz"),
        ("E_C from 45 + 39 fF", dev.charging_energy(p.C_J + p.C_Q), p.E_C, "GHz"),
        ("chi", 1e3 * dev.dispersive_shift(p.g, p.Delta, p.alpha), 1e3 * p.chi, "MHz"),
        ("chi (exact diag.)", 1e3 * dev.dispersive_shift_exact(p), 1e3 * p.chi, "MHz"),
        ("g^2 / Delta", 1e3 * dev.dressed_shift(p.g, p.Delta), -19.44, "MHz"),
        ("plasma frequency", dev.plasma_frequency(p.E_J, p.C_J), 99.0, "GHz"),
        ("T bound at p1 = 6.33%", dev.temperature_bound(0.0633, p.f01), 1.287, "K"),
        ("T_phi from T1, T2*", dephasing_decomposition(p.T1, 17.466), p.Tphi, "ns"),
        ("Q = 2 pi f01 T1", quality_factor(p.f01, p.T1), 7.18e3, ""),
        ("n_crit", dev.critical_photon_number(p.g, p.Delta), np.nan, "photons"),
    ]
    print(f"{'quantity':26s} {'model':>12s} {'reference':>12s}  unit")
    for name, val, ref, unit in rows:
        print(f"{name:26s} {val:12.5g} {ref:12.5g}  {unit}")

    # Purcell: analytic dispersive estimate vs the black-box admittance of a
    # lumped qubit + damped LC stand-in with the same g, Delta and kappa.
    T_an = analytic_purcell(p.g, p.Delta, p.kappa)
    cc = coupled_circuit(p.f01, p.f_RR_bare, p.g, p.kappa)
    wq = cc.normal_modes()[0]
    w = min(mode_frequencies(cc.network, cc.junction, (0.9 * wq, 1.1 * wq)),
            key=lambda x: abs(x - wq))
    T_bb = purcell_time(cc.network, cc.junction, w) * 1e9
    print(f"\nPurcell limit: analytic {T_an:.0f} ns, circuit {T_bb:.0f} ns "
          f"(mode at {w / 2 / np.pi / 1e9:.3f} GHz); measured T1 is {p.T1} ns")


if __name__ == "__main__":
    main()
