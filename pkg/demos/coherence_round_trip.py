#!/usr/bin/env python3
"""
Coherence round trip
====================

Simulate the relaxation and Ramsey sequences with the device's T1 and T_phi,
then fit them the way measured data would be fitted:

- T1: pi pulse, variable delay, 20 ns readout window; exponential fit.
- Ramsey: two pi/2 pulses with the second phase advanced at 320 MHz per ns
  of delay; damped-cosine fit gives T2* and the fringe frequency.

The fitted T2* and T1 give T_phi back through 1/T2* = 1/(2 T1) + 1/T_phi.
Optional seeded noise shows how the estimates scatter.
"""
import argparse

import numpy as np

from mmtransmon import experiments as ex
from mmtransmon.device import DeviceParams
from mmtransmon.fitting import dephasing_decomposition, fit_damped_cosine, fit_exponential


def main():
    ap = argparse.ArgumentParser(description="T1 / Ramsey simulate-and-fit")
    ap.add_argument("--noise", type=float, default=0.0, help="additive noise amplitude")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--dt", type=float, default=0.002)
    args = ap.parse_args()

    p = DeviceParams()
    s = ex.SimulationSettings(dt=args.dt, noise_amplitude=args.noise, seed=args.seed)

    t1 = ex.run_t1(p, np.linspace(0, 60, 61), s)
    f1 = fit_exponential(t1.axes["delay"], t1.values)
    print(f"T1   = {f1['T']:.3f} +- {f1.errors['T']:.3f} ns   (input {p.T1})")

    ramsey = ex.run_ramsey(p, np.arange(0, 60.001, 0.25), phase_advance=0.320, settings=s)
    f2 = fit_damped_cosine(ramsey.axes["delay"], ramsey.values)
    print(f"T2*  = {f2['T2s']:.3f} +- {f2.errors['T2s']:.3f} ns")
    print(f"f    = {f2['freq'] * 1e3:.2f} MHz")

    Tphi = dephasing_decomposition(f1["T"], f2["T2s"])
    print(f"Tphi = {Tphi:.2f} ns   (input {p.Tphi})")


if __name__ == "__main__":
    main()
