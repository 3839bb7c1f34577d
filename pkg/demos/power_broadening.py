#!/usr/bin/env python3
"""
Power broadening
================

Two-tone spectroscopy of the f01 line at increasing drive power. The line
half-width obeys

    (2 pi sigma)^2 = 1/T2^2 + n_s (2 pi g)^2 T1 / T2

so a straight-line fit of the squared width against drive photons n_s gives
T2 from the intercept and T1 from the slope. The two-photon 0 -> 2 line sits
114 MHz below f01 and is fitted jointly so it does not bias the width.
"""
import argparse

import numpy as np

from mmtransmon import experiments as ex
from mmtransmon.device import DeviceParams
from mmtransmon.fitting import power_broadening_fit


def main():
    ap = argparse.ArgumentParser(description="linewidth vs power, then T1 and T2")
    ap.add_argument("--noise", type=float, default=0.02, help="relative noise per trace")
    ap.add_argument("--seeds", type=int, default=10)
    args = ap.parse_args()

    p = DeviceParams()
    f = np.linspace(71.8, 72.3, 501)
    powers = np.linspace(-8, 5, 17)

    clean = ex.run_two_tone(p, f, powers)
    widths = ex.two_tone_linewidths(clean, p)
    fit = power_broadening_fit(clean.series["n_s"], widths, p.g)
    print(f"noiseless: T1 = {fit['T1']:.3f} ns, T2 = {fit['T2']:.3f} ns")

    T1s, T2s = [], []
    for seed in range(args.seeds):
        s = ex.SimulationSettings(noise_amplitude=args.noise, noise_relative=True, seed=seed)
        r = ex.run_two_tone(p, f, powers, settings=s)
        fit = power_broadening_fit(r.series["n_s"], ex.two_tone_linewidths(r, p), p.g)
        T1s.append(fit["T1"])
        T2s.append(fit["T2"])
    print(f"{args.noise:.0%} noise over {args.seeds} seeds: "
          f"T1 = {np.mean(T1s):.1f} +- {np.std(T1s):.1f} ns, "
          f"T2 = {np.mean(T2s):.2f} +- {np.std(T2s):.2f} ns")
    # T1 comes from the slope and is the weaker of the two estimates.


if __name__ == "__main__":
    main()
