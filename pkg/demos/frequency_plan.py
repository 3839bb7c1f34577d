#!/usr/bin/env python3
"""
Frequency plan and spur map
===========================

Probe and readout LO both come out of x6 multipliers, so every harmonic
n f / 6 leaks into the waveguide. This demo:

1. lists the sidebands seen through the 78 GHz readout LO and 6 GHz IF;
2. scans a probe band for settings where a probe harmonic lands on a
   measured frequency (direct-conversion spurs);
3. builds a wide two-tone style feature list and assigns each line to a
   resonator or the qubit through the n = 5, 6, 7 harmonics.
"""
import numpy as np

from mmtransmon.freqplan import (ChainSpec, assign_features, direct_conversion_spurs,
                                 harmonics, sidebands)


def main():
    chain = ChainSpec(f_RLO=78.0, f_RIF=6.0, waveguide_cutoff=59.0)
    usb, lsb = sidebands(chain.f_RLO, chain.f_RIF)
    print(f"readout sidebands: USB {usb} GHz, LSB {lsb} GHz")
    print("LO harmonics above cutoff:",
          ", ".join(f"n={n}: {f:.1f}" for n, f in harmonics(chain.f_RLO, 8, chain.waveguide_cutoff)))

    probe = np.round(np.arange(60.0, 110.0, 0.1), 6)
    spurs = direct_conversion_spurs(probe, chain, 8, tolerance=0.01)
    print(f"{len(spurs)} spur settings in 60-110 GHz at 0.1 GHz steps: {spurs[:8]} ...")

    resonators, qubit = [91.151, 93.42, 95.87], [72.137]
    rng = np.random.default_rng(0)
    lines = [6 / n * f + rng.normal(0, 2e-4) for f in resonators + qubit for n in (5, 6, 7)]
    lines += [66.66, 104.2]  # two features with no explanation
    done, left = assign_features(sorted(lines), resonators, qubit)
    for a in done:
        print(f"  {a.observed_f:9.4f} GHz  {a.source:9s} #{a.index}  n={a.harmonic_n}  "
              f"residual {a.residual * 1e3:+.2f} MHz")
    print("unassigned:", left)


if __name__ == "__main__":
    main()
