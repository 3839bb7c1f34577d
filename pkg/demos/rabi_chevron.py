#!/usr/bin/env python3
"""
Rabi chevrons with and without the second excited level
=======================================================

The drive amplitudes used on this device (hundreds of MHz) are comparable to
the 228 MHz anharmonicity, so a two-level model misses structure. This demo:

1. sweeps flat-top length at a few drive frequencies (time-domain Rabi);
2. builds the frequency-amplitude chevron for a 4 ns / sigma = 2 ns pulse
   with two and with three transmon levels;
3. reports where the extra fringes from |1> -> |2> and the two-photon
   |0> -> |2> line show up, below f01.

Pass --plot to write PNGs into --out.
"""
import argparse
from pathlib import Path

import numpy as np

from mmtransmon import experiments as ex
from mmtransmon.device import DeviceParams
from mmtransmon.pulses import PulseEnvelope


def parse_args():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[1])
    ap.add_argument("--out", default="demo_output/rabi_chevron")
    ap.add_argument("--plot", action="store_true")
    ap.add_argument("--dt", type=float, default=0.005)
    return ap.parse_args()


def main():
    args = parse_args()
    p = DeviceParams()
    s2 = ex.SimulationSettings(dt=args.dt)
    s3 = ex.SimulationSettings(N_q=3, dt=args.dt)

    taus = np.linspace(0, 12, 49)
    freqs = p.f01 + np.array([-0.2, -0.1, 0.0, 0.1, 0.2])
    rabi = ex.run_rabi_time(p, ex.RABI_TEMPLATE, taus, freqs, s2, subtract_baseline=True)
    print("time-domain Rabi at 208 MHz peak drive")
    for f, trace in zip(freqs, rabi.values):
        print(f"  {f:8.3f} GHz  contrast {np.ptp(trace):.3f}")

    amps = np.linspace(0, 0.3, 21)
    chev_f = p.f01 + np.linspace(-0.38, 0.38, 21)
    shape = PulseEnvelope(tau=4.0, sigma=2.0)
    two = ex.run_chevron(p, shape, amps, freq_grid=chev_f, settings=s2)
    three = ex.run_chevron(p, shape, amps, freq_grid=chev_f, settings=s3)
    diff = three.values - two.values
    i, j = np.unravel_index(np.argmax(diff), diff.shape)
    print(f"\nlargest three-level excess {diff[i, j]:.3f} at {chev_f[i]:.3f} GHz, "
          f"amplitude {amps[j] * 1e3:.0f} MHz (f01 + alpha/2 = {p.f01 + p.alpha / 2:.3f})")

    if args.plot:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        fig, axes = plt.subplots(1, 3, figsize=(13, 4))
        axes[0].pcolormesh(taus, freqs, rabi.values, shading="auto")
        axes[0].set(xlabel="tau (ns)", ylabel="drive (GHz)", title="Rabi vs length")
        for ax, r, title in ((axes[1], two, "N_q = 2"), (axes[2], three, "N_q = 3")):
            ax.pcolormesh(amps * 1e3, chev_f, r.values, shading="auto")
            ax.set(xlabel="Omega0 (MHz)", ylabel="drive (GHz)", title=title)
        fig.tight_layout()
        fig.savefig(out / "rabi_chevron.png", dpi=120)
        print(f"wrote {out / 'rabi_chevron.png'}")


if __name__ == "__main__":
    main()
