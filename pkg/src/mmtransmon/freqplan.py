"""Heterodyne frequency-plan arithmetic for a multiplier-based mm-wave chain.

Both the probe and the readout LO come out of x``order`` multipliers, so
the chain also emits every integer harmonic n * f / order of a nominal
output frequency f. Frequencies are in GHz.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_TOLERANCE = 1e-3  # GHz


@dataclass(frozen=True)
class ChainSpec:
    multiplier_order: int = 6
    f_generator: float = 12.0   # GHz, multiplier input
    f_RLO: float = 78.0         # GHz, readout LO at the multiplier output
    f_RIF: float = 6.0          # GHz
    waveguide_cutoff: float = 0.0

    def __post_init__(self):
        if self.multiplier_order < 1:
            raise ValueError("multiplier order must be >= 1")
        if self.waveguide_cutoff < 0:
            raise ValueError("cutoff must be non-negative")


@dataclass(frozen=True)
class FeatureAssignment:
    observed_f: float
    source: str          # "resonator" or "qubit"
    index: int
    harmonic_n: int
    predicted_f: float
    residual: float


def harmonics(f: float, n_max: int, cutoff: float = 0.0, order: int = 6):
    """[(n, n f / order)] for 1 <= n <= n_max above the waveguide cutoff."""
    if f <= 0 or n_max < 1:
        raise ValueError("need f > 0 and n_max >= 1")
    out = []
    for n in range(1, n_max + 1):
        fn = n * f / order
        if fn >= cutoff:
            out.append((n, fn))
    return out


def sidebands(f_LO: float, f_IF: float) -> tuple[float, float]:
    if not f_LO > f_IF > 0:
        raise ValueError("need f_LO > f_IF > 0")
    return f_LO + f_IF, f_LO - f_IF


def measurement_frequencies(chain: ChainSpec, n_max: int):
    """mm-wave frequencies that down-convert to the IF through any LO harmonic."""
    out = []
    for m, f_lo in harmonics(chain.f_RLO, n_max, 0.0, chain.multiplier_order):
        for f in (f_lo + chain.f_RIF, f_lo - chain.f_RIF):
            if f >= chain.waveguide_cutoff and f > 0:
                out.append((m, f))
    return out


def direct_conversion_spurs(probe_grid, chain: ChainSpec, n_max: int,
                            tolerance: float = DEFAULT_TOLERANCE):
    """Probe settings where some probe harmonic lands on a measured frequency."""
    probe = np.asarray(probe_grid, dtype=float)
    if probe.size == 0:
        return []
    meas = np.array([f for _, f in measurement_frequencies(chain, n_max)])
    n = np.arange(1, n_max + 1)
    probe_h = probe[:, None] * n[None, :] / chain.multiplier_order
    visible = probe_h >= chain.waveguide_cutoff
    hit = (np.abs(probe_h[:, :, None] - meas[None, None, :]) < tolerance) & visible[:, :, None]
    return [float(x) for x in probe[hit.any(axis=(1, 2))]]


def assign_features(observed, resonators, qubits, n_range=(5, 6, 7),
                    tolerance: float = DEFAULT_TOLERANCE, order: int = 6):
    """Match observed probe frequencies to f_S = (order / n) f_source.

    Returns (assignments, unmatched). Ties go to the smaller n, then to
    resonators over qubits, then to the lower source index.
    """
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    candidates = []
    for kind_rank, (kind, freqs) in enumerate((("resonator", resonators), ("qubit", qubits))):
        for i, fs in enumerate(np.atleast_1d(np.asarray(freqs, dtype=float))):
            for n in sorted(n_range):
                candidates.append((n, kind_rank, i, kind, order / n * fs))
    assigned, unmatched = [], []
    for fo in np.atleast_1d(np.asarray(observed, dtype=float)):
        best = None
        for n, rank, i, kind, pred in candidates:
            res = fo - pred
            key = (abs(res), n, rank, i)
            if abs(res) <= tolerance and (best is None or key < best[0]):
                best = (key, FeatureAssignment(float(fo), kind, i, n, float(pred), float(res)))
        if best is None:
            unmatched.append(float(fo))
        else:
            assigned.append(best[1])
    return assigned, unmatched
