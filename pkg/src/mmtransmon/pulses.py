"""Flat-top drive envelopes with truncated Gaussian edges.

Envelope fields may be numpy arrays instead of floats; every function here
broadcasts, which is how the sweep code evaluates a whole grid of pulses at
once.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf

from .operators import Operator

EDGE_TRUNCATION = 2.5  # Gaussian edge length in units of sigma


@dataclass(frozen=True)
class PulseEnvelope:
    tau: float = 2.0           # ns, flat-top length
    sigma: float = 1.5         # ns
    omega0: float = 0.068      # GHz, peak Rabi rate
    detuning: float = 0.0      # GHz, carrier minus frame frequency
    phase: float = 0.0         # rad
    t_start: float = 0.0       # ns
    truncation: float = EDGE_TRUNCATION

    def __post_init__(self):
        if np.any(np.asarray(self.sigma) <= 0):
            raise ValueError("sigma must be positive")
        if np.any(np.asarray(self.tau) < 0):
            raise ValueError("tau must be non-negative")

    @property
    def edge(self):
        return self.truncation * np.asarray(self.sigma)

    @property
    def duration(self):
        return np.asarray(self.tau) + 2 * self.edge

    @property
    def t_end(self):
        return np.asarray(self.t_start) + self.duration

    def replace(self, **changes) -> PulseEnvelope:
        return dataclasses.replace(self, **changes)


def envelope_value(p: PulseEnvelope, t):
    """Drive amplitude (GHz) at time ``t``; zero outside the pulse support."""
    t = np.asarray(t, dtype=float)
    sigma = np.asarray(p.sigma, dtype=float)
    edge = p.edge
    top_start = np.asarray(p.t_start) + edge
    top_end = top_start + np.asarray(p.tau)
    end = top_end + edge
    before = np.clip(top_start - t, 0.0, None)
    after = np.clip(t - top_end, 0.0, None)
    offset = before + after  # at most one of these is nonzero
    val = np.asarray(p.omega0) * np.exp(-0.5 * (offset / sigma) ** 2)
    inside = (t >= np.asarray(p.t_start)) & (t <= end)
    return np.where(inside, val, 0.0)


def envelope_integral(p: PulseEnvelope):
    """Closed-form integral of the envelope over its support (GHz * ns)."""
    sigma = np.asarray(p.sigma)
    edges = sigma * np.sqrt(2 * np.pi) * erf(p.truncation / np.sqrt(2))
    return np.asarray(p.omega0) * (np.asarray(p.tau) + edges)


def pulse_area(p: PulseEnvelope):
    """Resonant Bloch rotation angle in radians."""
    return 2 * np.pi * envelope_integral(p)


def calibrate_amplitude(p: PulseEnvelope, area: float = np.pi):
    """Peak amplitude that gives ``p``'s shape the requested rotation angle."""
    unit = pulse_area(p.replace(omega0=1.0))
    return area / unit


@dataclass(frozen=True)
class AmplitudeMap:
    """Monotone map from requested to delivered peak amplitude (mixer compression)."""

    requested: tuple = ()
    delivered: tuple = ()

    def __post_init__(self):
        if len(self.requested) != len(self.delivered):
            raise ValueError("requested/delivered lengths differ")
        if len(self.requested) and (np.any(np.diff(self.requested) <= 0)
                                    or np.any(np.diff(self.delivered) < 0)):
            raise ValueError("amplitude map must be increasing")

    def __call__(self, omega0):
        if not len(self.requested):
            return omega0
        return np.interp(omega0, self.requested, self.delivered)


class DriveTerm:
    """c(t) O, plus its Hermitian conjugate when ``pair`` is set."""

    def __init__(self, operator: Operator, coefficient, pair: bool = True):
        self.operator = operator
        self.coefficient = coefficient
        self.pair = pair

    def __call__(self, t):
        return self.coefficient(t)


def drive_hamiltonian(p: PulseEnvelope, target: Operator) -> DriveTerm:
    """Rotating-frame drive (env/2) (O e^{+i theta} + O^dag e^{-i theta})
    with theta = 2 pi detuning t + phase."""

    def c(t):
        theta = 2 * np.pi * np.asarray(p.detuning) * t + np.asarray(p.phase)
        return 0.5 * envelope_value(p, t) * np.exp(1j * theta)

    return DriveTerm(target, c)


@dataclass(frozen=True)
class PulseSequence:
    pulses: tuple = ()  # (PulseEnvelope, "qubit" | "resonator") pairs
    readout_start: float | None = None
    readout_duration: float = 20.0
    allow_overlap: bool = False
    _targets: tuple = field(default=("qubit", "resonator"), repr=False)

    def __post_init__(self):
        for p, target in self.pulses:
            if target not in self._targets:
                raise ValueError(f"unknown pulse target {target!r}")
            if np.any(np.asarray(p.t_start) < 0):
                raise ValueError("pulse times must be non-negative")
        if self.readout_duration <= 0:
            raise ValueError("readout duration must be positive")
        if self.readout_start is not None and not self.allow_overlap:
            if np.any(np.asarray(self.readout_start) < self.qubit_end - 1e-12):
                raise ValueError("readout window overlaps a qubit pulse")

    @property
    def qubit_end(self):
        ends = [p.t_end for p, target in self.pulses if target == "qubit"]
        return np.max(np.stack(np.broadcast_arrays(*ends)), axis=0) if ends else 0.0

    @property
    def readout_window(self):
        start = self.qubit_end if self.readout_start is None else self.readout_start
        return start, self.readout_duration

    def drive_terms(self, b: Operator, a: Operator | None = None) -> list[DriveTerm]:
        terms = []
        for p, target in self.pulses:
            op = b if target == "qubit" else a
            if op is None:
                raise ValueError("resonator pulse needs a resonator subsystem")
            terms.append(drive_hamiltonian(p, op))
        return terms
