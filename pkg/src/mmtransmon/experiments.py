"""Synthetic versions of the spectroscopy, Rabi and coherence measurements.

Each ``run_*`` function returns a :class:`SweepResult` whose values are laid
out in the order of its axes. Time-domain protocols integrate every grid
point of a sweep in a single batched master-equation call, so the result is
assembled in grid order by construction.

Frequencies are absolute drive frequencies in GHz. The simulation frame
rotates at the (optionally Stark-offset) qubit frequency.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.integrate import trapezoid

from . import device as dev
from .fitting import broadened_linewidth, dephasing_decomposition, fit_peaks, gaussian_peaks
from .lindblad import Hamiltonian, TimeGrid, collapse_channels, evolve, steady_state
from .operators import ket_dm
from .pulses import AmplitudeMap, PulseEnvelope, PulseSequence, calibrate_amplitude
from .purcell import analytic_purcell, coupled_circuit, mode_frequencies, purcell_time

MAX_GRID_POINTS = 10_000


class ResourceError(RuntimeError):
    pass


class ReadoutRangeError(ValueError):
    pass


@dataclass(frozen=True)
class ReadoutModel:
    chi: float = -0.000230   # GHz
    duration: float = 20.0   # ns
    mode: str = "proxy"      # "proxy" or "dispersive-shift"

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError("readout duration must be positive")
        if self.mode not in ("proxy", "dispersive-shift"):
            raise ValueError(f"unknown readout mode {self.mode!r}")


@dataclass(frozen=True)
class SimulationSettings:
    N_q: int = 2
    N_r: int = 1
    dt: float = 0.002
    qubit_offset: float = 0.0       # GHz, e.g. an ac-Stark shift from LO leakage
    decoherence: bool = True
    thermal: bool = False           # add b^dag excitation at nbar/T1
    noise_amplitude: float = 0.0
    noise_relative: bool = False    # scale noise by each trace's peak |value|
    seed: int = 0
    amplitude_map: AmplitudeMap = field(default_factory=AmplitudeMap)


@dataclass
class SweepResult:
    axes: dict[str, np.ndarray]
    units: dict[str, str]
    values: np.ndarray
    metadata: dict = field(default_factory=dict)
    series: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        shape = tuple(len(a) for a in self.axes.values())
        self.values = np.asarray(self.values)
        if self.values.shape != shape:
            raise ValueError(f"values shape {self.values.shape} != axes shape {shape}")


def params_hash(*objs) -> str:
    def default(o):
        if isinstance(o, np.ndarray):
            return o.tolist()
        if hasattr(o, "__dataclass_fields__"):
            return asdict(o)
        if isinstance(o, np.generic):
            return o.item()
        raise TypeError(type(o))
    text = json.dumps(objs, sort_keys=True, default=default)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def _guard(n_points: int, what: str):
    if n_points > MAX_GRID_POINTS:
        raise ResourceError(f"{what}: {n_points} grid points exceeds the limit of {MAX_GRID_POINTS}")


def _add_noise(values, settings: SimulationSettings):
    if settings.noise_amplitude <= 0:
        return values
    rng = np.random.default_rng(settings.seed)
    values = np.asarray(values, dtype=float)
    scale = settings.noise_amplitude
    if settings.noise_relative:
        scale = scale * np.max(np.abs(values), axis=-1, keepdims=True)
    return values + scale * rng.normal(0.0, 1.0, values.shape)


def _result(exp_id, axes, units, values, settings, params, extra_meta=None, series=None):
    meta = {"experiment": exp_id,
            "params_hash": params_hash(params, settings, {k: v for k, v in axes.items()}),
            "dt": settings.dt, "seed": settings.seed,
            "noise_amplitude": settings.noise_amplitude}
    meta.update(extra_meta or {})
    return SweepResult(dict(axes), dict(units), _add_noise(values, settings), meta, series or {})


# --- readout -----------------------------------------------------------------

def readout_signal(traj, model: ReadoutModel, start=None):
    """Integrated qubit excitation over the readout window.

    Proxy mode divides by the window length, so a qubit frozen in |1> gives
    1.0; dispersive-shift mode returns chi * integral <b^dag b> dt (GHz ns).
    ``start`` may be an array with one window start per batch element.
    """
    t = traj.times
    n = traj.records["qubit_number"]
    if start is None:
        start = t[-1] - model.duration
    start = np.asarray(start, dtype=float)
    stop = start + model.duration
    if np.any(start < t[0] - 1e-9) or np.any(stop > t[-1] + 1e-9):
        raise ReadoutRangeError("readout window extends beyond the trajectory")
    if n.ndim == 1:
        integral = _window_integral(t, n, float(start), float(stop))
    else:
        starts = np.broadcast_to(start, (n.shape[1],))
        integral = np.array([_window_integral(t, n[:, i], s, s + model.duration)
                             for i, s in enumerate(starts)])
    if model.mode == "proxy":
        return integral / model.duration
    return model.chi * integral


def _window_integral(t, y, a, b):
    inside = (t > a) & (t < b)
    ts = np.concatenate([[a], t[inside], [b]])
    ys = np.concatenate([[np.interp(a, t, y)], y[inside], [np.interp(b, t, y)]])
    return trapezoid(ys, ts)


def relaxing_readout_norm(T1: float, duration: float) -> float:
    """Proxy readout of a qubit that starts the window in |1> and decays with T1."""
    if not math.isfinite(T1):
        return 1.0
    return T1 / duration * (1 - math.exp(-duration / T1))


# --- shared time-domain machinery -------------------------------------------

def _static_hamiltonian(params: dev.DeviceParams, settings: SimulationSettings):
    frame = params.f01 + settings.qubit_offset
    shifted = params.replace(f01=frame, Delta=frame - params.f_RR_bare) \
        if settings.qubit_offset else params
    return dev.build_system_hamiltonian(shifted, settings.N_q, settings.N_r, frame=frame), frame


def _channels(params, settings):
    if not settings.decoherence:
        return []
    nbar = dev.bose_occupation(params.f01, params.temperature) if settings.thermal else 0.0
    return collapse_channels(params.T1, params.Tphi, params.kappa, settings.N_q,
                             settings.N_r, thermal_nbar=nbar)


def simulate_pulses(params: dev.DeviceParams, settings: SimulationSettings,
                    pulses: list[PulseEnvelope], readout: ReadoutModel,
                    readout_start=None):
    """Ground state, qubit pulses, readout window. Returns (signal, trajectory).

    Pulse fields may be arrays (one entry per sweep point); the readout
    window opens when the last pulse ends unless ``readout_start`` is given.
    """
    H0, _ = _static_hamiltonian(params, settings)
    ops = dev.system_operators(settings.N_q, settings.N_r)
    amap = settings.amplitude_map
    pulses = [p.replace(omega0=amap(p.omega0)) for p in pulses]
    seq = PulseSequence(tuple((p, "qubit") for p in pulses), readout_start=readout_start,
                        readout_duration=readout.duration)
    start, duration = seq.readout_window
    start = np.asarray(start, dtype=float)
    t_end = float(np.max(start)) + duration
    grid = TimeGrid(0.0, t_end, settings.dt)
    H = Hamiltonian(H0, seq.drive_terms(ops["b"], ops["a"]))
    rho0 = ket_dm(ops["space"], (0,) * len(ops["space"].dims))
    traj = evolve(rho0, H, _channels(params, settings), grid, save_every=None)
    return readout_signal(traj, readout, start), traj


# --- spectroscopy ------------------------------------------------------------

@dataclass(frozen=True)
class PunchoutModel:
    photons_at_0dB: float = 1.0
    steepness: float = 4.0  # logistic slope in ln(n / n_crit)
    depth: float = 0.9


def run_punchout(params: dev.DeviceParams, probe_freq_grid, power_grid,
                 model: PunchoutModel = PunchoutModel(),
                 settings: SimulationSettings = SimulationSettings()) -> SweepResult:
    """|S21| around the readout resonator versus probe power (dB).

    The dip moves from the dressed frequency f_RR + g^2/Delta to the bare
    f_RR as the intracavity photon number crosses n_crit.
    """
    f = np.asarray(probe_freq_grid, dtype=float)
    P = np.asarray(power_grid, dtype=float)
    if not f.size or not P.size:
        raise ValueError("grids must be non-empty")
    n = model.photons_at_0dB * 10 ** (P / 10)
    n_crit = dev.critical_photon_number(params.g, params.Delta)
    s = 1 / (1 + (n / n_crit) ** model.steepness)
    centers = params.f_RR_bare + dev.dressed_shift(params.g, params.Delta) * s
    hw = params.kappa / 2
    lor = hw**2 / ((f[None, :] - centers[:, None]) ** 2 + hw**2)
    values = 1 - model.depth * lor
    return _result("punchout", {"power": P, "frequency": f}, {"power": "dB", "frequency": "GHz"},
                   values, settings, params, {"n_crit": n_crit},
                   series={"center": centers})


@dataclass(frozen=True)
class TwoToneModel:
    """Drive calibration and coherence used by the spectroscopy lineshape.

    The defaults are the power-broadening coherence values; ``photons_at_0dB``
    converts the probe power axis to qubit drive photons n_s.
    """

    T1: float = 47.3
    T2: float = 20.9
    photons_at_0dB: float = 1e-4
    temperature: float | None = None  # K; defaults to the device temperature


def drive_photons(power_db, model: TwoToneModel):
    return model.photons_at_0dB * 10 ** (np.asarray(power_db, dtype=float) / 10)


def two_tone_lines(params: dev.DeviceParams, n_s: float, model: TwoToneModel):
    """Centres, half-widths and amplitudes of the f01, f02/2 and f12 lines.

    The f01 width follows the power-broadening law; amplitudes use the Bloch
    saturation s = n_s (2 pi g)^2 T1 T2 weighted by thermal level populations,
    with the two-photon line growing as s^2.
    """
    T = params.temperature if model.temperature is None else model.temperature
    p1 = dev.thermal_population(params.f01, T) if T > 0 else 0.0
    p0 = 1 - p1
    s = n_s * (2 * np.pi * params.g) ** 2 * model.T1 * model.T2
    sat = s / (1 + s)
    width = float(broadened_linewidth(n_s, model.T1, model.T2, params.g))
    centers = np.array([params.f01, params.f01 + params.alpha / 2, params.f01 + params.alpha])
    amps = np.array([p0 * sat, 2 * p0 * s**2 / (1 + s**2), p1 * sat])
    return centers, np.full(3, width), amps


def run_two_tone(params: dev.DeviceParams, probe_grid, probe_power_grid,
                 mode: str = "analytic", model: TwoToneModel = TwoToneModel(),
                 settings: SimulationSettings = SimulationSettings()) -> SweepResult:
    """Readout deflection versus probe frequency and power (dB)."""
    f = np.asarray(probe_grid, dtype=float)
    P = np.asarray(probe_power_grid, dtype=float)
    if not f.size or not P.size:
        raise ValueError("grids must be non-empty")
    n_s = drive_photons(P, model)
    widths = np.empty(len(P))
    if mode == "analytic":
        values = np.empty((len(P), len(f)))
        for i, n in enumerate(n_s):
            c, w, a = two_tone_lines(params, n, model)
            values[i] = gaussian_peaks(f, c, w, a)
            widths[i] = w[0]
    elif mode == "master-equation":
        _guard(f.size * P.size, "two-tone master-equation sweep")
        values = _two_tone_steady(params, f, n_s, model, settings)
        widths[:] = broadened_linewidth(n_s, model.T1, model.T2, params.g)
    else:
        raise ValueError(f"unknown two-tone mode {mode!r}")
    return _result("two-tone", {"power": P, "frequency": f}, {"power": "dB", "frequency": "GHz"},
                   values, settings, params, {"mode": mode},
                   series={"n_s": n_s, "sigma01": widths})


def _two_tone_steady(params, f, n_s, model, settings):
    N_q = max(3, settings.N_q)
    ops = dev.system_operators(N_q, 1)
    b = ops["b"].matrix
    n_op = b.conj().T @ b
    duff = n_op @ (n_op - np.eye(N_q))
    Tphi = dephasing_decomposition(model.T1, model.T2)
    T = params.temperature if model.temperature is None else model.temperature
    nbar = dev.bose_occupation(params.f01, T)
    channels = collapse_channels(model.T1, Tphi, params.kappa, N_q, 1, thermal_nbar=nbar)
    out = np.empty((len(n_s), len(f)))
    for i, n in enumerate(n_s):
        omega = params.g * math.sqrt(n)
        H = ((params.f01 + settings.qubit_offset - f)[:, None, None] * n_op
             + params.alpha / 2 * duff + omega / 2 * (b + b.conj().T))
        rho = steady_state(H, channels)
        out[i] = np.einsum("bii,i->b", rho, np.diag(n_op)).real
    return out


# --- time domain ------------------------------------------------------------

RABI_TEMPLATE = PulseEnvelope(tau=0.0, sigma=1.5, omega0=0.208)


def _mesh(a, b):
    A, B = np.meshgrid(np.asarray(a, dtype=float), np.asarray(b, dtype=float), indexing="ij")
    return A.ravel(), B.ravel()


def run_rabi_time(params: dev.DeviceParams, pulse: PulseEnvelope, tau_grid, freq_grid,
                  settings: SimulationSettings = SimulationSettings(),
                  readout: ReadoutModel | None = None,
                  subtract_baseline: bool = False) -> SweepResult:
    """Readout after a single pulse of flat-top length tau at each drive frequency.

    ``subtract_baseline`` shifts each frequency trace so its minimum is zero.
    """
    readout = readout or ReadoutModel(chi=params.chi)
    freqs, taus = _mesh(freq_grid, tau_grid)
    _guard(freqs.size, "rabi-time sweep")
    _, frame = _static_hamiltonian(params, settings)
    p = pulse.replace(tau=taus, detuning=freqs - frame, t_start=0.0)
    sig, _ = simulate_pulses(params, settings, [p], readout)
    values = sig.reshape(len(freq_grid), len(tau_grid))
    if subtract_baseline:
        values = values - values.min(axis=1, keepdims=True)
    return _result("rabi-time", {"frequency": np.asarray(freq_grid, float),
                                 "tau": np.asarray(tau_grid, float)},
                   {"frequency": "GHz", "tau": "ns"}, values, settings, params,
                   {"sigma": pulse.sigma, "omega0": pulse.omega0,
                    "subtract_baseline": subtract_baseline})


def run_chevron(params: dev.DeviceParams, pulse: PulseEnvelope, amplitude_grid,
                tau_grid=None, freq_grid=None,
                settings: SimulationSettings = SimulationSettings(),
                readout: ReadoutModel | None = None, record: str = "readout") -> SweepResult:
    """Rabi chevron over (tau, amplitude) at the pulse's own detuning, or over
    (frequency, amplitude) at the pulse's own tau. Amplitude is always the
    last axis.

    ``record`` selects the returned surface: ``"readout"`` (proxy) or a level
    population at the end of the pulse (``"P0"``, ``"P1"``, ``"P2"``).
    """
    if (tau_grid is None) == (freq_grid is None):
        raise ValueError("give exactly one of tau_grid or freq_grid")
    readout = readout or ReadoutModel(chi=params.chi)
    amps = np.asarray(amplitude_grid, dtype=float)
    _, frame = _static_hamiltonian(params, settings)
    if tau_grid is not None:
        X, A = _mesh(tau_grid, amps)
        _guard(A.size, "chevron sweep")
        p = pulse.replace(omega0=A, tau=X, t_start=0.0)
        axes = {"tau": np.asarray(tau_grid, float), "amplitude": amps}
        units = {"tau": "ns", "amplitude": "GHz"}
    else:
        X, A = _mesh(freq_grid, amps)
        _guard(A.size, "chevron sweep")
        p = pulse.replace(omega0=A, detuning=X - frame, t_start=0.0)
        axes = {"frequency": np.asarray(freq_grid, float), "amplitude": amps}
        units = {"frequency": "GHz", "amplitude": "GHz"}
    sig, traj = simulate_pulses(params, settings, [p], readout)
    if record == "readout":
        vals = sig
    else:
        idx = np.searchsorted(traj.times, np.asarray(p.t_end) - 1e-9)
        vals = traj.records[record][idx, np.arange(A.size)]
    shape = tuple(len(a) for a in axes.values())
    return _result("chevron", axes, units, np.asarray(vals).reshape(shape), settings, params,
                   {"sigma": pulse.sigma, "record": record, "N_q": settings.N_q})


def pi_pulse(params: dev.DeviceParams, template: PulseEnvelope = PulseEnvelope(tau=2.0, sigma=1.5),
             area: float = np.pi) -> PulseEnvelope:
    """Resonant pulse with ``template``'s shape and the requested rotation angle."""
    return template.replace(omega0=float(calibrate_amplitude(template, area)), detuning=0.0,
                            phase=0.0, t_start=0.0)


def run_t1(params: dev.DeviceParams, delay_grid, settings: SimulationSettings = SimulationSettings(),
           pulse: PulseEnvelope | None = None, readout: ReadoutModel | None = None,
           normalize: bool = True) -> SweepResult:
    """pi pulse, wait, read out. Normalised values are the excited population at
    the start of the readout window for pure T1 decay."""
    delays = np.asarray(delay_grid, dtype=float)
    if np.any(delays < 0):
        raise ValueError("delays must be non-negative")
    readout = readout or ReadoutModel(chi=params.chi)
    p = pulse or pi_pulse(params)
    start = p.t_end + delays
    sig, _ = simulate_pulses(params, settings, [p.replace(t_start=np.zeros_like(delays))],
                             readout, readout_start=start)
    if normalize:
        T1 = params.T1 if settings.decoherence else math.inf
        sig = sig / relaxing_readout_norm(T1, readout.duration)
    return _result("t1", {"delay": delays}, {"delay": "ns"}, sig, settings, params,
                   {"pi_amplitude": p.omega0, "normalized": normalize})


def run_ramsey(params: dev.DeviceParams, delay_grid, phase_advance: float = 0.320,
               detuning: float = 0.0, settings: SimulationSettings = SimulationSettings(),
               pulse: PulseEnvelope | None = None, readout: ReadoutModel | None = None,
               normalize: bool = True) -> SweepResult:
    """pi/2, wait t, pi/2 with its phase advanced by 2 pi phase_advance t.

    Pulses default to the pi-pulse shape at half amplitude. ``detuning`` is
    the drive carrier minus the qubit frequency (GHz).
    """
    delays = np.asarray(delay_grid, dtype=float)
    if np.any(delays < 0):
        raise ValueError("delays must be non-negative")
    readout = readout or ReadoutModel(chi=params.chi)
    half = pulse or pi_pulse(params, area=np.pi / 2)
    zeros = np.zeros_like(delays)
    first = half.replace(t_start=zeros, detuning=detuning + zeros, phase=zeros)
    second = half.replace(t_start=half.duration + delays, detuning=detuning + zeros,
                          phase=2 * np.pi * phase_advance * delays)
    sig, _ = simulate_pulses(params, settings, [first, second], readout)
    if normalize:
        T1 = params.T1 if settings.decoherence else math.inf
        sig = sig / relaxing_readout_norm(T1, readout.duration)
    return _result("ramsey", {"delay": delays}, {"delay": "ns"}, sig, settings, params,
                   {"phase_advance": phase_advance, "detuning": detuning,
                    "pulse_amplitude": half.omega0, "normalized": normalize})


# --- Purcell sweep -----------------------------------------------------------

def run_purcell_sweep(params: dev.DeviceParams, area_ratios,
                      settings: SimulationSettings = SimulationSettings()) -> SweepResult:
    """Purcell lifetime of the lumped qubit/resonator circuit as the junction
    area is rescaled (L_J / r, C_J * r), next to the analytic dispersive estimate.

    Values are black-box lifetimes in ns; ``series`` holds the qubit mode
    frequency (GHz) and the analytic lifetime at that frequency.
    """
    ratios = np.asarray(area_ratios, dtype=float)
    base = coupled_circuit(params.f01, params.f_RR_bare, params.g, params.kappa)
    T_bb = np.full(len(ratios), np.nan)
    f_mode = np.full(len(ratios), np.nan)
    T_an = np.full(len(ratios), np.nan)
    for i, r in enumerate(ratios):
        j = base.junction.scaled(r)
        f_bare = j.plasma_omega / (2 * np.pi * 1e9)
        roots = mode_frequencies(base.network, j,
                                 (2 * np.pi * 0.5 * f_bare * 1e9, 2 * np.pi * 1.5 * f_bare * 1e9))
        if not roots:
            continue
        w = min(roots, key=lambda x: abs(x - j.plasma_omega))
        f_mode[i] = w / (2 * np.pi * 1e9)
        T_bb[i] = purcell_time(base.network, j, w) * 1e9
        T_an[i] = analytic_purcell(params.g, f_mode[i] - params.f_RR_bare, params.kappa)
    return _result("purcell-sweep", {"area_ratio": ratios}, {"area_ratio": "1"}, T_bb,
                   settings, params, {"units": "ns"},
                   series={"mode_frequency": f_mode, "analytic": T_an})


def two_tone_linewidths(result: SweepResult, params: dev.DeviceParams,
                        window=(-0.17, 0.10)):
    """HWHM of the f01 line in each power trace of a two-tone sweep.

    The two-photon line at f01 + alpha/2 sits inside the window, so each
    trace is fitted with two Gaussians and the one nearest f01 is kept.
    """
    f = result.axes["frequency"]
    sel = (f > params.f01 + window[0]) & (f < params.f01 + window[1])
    seeds = [params.f01 + params.alpha / 2, params.f01]
    widths = np.empty(len(result.values))
    for i, trace in enumerate(result.values):
        fit = fit_peaks(f[sel], trace[sel], n_peaks=2, seeds=seeds)
        k = min(range(2), key=lambda j: abs(fit[f"center_{j}"] - params.f01))
        widths[i] = abs(fit[f"sigma_{k}"])
    return widths
