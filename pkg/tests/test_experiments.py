import math

import numpy as np
import pytest

from mmtransmon import device as dev
from mmtransmon import experiments as ex
from mmtransmon.fitting import fit_peaks
from mmtransmon.lindblad import Hamiltonian, TimeGrid, collapse_channels, evolve
from mmtransmon.operators import HilbertSpec, ket_dm
from mmtransmon.pulses import PulseEnvelope
from oracles import crossing_frequency

UNDAMPED = ex.SimulationSettings(decoherence=False, dt=0.005)
Q2 = HilbertSpec((2,))


def _idle(level, T1, t1=25.0):
    ch = collapse_channels(T1, math.inf, 0, 2)
    return evolve(ket_dm(Q2, level), Hamiltonian.zero(Q2), ch, TimeGrid(0, t1, 0.002),
                  save_every=None)


def test_readout_proxy_limits():
    model = ex.ReadoutModel()
    assert ex.readout_signal(_idle(0, 15.849), model, 0.0) == 0
    assert ex.readout_signal(_idle(1, math.inf), model, 0.0) == pytest.approx(1.0)
    val = ex.readout_signal(_idle(1, 15.849), model, 0.0)
    ref = 15.849 / 20 * (1 - math.exp(-20 / 15.849))
    assert val == pytest.approx(ref, rel=1e-8)
    assert ref == pytest.approx(ex.relaxing_readout_norm(15.849, 20.0))
    with pytest.raises(ex.ReadoutRangeError):
        ex.readout_signal(_idle(1, 15.849), model, 10.0)


def test_readout_dispersive_mode():
    model = ex.ReadoutModel(chi=-0.00023, mode="dispersive-shift")
    val = ex.readout_signal(_idle(1, math.inf), model, 0.0)
    assert val == pytest.approx(-0.00023 * 20)
    with pytest.raises(ValueError):
        ex.ReadoutModel(mode="homodyne")


def test_punchout_endpoints(params):
    f = np.linspace(90.9, 91.3, 4001)
    r = ex.run_punchout(params, f, [-60.0, 60.0])
    lo, hi = r.series["center"]
    assert lo == pytest.approx(params.f_RR_bare + params.g**2 / params.Delta, abs=1e-6)
    assert hi == pytest.approx(params.f_RR_bare, abs=1e-6)
    assert (lo - hi) * 1e3 == pytest.approx(-19.44, abs=0.01)
    dips = f[np.argmin(r.values, axis=1)]
    assert np.allclose(dips, [lo, hi], atol=2e-4)


def test_two_tone_lines(params):
    f = np.linspace(71.8, 72.3, 1001)
    r = ex.run_two_tone(params, f, [2.0])
    fit = fit_peaks(f, r.values[0], 2)
    sep = fit["center_1"] - fit["center_0"]
    assert sep == pytest.approx(0.114, abs=1e-3)
    flat = ex.run_two_tone(params, f, [-np.inf])
    assert np.all(flat.values == 0)


def test_two_tone_thermal_ratio(params):
    model = ex.TwoToneModel(temperature=dev.temperature_bound(0.0633, params.f01))
    _, _, amps = ex.two_tone_lines(params, 1e-6, model)
    assert amps[2] / amps[0] == pytest.approx(0.0676, abs=2e-4)


def test_two_tone_master_equation_centres(params):
    f = np.linspace(71.95, 72.25, 61)
    P = [-6.0, -2.0, 2.0]
    an = ex.run_two_tone(params, f, P)
    me = ex.run_two_tone(params, f, P, mode="master-equation", settings=ex.SimulationSettings(N_q=3))
    win = np.abs(f - params.f01) < 0.06
    step = f[1] - f[0]
    for a, m in zip(an.values, me.values):
        assert abs(f[win][np.argmax(a[win])] - f[win][np.argmax(m[win])]) <= step + 1e-12


def test_rabi_time_resonant_period(params):
    taus = np.arange(0, 15.01, 0.1)
    r = ex.run_rabi_time(params, ex.RABI_TEMPLATE, taus, [params.f01], UNDAMPED)
    W = crossing_frequency(taus, r.values[0])
    assert W == pytest.approx(0.208, rel=5e-3)
    assert 1 / W == pytest.approx(4.8, abs=0.05)


def test_rabi_time_detuned(params):
    taus = np.arange(0, 15.01, 0.1)
    delta = 0.1
    r = ex.run_rabi_time(params, ex.RABI_TEMPLATE, taus, [params.f01 + delta], UNDAMPED)
    W = crossing_frequency(taus, r.values[0])
    assert W == pytest.approx(math.hypot(0.208, delta), rel=1e-2)


def test_rabi_contrast_decays(params):
    taus = np.linspace(150, 152.5, 6)
    s = ex.SimulationSettings(dt=0.01)
    r = ex.run_rabi_time(params, ex.RABI_TEMPLATE, taus, [params.f01], s)
    assert np.ptp(r.values) < 1e-3


def test_rabi_baseline(params):
    taus = np.linspace(0, 5, 11)
    r = ex.run_rabi_time(params, ex.RABI_TEMPLATE, taus, [params.f01 - 0.3, params.f01],
                         UNDAMPED, subtract_baseline=True)
    assert np.allclose(r.values.min(axis=1), 0)


def test_chevron_zero_amplitude(params):
    r = ex.run_chevron(params, PulseEnvelope(tau=4, sigma=2), [0.0, 0.05], tau_grid=[0.0, 2.0],
                       settings=UNDAMPED)
    assert list(r.axes) == ["tau", "amplitude"]
    assert np.all(r.values[:, 0] == 0)
    with pytest.raises(ValueError):
        ex.run_chevron(params, PulseEnvelope(), [0.1])


def test_chevron_population_record(params):
    shape = PulseEnvelope(tau=2.0, sigma=1.5)
    amp = float(ex.pi_pulse(params, shape).omega0)
    r = ex.run_chevron(params, shape, [amp], freq_grid=[params.f01], settings=UNDAMPED,
                       record="P1")
    assert r.values[0, 0] >= 0.999


def test_t1_shape(params):
    delays = np.array([0.0, params.T1 * math.log(2), 30.0])
    r = ex.run_t1(params, delays, ex.SimulationSettings(dt=0.005))
    assert r.values[1] / r.values[0] == pytest.approx(0.5, rel=1e-6)
    # delay 0: excited population left when the pi pulse ends
    pulse = ex.pi_pulse(params)
    traj_p1 = ex.run_chevron(params, pulse, [pulse.omega0], freq_grid=[params.f01],
                             settings=ex.SimulationSettings(dt=0.005), record="P1").values[0, 0]
    assert r.values[0] == pytest.approx(traj_p1, rel=1e-3)
    with pytest.raises(ValueError):
        ex.run_t1(params, [-1.0])


def test_ramsey_no_fringes(params):
    delays = np.linspace(0, 30, 31)
    r = ex.run_ramsey(params, delays, phase_advance=0.0, settings=ex.SimulationSettings(dt=0.005))
    assert np.all(np.diff(r.values) < 0)


def test_protocols_deterministic(params):
    delays = np.linspace(0, 20, 5)
    s = ex.SimulationSettings(dt=0.005, noise_amplitude=0.01, seed=3)
    a = ex.run_t1(params, delays, s)
    b = ex.run_t1(params, delays, s)
    assert np.array_equal(a.values, b.values)
    assert a.metadata == b.metadata
    c = ex.run_t1(params, delays, ex.SimulationSettings(dt=0.005, noise_amplitude=0.01, seed=4))
    assert not np.array_equal(a.values, c.values)


def test_resource_guard(params):
    with pytest.raises(ex.ResourceError):
        ex.run_rabi_time(params, ex.RABI_TEMPLATE, np.linspace(0, 1, 101), np.linspace(72, 72.2, 101))


def test_qubit_offset_moves_resonance(params):
    shape = PulseEnvelope(tau=2.0, sigma=1.5)
    amp = float(ex.pi_pulse(params, shape).omega0)
    s = ex.SimulationSettings(decoherence=False, dt=0.005, qubit_offset=-0.05)
    r = ex.run_chevron(params, shape, [amp], freq_grid=[params.f01 - 0.05, params.f01],
                       settings=s, record="P1")
    assert r.values[0, 0] > 0.999 > r.values[1, 0]


def test_sweep_result_shape_check():
    with pytest.raises(ValueError):
        ex.SweepResult({"x": np.arange(3)}, {"x": "ns"}, np.zeros(4))


def test_purcell_sweep(params):
    r = ex.run_purcell_sweep(params, [0.5, 1.0, 2.0])
    assert np.all(np.isfinite(r.values))
    ratio = r.values / r.series["analytic"]
    assert 0.5 < ratio[1] < 2
    assert np.all(np.diff(r.series["mode_frequency"]) > 0)
