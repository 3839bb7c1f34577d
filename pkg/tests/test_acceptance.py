"""Acceptance gate: one test per criterion, each with its runtime budget.

Results are also collected into a summary printed at the end of the run.
"""
import filecmp
import math
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pytest

from conftest import ACCEPTANCE
from mmtransmon import device as dev
from mmtransmon import experiments as ex
from mmtransmon import harness
from mmtransmon.fitting import (dephasing_decomposition, fit_damped_cosine, fit_exponential,
                                power_broadening_fit, quality_factor)
from mmtransmon.freqplan import ChainSpec, assign_features, direct_conversion_spurs, sidebands
from mmtransmon.lindblad import Hamiltonian, TimeGrid, collapse_channels, evolve
from mmtransmon.operators import HilbertSpec, ket_dm, number_op
from mmtransmon.pulses import PulseEnvelope
from mmtransmon.purcell import (JunctionBranch, Resistor, analytic_purcell, coupled_circuit,
                                mode_frequencies, purcell_time)
from oracles import constant_drive, crossing_frequency, rabi_p1, run_two_level

P = dev.DeviceParams()
CONFIGS = Path(__file__).resolve().parents[1] / "configs"


@contextmanager
def criterion(n, name, budget):
    """Record pass/fail for criterion ``n``; checks collected in ``notes``."""
    notes = []
    t0 = time.perf_counter()
    ok = False
    try:
        yield notes
        ok = True
    finally:
        dt = time.perf_counter() - t0
        within = dt < budget
        detail = "; ".join(notes) + f"; {dt:.2f} s (budget {budget:g} s)"
        ACCEPTANCE[n] = (ok and within, name, detail)
    assert within, f"criterion {n} took {dt:.1f} s, budget {budget} s"


def check(notes, label, value, target, rel=None, abs_=None):
    tol = abs_ if abs_ is not None else rel * abs(target)
    notes.append(f"{label}={value:.6g} (target {target:g})")
    assert abs(value - target) <= tol, f"{label}: {value} vs {target}"


def test_c01_table_triad():
    with criterion(1, "device parameter triad", 1) as n:
        check(n, "f01", dev.transmon_f01(2871, 0.228), 72.137, rel=1e-3)
        check(n, "chi_MHz", 1e3 * dev.dispersive_shift(P.g, P.Delta, P.alpha), -0.230, rel=1e-2)
        check(n, "g2/Delta_MHz", 1e3 * dev.dressed_shift(P.g, P.Delta), -19.44, rel=5e-3)


def test_c02_plasma():
    with criterion(2, "plasma frequency", 1) as n:
        check(n, "f_p_GHz", dev.plasma_frequency(2871, 45), 99.0, rel=0.02)


def test_c03_charging_energy():
    with criterion(3, "charging energy", 1) as n:
        check(n, "E_C_MHz", 1e3 * dev.charging_energy(84), 228, rel=0.02)


def test_c04_thermal_bound():
    with criterion(4, "thermal bound", 1) as n:
        check(n, "T_K", dev.temperature_bound(0.0633, 72.137), 1.287, rel=0.01)


def test_c05_dephasing():
    with criterion(5, "dephasing decomposition", 1) as n:
        check(n, "Tphi_ns", dephasing_decomposition(15.849, 17.466), 38.90, abs_=0.1)


def test_c06_quality_factor():
    with criterion(6, "quality factor", 1) as n:
        check(n, "Q", quality_factor(72.137, 15.849), 7.18e3, rel=5e-3)


def _rk4_order():
    Q2 = HilbertSpec((2,))
    H = Hamiltonian(0 * number_op(2), [constant_drive(0.2, 0.05)])
    ch = collapse_channels(15.849, 38.90, 0, 2)
    final = {}
    for dt in (0.02, 0.01, 0.00125):
        traj = evolve(ket_dm(Q2, 0), H, ch, TimeGrid(0, 10.0, dt), save_every=None)
        final[dt] = traj.final
    e1 = np.abs(final[0.02] - final[0.00125]).max()
    e2 = np.abs(final[0.01] - final[0.00125]).max()
    return math.log2(e1 / e2)


def test_c07_dynamics_oracles():
    with criterion(7, "dynamics oracle suite", 60) as n:
        omega = 0.1
        traj = run_two_level(omega, 0.0, 30.0, 0.002)
        err = np.abs(traj.records["P1"] - rabi_p1(omega, 0.0, traj.times)).max()
        n.append(f"rabi_err={err:.2e}")
        assert err < 1e-6

        Q2 = HilbertSpec((2,))
        traj = evolve(ket_dm(Q2, 1), Hamiltonian.zero(Q2),
                      collapse_channels(P.T1, math.inf, 0, 2), TimeGrid(0, 60, 0.002))
        err = np.abs(traj.records["P1"] - np.exp(-traj.times / P.T1)).max()
        n.append(f"T1_err={err:.2e}")
        assert err < 1e-6

        O, D = np.meshgrid([0.05, 0.1, 0.15, 0.2, 0.25], [0.0, 0.05, 0.1, 0.15, 0.2],
                           indexing="ij")
        O, D = O.ravel(), D.ravel()
        traj = run_two_level(O, D, 60.0, 0.004)
        W = np.array([crossing_frequency(traj.times, traj.records["P1"][:, k])
                      for k in range(O.size)])
        worst = np.max(np.abs(W / np.hypot(O, D) - 1))
        n.append(f"gen_rabi_worst={worst:.2e}")
        assert worst < 5e-3

        # trace bound: the largest per-step correction, accumulated over the run
        drift = traj.max_trace_correction * traj.grid.n_steps / (traj.times[-1] - traj.times[0])
        n.append(f"trace_drift_per_ns={drift:.1e}")
        assert drift < 1e-9

        order = _rk4_order()
        n.append(f"rk4_order={order:.2f}")
        assert order >= 3.5


def test_c08_figure4_round_trip():
    with criterion(8, "coherence round trip", 120) as n:
        t1 = ex.run_t1(P, np.linspace(0, 60, 61))
        fit = fit_exponential(t1.axes["delay"], t1.values)
        check(n, "T1", fit["T"], 15.849, rel=0.02)
        ramsey = ex.run_ramsey(P, np.arange(0, 60.001, 0.25), phase_advance=0.320)
        fit = fit_damped_cosine(ramsey.axes["delay"], ramsey.values)
        check(n, "T2*", fit["T2s"], 17.466, rel=0.05)
        check(n, "fringe_MHz", 1e3 * fit["freq"], 320, abs_=1.0)


def test_c09_power_broadening():
    with criterion(9, "power-broadening round trip", 60) as n:
        f = np.linspace(71.8, 72.3, 501)
        powers = np.linspace(-8, 5, 17)
        clean = ex.run_two_tone(P, f, powers)
        fit = power_broadening_fit(clean.series["n_s"], ex.two_tone_linewidths(clean, P), P.g)
        check(n, "T1_clean", fit["T1"], 47.3, rel=1e-3)
        check(n, "T2_clean", fit["T2"], 20.9, rel=1e-3)
        worst = 0.0
        for seed in range(5):
            s = ex.SimulationSettings(noise_amplitude=0.02, noise_relative=True, seed=seed)
            noisy = ex.run_two_tone(P, f, powers, settings=s)
            fit = power_broadening_fit(noisy.series["n_s"], ex.two_tone_linewidths(noisy, P), P.g)
            worst = max(worst, abs(fit["T1"] / 47.3 - 1), abs(fit["T2"] / 20.9 - 1))
        n.append(f"noisy_worst_rel_err={worst:.3f} over 5 seeds")
        assert worst < 0.10


def test_c10_chevron_structure():
    with criterion(10, "chevron structure", 300) as n:
        undamped = ex.SimulationSettings(decoherence=False, dt=0.005)
        # coarse 21x21 amplitude-by-length chevron at resonance
        amps = np.linspace(0, 0.2, 21)
        taus = np.linspace(0, 10, 21)
        grid = ex.run_chevron(P, PulseEnvelope(sigma=1.5), amps, tau_grid=taus,
                              settings=undamped, record="P1")
        assert grid.values.shape == (21, 21)
        # along the area = pi contour P1 beats 0.9x and 1.1x of that amplitude
        for tau in (0.0, 2.0, 5.0, 10.0):
            shape = PulseEnvelope(tau=tau, sigma=1.5)
            a_pi = float(ex.pi_pulse(P, shape).omega0)
            r = ex.run_chevron(P, shape, a_pi * np.array([0.9, 1.0, 1.1]), freq_grid=[P.f01],
                               settings=undamped, record="P1")
            p = r.values[0]
            assert p[1] >= p[0] and p[1] >= p[2], (tau, p)
        n.append("P1 maximal on the pi contour at tau = 0, 2, 5, 10 ns")

        freqs = P.f01 + np.linspace(-0.38, 0.38, 21)
        amps = np.linspace(0, 0.3, 21)
        lo = int(np.argmin(np.abs(freqs - (P.f01 + P.alpha / 2))))
        hi = int(np.argmin(np.abs(freqs - (P.f01 - P.alpha / 2))))
        contrast = {}
        for N_q in (2, 3):
            s = ex.SimulationSettings(N_q=N_q, decoherence=False, dt=0.005)
            r = ex.run_chevron(P, PulseEnvelope(tau=4.0, sigma=2.0), amps, freq_grid=freqs,
                               settings=s)
            contrast[N_q] = float(np.max(r.values[lo] - r.values[hi]))
        n.append(f"sub-f01 excess N_q=3: {contrast[3]:.3f}, N_q=2: {contrast[2]:.1e}")
        assert contrast[3] >= 0.5
        assert abs(contrast[2]) < 1e-9


def test_c11_purcell():
    with criterion(11, "Purcell suite", 10) as n:
        j = JunctionBranch(dev.josephson_inductance(2871), 45e-15)
        wp = j.plasma_omega
        (root,) = mode_frequencies(None, j, (0.5 * wp, 1.5 * wp))
        check(n, "root/w_p-1", root / wp - 1, 0.0, abs_=1e-9)
        R = 5e3
        closed = R * j.C_J  # 0.5 R (C_J + 1/(w^2 L_J)) at w = w_p
        check(n, "T_P/closed-1", purcell_time(Resistor(R), j, wp) / closed - 1, 0.0, abs_=1e-6)
        T_an = analytic_purcell(P.g, P.Delta, P.kappa)
        check(n, "T_analytic_ns", T_an, 1.85e3, rel=0.01)
        assert T_an / P.T1 > 100
        cc = coupled_circuit(P.f01, P.f_RR_bare, P.g, P.kappa)
        wq = cc.normal_modes()[0]
        w = min(mode_frequencies(cc.network, cc.junction, (0.9 * wq, 1.1 * wq)),
                key=lambda x: abs(x - wq))
        ratio = purcell_time(cc.network, cc.junction, w) * 1e9 / T_an
        n.append(f"circuit/analytic={ratio:.3f}")
        assert 0.5 < ratio < 2


def test_c12_frequency_plan():
    with criterion(12, "frequency-plan suite", 1) as n:
        assert sidebands(78, 6) == (84, 72)
        assert direct_conversion_spurs([80.0, 86.4, 81.0], ChainSpec(f_RLO=78, f_RIF=6), 7) == [86.4]
        resonators, qubits = [91.151, 93.42, 95.87], [72.137]
        truth, observed = [], []
        jitter = np.random.default_rng(5).uniform(-3e-4, 3e-4, 12)
        k = 0
        for kind, freqs in (("resonator", resonators), ("qubit", qubits)):
            for i, fs in enumerate(freqs):
                for h in (5, 6, 7):
                    observed.append(6 / h * fs + jitter[k])
                    truth.append((kind, i, h))
                    k += 1
        perm = np.random.default_rng(6).permutation(len(observed))
        done, left = assign_features(np.array(observed)[perm], resonators, qubits,
                                     (5, 6, 7), tolerance=1e-3)
        got = [(a.source, a.index, a.harmonic_n) for a in done]
        wrong = sum(g != truth[p] for g, p in zip(got, perm))
        n.append(f"{len(done)} assigned, {len(left)} unmatched, {wrong} wrong")
        assert len(done) == 12 and not left and wrong == 0


def test_c13_determinism(tmp_path):
    with criterion(13, "determinism of shipped configs", 300) as n:
        configs = sorted(CONFIGS.glob("*.cfg"))
        for tag in ("a", "b"):
            for cfg in configs:
                harness.run(cfg, tmp_path / tag)
        cmp = filecmp.dircmp(tmp_path / "a", tmp_path / "b")
        mismatched = []

        def walk(c):
            _, bad, err = filecmp.cmpfiles(c.left, c.right, c.common_files, shallow=False)
            mismatched.extend(bad + err + c.left_only + c.right_only)
            for sub in c.subdirs.values():
                walk(sub)

        walk(cmp)
        n.append(f"{len(configs)} configs, {len(mismatched)} differing files")
        assert len(configs) >= 9 and not mismatched
