import math

import numpy as np
import pytest

from mmtransmon.lindblad import (CollapseChannel, Hamiltonian, IntegrationError, TimeGrid,
                                 collapse_channels, evolve, lindblad_derivative, liouvillian,
                                 steady_state)
from mmtransmon.operators import (HilbertSpec, Operator, SpaceMismatchError, annihilation_op,
                                  ket_dm, number_op)
from oracles import constant_drive, crossing_frequency, rabi_p1, run_two_level

Q2 = HilbertSpec((2,))


def test_channel_rates():
    ch = collapse_channels(15.849, 38.90, 0.084281, N_q=2)
    rates = {c.name: c.rate for c in ch}
    assert rates["relaxation"] == pytest.approx(0.0631, abs=1e-4)
    assert rates["dephasing"] == pytest.approx(2 / 38.90)
    assert "resonator" not in rates
    assert [c.name for c in collapse_channels(15.849, math.inf, 0.08, 2)] == ["relaxation"]
    ch = collapse_channels(10, 20, 0.1, 3, 4, thermal_nbar=0.01)
    names = [c.name for c in ch]
    assert names == ["relaxation", "excitation", "dephasing", "resonator"]
    assert ch[-1].rate == pytest.approx(2 * math.pi * 0.1)
    with pytest.raises(ValueError):
        collapse_channels(-1, 10, 0.1, 2)


def test_derivative_examples():
    rho = ket_dm(Q2, 1)
    zero = lindblad_derivative(number_op(2), [], rho)
    assert np.allclose(zero.matrix, 0)
    gamma = 0.37
    d = lindblad_derivative(0 * number_op(2), [CollapseChannel(annihilation_op(2), gamma)], rho)
    assert d.matrix[1, 1].real == pytest.approx(-gamma)
    assert abs(d.trace()) < 1e-15


def test_derivative_trace_free_random():
    r = np.random.default_rng(3)
    space = HilbertSpec((3,))
    A = r.normal(size=(3, 3)) + 1j * r.normal(size=(3, 3))
    H = Operator(A + A.conj().T, space)
    psi = r.normal(size=3) + 1j * r.normal(size=3)
    psi /= np.linalg.norm(psi)
    rho = Operator(np.outer(psi, psi.conj()), space)
    ch = collapse_channels(5.0, 7.0, 0.0, 3)
    d = lindblad_derivative(H, ch, rho)
    assert abs(d.trace()) < 1e-12
    # superoperator route agrees with the matrix route
    v = liouvillian(H, ch) @ rho.matrix.reshape(-1)
    assert np.allclose(v.reshape(3, 3), d.matrix)


def test_identity_evolution():
    rho0 = Operator(np.array([[0.7, 0.2 - 0.1j], [0.2 + 0.1j, 0.3]]), Q2)
    traj = evolve(rho0, Hamiltonian.zero(Q2), [], TimeGrid(0, 5, 0.01))
    assert np.array_equal(traj.final, rho0.matrix)


def test_relaxation_exponential():
    T1 = 15.849
    ch = collapse_channels(T1, math.inf, 0, 2)
    traj = evolve(ket_dm(Q2, 1), Hamiltonian.zero(Q2), ch, TimeGrid(0, 40, 0.001))
    assert np.max(np.abs(traj.records["P1"] - np.exp(-traj.times / T1))) < 1e-6


def test_coherence_decay_rate():
    T1, Tphi = 15.849, 38.90
    plus = Operator(0.5 * np.ones((2, 2)), Q2)
    traj = evolve(plus, Hamiltonian.zero(Q2), collapse_channels(T1, Tphi, 0, 2),
                  TimeGrid(0, 30, 0.002), save_every=500)
    rho01 = np.abs(traj.states[:, 0, 1])
    ref = 0.5 * np.exp(-traj.state_times * (1 / (2 * T1) + 1 / Tphi))
    assert np.allclose(rho01, ref, atol=1e-9)


def test_resonant_rabi():
    omega = 0.1
    traj = run_two_level(omega, 0.0, 20.0, 0.002)
    assert np.max(np.abs(traj.records["P1"] - rabi_p1(omega, 0.0, traj.times))) < 1e-6


def test_generalized_rabi_batch():
    omega = np.array([0.05, 0.1])
    delta = np.array([0.05, 0.0])
    traj = run_two_level(omega, delta, 40.0, 0.004)
    assert traj.batched and traj.records["P1"].shape == (len(traj.times), 2)
    for k in range(2):
        W = crossing_frequency(traj.times, traj.records["P1"][:, k])
        assert W == pytest.approx(np.hypot(omega[k], delta[k]), rel=5e-3)
    assert traj.records["P1"][:, 0].max() == pytest.approx(0.5, abs=1e-4)


def test_hermiticity_and_states():
    H = Hamiltonian(0 * number_op(2), [constant_drive(0.1, 0.03)])
    traj = evolve(ket_dm(Q2, 0), H, collapse_channels(15.0, 30.0, 0, 2),
                  TimeGrid(0, 10, 0.005), save_every=100, check_states=True)
    for s in traj.states:
        assert np.abs(s - s.conj().T).max() < 1e-10


def test_batched_static_hamiltonian():
    freqs = np.array([0.0, 0.1])
    H = freqs[:, None, None] * number_op(2).matrix
    plus = Operator(0.5 * np.ones((2, 2)), Q2)
    traj = evolve(plus, Hamiltonian(H, space=Q2), [], TimeGrid(0, 2.5, 0.005))
    assert np.allclose(traj.final[:, 1, 0], 0.5 * np.exp(-2j * np.pi * freqs * 2.5), atol=1e-10)


def test_blowup_detected():
    H = 400.0 * (annihilation_op(2) + annihilation_op(2).dag())
    with pytest.raises(IntegrationError, match="reduce dt"):
        evolve(ket_dm(Q2, 0), H, collapse_channels(1.0, 1.0, 0, 2), TimeGrid(0, 1, 0.01))


def test_space_checks():
    with pytest.raises(SpaceMismatchError):
        evolve(ket_dm(HilbertSpec((3,)), 0), Hamiltonian.zero(Q2), [], TimeGrid(0, 1, 0.1))
    with pytest.raises(SpaceMismatchError):
        evolve(ket_dm(Q2, 0), Hamiltonian.zero(Q2), collapse_channels(1, 1, 0, 3),
               TimeGrid(0, 1, 0.1))
    with pytest.raises(ValueError):
        TimeGrid(0, 1, 0)


def test_steady_state_thermal():
    # decay plus excitation: detailed balance p1/p0 = nbar/(1+nbar)
    nbar = 0.2
    ch = collapse_channels(10.0, math.inf, 0, 2, thermal_nbar=nbar)
    ch[0] = CollapseChannel(ch[0].operator, (1 + nbar) / 10.0)
    rho = steady_state(0 * number_op(2), ch)
    assert rho[1, 1].real / rho[0, 0].real == pytest.approx(nbar / (1 + nbar))
    assert np.trace(rho).real == pytest.approx(1.0)


def test_steady_state_driven_two_level():
    # Bloch steady state: P1 = s / (2 (1 + s)), s = Omega^2 T1 T2 (angular units)
    T1, Tphi, omega = 10.0, 20.0, 0.02
    T2 = 1 / (1 / (2 * T1) + 1 / Tphi)
    b = annihilation_op(2)
    H = 0.5 * omega * (b + b.dag())
    rho = steady_state(H, collapse_channels(T1, Tphi, 0, 2))
    s = (2 * np.pi * omega) ** 2 * T1 * T2
    assert rho[1, 1].real == pytest.approx(s / (2 * (1 + s)), rel=1e-10)
