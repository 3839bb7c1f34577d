"""Black-box admittance analysis: mode frequencies and Purcell-limited lifetimes.

Admittances follow the sign convention Y_C = -i w C, Y_L = i / (w L), so the
junction branch is Y_J = -i w C_J + i / (w L_J). Angular frequencies are in
rad/s and admittances in siemens; the analytic Purcell formula at the bottom
uses the package's GHz/ns convention instead.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

SCAN_POINTS = 1001
ROOT_RTOL = 1e-9
DERIV_STEP = 1e-6


class ExtrapolationError(ValueError):
    pass


class LosslessNetworkError(ValueError):
    """Re Y <= 0 at the mode: the Purcell time is infinite."""


@dataclass(frozen=True)
class JunctionBranch:
    L_J: float  # H
    C_J: float  # F

    def __post_init__(self):
        if self.L_J <= 0 or self.C_J <= 0:
            raise ValueError("junction inductance and capacitance must be positive")

    @property
    def plasma_omega(self) -> float:
        return 1 / math.sqrt(self.L_J * self.C_J)

    def scaled(self, area_ratio: float) -> JunctionBranch:
        """Junction of ``area_ratio`` times the area: L_J / r, C_J * r."""
        return JunctionBranch(self.L_J / area_ratio, self.C_J * area_ratio)


def _check_omega(omega):
    if np.any(np.asarray(omega) <= 0):
        raise ValueError("omega must be positive")


def junction_admittance(omega, j: JunctionBranch):
    _check_omega(omega)
    omega = np.asarray(omega, dtype=float)
    return -1j * omega * j.C_J + 1j / (omega * j.L_J)


class Element:
    def admittance(self, omega):
        raise NotImplementedError

    def impedance(self, omega):
        return 1 / self.admittance(omega)

    def __call__(self, omega):
        _check_omega(omega)
        return self.admittance(np.asarray(omega, dtype=float))


class Resistor(Element):
    def __init__(self, R: float):
        if R <= 0:
            raise ValueError("resistance must be positive")
        self.R = R

    def admittance(self, omega):
        return np.full(np.shape(omega), 1 / self.R, dtype=complex)


class Inductor(Element):
    def __init__(self, L: float):
        if L <= 0:
            raise ValueError("inductance must be positive")
        self.L = L

    def admittance(self, omega):
        return 1j / (omega * self.L)


class Capacitor(Element):
    def __init__(self, C: float):
        if C <= 0:
            raise ValueError("capacitance must be positive")
        self.C = C

    def admittance(self, omega):
        return -1j * omega * self.C


class Parallel(Element):
    def __init__(self, *elements: Element):
        self.elements = elements

    def admittance(self, omega):
        return sum(e.admittance(omega) for e in self.elements)


class Series(Element):
    def __init__(self, *elements: Element):
        self.elements = elements

    def admittance(self, omega):
        return 1 / sum(e.impedance(omega) for e in self.elements)


class Tabulated(Element):
    """Admittance samples interpolated with cubic splines on Re and Im separately."""

    def __init__(self, omega, Y):
        omega = np.asarray(omega, dtype=float)
        Y = np.asarray(Y, dtype=complex)
        order = np.argsort(omega)
        self.omega = omega[order]
        Y = Y[order]
        self._re = CubicSpline(self.omega, Y.real)
        self._im = CubicSpline(self.omega, Y.imag)

    @classmethod
    def from_file(cls, path) -> Tabulated:
        """Three columns: frequency (GHz), Re Y (S), Im Y (S); '#' starts a comment."""
        data = np.loadtxt(path, comments="#", ndmin=2)
        if data.shape[1] != 3:
            raise ValueError(f"{path}: expected 3 columns, found {data.shape[1]}")
        return cls(2 * np.pi * data[:, 0] * 1e9, data[:, 1] + 1j * data[:, 2])

    def to_file(self, path, header: str = "frequency_GHz  ReY_S  ImY_S"):
        Y = self.admittance(self.omega)
        np.savetxt(path, np.column_stack([self.omega / (2 * np.pi * 1e9), Y.real, Y.imag]),
                   header=header)

    def admittance(self, omega):
        omega = np.asarray(omega, dtype=float)
        lo, hi = self.omega[0], self.omega[-1]
        if np.any(omega < lo * (1 - 1e-12)) or np.any(omega > hi * (1 + 1e-12)):
            raise ExtrapolationError(
                f"omega outside tabulated range [{lo:.6g}, {hi:.6g}] rad/s")
        return self._re(omega) + 1j * self._im(omega)


CircuitNetwork = Element


def network_admittance(net: Element, omega):
    return net(omega)


def total_admittance(net: Element | None, j: JunctionBranch, omega):
    Y = junction_admittance(omega, j)
    if net is not None:
        Y = Y + net(omega)
    return Y


def mode_frequencies(net: Element | None, j: JunctionBranch, bracket,
                     scan_points: int = SCAN_POINTS, rtol: float = ROOT_RTOL) -> list[float]:
    """Zeros of Im Y_total inside ``bracket`` (rad/s), ascending.

    Sign changes of Im Y across admittance poles are rejected: after bisection
    a true zero has |Im Y| below the scan values around it, a pole far above.
    """
    lo, hi = bracket
    if not 0 < lo < hi:
        raise ValueError("bracket must satisfy 0 < lo < hi")
    def f(x):
        return total_admittance(net, j, x).imag

    w = np.linspace(lo, hi, scan_points)
    vals = f(w)
    # A zero sitting next to a pole inside one scan interval shows no sign
    # change; resample around local maxima of |Im Y| (the poles) to split them.
    for _ in range(3):
        mag = np.abs(vals)
        peaks = np.nonzero((mag[1:-1] > mag[:-2]) & (mag[1:-1] > mag[2:]))[0] + 1
        if not len(peaks):
            break
        extra = np.concatenate([np.linspace(w[i - 1], w[i + 1], 101)[1:-1] for i in peaks])
        w = np.concatenate([w, extra])
        order = np.argsort(w)
        w, vals = w[order], np.concatenate([vals, f(extra)])[order]
    roots = []
    for i in np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) <= 0)[0]:
        a, b, fa, fb = w[i], w[i + 1], vals[i], vals[i + 1]
        if fa == 0:
            roots.append(a)
            continue
        if fb == 0:
            continue  # picked up as the next interval's left end
        while b - a > rtol * a:
            m = 0.5 * (a + b)
            fm = f(m)
            if np.sign(fm) == np.sign(fa):
                a, fa = m, fm
            else:
                b, fb = m, fm
        root = 0.5 * (a + b)
        if abs(f(root)) <= max(abs(vals[i]), abs(vals[i + 1])):
            roots.append(float(root))
    return sorted(set(roots))


def admittance_derivative(net: Element | None, j: JunctionBranch, omega: float,
                          rel_step: float = DERIV_STEP):
    """dY/dw by central difference, refined by one Richardson step."""
    h = rel_step * omega

    def central(step):
        return (total_admittance(net, j, omega + step)
                - total_admittance(net, j, omega - step)) / (2 * step)

    return (4 * central(h / 2) - central(h)) / 3


def purcell_time(net: Element | None, j: JunctionBranch, omega_q: float,
                 rel_step: float = DERIV_STEP) -> float:
    """Purcell lifetime (s) from the admittance seen at the mode frequency.

    With this sign convention Im Y' is negative at a mode, so the lifetime is
    -Im Y'(w_q) / (2 Re Y(w_q)).
    """
    Y = total_admittance(net, j, omega_q)
    if not Y.real > 0:
        raise LosslessNetworkError(f"Re Y = {Y.real:.3e} S at the mode; T_P is infinite")
    dY = admittance_derivative(net, j, omega_q, rel_step)
    return float(-0.5 * dY.imag / Y.real)


def analytic_purcell(g: float, Delta: float, kappa: float) -> float:
    """Dispersive Purcell lifetime Delta^2 / (g^2 2 pi kappa) in ns (inputs in GHz).

    Returns ``math.inf`` when g or kappa vanishes.
    """
    if g == 0 or kappa == 0:
        return math.inf
    if kappa < 0:
        raise ValueError("kappa must be positive")
    return Delta**2 / (g**2 * 2 * np.pi * kappa)


@dataclass(frozen=True)
class CoupledCircuit:
    """Junction capacitively coupled to a damped parallel-LC readout resonator."""

    junction: JunctionBranch
    C_g: float
    L_r: float
    C_r: float
    R: float

    @property
    def network(self) -> Element:
        return Series(Capacitor(self.C_g),
                      Parallel(Inductor(self.L_r), Capacitor(self.C_r), Resistor(self.R)))

    def normal_modes(self) -> np.ndarray:
        """Lossless normal-mode angular frequencies from the two-node Lagrangian."""
        Cq, Cg, Cr = self.junction.C_J, self.C_g, self.C_r
        C = np.array([[Cq + Cg, -Cg], [-Cg, Cr + Cg]])
        Linv = np.diag([1 / self.junction.L_J, 1 / self.L_r])
        w2 = np.linalg.eigvals(np.linalg.solve(C, Linv))
        return np.sort(np.sqrt(w2.real))


def coupled_circuit(f_q: float, f_r: float, g: float, kappa: float,
                    C_q: float = 84e-15, C_r: float = 100e-15) -> CoupledCircuit:
    """Lumped stand-in for a qubit/resonator pair given in GHz.

    Uses g = (C_g / 2 sqrt(C_q C_r)) sqrt(f_q f_r) and kappa = 1 / (2 pi R C_r).
    The junction is linearised, and both inductances are chosen so that each
    mode, loaded by C_g with the other node grounded, sits at its bare frequency.
    """
    wq, wr = 2 * np.pi * f_q * 1e9, 2 * np.pi * f_r * 1e9
    C_g = 2 * g * math.sqrt(C_q * C_r) / math.sqrt(f_q * f_r)
    L_J = 1 / (wq**2 * (C_q + C_g))
    L_r = 1 / (wr**2 * (C_r + C_g))
    R = 1 / (2 * np.pi * kappa * 1e9 * C_r)
    return CoupledCircuit(JunctionBranch(L_J, C_q), C_g, L_r, C_r, R)
