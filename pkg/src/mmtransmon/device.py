"""Device parameters, static derived quantities and the qubit-resonator Hamiltonian.

Units: energies are ordinary frequencies in GHz (E/h), times in ns,
capacitances in fF unless a function says otherwise.
"""
from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import expit
from scipy import constants as sc

from .fitting import quality_factor
from .operators import (HilbertSpec, InvalidDimensionError, Operator, annihilation_op,
                        embed, identity, number_op)

PHI0 = sc.h / (2 * sc.e)
# f01 and f_RR are tabulated to 1 MHz while Delta carries 0.1 MHz digits.
DELTA_TOL = 1e-3


class DomainError(ValueError):
    pass


class SingularityError(ZeroDivisionError):
    pass


class PopulationInversionError(ValueError):
    pass


class TransmonRegimeWarning(UserWarning):
    pass


@dataclass(frozen=True)
class DeviceParams:
    """Static device description. Defaults reproduce the 72 GHz device."""

    E_J: float = 2871.0          # GHz
    E_C: float = 0.228           # GHz
    g: float = 0.607979          # GHz
    f_RR_bare: float = 91.151    # GHz
    kappa: float = 0.084281      # GHz, resonator linewidth
    f01: float = 72.137          # GHz
    alpha: float = -0.228        # GHz
    Delta: float = -19.0143      # GHz, f01 - f_RR_bare
    chi: float = -0.000230       # GHz
    C_J: float = 45.0            # fF
    C_Q: float = 39.0            # fF
    J_c: float = 1.43            # kA/cm^2
    A_J: float = 0.56            # um^2
    T1: float = 15.849           # ns
    Tphi: float = 38.90          # ns
    temperature: float = 0.87    # K

    def __post_init__(self):
        if self.E_J / self.E_C < 30:
            warnings.warn(f"E_J/E_C = {self.E_J / self.E_C:.1f} is outside the transmon regime",
                          TransmonRegimeWarning, stacklevel=3)
        if abs(self.Delta - (self.f01 - self.f_RR_bare)) > DELTA_TOL:
            raise DomainError(
                f"Delta={self.Delta} inconsistent with f01 - f_RR_bare = {self.f01 - self.f_RR_bare}")
        if self.alpha >= 0:
            raise DomainError("anharmonicity must be negative")
        if self.kappa <= 0:
            raise DomainError("kappa must be positive")

    def replace(self, **changes) -> DeviceParams:
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class Derived:
    value: float
    formula: str


def _positive(**kw):
    for name, v in kw.items():
        if not v > 0:
            raise DomainError(f"{name} must be positive, got {v}")


def transmon_f01(E_J: float, E_C: float) -> float:
    _positive(E_J=E_J, E_C=E_C)
    return math.sqrt(8 * E_J * E_C) - E_C


def charging_energy(C_total_fF: float) -> float:
    """e^2 / (2 C h) in GHz."""
    _positive(C_total=C_total_fF)
    return sc.e**2 / (2 * C_total_fF * 1e-15 * sc.h) / 1e9


def dispersive_shift(g: float, Delta: float, alpha: float) -> float:
    if Delta == 0 or Delta + alpha == 0:
        raise SingularityError("dispersive shift diverges (resonant or straddling point)")
    return g**2 / Delta * alpha / (Delta + alpha)


def dressed_shift(g: float, Delta: float) -> float:
    if Delta == 0:
        raise SingularityError("qubit resonant with resonator")
    return g**2 / Delta


def josephson_inductance(E_J: float) -> float:
    """L_J in henry for E_J given in GHz."""
    _positive(E_J=E_J)
    I_c = 2 * np.pi * E_J * 1e9 * sc.h / PHI0
    return PHI0 / (2 * np.pi * I_c)


def plasma_frequency(E_J: float, C_J_fF: float) -> float:
    """Junction self-resonance 1/(2 pi sqrt(L_J C_J)) in GHz."""
    _positive(E_J=E_J, C_J=C_J_fF)
    L_J = josephson_inductance(E_J)
    return 1 / (2 * np.pi * math.sqrt(L_J * C_J_fF * 1e-15)) / 1e9


def plasma_frequency_from_barrier(J_c: float, eps_r: float, d_nm: float) -> float:
    """Plasma frequency in GHz from barrier parameters.

    J_c in kA/cm^2, relative permittivity ``eps_r`` and thickness ``d_nm``.
    Uses w_p^2 = 2e J_c d / (hbar eps), which follows from w_p^2 = 1/(L_J C_J)
    with C_J = eps A / d and I_c = J_c A. The junction area cancels.
    """
    _positive(J_c=J_c, eps_r=eps_r, d=d_nm)
    jc = J_c * 1e7  # A/m^2
    w2 = 2 * sc.e * jc * d_nm * 1e-9 / (sc.hbar * eps_r * sc.epsilon_0)
    return math.sqrt(w2) / (2 * np.pi) / 1e9


def critical_photon_number(g: float, Delta: float) -> float:
    if g == 0:
        raise SingularityError("uncoupled qubit has no critical photon number")
    return Delta**2 / (4 * g**2)


def thermal_population(f01: float, T: float) -> float:
    """Two-level Boltzmann excited fraction at temperature T (kelvin)."""
    _positive(T=T)
    x = sc.h * f01 * 1e9 / (sc.k * T)
    return float(expit(-x))


def temperature_bound(p1: float, f01: float) -> float:
    if p1 >= 0.5:
        raise PopulationInversionError(f"p1={p1} implies a non-positive temperature")
    if p1 <= 0:
        raise DomainError("p1 must be positive")
    return sc.h * f01 * 1e9 / (sc.k * math.log(1 / p1 - 1))


def bose_occupation(f: float, T: float) -> float:
    if T <= 0:
        return 0.0
    return float(1 / np.expm1(sc.h * f * 1e9 / (sc.k * T)))


def derived_quantities(p: DeviceParams) -> dict[str, Derived]:
    return {
        "f01_pred": Derived(transmon_f01(p.E_J, p.E_C), "sqrt(8 E_J E_C) - E_C"),
        "chi_pred": Derived(dispersive_shift(p.g, p.Delta, p.alpha), "g^2/Delta * alpha/(Delta+alpha)"),
        "dressed_shift": Derived(dressed_shift(p.g, p.Delta), "g^2/Delta"),
        "n_crit": Derived(critical_photon_number(p.g, p.Delta), "Delta^2/(4 g^2)"),
        "f_plasma": Derived(plasma_frequency(p.E_J, p.C_J), "1/(2 pi sqrt(L_J C_J))"),
        "Q1": Derived(quality_factor(p.f01, p.T1), "2 pi f01 T1"),
    }


def system_space(N_q: int, N_r: int) -> HilbertSpec:
    """Qubit-only space when N_r == 1, otherwise qubit (x) resonator."""
    if N_q < 2 or N_r < 1:
        raise InvalidDimensionError(f"invalid truncation N_q={N_q}, N_r={N_r}")
    return HilbertSpec((N_q,)) if N_r == 1 else HilbertSpec((N_q, N_r))


def system_operators(N_q: int, N_r: int) -> dict[str, Operator]:
    """Qubit lowering ``b`` and resonator lowering ``a`` (``None`` without resonator)."""
    space = system_space(N_q, N_r)
    b = embed(annihilation_op(N_q), space, 0)
    a = embed(annihilation_op(N_r), space, 1) if N_r > 1 else None
    return {"b": b, "a": a, "space": space}


def build_system_hamiltonian(params: DeviceParams, N_q: int = 3, N_r: int = 5,
                             frame: float = 0.0) -> Operator:
    """H/h in GHz for a Duffing transmon exchange-coupled to a resonator.

    ``frame`` subtracts frame * (b^dag b + a^dag a), i.e. a frame rotating at
    that frequency for both modes.
    """
    ops = system_operators(N_q, N_r)
    space = ops["space"]
    nq = embed(number_op(N_q), space, 0)
    eye = embed(identity(N_q), space, 0)
    H = (params.f01 - frame) * nq + (params.alpha / 2) * (nq @ (nq - eye))
    if ops["a"] is not None:
        a, b = ops["a"], ops["b"]
        H = H + (params.f_RR_bare - frame) * (a.dag() @ a)
        H = H + params.g * (a @ b.dag() + a.dag() @ b)
    return H


def dressed_levels(H: Operator) -> dict[tuple[int, ...], float]:
    """Eigenenergies labelled by the bare product state of largest overlap."""
    vals, vecs = np.linalg.eigh(H.matrix)
    labels = {}
    for k in range(len(vals)):
        idx = int(np.argmax(np.abs(vecs[:, k]) ** 2))
        labels[tuple(int(i) for i in np.unravel_index(idx, H.dims))] = float(vals[k])
    return labels


def dispersive_shift_exact(params: DeviceParams, N_q: int = 4, N_r: int = 4) -> float:
    """chi from exact diagonalisation: half the qubit-state-dependent resonator pull."""
    E = dressed_levels(build_system_hamiltonian(params, N_q, N_r))
    return ((E[1, 1] - E[1, 0]) - (E[0, 1] - E[0, 0])) / 2
