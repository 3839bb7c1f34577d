"""Lindblad master-equation evolution with a fixed-step RK4 integrator.

Hamiltonians are in GHz and times in ns; the 2 pi enters only here.

Internally the density matrix is flattened row-major, so that
vec(A rho B) = (A kron B^T) vec(rho). The whole right-hand side is then a
handful of (batch, d^2) x (d^2, d^2) products per stage, which lets one call
integrate an entire sweep grid in lock-step.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .device import bose_occupation
from .operators import (HilbertSpec, Operator, SpaceMismatchError, annihilation_op,
                        check_density_matrix, embed, number_op)

TWO_PI = 2 * np.pi
DEFAULT_DT = 0.002
TRACE_FAIL = 1e-6
_CHUNK = 256


class IntegrationError(RuntimeError):
    pass


@dataclass(frozen=True)
class CollapseChannel:
    operator: Operator
    rate: float  # 1/ns
    name: str = ""

    def __post_init__(self):
        if self.rate < 0:
            raise ValueError("collapse rate must be non-negative")


@dataclass(frozen=True)
class TimeGrid:
    t0: float
    t1: float
    dt: float = DEFAULT_DT

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if (self.t1 - self.t0) / self.dt < 1 - 1e-9:
            raise ValueError("time grid needs at least one step")

    @property
    def n_steps(self) -> int:
        return int(math.ceil((self.t1 - self.t0) / self.dt - 1e-9))

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n_steps + 1)


class Hamiltonian:
    """H(t) = static + sum_k [c_k(t) O_k (+ h.c. for conjugate-pair terms)].

    ``static`` is an Operator or an array of shape (batch, d, d); coefficient
    functions may return scalars or arrays of shape (batch,).
    """

    def __init__(self, static, terms=(), space: HilbertSpec | None = None):
        if isinstance(static, Operator):
            space = static.space
            static = static.matrix
        if space is None:
            raise ValueError("space is required when static is a raw array")
        self.space = space
        self.static = np.asarray(static, dtype=complex)
        self.terms = list(terms)
        for term in self.terms:
            if term.operator.space != space:
                raise SpaceMismatchError("drive term lives on a different space")

    @classmethod
    def zero(cls, space: HilbertSpec) -> Hamiltonian:
        return cls(np.zeros((space.size, space.size)), space=space)

    def matrix(self, t):
        H = self.static
        for term in self.terms:
            c = np.asarray(term(t))[..., None, None]
            H = H + c * term.operator.matrix
            if getattr(term, "pair", True):
                H = H + np.conj(c) * term.operator.dag().matrix
        return H

    def at(self, t) -> Operator:
        return Operator(self.matrix(t), self.space)


def collapse_channels(T1: float, Tphi: float, kappa: float, N_q: int, N_r: int = 1,
                      thermal_nbar: float = 0.0) -> list[CollapseChannel]:
    """Relaxation b at 1/T1, dephasing b^dag b at 2/Tphi, resonator decay a at 2 pi kappa.

    ``math.inf`` disables a time; ``thermal_nbar`` > 0 adds excitation b^dag at nbar/T1.
    """
    if T1 < 0 or Tphi < 0 or kappa < 0:
        raise ValueError("coherence times and kappa must be non-negative")
    space = HilbertSpec((N_q,)) if N_r == 1 else HilbertSpec((N_q, N_r))
    b = embed(annihilation_op(N_q), space, 0)
    out = []
    if T1 > 0 and math.isfinite(T1):
        out.append(CollapseChannel(b, 1 / T1, "relaxation"))
        if thermal_nbar > 0:
            out.append(CollapseChannel(b.dag(), thermal_nbar / T1, "excitation"))
    if Tphi > 0 and math.isfinite(Tphi):
        out.append(CollapseChannel(embed(number_op(N_q), space, 0), 2 / Tphi, "dephasing"))
    if N_r > 1 and kappa > 0:
        out.append(CollapseChannel(embed(annihilation_op(N_r), space, 1),
                                   TWO_PI * kappa, "resonator"))
    return out


def thermal_nbar(f01: float, T: float) -> float:
    return bose_occupation(f01, T)


def lindblad_derivative(H: Operator, channels, rho: Operator) -> Operator:
    """-i 2 pi [H, rho] + sum_k rate_k D[L_k] rho, evaluated with plain matrix products."""
    if H.space != rho.space:
        raise SpaceMismatchError(f"{H.dims} vs {rho.dims}")
    h, r = H.matrix, rho.matrix
    out = -1j * TWO_PI * (h @ r - r @ h)
    for ch in channels:
        if ch.operator.space != rho.space:
            raise SpaceMismatchError("collapse operator on a different space")
        L = ch.operator.matrix
        LdL = L.conj().T @ L
        out = out + ch.rate * (L @ r @ L.conj().T - 0.5 * (LdL @ r + r @ LdL))
    return Operator(out, rho.space)


def _commutator_super(A):
    eye = np.eye(A.shape[-1])
    return -1j * TWO_PI * (np.kron(A, eye) - np.kron(eye, A.T))


def _static_super(H_static, channels):
    d = H_static.shape[-1]
    eye = np.eye(d)
    if H_static.ndim == 3:
        S = np.stack([_commutator_super(h) for h in H_static])
    else:
        S = _commutator_super(H_static)
    for ch in channels:
        L = ch.operator.matrix
        LdL = L.conj().T @ L
        S = S + ch.rate * (np.kron(L, L.conj()) - 0.5 * np.kron(LdL, eye)
                           - 0.5 * np.kron(eye, LdL.T))
    return S


def liouvillian(H: Operator, channels) -> np.ndarray:
    """Superoperator acting on the row-major flattened density matrix."""
    return _static_super(H.matrix, channels)


def steady_state(H, channels) -> np.ndarray:
    """Null vector of the Liouvillian, normalised to unit trace.

    ``H`` is an Operator or an array of Hamiltonians (batch, d, d); returns
    density matrices of matching shape.
    """
    Hm = H.matrix if isinstance(H, Operator) else np.asarray(H)
    batched = Hm.ndim == 3
    Hs = Hm if batched else Hm[None]
    d = Hs.shape[-1]
    out = np.empty(Hs.shape, dtype=complex)
    trace_row = np.eye(d).reshape(-1)
    for i, h in enumerate(Hs):
        L = _static_super(h, channels)
        # Replace one equation by the trace condition.
        A = L.copy()
        A[0, :] = trace_row
        rhs = np.zeros(d * d, dtype=complex)
        rhs[0] = 1.0
        v = np.linalg.solve(A, rhs)
        rho = v.reshape(d, d)
        out[i] = 0.5 * (rho + rho.conj().T)
    return out if batched else out[0]


@dataclass
class Trajectory:
    grid: TimeGrid
    space: HilbertSpec
    records: dict[str, np.ndarray]
    state_times: np.ndarray
    states: np.ndarray
    max_trace_correction: float = 0.0
    batched: bool = False
    meta: dict = field(default_factory=dict)

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    def state(self, i: int, batch_index: int | None = None) -> Operator:
        m = self.states[i]
        if self.batched:
            m = m[batch_index or 0]
        return Operator(m, self.space)

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def _population_maps(space: HilbertSpec):
    """Matrices mapping diag(rho) to qubit level populations and resonator number."""
    N_q = space.dims[0]
    N_r = space.dims[1] if len(space.dims) > 1 else 1
    levels = np.arange(space.size) // N_r
    P = np.zeros((space.size, N_q))
    P[np.arange(space.size), levels] = 1.0
    n_r = (np.arange(space.size) % N_r).astype(float) if N_r > 1 else None
    return P, n_r


def _make_records(space, diag):
    P, n_r = _population_maps(space)
    pops = diag @ P  # (..., N_q)
    rec = {"qubit_number": pops @ np.arange(P.shape[1], dtype=float)}
    for k in range(min(3, P.shape[1])):
        rec[f"P{k}"] = pops[..., k]
    if n_r is not None:
        rec["resonator_number"] = diag @ n_r
    return rec


def evolve(rho0, H: Hamiltonian | Operator, channels, grid: TimeGrid,
           save_every: int | None = 1, check_states: bool = False) -> Trajectory:
    """Integrate the master equation with fixed-step RK4.

    ``rho0`` is an Operator, or an array (batch, d, d) to integrate a batch
    of independent systems sharing the time grid. Records (level populations,
    qubit and resonator number) are kept at every step; full states only every
    ``save_every`` steps (``None`` keeps just the initial and final state).
    """
    if isinstance(H, Operator):
        H = Hamiltonian(H)
    space = H.space
    if isinstance(rho0, Operator):
        if rho0.space != space:
            raise SpaceMismatchError(f"{rho0.dims} vs {space.dims}")
        check_density_matrix(rho0)
        r0 = rho0.matrix[None]
        batched = False
    else:
        r0 = np.asarray(rho0, dtype=complex)
        batched = r0.ndim == 3
        if not batched:
            r0 = r0[None]
    for ch in channels:
        if ch.operator.space != space:
            raise SpaceMismatchError("collapse operator on a different space")

    d = space.size
    D = d * d
    S0 = _static_super(H.static, channels)
    term_supers = []
    for term in H.terms:
        Sk = _commutator_super(term.operator.matrix)
        Sk_dag = _commutator_super(term.operator.dag().matrix) if getattr(term, "pair", True) else None
        term_supers.append((term, Sk.T.copy(), None if Sk_dag is None else Sk_dag.T.copy()))

    n = grid.n_steps
    dt = grid.dt
    half_times = grid.t0 + 0.5 * dt * np.arange(2 * n + 1)

    # Determine batch size from every source that can carry one.
    B = r0.shape[0]
    if S0.ndim == 3:
        B = np.broadcast_shapes((B,), (S0.shape[0],))[0]
        batched = True
    for term, _, _ in term_supers:
        c = np.asarray(term(grid.t0))
        if c.ndim:
            B = np.broadcast_shapes((B,), c.shape)[0]
            batched = True
    v = np.broadcast_to(r0.reshape(r0.shape[0], D), (B, D)).copy()

    if S0.ndim == 3:
        S0T = np.transpose(S0, (0, 2, 1))

        def apply_static(x):
            return np.einsum("bj,bji->bi", x, S0T)
    else:
        S0T = S0.T.copy()

        def apply_static(x):
            return x @ S0T

    def rhs(x, coeffs):
        out = apply_static(x)
        for (term, SkT, SdT), c in zip(term_supers, coeffs):
            out += c[:, None] * (x @ SkT)
            if SdT is not None:
                out += np.conj(c)[:, None] * (x @ SdT)
        return out

    diag_idx = np.arange(d) * (d + 1)
    rec_diag = np.empty((n + 1, B, d))
    rec_diag[0] = v[:, diag_idx].real

    if save_every is None:
        save_idx = [0, n]
    else:
        save_idx = list(range(0, n + 1, save_every))
        if save_idx[-1] != n:
            save_idx.append(n)
    save_set = set(save_idx)
    states = [v.reshape(B, d, d).copy()]
    max_corr = 0.0

    for start in range(0, n, _CHUNK):
        stop = min(n, start + _CHUNK)
        ts = half_times[2 * start: 2 * stop + 1]
        coeff_tables = [_coefficient_table(term, ts, B) for term, _, _ in term_supers]
        for step in range(start, stop):
            j = 2 * (step - start)
            c1 = [tab[j] for tab in coeff_tables]
            c2 = [tab[j + 1] for tab in coeff_tables]
            c3 = [tab[j + 2] for tab in coeff_tables]
            k1 = rhs(v, c1)
            k2 = rhs(v + 0.5 * dt * k1, c2)
            k3 = rhs(v + 0.5 * dt * k2, c2)
            k4 = rhs(v + dt * k3, c3)
            v = v + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            tr = v[:, diag_idx].real.sum(axis=1)
            drift = np.abs(tr - 1.0).max()
            if not np.isfinite(drift) or drift > TRACE_FAIL or np.abs(v).max() > 1 + TRACE_FAIL:
                raise IntegrationError(
                    f"state left the physical region at t={grid.t0 + (step + 1) * dt:.4g} ns "
                    f"(trace drift {drift:.2e}); reduce dt below {dt}")
            max_corr = max(max_corr, drift)
            v = v / tr[:, None]
            rec_diag[step + 1] = v[:, diag_idx].real
            if step + 1 in save_set:
                states.append(v.reshape(B, d, d).copy())

    records = _make_records(space, rec_diag)
    states = np.stack(states)
    if not batched:
        records = {k: val[:, 0] for k, val in records.items()}
        states = states[:, 0]
    traj = Trajectory(grid=grid, space=space, records=records,
                      state_times=grid.times[save_idx], states=states,
                      max_trace_correction=float(max_corr), batched=batched)
    if check_states:
        for i in range(len(traj.state_times)):
            for b in range(B if batched else 1):
                check_density_matrix(traj.state(i, b))
    return traj


def _coefficient_table(term, ts, B):
    """Coefficient values at each time in ``ts`` as an array (len(ts), B)."""
    probe = np.asarray(term(ts[0]))
    if probe.ndim:
        c = np.asarray(term(ts[:, None]))
    else:
        c = np.asarray(term(ts))[:, None]
    return np.broadcast_to(c, (len(ts), B))
