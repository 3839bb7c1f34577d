"""Truncated bosonic operators on a (qubit, resonator) tensor-product space.

Everything is dense: the largest space used anywhere is a few tens of levels.
Subsystem order is fixed as qubit first, resonator second.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

HERMITIAN_RTOL = 1e-12
TRACE_ATOL = 1e-9
PSD_FLOOR = -1e-9


class InvalidDimensionError(ValueError):
    pass


class SpaceMismatchError(ValueError):
    pass


class InvalidStateError(ValueError):
    pass


@dataclass(frozen=True)
class HilbertSpec:
    dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if not dims or any(d < 2 for d in dims):
            raise InvalidDimensionError(f"every subsystem needs >= 2 levels, got {dims}")
        object.__setattr__(self, "dims", dims)

    @property
    def size(self) -> int:
        return int(np.prod(self.dims))

    def __add__(self, other: HilbertSpec) -> HilbertSpec:
        return HilbertSpec(self.dims + other.dims)


class Operator:
    """A dense square matrix tagged with the subsystem dimensions it acts on."""

    __array_priority__ = 100

    def __init__(self, matrix, space: HilbertSpec | tuple[int, ...] | int):
        if isinstance(space, int):
            space = HilbertSpec((space,))
        elif not isinstance(space, HilbertSpec):
            space = HilbertSpec(tuple(space))
        m = np.array(matrix, dtype=complex)
        if m.shape != (space.size, space.size):
            raise InvalidDimensionError(
                f"matrix shape {m.shape} does not match space {space.dims}")
        m.flags.writeable = False
        self.matrix = m
        self.space = space

    @property
    def dims(self):
        return self.space.dims

    def dag(self) -> Operator:
        return Operator(self.matrix.conj().T, self.space)

    def _check(self, other: Operator):
        if other.space != self.space:
            raise SpaceMismatchError(f"{self.dims} vs {other.dims}")

    def __matmul__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.matrix @ other.matrix, self.space)
        return NotImplemented

    def __add__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.matrix + other.matrix, self.space)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.matrix - other.matrix, self.space)
        return NotImplemented

    def __neg__(self):
        return Operator(-self.matrix, self.space)

    def __mul__(self, scalar):
        if np.isscalar(scalar):
            return Operator(scalar * self.matrix, self.space)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return Operator(self.matrix / scalar, self.space)

    def __eq__(self, other):
        return (isinstance(other, Operator) and other.space == self.space
                and np.array_equal(self.matrix, other.matrix))

    __hash__ = None

    def __repr__(self):
        return f"Operator(dims={self.dims},\n{self.matrix!r})"

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def is_hermitian(self, rtol: float = HERMITIAN_RTOL) -> bool:
        scale = max(np.abs(self.matrix).max(), 1.0)
        return bool(np.abs(self.matrix - self.matrix.conj().T).max() <= rtol * scale)


def _check_dim(dim):
    if int(dim) != dim or dim < 2:
        raise InvalidDimensionError(f"need at least 2 levels, got {dim}")
    return int(dim)


def annihilation_op(dim: int) -> Operator:
    dim = _check_dim(dim)
    return Operator(np.diag(np.sqrt(np.arange(1, dim)), k=1), dim)


def creation_op(dim: int) -> Operator:
    return annihilation_op(dim).dag()


def number_op(dim: int) -> Operator:
    dim = _check_dim(dim)
    return Operator(np.diag(np.arange(dim, dtype=float)), dim)


def identity(dim: int) -> Operator:
    dim = _check_dim(dim)
    return Operator(np.eye(dim), dim)


def basis_projector(dim: int, n: int) -> Operator:
    dim = _check_dim(dim)
    m = np.zeros((dim, dim))
    m[n, n] = 1.0
    return Operator(m, dim)


def tensor_product(*ops: Operator) -> Operator:
    """Kronecker product; the result's dims are the concatenation of the inputs'."""
    if not ops:
        raise ValueError("tensor_product needs at least one operator")
    return reduce(lambda a, b: Operator(np.kron(a.matrix, b.matrix), a.space + b.space), ops)


def embed(op: Operator, space: HilbertSpec, index: int) -> Operator:
    """Lift a single-subsystem operator into ``space`` at position ``index``."""
    if op.dims != (space.dims[index],):
        raise SpaceMismatchError(f"{op.dims} cannot sit at slot {index} of {space.dims}")
    factors = [identity(d) for d in space.dims]
    factors[index] = op
    return tensor_product(*factors)


def ket_dm(space: HilbertSpec, levels) -> Operator:
    """Pure-state density matrix for the product basis state ``levels``."""
    levels = tuple(np.atleast_1d(levels))
    idx = np.ravel_multi_index(levels, space.dims)
    m = np.zeros((space.size, space.size))
    m[idx, idx] = 1.0
    return Operator(m, space)


def check_density_matrix(rho: Operator, trace_atol: float = TRACE_ATOL,
                         psd_floor: float = PSD_FLOOR):
    """Raise InvalidStateError unless ``rho`` is Hermitian, unit-trace and PSD."""
    m = rho.matrix
    if not rho.is_hermitian(1e-10):
        raise InvalidStateError("density matrix is not Hermitian")
    tr = np.trace(m).real
    if abs(tr - 1.0) >= trace_atol:
        raise InvalidStateError(f"trace {tr!r} differs from 1")
    lo = np.linalg.eigvalsh(0.5 * (m + m.conj().T)).min()
    if lo < psd_floor:
        raise InvalidStateError(f"negative eigenvalue {lo:.3e}")


def expectation(rho: Operator, obs: Operator):
    """tr(rho obs). Hermitian observables return a float."""
    rho._check(obs)
    val = np.trace(rho.matrix @ obs.matrix)
    if obs.is_hermitian():
        if abs(val.imag) >= 1e-10:
            raise InvalidStateError(
                f"imaginary residue {val.imag:.3e} for a Hermitian observable")
        return float(val.real)
    return complex(val)
