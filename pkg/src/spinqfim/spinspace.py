"""Collective spin operators, coherent states and unitaries in the Dicke basis.

All vectors and matrices use the ordering m = +J, J-1, ..., -J with J = N/2,
so index 0 is the north pole |m=+J> and index N is |m=-J>.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

HERMITIAN_TOL = 1e-12
UNITARY_TOL = 1e-10
NORM_TOL = 1e-10

AXES = ("x", "y", "z")


def _frozen(a, dtype=complex):
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


def _check_n(n_spins):
    if int(n_spins) != n_spins or n_spins < 1:
        raise ValueError(f"n_spins must be a positive integer, got {n_spins!r}")
    return int(n_spins)


@dataclass(frozen=True, eq=False)
class CollectiveOperator:
    """Hermitian (N+1)x(N+1) matrix acting on the symmetric subspace."""

    n_spins: int
    matrix: np.ndarray

    def __post_init__(self):
        n = _check_n(self.n_spins)
        m = _frozen(self.matrix)
        if m.shape != (n + 1, n + 1):
            raise ValueError(f"expected shape {(n + 1, n + 1)}, got {m.shape}")
        if np.abs(m - m.conj().T).max(initial=0.0) > HERMITIAN_TOL * max(1.0, np.abs(m).max(initial=0.0)):
            raise ValueError("operator is not Hermitian")
        object.__setattr__(self, "matrix", m)

    def __matmul__(self, other):
        if isinstance(other, PureState):
            return self.matrix @ other.amplitudes
        if isinstance(other, CollectiveOperator):
            return self.matrix @ other.matrix
        return self.matrix @ other


@dataclass(frozen=True, eq=False)
class UnitaryOperator:
    n_spins: int
    matrix: np.ndarray

    def __post_init__(self):
        n = _check_n(self.n_spins)
        m = _frozen(self.matrix)
        if m.shape != (n + 1, n + 1):
            raise ValueError(f"expected shape {(n + 1, n + 1)}, got {m.shape}")
        if np.abs(m.conj().T @ m - np.eye(n + 1)).max() > UNITARY_TOL:
            raise ValueError("matrix is not unitary")
        object.__setattr__(self, "matrix", m)

    def apply(self, state: "PureState") -> "PureState":
        return PureState(self.n_spins, self.matrix @ state.amplitudes)

    @property
    def dagger(self) -> "UnitaryOperator":
        return UnitaryOperator(self.n_spins, self.matrix.conj().T)

    def __matmul__(self, other):
        if isinstance(other, UnitaryOperator):
            return UnitaryOperator(self.n_spins, self.matrix @ other.matrix)
        if isinstance(other, PureState):
            return self.apply(other)
        return self.matrix @ other


@dataclass(frozen=True, eq=False)
class PureState:
    """Normalized amplitude vector, index k <-> m = J - k."""

    n_spins: int
    amplitudes: np.ndarray

    def __post_init__(self):
        n = _check_n(self.n_spins)
        a = _frozen(self.amplitudes)
        if a.shape != (n + 1,):
            raise ValueError(f"expected {n + 1} amplitudes, got shape {a.shape}")
        if abs(np.vdot(a, a).real - 1.0) > NORM_TOL:
            raise ValueError("state is not normalized")
        object.__setattr__(self, "amplitudes", a)

    @classmethod
    def normalized(cls, n_spins, amplitudes):
        a = np.asarray(amplitudes, dtype=complex)
        return cls(n_spins, a / np.linalg.norm(a))

    @property
    def m_values(self):
        return magnetic_numbers(self.n_spins)

    def expect(self, op) -> complex:
        m = op.matrix if hasattr(op, "matrix") else op
        return np.vdot(self.amplitudes, m @ self.amplitudes)

    def overlap(self, other: "PureState") -> complex:
        """<self|other>."""
        return np.vdot(self.amplitudes, other.amplitudes)


def magnetic_numbers(n_spins):
    """m values in basis order: J, J-1, ..., -J."""
    n = _check_n(n_spins)
    return n / 2 - np.arange(n + 1)


def raising_matrix(n_spins):
    n = _check_n(n_spins)
    j = n / 2
    m = magnetic_numbers(n)
    jp = np.zeros((n + 1, n + 1))
    # <m+1|J+|m> sits one row above m in descending order
    lower = m[1:]
    jp[np.arange(n), np.arange(1, n + 1)] = np.sqrt(j * (j + 1) - lower * (lower + 1))
    return jp


def collective_operator(n_spins, axis) -> CollectiveOperator:
    """Spin-J matrix of J_x, J_y or J_z for N = n_spins particles."""
    n = _check_n(n_spins)
    if axis == "z":
        return CollectiveOperator(n, np.diag(magnetic_numbers(n)).astype(complex))
    jp = raising_matrix(n)
    if axis == "x":
        return CollectiveOperator(n, (jp + jp.T) / 2)
    if axis == "y":
        return CollectiveOperator(n, (jp - jp.T) / 2j)
    raise ValueError(f"axis must be one of {AXES}, got {axis!r}")


def collective_operators(n_spins):
    return tuple(collective_operator(n_spins, a) for a in AXES)


def coherent_state(n_spins, theta, phi) -> PureState:
    """Spin-coherent state |theta, phi>.

    theta is the polar angle from +z (theta = 0 gives |m=+J>); the amplitude
    on |m> carries the phase exp(+i (J - m) phi), so that <J> points along
    (theta, phi) with the standard J_y = (J+ - J-)/2i.
    """
    n = _check_n(n_spins)
    if not (0.0 <= theta <= np.pi):
        raise ValueError(f"theta must lie in [0, pi], got {theta}")
    if not (0.0 <= phi < 2 * np.pi):
        raise ValueError(f"phi must lie in [0, 2pi), got {phi}")
    k = np.arange(n + 1)  # k = J - m, number of down spins
    binom = np.array([comb(n, int(i)) for i in k], dtype=float)
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    amp = np.sqrt(binom) * c ** (n - k) * s**k * np.exp(1j * k * phi)
    return PureState.normalized(n, amp)


def hermitian_exp(matrix, scale):
    """exp(-i * scale * G) for Hermitian ``matrix`` G via eigh."""
    w, v = np.linalg.eigh(matrix)
    return (v * np.exp(-1j * scale * w)) @ v.conj().T


def unitary_from_generator(g: CollectiveOperator, scale) -> UnitaryOperator:
    if not isinstance(g, CollectiveOperator):
        m = np.asarray(g, dtype=complex)
        g = CollectiveOperator(m.shape[0] - 1, m)
    return UnitaryOperator(g.n_spins, hermitian_exp(g.matrix, float(scale)))
