"""Field Hamiltonian, phase-encoding unitary and the integrated generators A."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spinspace import (
    CollectiveOperator,
    UnitaryOperator,
    collective_operators,
    unitary_from_generator,
)

# covers near-degenerate eigenvalue pairs (gap < 1e-9) as well
SERIES_SWITCH = 1e-6
DEFAULT_PHI = 0.01


@dataclass(frozen=True)
class PhaseVector:
    phi_x: float
    phi_y: float
    phi_z: float

    def __post_init__(self):
        if not np.all(np.isfinite(self.as_array())):
            raise ValueError("phase components must be finite")

    @classmethod
    def uniform(cls, value=DEFAULT_PHI):
        return cls(value, value, value)

    @classmethod
    def zero(cls):
        return cls(0.0, 0.0, 0.0)

    @classmethod
    def coerce(cls, phi):
        if isinstance(phi, cls):
            return phi
        x, y, z = (float(v) for v in phi)
        return cls(x, y, z)

    def as_array(self):
        return np.array([self.phi_x, self.phi_y, self.phi_z], dtype=float)


@dataclass(frozen=True, eq=False)
class GeneratorSet:
    a_x: CollectiveOperator
    a_y: CollectiveOperator
    a_z: CollectiveOperator

    def __iter__(self):
        return iter((self.a_x, self.a_y, self.a_z))

    def matrices(self):
        return [a.matrix for a in self]


def phase_kernel(x):
    """f(x) = (exp(ix) - 1)/(ix), with f(0) = 1.

    Small arguments use the series 1 + ix/2 - x^2/6 to avoid cancellation.
    """
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < SERIES_SWITCH
    safe = np.where(small, 1.0, x)
    closed = np.expm1(1j * safe) / (1j * safe)
    series = 1 + 0.5j * x - x**2 / 6
    return np.where(small, series, closed)


def integrated_generators(h, ops):
    """A = int_0^1 exp(iuH) O exp(-iuH) du for each O in ``ops``.

    Works on plain Hermitian arrays of any dimension, so the same code serves
    the Dicke basis and the full product space.
    """
    w, v = np.linalg.eigh(h)
    gaps = w[:, None] - w[None, :]
    kernel = phase_kernel(gaps)
    out = []
    for op in ops:
        a = v @ ((v.conj().T @ op @ v) * kernel) @ v.conj().T
        out.append((a + a.conj().T) / 2)
    return out


def hamiltonian(phi, n_spins) -> CollectiveOperator:
    phi = PhaseVector.coerce(phi)
    jx, jy, jz = collective_operators(n_spins)
    h = phi.phi_x * jx.matrix + phi.phi_y * jy.matrix + phi.phi_z * jz.matrix
    return CollectiveOperator(n_spins, h)


def phase_unitary(phi, n_spins) -> UnitaryOperator:
    return unitary_from_generator(hamiltonian(phi, n_spins), 1.0)


def generator_operators(phi, n_spins) -> GeneratorSet:
    h = hamiltonian(phi, n_spins)
    js = [j.matrix for j in collective_operators(n_spins)]
    a = integrated_generators(h.matrix, js)
    return GeneratorSet(*(CollectiveOperator(n_spins, m) for m in a))
