"""Per-particle dephasing on the full 2^N product space and the noisy QFIM pipeline.

Qubit j is the j-th tensor factor (most significant bit first); bit value 0
is spin up, so the all-up product state is index 0, matching |m=+J>.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .encoding import PhaseVector, phase_kernel
from .fisher import MixedState, QfimResult, qfim_mixed
from .spinspace import PureState
from .squeezing import SqueezeConfig, squeezed_probe

EMBED_MAX_SPINS = 14
PIPELINE_MAX_SPINS = 10
EQUAL_WEIGHT = 2 / math.sqrt(3)

PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class CapacityError(ValueError):
    """Requested system is too large for a dense product-space simulation."""


@dataclass(frozen=True)
class NoiseConfig:
    epsilon: float = 0.0
    weights: tuple = (EQUAL_WEIGHT, EQUAL_WEIGHT, EQUAL_WEIGHT)

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"epsilon must lie in [0, 1], got {self.epsilon}")
        w = tuple(float(x) for x in self.weights)
        if len(w) != 3 or abs(sum(x * x for x in w) - 4) > 1e-9:
            raise ValueError("weights must satisfy ex^2 + ey^2 + ez^2 = 4 so that a^2 = I")
        object.__setattr__(self, "weights", w)

    def site_operator(self):
        """a = sum_mu e_mu sigma_mu / 2 on one qubit."""
        return sum(w * PAULI[ax] for w, ax in zip(self.weights, "xyz")) / 2


def _guard(n_spins, limit):
    if n_spins > limit:
        raise CapacityError(f"N = {n_spins} exceeds the dense product-space guard N <= {limit}")


@lru_cache(maxsize=None)
def _excitation_counts(n_spins):
    idx = np.arange(2**n_spins)
    return np.array([bin(i).count("1") for i in idx])


def embed_symmetric(state: PureState) -> np.ndarray:
    """Map a Dicke-basis state into the 2^N product basis."""
    n = state.n_spins
    _guard(n, EMBED_MAX_SPINS)
    downs = _excitation_counts(n)  # basis index k = number of down spins
    weights = np.array([math.comb(n, k) for k in range(n + 1)], dtype=float)
    return state.amplitudes[downs] / np.sqrt(weights[downs])


@lru_cache(maxsize=None)
def full_collective_operators(n_spins):
    """J_x, J_y, J_z as dense 2^N matrices (read-only)."""
    _guard(n_spins, PIPELINE_MAX_SPINS)
    dim = 2**n_spins
    out = []
    for ax in "xyz":
        total = np.zeros((dim, dim), dtype=complex)
        for j in range(n_spins):
            total += np.kron(np.kron(np.eye(2**j), PAULI[ax]), np.eye(2 ** (n_spins - j - 1)))
        total /= 2
        total.setflags(write=False)
        out.append(total)
    return tuple(out)


def _apply_site(rho, op, site, n_spins):
    """op_site rho op_site^dagger via tensor contraction."""
    t = rho.reshape((2,) * (2 * n_spins))
    t = np.moveaxis(np.tensordot(op, t, axes=([1], [site])), 0, site)
    t = np.moveaxis(np.tensordot(t, op.conj().T, axes=([n_spins + site], [0])), -1, n_spins + site)
    return t.reshape(rho.shape)


def dephasing_channel(rho, cfg: NoiseConfig, order=None) -> MixedState:
    """E_N(...E_1(rho)) with E_n(rho) = (1 - eps) rho + eps a_n rho a_n."""
    m = rho.matrix if isinstance(rho, MixedState) else np.asarray(rho, dtype=complex)
    n = int(round(math.log2(m.shape[0])))
    if 2**n != m.shape[0]:
        raise ValueError("density matrix dimension is not a power of two")
    _guard(n, PIPELINE_MAX_SPINS)
    eps = cfg.epsilon
    if eps == 0:
        return MixedState(m)
    a = cfg.site_operator()
    out = m.copy()
    for site in (range(n) if order is None else order):
        out = (1 - eps) * out + eps * _apply_site(out, a, site, n)
    return MixedState((out + out.conj().T) / 2)


def noisy_estimation(probe: PureState, cfg: SqueezeConfig, phi, noise: NoiseConfig) -> QfimResult:
    """Squeeze, embed, dephase, encode; QFIM from the mixed-state SLD.

    rho_out and its derivatives are represented in the eigenbasis of H(phi),
    where U(phi) is diagonal. The QFIM is invariant under this fixed change
    of basis.
    """
    n = probe.n_spins
    _guard(n, PIPELINE_MAX_SPINS)
    phi = PhaseVector.coerce(phi).as_array()
    vec = embed_symmetric(squeezed_probe(probe, cfg))
    rho = dephasing_channel(np.outer(vec, vec.conj()), noise).matrix
    js = full_collective_operators(n)
    h = phi[0] * js[0] + phi[1] * js[1] + phi[2] * js[2]
    w, v = np.linalg.eigh(h)
    vh = v.conj().T
    kernel = phase_kernel(w[:, None] - w[None, :])
    rho_t = vh @ rho @ v
    phase = np.exp(-1j * w)
    conj_phase = phase.conj()
    rho_out = phase[:, None] * rho_t * conj_phase[None, :]
    derivs = []
    for j in js:
        a = (vh @ j @ v) * kernel
        a = (a + a.conj().T) / 2
        comm = a @ rho_t - rho_t @ a
        derivs.append(-1j * phase[:, None] * comm * conj_phase[None, :])
    return qfim_mixed((rho_out + rho_out.conj().T) / 2, derivs)
