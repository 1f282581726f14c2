"""Quantum and classical Fisher information matrices and the D incompatibility matrix."""
from __future__ import annotations

import math
import warnings
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .encoding import PhaseVector, generator_operators, hamiltonian
from .spinspace import PureState, hermitian_exp

CONDITION_LIMIT = 1e12
EIGEN_FLOOR = 1e-12
P_FLOOR = 1e-12


class SingularQfimError(ArithmeticError):
    """QFIM too ill-conditioned to invert; carries the smallest eigenvalue."""

    def __init__(self, smallest_eigenvalue, condition):
        self.smallest_eigenvalue = smallest_eigenvalue
        self.condition = condition
        super().__init__(
            f"QFIM is singular (smallest eigenvalue {smallest_eigenvalue:.3e}, condition {condition:.3e})"
        )


class DegenerateMeasurementError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class QfimResult:
    qfim: np.ndarray
    d_matrix: np.ndarray
    d_norm: float
    total_variance: float
    singular: bool = False
    smallest_eigenvalue: float = field(default=math.nan)

    @classmethod
    def build(cls, qfim, d_matrix):
        qfim = np.array(qfim, dtype=float)
        d_matrix = np.array(d_matrix, dtype=float)
        for a in (qfim, d_matrix):
            a.setflags(write=False)
        d_norm = float(np.sqrt(np.sum(d_matrix**2)))
        try:
            tv = total_variance(qfim)
        except SingularQfimError as err:
            return cls(qfim, d_matrix, d_norm, math.inf, True, err.smallest_eigenvalue)
        return cls(qfim, d_matrix, d_norm, tv, False, float(np.linalg.eigvalsh(qfim)[0]))


@dataclass(frozen=True, eq=False)
class MixedState:
    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("density matrix must be square")
        if np.abs(m - m.conj().T).max() > 1e-10:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(m).real - 1) > 1e-9:
            raise ValueError(f"density matrix trace is {np.trace(m).real}, expected 1")
        if np.linalg.eigvalsh(m)[0] < -1e-9:
            raise ValueError("density matrix has negative eigenvalues")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self):
        return self.matrix.shape[0]

    @classmethod
    def from_vector(cls, psi):
        psi = getattr(psi, "amplitudes", psi)
        return cls(np.outer(psi, np.conj(psi)))


@dataclass(frozen=True, eq=False)
class Povm:
    effects: tuple

    def __post_init__(self):
        effects = tuple(np.array(e, dtype=complex) for e in self.effects)
        if not effects:
            raise ValueError("POVM needs at least one effect")
        dim = effects[0].shape[0]
        for e in effects:
            if e.shape != (dim, dim) or np.abs(e - e.conj().T).max() > 1e-10:
                raise ValueError("POVM effects must be Hermitian and of equal size")
            if np.linalg.eigvalsh(e)[0] < -1e-10:
                raise ValueError("POVM effect is not positive semidefinite")
        if np.abs(sum(effects) - np.eye(dim)).max() > 1e-9:
            raise ValueError("POVM effects do not sum to the identity")
        object.__setattr__(self, "effects", effects)

    @classmethod
    def projective(cls, vectors):
        """Rank-one projectors onto ``vectors`` plus the complement."""
        vecs = [np.asarray(getattr(v, "amplitudes", v), dtype=complex) for v in vectors]
        effects = [np.outer(v, v.conj()) for v in vecs]
        rest = np.eye(len(vecs[0])) - sum(effects)
        if np.abs(rest).max() > 1e-12:
            rest = (rest + rest.conj().T) / 2
            effects.append(rest)
        return cls(tuple(effects))


def _gram(psi, ops):
    av = [a @ psi for a in ops]
    mean = np.array([np.vdot(psi, x) for x in av])
    gram = np.array([[np.vdot(x, y) for y in av] for x in av])
    return gram, mean


def qfim_from_generators(psi, ops) -> QfimResult:
    """QFIM and D of a pure state whose phase derivatives are -i U A_mu |psi>."""
    gram, mean = _gram(np.asarray(psi), ops)
    qfim = 4 * np.real(gram - np.outer(mean, mean))
    return QfimResult.build((qfim + qfim.T) / 2, np.imag(gram))


def qfim_pure(probe: PureState, phi) -> QfimResult:
    """4 Re[<A_mu A_nu> - <A_mu><A_nu>] with A from generator_operators."""
    a = generator_operators(PhaseVector.coerce(phi), probe.n_spins)
    return qfim_from_generators(probe.amplitudes, a.matrices())


def d_matrix(probe: PureState, phi):
    """Im <A_mu A_nu> and its Frobenius norm."""
    res = qfim_pure(probe, phi)
    return res.d_matrix, res.d_norm


def dyz_analytic(probe: PureState) -> float:
    """Boundary-term closed form for D_yz at phi = 0.

    (J/2) Im[<-J+1|psi>* <-J|psi> - <J-1|psi>* <J|psi>] sqrt(J(J+1) - J(J-1)).
    Only the four extremal amplitudes enter.
    """
    a = probe.amplitudes
    j = probe.n_spins / 2
    bracket = np.conj(a[-2]) * a[-1] - np.conj(a[1]) * a[0]
    return float(j / 2 * bracket.imag * np.sqrt(j * (j + 1) - j * (j - 1)))


def total_variance(qfim) -> float:
    """Tr[I^-1] via a Cholesky solve, guarded by the condition number."""
    q = np.asarray(qfim, dtype=float)
    q = (q + q.T) / 2
    w = np.linalg.eigvalsh(q)
    top = max(abs(w[-1]), abs(w[0]))
    cond = math.inf if w[0] <= 0 else top / w[0]
    if top == 0 or cond > CONDITION_LIMIT:
        raise SingularQfimError(float(w[0]), cond)
    inv = linalg.cho_solve(linalg.cho_factor(q), np.eye(len(q)))
    return float(np.trace(inv))


def encoded_state(probe: PureState, phi):
    """rho_out = U(phi)|psi><psi|U(phi)^dagger and its three derivatives."""
    phi = PhaseVector.coerce(phi)
    h = hamiltonian(phi, probe.n_spins).matrix
    u = hermitian_exp(h, 1.0)
    a = generator_operators(phi, probe.n_spins).matrices()
    return encoded_density(np.outer(probe.amplitudes, probe.amplitudes.conj()), h, a, u)


def encoded_density(rho_prime, h, a_ops, u=None):
    """rho_out and d rho_out = -i U [A_mu, rho'] U^dagger for a pre-encoding state."""
    if u is None:
        u = hermitian_exp(h, 1.0)
    ud = u.conj().T
    rho_out = u @ rho_prime @ ud
    rho_out = (rho_out + rho_out.conj().T) / 2
    derivs = []
    for a in a_ops:
        d = -1j * u @ (a @ rho_prime - rho_prime @ a) @ ud
        derivs.append((d + d.conj().T) / 2)
    return rho_out, derivs


def cfim(
    probe_out,
    povm: Povm,
    phi,
    derivative_supplier: Callable[[PhaseVector], Sequence[np.ndarray]] | Sequence[np.ndarray],
    p_floor: float = P_FLOOR,
) -> np.ndarray:
    """Classical Fisher information of ``povm`` on the encoded state.

    ``probe_out`` is the encoded state (vector, PureState or MixedState);
    ``derivative_supplier`` gives the three density-matrix derivatives at
    ``phi``, either directly or as a callable taking the phase vector.
    """
    if isinstance(probe_out, MixedState):
        rho = probe_out.matrix
    else:
        psi = np.asarray(getattr(probe_out, "amplitudes", probe_out), dtype=complex)
        rho = np.outer(psi, psi.conj())
    if callable(derivative_supplier):
        derivs = derivative_supplier(PhaseVector.coerce(phi))
    else:
        derivs = derivative_supplier
    probs = np.array([np.trace(e @ rho).real for e in povm.effects])
    if abs(probs.sum() - 1) > 1e-9:
        raise ValueError(f"outcome probabilities sum to {probs.sum()}")
    dprobs = np.array([[np.trace(e @ d).real for d in derivs] for e in povm.effects])
    keep = probs > p_floor
    if not keep.any():
        raise DegenerateMeasurementError("every outcome probability is below the floor")
    dropped = dprobs[~keep]
    if dropped.size and np.abs(dropped).max() > np.sqrt(p_floor):
        warnings.warn("outcome with vanishing probability has non-vanishing derivative; "
                      "Fisher information may diverge", RuntimeWarning, stacklevel=2)
    g = dprobs[keep]
    f = (g / probs[keep, None]).T @ g
    return (f + f.T) / 2


def sld(rho, derivs, eigen_floor=EIGEN_FLOOR):
    """Symmetric logarithmic derivatives, solved in the eigenbasis of ``rho``.

    Returns (eigenvalues, eigenvectors, SLDs in the eigenbasis).
    """
    p, v = np.linalg.eigh(rho)
    s = p[:, None] + p[None, :]
    support = s > eigen_floor
    denom = np.where(support, s, 1.0)
    ls = []
    for d in derivs:
        d = np.asarray(d, dtype=complex)
        if np.abs(d - d.conj().T).max() > 1e-10 * max(1.0, np.abs(d).max()):
            raise ValueError("derivative of the density matrix must be Hermitian")
        dd = v.conj().T @ d @ v
        ls.append(np.where(support, 2 * dd / denom, 0.0))
    return p, v, ls


def qfim_mixed(rho_out: MixedState, derivatives, eigen_floor=EIGEN_FLOOR) -> QfimResult:
    """Re Tr[rho L_mu L_nu] with the SLDs restricted to the support of rho."""
    rho = rho_out.matrix if isinstance(rho_out, MixedState) else np.asarray(rho_out)
    p, _, ls = sld(rho, derivatives, eigen_floor)
    k = len(ls)
    q = np.empty((k, k))
    for i in range(k):
        for j in range(i, k):
            # Tr[diag(p) Li Lj] without forming the product
            val = np.real(np.einsum("a,ab,ba->", p, ls[i], ls[j]))
            q[i, j] = q[j, i] = val
    return QfimResult.build(q, np.zeros((k, k)))


def sld_operators(rho, derivatives, eigen_floor=EIGEN_FLOOR):
    """SLDs transformed back to the input basis."""
    _, v, ls = sld(rho, derivatives, eigen_floor)
    return [v @ l @ v.conj().T for l in ls]


__all__ = [
    "CONDITION_LIMIT",
    "DegenerateMeasurementError",
    "MixedState",
    "Povm",
    "QfimResult",
    "SingularQfimError",
    "cfim",
    "d_matrix",
    "dyz_analytic",
    "encoded_density",
    "encoded_state",
    "qfim_from_generators",
    "qfim_mixed",
    "qfim_pure",
    "sld_operators",
    "total_variance",
]
