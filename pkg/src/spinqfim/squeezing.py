"""Twisting unitaries, the squeeze-encode-echo protocol and spin-squeezing parameters."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .encoding import PhaseVector, generator_operators, phase_unitary
from .fisher import QfimResult
from .spinspace import (
    CollectiveOperator,
    PureState,
    UnitaryOperator,
    collective_operators,
    unitary_from_generator,
)

KINDS = ("OAT", "TAT", "TNT")
DEFAULT_LAMBDA_RATIO = 0.02
MSD_TOL = 1e-9


class MsdUndefinedError(ArithmeticError):
    """Mean spin is (numerically) zero, so the mean-spin direction is undefined."""


@dataclass(frozen=True)
class SqueezeConfig:
    kind: str = "TAT"
    chi_t: float = 0.0
    lambda_ratio: float = DEFAULT_LAMBDA_RATIO
    echo_exponent: float = 1.0

    def __post_init__(self):
        kind = self.kind.upper()
        if kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if kind == "TNT" and not self.lambda_ratio > 0:
            raise ValueError("lambda_ratio must be positive for TNT")
        for name in ("chi_t", "echo_exponent"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    def with_chi_t(self, chi_t):
        return SqueezeConfig(self.kind, float(chi_t), self.lambda_ratio, self.echo_exponent)


def squeeze_generator(kind, n_spins, lambda_ratio=DEFAULT_LAMBDA_RATIO) -> CollectiveOperator:
    """G such that U_k = exp(-i chi_t G)."""
    jx, jy, _ = (j.matrix for j in collective_operators(n_spins))
    kind = kind.upper()
    if kind == "OAT":
        g = jx @ jx
    elif kind == "TAT":
        g = jx @ jx - jy @ jy
    elif kind == "TNT":
        # N/Lambda = 1/lambda_ratio
        g = jx @ jx - jy / lambda_ratio
    else:
        raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")
    return CollectiveOperator(n_spins, g)


def squeeze_unitary(cfg: SqueezeConfig, n_spins) -> UnitaryOperator:
    return unitary_from_generator(squeeze_generator(cfg.kind, n_spins, cfg.lambda_ratio), cfg.chi_t)


def echo_unitary(cfg: SqueezeConfig, n_spins) -> UnitaryOperator:
    """U_k^{-r}: same generator, exponent scaled by -r."""
    g = squeeze_generator(cfg.kind, n_spins, cfg.lambda_ratio)
    return unitary_from_generator(g, -cfg.echo_exponent * cfg.chi_t)


def squeezed_probe(probe: PureState, cfg: SqueezeConfig) -> PureState:
    return squeeze_unitary(cfg, probe.n_spins).apply(probe)


def echo_state(probe: PureState, cfg: SqueezeConfig, phi) -> PureState:
    n = probe.n_spins
    psi = squeeze_unitary(cfg, n).apply(probe)
    psi = phase_unitary(phi, n).apply(psi)
    return echo_unitary(cfg, n).apply(psi)


def qfim_squeezed(probe: PureState, cfg: SqueezeConfig, phi) -> QfimResult:
    """QFIM of the echo output U_k^{-r} U(phi) U_k |probe>.

    Uses the analytic derivatives -i U_k^{-r} U(phi) A_mu U_k |probe>, so the
    echo unitary genuinely enters the computation.
    """
    n = probe.n_spins
    phi = PhaseVector.coerce(phi)
    squeezed = squeeze_unitary(cfg, n).apply(probe).amplitudes
    outer = echo_unitary(cfg, n).matrix @ phase_unitary(phi, n).matrix
    final = outer @ squeezed
    derivs = [-1j * (outer @ (a @ squeezed)) for a in generator_operators(phi, n).matrices()]
    gram = np.array([[np.vdot(d1, d2) for d2 in derivs] for d1 in derivs])
    proj = np.array([np.vdot(d, final) for d in derivs])
    qfim = 4 * np.real(gram - np.outer(proj, proj.conj()))
    return QfimResult.build((qfim + qfim.T) / 2, np.imag(gram))


@dataclass(frozen=True)
class SqueezingReport:
    xi_h_sq: float
    xi_s_sq: float
    xi_r_sq: float
    msd_theta: float
    msd_phi: float
    msd_defined: bool = True


def _moments(state: PureState):
    psi = state.amplitudes
    js = [j.matrix for j in collective_operators(state.n_spins)]
    jv = [j @ psi for j in js]
    mean = np.array([np.vdot(psi, v).real for v in jv])
    second = np.array([[np.vdot(a, b).real for b in jv] for a in jv])  # Re<Ja Jb> = <{Ja,Jb}>/2
    return mean, second


def mean_spin_direction(mean):
    """(theta, phi) of the mean spin.

    Equal to the arccos recipe theta = acos(<Jz>/|J|), phi = acos(<Jx>/|J sin theta|)
    for <Jy> > 0 and 2 pi minus that otherwise, but evaluated with atan2, which
    keeps full precision near the poles and the x axis where acos loses half
    the digits.
    """
    norm = float(np.linalg.norm(mean))
    if norm < MSD_TOL:
        raise MsdUndefinedError(f"|<J>| = {norm:.3e} is below {MSD_TOL}")
    x, y, z = (float(v) for v in mean)
    rho = math.hypot(x, y)
    theta = math.atan2(rho, z)
    if rho < MSD_TOL:
        return theta, 0.0
    return theta, math.atan2(y, x) % (2 * math.pi)


def _xi_s(second, mean, n2, n3, n_spins, branch):
    a = n2 @ second @ n2
    b = n3 @ second @ n3
    cov = n2 @ second @ n3 - (n2 @ mean) * (n3 @ mean)
    root = math.sqrt((a - b) ** 2 + 4 * cov**2)
    sign = -1.0 if branch == "minus" else 1.0
    return 2.0 / n_spins * (a + b + sign * root)


def squeezing_parameter(state: PureState, branch: str = "minus", strict: bool = False) -> SqueezingReport:
    """Heisenberg, Kitagawa-Ueda and Wineland squeezing parameters.

    When the mean spin vanishes (GHZ-like states) the perpendicular plane is
    taken orthogonal to the largest-variance axis of the covariance matrix;
    xi_R^2 and xi_H^2 are then infinite and the MSD angles are NaN, unless
    ``strict`` is set, in which case MsdUndefinedError is raised.
    """
    if branch not in ("minus", "plus"):
        raise ValueError("branch must be 'minus' or 'plus'")
    n = state.n_spins
    mean, second = _moments(state)
    try:
        theta, phi = mean_spin_direction(mean)
    except MsdUndefinedError:
        if strict:
            raise
        cov = second - np.outer(mean, mean)
        _, vecs = np.linalg.eigh(cov)
        xi_s = _xi_s(second, mean, vecs[:, 0], vecs[:, 1], n, branch)
        return SqueezingReport(math.inf, xi_s, math.inf, math.nan, math.nan, False)
    n2 = np.array([-math.sin(phi), math.cos(phi), 0.0])
    n3 = np.array([math.cos(theta) * math.cos(phi), math.cos(theta) * math.sin(phi), -math.sin(theta)])
    xi_s = _xi_s(second, mean, n2, n3, n, branch)
    jn = float(np.linalg.norm(mean))
    xi_r = (n / (2 * jn)) ** 2 * xi_s
    var_n3 = n3 @ second @ n3 - (n3 @ mean) ** 2
    xi_h = n * var_n3 / jn**2
    return SqueezingReport(xi_h, xi_s, xi_r, theta, phi, True)


def to_decibel(xi_sq):
    return 10 * np.log10(xi_sq)
