"""GHZ and multi-GHZ probe states."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spinspace import AXES, PureState, collective_operator, hermitian_exp, _check_n


@dataclass(frozen=True)
class GhzSpec:
    n_spins: int
    axis: str = "z"

    def __post_init__(self):
        _check_n(self.n_spins)
        if self.axis not in AXES:
            raise ValueError(f"axis must be one of {AXES}, got {self.axis!r}")


def _ghz_z_amplitudes(n):
    a = np.zeros(n + 1, dtype=complex)
    a[0] = a[-1] = 1 / np.sqrt(2)
    return a


def ghz_state(spec: GhzSpec | int, axis: str | None = None) -> PureState:
    """(|lambda_max> + |lambda_min>)/sqrt(2) of J_axis.

    The x and y versions are exact rotations of the z one:
    psi_x = exp(-i pi/2 J_y) psi_z and psi_y = exp(+i pi/2 J_x) psi_z.
    Raw eigensolver output has arbitrary phases, which would change the
    interference pattern of the multi-GHZ sum.
    """
    if not isinstance(spec, GhzSpec):
        spec = GhzSpec(spec, axis or "z")
    n = spec.n_spins
    psi_z = _ghz_z_amplitudes(n)
    if spec.axis == "z":
        return PureState(n, psi_z)
    if spec.axis == "x":
        rot = hermitian_exp(collective_operator(n, "y").matrix, np.pi / 2)
    else:
        rot = hermitian_exp(collective_operator(n, "x").matrix, -np.pi / 2)
    return PureState.normalized(n, rot @ psi_z)


def multi_ghz_state(n_spins) -> PureState:
    """Normalized psi_x + psi_y + psi_z; the norm is taken numerically."""
    n = _check_n(n_spins)
    total = sum(ghz_state(GhzSpec(n, ax)).amplitudes for ax in AXES)
    return PureState.normalized(n, total)


def pm_distribution(state: PureState) -> np.ndarray:
    """P(m) = |<m|state>|^2 in basis order (m = +J first)."""
    return np.abs(state.amplitudes) ** 2
