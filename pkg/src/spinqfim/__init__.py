"""Multiphase (SU(2)) estimation with collective spin probes.

Dicke-basis operators, GHZ probes, phase encoding, quantum/classical Fisher
information, twisting-based squeezing with echo, per-particle dephasing and
the sweeps built on top of them.
"""
from .encoding import PhaseVector, generator_operators, hamiltonian, phase_unitary
from .fisher import (
    MixedState,
    Povm,
    QfimResult,
    SingularQfimError,
    cfim,
    d_matrix,
    dyz_analytic,
    qfim_mixed,
    qfim_pure,
    total_variance,
)
from .noise import CapacityError, NoiseConfig, dephasing_channel, noisy_estimation
from .probes import GhzSpec, ghz_state, multi_ghz_state, pm_distribution
from .spinspace import (
    CollectiveOperator,
    PureState,
    UnitaryOperator,
    coherent_state,
    collective_operator,
    collective_operators,
)
from .squeezing import SqueezeConfig, qfim_squeezed, squeezed_probe, squeezing_parameter

__version__ = "0.1.0"

__all__ = [
    "CapacityError",
    "CollectiveOperator",
    "GhzSpec",
    "MixedState",
    "NoiseConfig",
    "PhaseVector",
    "Povm",
    "PureState",
    "QfimResult",
    "SingularQfimError",
    "SqueezeConfig",
    "UnitaryOperator",
    "cfim",
    "coherent_state",
    "collective_operator",
    "collective_operators",
    "d_matrix",
    "dephasing_channel",
    "dyz_analytic",
    "generator_operators",
    "ghz_state",
    "hamiltonian",
    "multi_ghz_state",
    "noisy_estimation",
    "phase_unitary",
    "pm_distribution",
    "qfim_mixed",
    "qfim_pure",
    "qfim_squeezed",
    "squeezed_probe",
    "squeezing_parameter",
    "total_variance",
]
