"""Husimi maps, chi_t sweeps and optimization, size scans and the noise-correction ratio."""
from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from math import comb

import numpy as np

from .encoding import PhaseVector
from .fisher import qfim_pure
from .noise import PIPELINE_MAX_SPINS, CapacityError, NoiseConfig, noisy_estimation
from .probes import ghz_state, multi_ghz_state
from .spinspace import PureState
from .squeezing import (
    DEFAULT_LAMBDA_RATIO,
    SqueezeConfig,
    qfim_squeezed,
    squeezed_probe,
    squeezing_parameter,
)

GOLDEN_TOL = 1e-5
INV_PHI = (math.sqrt(5) - 1) / 2

DEFAULT_BRACKETS = {"OAT": (0.0, 3.0), "TAT": (0.0, 0.3), "TNT": (0.0, 3.0)}
DEFAULT_GRID_POINTS = 301


class OptimizationError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class HusimiGrid:
    theta_nodes: np.ndarray
    phi_nodes: np.ndarray
    values: np.ndarray  # shape (len(theta_nodes), len(phi_nodes))

    def peaks(self, rel_threshold=0.5):
        """Local maxima on the sphere with Q >= rel_threshold * max(Q).

        Rows at theta = 0 and theta = pi collapse to a single pole point.
        """
        q = self.values
        nt, nph = q.shape
        top = q.max()
        found = []
        for row, nb in ((0, 1), (nt - 1, nt - 2)):
            val = q[row].mean()
            if val >= rel_threshold * top and val >= q[nb].max():
                found.append((float(self.theta_nodes[row]), 0.0, float(val)))
        for i in range(1, nt - 1):
            for j in range(nph):
                v = q[i, j]
                if v < rel_threshold * top:
                    continue
                block = q[i - 1 : i + 2, [(j - 1) % nph, j, (j + 1) % nph]]
                if v >= block.max():
                    found.append((float(self.theta_nodes[i]), float(self.phi_nodes[j]), float(v)))
        return found


@dataclass(frozen=True, eq=False)
class SweepTable:
    axis_name: str
    axis_values: np.ndarray
    columns: dict

    def __post_init__(self):
        axis = np.asarray(self.axis_values, dtype=float)
        if axis.ndim != 1:
            raise ValueError("axis must be one-dimensional")
        if np.any(np.diff(axis) <= 0):
            raise ValueError("axis values must be strictly increasing")
        cols = {}
        for name, col in self.columns.items():
            col = np.asarray(col, dtype=float)
            if col.shape != axis.shape:
                raise ValueError(f"column {name!r} has length {col.shape}, axis has {axis.shape}")
            cols[name] = col
        object.__setattr__(self, "axis_values", axis)
        object.__setattr__(self, "columns", cols)

    def __getitem__(self, name):
        if name == self.axis_name:
            return self.axis_values
        return self.columns[name]


@dataclass(frozen=True)
class FluctuationResult:
    delta_sq: float
    theta_bar: float
    phi_bar: float


def _parallel_map(fn, items, workers=1):
    items = list(items)
    if workers is None or workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _husimi_values(state: PureState, theta, phi):
    n = state.n_spins
    k = np.arange(n + 1)
    root_binom = np.sqrt([float(comb(n, int(i))) for i in k])
    c = np.cos(theta / 2)[:, None]
    s = np.sin(theta / 2)[:, None]
    radial = root_binom * c ** (n - k) * s**k
    phases = np.exp(1j * np.outer(k, phi))
    amp = (radial * np.conj(state.amplitudes)) @ phases
    return np.abs(amp) ** 2


def husimi_grid(state: PureState, n_theta=91, n_phi=180) -> HusimiGrid:
    """Q(theta, phi) = |<state|theta, phi>|^2, theta in [0, pi], phi in [0, 2pi)."""
    if n_theta < 2 or n_phi < 2:
        raise ValueError("need at least two nodes per angle")
    theta = np.linspace(0.0, math.pi, n_theta)
    phi = 2 * math.pi * np.arange(n_phi) / n_phi
    return HusimiGrid(theta, phi, _husimi_values(state, theta, phi))


def spin_fluctuation(state: PureState, n_theta=180, n_phi=360, jacobian=False) -> FluctuationResult:
    """Midpoint-rule Delta^2 = iint Q (theta - theta_bar)^2 (phi - phi_bar)^2 dtheta dphi.

    The default uses the flat measure dtheta dphi; ``jacobian=True`` weights
    by sin(theta) instead.
    """
    dth = math.pi / n_theta
    dph = 2 * math.pi / n_phi
    theta = (np.arange(n_theta) + 0.5) * dth
    phi = (np.arange(n_phi) + 0.5) * dph
    q = _husimi_values(state, theta, phi)
    w = q * np.sin(theta)[:, None] if jacobian else q
    p = w / w.sum()
    th_bar = float(np.sum(p * theta[:, None]))
    ph_bar = float(np.sum(p * phi[None, :]))
    spread = (theta[:, None] - th_bar) ** 2 * (phi[None, :] - ph_bar) ** 2
    delta = float(np.sum(w * spread) * dth * dph)
    return FluctuationResult(delta, th_bar, ph_bar)


def scan_chi_t(
    probe: PureState,
    kind: str,
    chi_t_grid: Sequence[float],
    phi,
    lambda_ratio=DEFAULT_LAMBDA_RATIO,
    echo_exponent=1.0,
    workers=1,
) -> SweepTable:
    phi = PhaseVector.coerce(phi)

    def point(c):
        cfg = SqueezeConfig(kind, float(c), lambda_ratio, echo_exponent)
        res = qfim_squeezed(probe, cfg, phi)
        xi = squeezing_parameter(squeezed_probe(probe, cfg))
        return res.total_variance, res.d_norm, xi.xi_s_sq

    rows = np.array(_parallel_map(point, chi_t_grid, workers), dtype=float).reshape(-1, 3)
    return SweepTable(
        "chi_t",
        np.asarray(chi_t_grid, dtype=float),
        {"total_variance": rows[:, 0], "d_norm": rows[:, 1], "xi_s_sq": rows[:, 2]},
    )


def golden_section_min(f, a, b, tol=GOLDEN_TOL):
    """Minimize a unimodal ``f`` on [a, b]; returns (x, f(x)) with |bracket| <= tol."""
    a, b = min(a, b), max(a, b)
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    x = (a + b) / 2
    return x, f(x)


def squeezed_variance(probe, kind, phi, lambda_ratio=DEFAULT_LAMBDA_RATIO, echo_exponent=1.0):
    phi = PhaseVector.coerce(phi)

    def objective(chi_t):
        cfg = SqueezeConfig(kind, float(chi_t), lambda_ratio, echo_exponent)
        return qfim_squeezed(probe, cfg, phi).total_variance

    return objective


def optimize_chi_t(
    probe: PureState | None,
    kind: str,
    bracket=None,
    phi=None,
    coarse_points=DEFAULT_GRID_POINTS,
    objective: Callable[[float], float] | None = None,
    lambda_ratio=DEFAULT_LAMBDA_RATIO,
    tol=GOLDEN_TOL,
):
    """Coarse grid scan followed by golden-section refinement.

    ``objective`` replaces the squeezed total variance (used for testing and
    for the noisy pipeline). Returns (chi_t_opt, variance_opt).
    """
    lo, hi = bracket if bracket is not None else DEFAULT_BRACKETS[kind.upper()]
    if not lo < hi:
        raise ValueError("bracket must satisfy lo < hi")
    if coarse_points < 8:
        raise ValueError("coarse_points must be at least 8")
    if objective is None:
        objective = squeezed_variance(probe, kind, phi if phi is not None else PhaseVector.uniform(), lambda_ratio)
    grid = np.linspace(lo, hi, coarse_points)
    values = np.array([objective(c) for c in grid], dtype=float)
    finite = np.isfinite(values)
    if not finite.any():
        raise OptimizationError(f"no finite objective value on [{lo}, {hi}]")
    best = int(np.argmin(np.where(finite, values, np.inf)))
    left = grid[max(best - 1, 0)]
    right = grid[min(best + 1, coarse_points - 1)]
    x, fx = golden_section_min(objective, left, right, tol)
    if not (fx <= values[best]):
        return float(grid[best]), float(values[best])
    return float(x), float(fx)


def noisy_variance(probe, kind, phi, noise: NoiseConfig, lambda_ratio=DEFAULT_LAMBDA_RATIO):
    phi = PhaseVector.coerce(phi)

    def objective(chi_t):
        cfg = SqueezeConfig(kind, float(chi_t), lambda_ratio)
        return noisy_estimation(probe, cfg, phi, noise).total_variance

    return objective


def ratio_percent(var_wo, var_w):
    """(wo - w)/(wo + w) * 100, with two singular branches counting as equal."""
    if math.isinf(var_wo) and math.isinf(var_w):
        return 0.0
    if math.isinf(var_wo):
        return 100.0
    return (var_wo - var_w) / (var_wo + var_w) * 100.0


def correction_ratio(
    probe: PureState,
    kind: str,
    phi,
    noise_grid: Sequence[float],
    bracket=None,
    coarse_points=41,
    weights=None,
    lambda_ratio=DEFAULT_LAMBDA_RATIO,
    workers=1,
) -> SweepTable:
    """Noise sweep with chi_t fixed at its noiseless optimum versus re-optimized.

    The re-optimized branch also considers the fixed optimum, so it can
    never be worse than the uncorrected one.
    """
    if probe.n_spins > PIPELINE_MAX_SPINS:
        raise CapacityError(f"N = {probe.n_spins} exceeds the noise pipeline guard N <= {PIPELINE_MAX_SPINS}")
    extra = {} if weights is None else {"weights": tuple(weights)}

    def noise(eps):
        return NoiseConfig(float(eps), **extra)

    chi0, _ = optimize_chi_t(
        probe, kind, bracket, coarse_points=coarse_points,
        objective=noisy_variance(probe, kind, phi, noise(0.0), lambda_ratio),
    )

    def point(eps):
        objective = noisy_variance(probe, kind, phi, noise(eps), lambda_ratio)
        var_wo = objective(chi0)
        try:
            chi_w, var_w = optimize_chi_t(probe, kind, bracket, coarse_points=coarse_points, objective=objective)
        except OptimizationError:
            chi_w, var_w = chi0, math.inf
        if not var_w < var_wo:
            chi_w, var_w = chi0, var_wo
        return chi_w, var_wo, var_w, ratio_percent(var_wo, var_w)

    rows = np.array(_parallel_map(point, noise_grid, workers), dtype=float).reshape(-1, 4)
    return SweepTable(
        "epsilon",
        np.asarray(noise_grid, dtype=float),
        {
            "chi_t_fixed": np.full(len(rows), chi0),
            "chi_t_corrected": rows[:, 0],
            "variance_without": rows[:, 1],
            "variance_with": rows[:, 2],
            "ratio_percent": rows[:, 3],
        },
    )


def probe_builder(name: str, phi=None, lambda_ratio=DEFAULT_LAMBDA_RATIO, coarse_points=DEFAULT_GRID_POINTS):
    """Return a callable N -> PureState for a named probe recipe.

    Recipes: ``multi``, ``ghz-x``, ``ghz-y``, ``ghz-z`` and ``oat-opt``,
    ``tat-opt``, ``tnt-opt`` (z-GHZ squeezed at its optimal chi_t).
    """
    phi = PhaseVector.coerce(phi) if phi is not None else PhaseVector.uniform()
    if name == "multi":
        return multi_ghz_state
    if name.startswith("ghz-"):
        axis = name[-1]
        return lambda n: ghz_state(n, axis)
    if name.endswith("-opt"):
        kind = name[:-4].upper()

        def build(n):
            base = ghz_state(n, "z")
            chi, _ = optimize_chi_t(base, kind, phi=phi, coarse_points=coarse_points, lambda_ratio=lambda_ratio)
            return squeezed_probe(base, SqueezeConfig(kind, chi, lambda_ratio))

        return build
    raise ValueError(f"unknown probe recipe {name!r}")


def scan_system_size(builder, n_values, phi, quantity="d_norm", workers=1) -> SweepTable:
    """Per-N d_norm or total variance, with 1/N and 1/N^2 guide lines.

    The guide constants are fixed by the first data point.
    """
    if quantity not in ("d_norm", "total_variance"):
        raise ValueError("quantity must be 'd_norm' or 'total_variance'")
    if isinstance(builder, str):
        builder = probe_builder(builder, phi)
    phi = PhaseVector.coerce(phi)
    ns = np.asarray(n_values, dtype=int)

    def point(n):
        res = qfim_pure(builder(int(n)), phi)
        return getattr(res, quantity)

    vals = np.array(_parallel_map(point, ns, workers), dtype=float)
    n0, v0 = float(ns[0]), float(vals[0])
    return SweepTable(
        "n",
        ns.astype(float),
        {quantity: vals, "sql": v0 * n0 / ns, "hl": v0 * n0**2 / ns.astype(float) ** 2},
    )


def loglog_slope(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])
