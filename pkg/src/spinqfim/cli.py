"""Command-line entry point: single evaluations and sweeps written as CSV or JSON.

Every output starts with a metadata block that records all parameters and a
canonical command line reproducing the file byte for byte.
"""
from __future__ import annotations

import argparse
import json
import math
import shlex
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .analysis import (
    DEFAULT_BRACKETS,
    _parallel_map,
    correction_ratio,
    husimi_grid,
    optimize_chi_t,
    probe_builder,
    scan_chi_t,
    scan_system_size,
)
from .encoding import DEFAULT_PHI, PhaseVector
from .fisher import qfim_pure
from .noise import EQUAL_WEIGHT, PIPELINE_MAX_SPINS
from .probes import pm_distribution
from .spinspace import magnetic_numbers
from .squeezing import DEFAULT_LAMBDA_RATIO, SqueezeConfig, qfim_squeezed, squeezed_probe

PROG = "spinqfim"
COMMANDS = ("qfim", "dnorm-scan", "squeeze-scan", "optimize", "noise-scan", "husimi", "pm-dist", "size-scan")
BASE_PROBES = ("multi", "ghz-x", "ghz-y", "ghz-z")
OPT_PROBES = ("oat-opt", "tat-opt", "tnt-opt")
MAX_SPINS = 1000
DETERMINISM_NOTE = "deterministic: no random seeds, output depends only on the parameters above"


@dataclass(frozen=True)
class RunConfig:
    command: str
    params: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.params[key]

    def argv(self):
        """Canonical argument list that reproduces this run (output goes to stdout)."""
        out = [self.command]
        for key, value in self.params.items():
            if key == "out":
                continue
            flag = "--" + key.replace("_", "-")
            if key == "phi":
                for v in value:
                    out += [flag, repr(v)]
            elif value is None:
                continue
            else:
                out += [flag, repr(value) if isinstance(value, float) else str(value)]
        return out


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n")


def _finite(text):
    v = float(text)
    if not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"non-finite value {text!r}")
    return v


def _add_n(p, default):
    p.add_argument("--n", type=int, default=default, help="number of spins")


def _add_n_range(p, lo, hi, step):
    p.add_argument("--n-min", type=int, default=lo)
    p.add_argument("--n-max", type=int, default=hi)
    p.add_argument("--n-step", type=int, default=step)


def _add_phi(p):
    p.add_argument("--phi", type=_finite, action="append",
                   help=f"phase; give once for all three components or three times (default {DEFAULT_PHI})")


def _add_squeeze(p, kind_default="tat", chi_range=False, chi_single=False):
    p.add_argument("--kind", choices=("oat", "tat", "tnt"), default=kind_default)
    p.add_argument("--lambda-ratio", type=_finite, default=DEFAULT_LAMBDA_RATIO)
    if chi_single:
        p.add_argument("--chi-t", type=_finite, default=0.0)
    if chi_range:
        p.add_argument("--chi-t-min", type=_finite, default=None)
        p.add_argument("--chi-t-max", type=_finite, default=None)
        p.add_argument("--chi-t-points", type=int, default=None)


def _add_common(p):
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", default=None, help="output path (default: standard output)")


def build_parser():
    parser = _Parser(prog=PROG, description="Multiphase estimation with collective spin probes.")
    parser.add_argument("--version", action="version", version=f"{PROG} {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("qfim", help="QFIM, D matrix and total variance of one probe")
    _add_n(p, 4)
    p.add_argument("--probe", choices=BASE_PROBES, default="multi")
    _add_phi(p)
    _add_squeeze(p, chi_single=True)
    p.add_argument("--echo-r", type=_finite, default=1.0)
    _add_common(p)

    p = sub.add_parser("dnorm-scan", help="||D||_F and total variance versus N")
    _add_n_range(p, 10, 50, 1)
    p.add_argument("--probe", choices=BASE_PROBES, default="multi")
    _add_phi(p)
    p.add_argument("--workers", type=int, default=1)
    _add_common(p)

    p = sub.add_parser("squeeze-scan", help="total variance, ||D||_F and xi_S^2 over a chi_t grid")
    _add_n(p, 100)
    p.add_argument("--probe", choices=BASE_PROBES, default="ghz-z")
    _add_phi(p)
    _add_squeeze(p, chi_range=True)
    p.add_argument("--echo-r", type=_finite, default=1.0)
    p.add_argument("--workers", type=int, default=1)
    _add_common(p)

    p = sub.add_parser("optimize", help="optimal chi_t (grid scan plus golden section)")
    _add_n(p, 40)
    p.add_argument("--probe", choices=BASE_PROBES, default="ghz-z")
    _add_phi(p)
    _add_squeeze(p, chi_range=True)
    _add_common(p)

    p = sub.add_parser("noise-scan", help="noise sweep: fixed versus re-optimized chi_t")
    _add_n(p, 4)
    p.add_argument("--probe", choices=BASE_PROBES, default="ghz-z")
    _add_phi(p)
    _add_squeeze(p, chi_range=True)
    p.add_argument("--epsilon-min", type=_finite, default=0.0)
    p.add_argument("--epsilon-max", type=_finite, default=0.5)
    p.add_argument("--epsilon-points", type=int, default=6)
    p.add_argument("--workers", type=int, default=1)
    _add_common(p)

    p = sub.add_parser("husimi", help="Husimi Q on a (theta, phi) grid")
    _add_n(p, 20)
    p.add_argument("--probe", choices=BASE_PROBES, default="multi")
    _add_squeeze(p, chi_single=True)
    p.add_argument("--theta-points", type=int, default=91)
    p.add_argument("--phi-points", type=int, default=180)
    _add_common(p)

    p = sub.add_parser("pm-dist", help="P(m) in the Dicke basis")
    _add_n(p, 20)
    p.add_argument("--probe", choices=BASE_PROBES, default="multi")
    _add_squeeze(p, chi_single=True)
    _add_common(p)

    p = sub.add_parser("size-scan", help="||D||_F or total variance versus N with SQL/HL guides")
    _add_n_range(p, 20, 60, 2)
    p.add_argument("--probe", choices=BASE_PROBES + OPT_PROBES, default="multi")
    p.add_argument("--quantity", choices=("d_norm", "total_variance"), default="total_variance")
    _add_phi(p)
    p.add_argument("--lambda-ratio", type=_finite, default=DEFAULT_LAMBDA_RATIO)
    p.add_argument("--workers", type=int, default=1)
    _add_common(p)
    return parser


def _validate(parser, ns):
    def fail(flag, msg):
        parser.error(f"argument {flag}: {msg}")

    p = vars(ns)
    cmd = ns.command
    if "n" in p:
        if not 1 <= ns.n <= MAX_SPINS:
            fail("--n", f"must lie in [1, {MAX_SPINS}], got {ns.n}")
        if cmd == "noise-scan" and ns.n > PIPELINE_MAX_SPINS:
            fail("--n", f"N = {ns.n} exceeds the noise pipeline capacity guard N <= {PIPELINE_MAX_SPINS}")
    if "n_min" in p:
        if not 1 <= ns.n_min <= MAX_SPINS:
            fail("--n-min", f"must lie in [1, {MAX_SPINS}], got {ns.n_min}")
        if not ns.n_min <= ns.n_max <= MAX_SPINS:
            fail("--n-max", f"must lie in [n-min, {MAX_SPINS}], got {ns.n_max}")
        if ns.n_step < 1:
            fail("--n-step", f"must be positive, got {ns.n_step}")
    if "phi" in p:
        if ns.phi is None:
            ns.phi = [DEFAULT_PHI]
        if len(ns.phi) not in (1, 3):
            fail("--phi", f"give one value or three, got {len(ns.phi)}")
        if len(ns.phi) == 1:
            ns.phi = ns.phi * 3
        ns.phi = tuple(ns.phi)
    if "lambda_ratio" in p and not ns.lambda_ratio > 0:
        fail("--lambda-ratio", f"must be positive, got {ns.lambda_ratio}")
    if "chi_t_min" in p:
        lo, hi = DEFAULT_BRACKETS[ns.kind.upper()]
        if ns.chi_t_min is None:
            ns.chi_t_min = lo
        if ns.chi_t_max is None:
            ns.chi_t_max = hi
        if ns.chi_t_points is None:
            ns.chi_t_points = 41 if cmd == "noise-scan" else 301
        if not ns.chi_t_min < ns.chi_t_max:
            fail("--chi-t-max", "must exceed --chi-t-min")
        least = 8 if cmd in ("optimize", "noise-scan") else 2
        if ns.chi_t_points < least:
            fail("--chi-t-points", f"must be at least {least}, got {ns.chi_t_points}")
    if "epsilon_min" in p:
        if not 0 <= ns.epsilon_min <= 1:
            fail("--epsilon-min", "must lie in [0, 1]")
        if not ns.epsilon_min <= ns.epsilon_max <= 1:
            fail("--epsilon-max", "must lie in [epsilon-min, 1]")
        if ns.epsilon_points < 1 or (ns.epsilon_points > 1 and ns.epsilon_min == ns.epsilon_max):
            fail("--epsilon-points", "needs a positive count and a non-empty range for more than one point")
    for flag in ("theta_points", "phi_points"):
        if flag in p and getattr(ns, flag) < 2:
            fail("--" + flag.replace("_", "-"), "must be at least 2")
    if "workers" in p and ns.workers < 1:
        fail("--workers", "must be at least 1")


def parse_args(argv=None) -> RunConfig:
    parser = build_parser()
    ns = parser.parse_args(argv)
    _validate(parser, ns)
    params = {k: v for k, v in vars(ns).items() if k != "command"}
    return RunConfig(ns.command, params)


# ---------------------------------------------------------------- computations


def _phase(cfg):
    return PhaseVector(*cfg["phi"])


def _probe(cfg):
    state = probe_builder(cfg["probe"])(cfg["n"])
    chi = cfg.params.get("chi_t", 0.0)
    if chi:
        state = squeezed_probe(state, SqueezeConfig(cfg["kind"], chi, cfg["lambda_ratio"]))
    return state


def _n_values(cfg):
    return list(range(cfg["n_min"], cfg["n_max"] + 1, cfg["n_step"]))


def _chi_grid(cfg):
    return np.linspace(cfg["chi_t_min"], cfg["chi_t_max"], cfg["chi_t_points"])


def _run_qfim(cfg):
    phi = _phase(cfg)
    base = probe_builder(cfg["probe"])(cfg["n"])
    if cfg["chi_t"]:
        sq = SqueezeConfig(cfg["kind"], cfg["chi_t"], cfg["lambda_ratio"], cfg["echo_r"])
        res = qfim_squeezed(base, sq, phi)
    else:
        res = qfim_pure(base, phi)
    axis = ("component", ["x", "y", "z"])
    columns = {
        "qfim": res.qfim.tolist(),
        "d_matrix": res.d_matrix.tolist(),
        "total_variance": [res.total_variance],
        "d_norm": [res.d_norm],
    }
    header = ["component", "qfim_x", "qfim_y", "qfim_z", "d_x", "d_y", "d_z", "total_variance", "d_norm"]
    rows = [[c, *res.qfim[i], *res.d_matrix[i], res.total_variance, res.d_norm] for i, c in enumerate("xyz")]
    return axis, columns, header, rows


def _table(table, names=None):
    names = list(table.columns) if names is None else names
    axis = (table.axis_name, table.axis_values.tolist())
    columns = {k: table.columns[k].tolist() for k in names}
    header = [table.axis_name, *names]
    rows = [[table.axis_values[i], *(table.columns[k][i] for k in names)] for i in range(len(table.axis_values))]
    return axis, columns, header, rows


def _as_int_axis(out):
    axis, columns, header, rows = out
    return (axis[0], [int(v) for v in axis[1]]), columns, header, [[int(r[0]), *r[1:]] for r in rows]


def _run_dnorm_scan(cfg):
    phi = _phase(cfg)
    ns = _n_values(cfg)
    build = probe_builder(cfg["probe"])
    results = _parallel_map(lambda n: qfim_pure(build(n), phi), ns, cfg["workers"])
    columns = {"d_norm": [r.d_norm for r in results], "total_variance": [r.total_variance for r in results]}
    header = ["n", "d_norm", "total_variance"]
    rows = [[n, r.d_norm, r.total_variance] for n, r in zip(ns, results)]
    return ("n", ns), columns, header, rows


def _run_squeeze_scan(cfg):
    base = probe_builder(cfg["probe"])(cfg["n"])
    table = scan_chi_t(base, cfg["kind"], _chi_grid(cfg), _phase(cfg), cfg["lambda_ratio"], cfg["echo_r"],
                       cfg["workers"])
    return _table(table)


def _run_optimize(cfg):
    base = probe_builder(cfg["probe"])(cfg["n"])
    phi = _phase(cfg)
    chi, var = optimize_chi_t(base, cfg["kind"], (cfg["chi_t_min"], cfg["chi_t_max"]), phi,
                              coarse_points=cfg["chi_t_points"], lambda_ratio=cfg["lambda_ratio"])
    res = qfim_squeezed(base, SqueezeConfig(cfg["kind"], chi, cfg["lambda_ratio"]), phi)
    columns = {"chi_t_opt": [chi], "total_variance": [var], "d_norm": [res.d_norm]}
    header = ["n", "chi_t_opt", "total_variance", "d_norm"]
    return ("n", [cfg["n"]]), columns, header, [[cfg["n"], chi, var, res.d_norm]]


def _run_noise_scan(cfg):
    base = probe_builder(cfg["probe"])(cfg["n"])
    grid = np.linspace(cfg["epsilon_min"], cfg["epsilon_max"], cfg["epsilon_points"])
    table = correction_ratio(base, cfg["kind"], _phase(cfg), grid, (cfg["chi_t_min"], cfg["chi_t_max"]),
                             coarse_points=cfg["chi_t_points"], lambda_ratio=cfg["lambda_ratio"],
                             workers=cfg["workers"])
    return _table(table)


def _run_husimi(cfg):
    grid = husimi_grid(_probe(cfg), cfg["theta_points"], cfg["phi_points"])
    columns = {"phi": grid.phi_nodes.tolist(), "q": grid.values.tolist()}
    header = ["theta", "phi", "q"]
    rows = [[t, p, grid.values[i, j]] for i, t in enumerate(grid.theta_nodes) for j, p in enumerate(grid.phi_nodes)]
    return ("theta", grid.theta_nodes.tolist()), columns, header, rows


def _run_pm_dist(cfg):
    state = _probe(cfg)
    m = magnetic_numbers(cfg["n"])
    p = pm_distribution(state)
    return ("m", m.tolist()), {"p": p.tolist()}, ["m", "p"], [[a, b] for a, b in zip(m, p)]


def _run_size_scan(cfg):
    phi = _phase(cfg)
    build = probe_builder(cfg["probe"], phi, cfg["lambda_ratio"])
    table = scan_system_size(build, _n_values(cfg), phi, cfg["quantity"], cfg["workers"])
    return _as_int_axis(_table(table))


RUNNERS = {
    "qfim": _run_qfim,
    "dnorm-scan": _run_dnorm_scan,
    "squeeze-scan": _run_squeeze_scan,
    "optimize": _run_optimize,
    "noise-scan": _run_noise_scan,
    "husimi": _run_husimi,
    "pm-dist": _run_pm_dist,
    "size-scan": _run_size_scan,
}


# ---------------------------------------------------------------- formatting


def _fmt(v):
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(v)


def _json_safe(v):
    if isinstance(v, list):
        return [_json_safe(x) for x in v]
    if isinstance(v, float) and not math.isfinite(v):
        return _fmt(v)
    return v


def _count_nonfinite(v):
    if isinstance(v, list):
        return sum(_count_nonfinite(x) for x in v)
    return int(isinstance(v, float) and math.isinf(v))


def _meta(cfg):
    meta = {"program": PROG, "version": __version__, "command": cfg.command}
    for k, v in cfg.params.items():
        if k == "out":
            continue
        meta[k] = list(v) if isinstance(v, tuple) else v
    if cfg.command == "noise-scan":
        meta["noise_weights"] = [EQUAL_WEIGHT] * 3
    meta["reproduce"] = shlex.join([PROG, *cfg.argv()])
    meta["determinism"] = DETERMINISM_NOTE
    return meta


def render(cfg: RunConfig, result) -> str:
    axis, columns, header, rows = result
    meta = _meta(cfg)
    if cfg["format"] == "json":
        payload = {"meta": meta, "axis": {"name": axis[0], "values": _json_safe(axis[1])},
                   "columns": {k: _json_safe(v) for k, v in columns.items()}}
        return json.dumps(payload, indent=2, allow_nan=False) + "\n"
    lines = [f"# {k}: {json.dumps(v, allow_nan=False) if not isinstance(v, str) else v}" for k, v in meta.items()]
    lines.append(",".join(header))
    lines += [",".join(_fmt(x) for x in row) for row in rows]
    return "\n".join(lines) + "\n"


def run_command(cfg: RunConfig, stdout=None, stderr=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    try:
        result = RUNNERS[cfg.command](cfg)
    except (ValueError, ArithmeticError, RuntimeError) as err:
        print(f"{PROG}: error: {err}", file=stderr)
        return 1
    bad = sum(_count_nonfinite(v) for v in result[1].values())
    if bad:
        print(f"{PROG}: warning: {bad} value(s) written as inf (singular QFIM)", file=stderr)
    text = render(cfg, result)
    out = cfg.params.get("out")
    if out is None:
        stdout.write(text)
        stdout.flush()
        return 0
    try:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as err:
        print(f"{PROG}: error: cannot write {out}: {err}", file=stderr)
        return 1
    return 0


def main(argv=None) -> int:
    return run_command(parse_args(argv))


if __name__ == "__main__":
    sys.exit(main())
