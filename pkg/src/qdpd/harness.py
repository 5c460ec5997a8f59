"""Config ingestion, experiment orchestration, and CSV/manifest export.

A run is described by a flat key=value config with four sections. The same
config always produces byte-identical outputs; the manifest records enough
(resolved parameters, config hash, code version) to replay a run exactly.
"""

from __future__ import annotations

import configparser
import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass, field

import numpy as np

from . import analysis, dynamics, graph, objective, params
from .codec import LengthSchedule
from .quantizer import QuantizerSpec


class ConfigError(ValueError):
    """Malformed, incomplete, or unknown-key run configuration."""


_ALLOWED_KEYS = {
    "problem": {"name", "kind", "costs", "dimension"},
    "topology": {"name", "nodes", "edges"},
    "params": {
        "mode", "alpha", "t", "l0", "step_decay", "l",
        "kappa", "beta", "c1", "c2", "rho0",
    },
    "run": {"horizon_periods", "substeps", "x0", "seed", "output", "bits_mode"},
}


@dataclass
class RunConfig:
    """Validated description of one experiment."""

    problem_name: str = None
    problem_kind: str = None
    costs: list = None
    dimension: int = 1
    topology_name: str = None
    nodes: int = None
    edges: list = None
    mode: str = "manual"
    alpha: float = 1.0
    T: float = None
    l0: float = None
    step_decay: float = None
    L: int = None
    kappa: float = None
    beta: float = None
    c1: float = None
    c2: float = None
    rho0: float = None
    horizon_periods: int = None
    substeps: int = 50
    x0: np.ndarray = None
    seed: int = 0
    output: str = "out"
    bits_mode: str = "full"
    source_text: str = field(default="", repr=False)

    def validate(self):
        if self.problem_name is None and not self.costs:
            raise ConfigError("missing problem: set problem.name or problem.costs")
        if self.topology_name is None and not self.edges:
            raise ConfigError("missing topology: set topology.name or topology.edges")
        if self.horizon_periods is None:
            raise ConfigError("missing required key run.horizon_periods")
        if self.horizon_periods < 1:
            raise ConfigError(f"horizon_periods must be >= 1, got {self.horizon_periods}")
        if self.alpha <= 0:
            raise ConfigError(f"alpha must be positive, got {self.alpha}")
        if self.substeps < 1:
            raise ConfigError(f"substeps must be >= 1, got {self.substeps}")
        if self.mode == "manual":
            missing = [k for k in ("T", "l0", "step_decay", "L")
                       if getattr(self, k) is None]
            if missing:
                raise ConfigError(
                    f"manual mode requires params keys: {', '.join(missing)}"
                )
        elif self.mode == "derived":
            missing = [k for k in ("kappa", "beta", "c1", "c2", "rho0")
                       if getattr(self, k) is None]
            if missing:
                raise ConfigError(
                    f"derived mode requires params keys: {', '.join(missing)}"
                )
        else:
            raise ConfigError(f"mode must be 'manual' or 'derived', got {self.mode!r}")
        if self.bits_mode not in ("full", "zero-suppressed"):
            raise ConfigError(f"unknown bits_mode {self.bits_mode!r}")
        return self


def _parse_rows(text: str):
    rows = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        rows.append(tuple(float(v) for v in chunk.split(",")))
    return rows


def _parse_floats(text: str) -> np.ndarray:
    return np.array([float(v) for v in text.replace(";", ",").split(",") if v.strip()])


def _parse_edges(text: str):
    edges = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        i, j = chunk.split("-")
        edges.append((int(i), int(j)))
    return edges


def load_config(path: str) -> RunConfig:
    """Parse and validate a run config file.

    Unknown keys are an error (and all are reported at once); defaults are
    substeps=50, alpha=1, mode=manual.
    """
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    with open(path) as fh:
        text = fh.read()
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as err:
        raise ConfigError(f"could not parse {path}: {err}") from err

    unknown = []
    for section in parser.sections():
        if section not in _ALLOWED_KEYS:
            unknown.append(f"[{section}]")
            continue
        for key in parser[section]:
            if key not in _ALLOWED_KEYS[section]:
                unknown.append(f"{section}.{key}")
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")

    cfg = RunConfig(source_text=text)

    def get(section, key, cast=str):
        if parser.has_option(section, key):
            raw = parser.get(section, key)
            try:
                return cast(raw)
            except ValueError as err:
                raise ConfigError(f"bad value for {section}.{key}: {raw!r}") from err
        return None

    def setif(attr, section, key, cast):
        v = get(section, key, cast)
        if v is not None:
            setattr(cfg, attr, v)

    setif("problem_name", "problem", "name", str)
    setif("problem_kind", "problem", "kind", str)
    setif("dimension", "problem", "dimension", int)
    costs = get("problem", "costs")
    if costs is not None:
        cfg.costs = _parse_rows(costs)

    setif("topology_name", "topology", "name", str)
    setif("nodes", "topology", "nodes", int)
    edges = get("topology", "edges")
    if edges is not None:
        cfg.edges = _parse_edges(edges)

    setif("mode", "params", "mode", str)
    setif("alpha", "params", "alpha", float)
    setif("T", "params", "t", float)
    setif("l0", "params", "l0", float)
    setif("step_decay", "params", "step_decay", float)
    setif("L", "params", "l", int)
    for name in ("kappa", "beta", "c1", "c2", "rho0"):
        setif(name, "params", name, float)

    setif("horizon_periods", "run", "horizon_periods", int)
    setif("substeps", "run", "substeps", int)
    setif("seed", "run", "seed", int)
    setif("output", "run", "output", str)
    setif("bits_mode", "run", "bits_mode", str)
    x0 = get("run", "x0")
    if x0 is not None:
        cfg.x0 = _parse_floats(x0)

    return cfg.validate()


def build_problem(cfg: RunConfig) -> objective.GlobalProblem:
    if cfg.problem_name == "table1":
        return objective.table1_problem()
    if cfg.problem_name is not None:
        raise ConfigError(f"unknown problem name {cfg.problem_name!r}")
    kind = cfg.problem_kind or "piecewise"
    if kind == "piecewise":
        bad = [r for r in cfg.costs if len(r) != 4]
        if bad:
            raise ConfigError("piecewise costs need 4 coefficients a,b,c,d per row")
        return objective.GlobalProblem(
            costs=[objective.PiecewiseQuadCost(*r) for r in cfg.costs]
        )
    if kind == "quadratic":
        n = cfg.dimension
        costs = []
        for r in cfg.costs:
            if len(r) != 1 + n:
                raise ConfigError(
                    f"quadratic costs need 1 + dimension = {1 + n} values per row"
                )
            costs.append(objective.QuadraticCost(a=r[0], center=np.array(r[1:])))
        return objective.GlobalProblem(costs=costs, dimension=n)
    raise ConfigError(f"unknown problem kind {kind!r}")


def build_graph(cfg: RunConfig, agent_count: int) -> graph.NetworkGraph:
    if cfg.topology_name == "ring":
        return graph.build_ring(cfg.nodes or agent_count)
    if cfg.topology_name == "complete":
        return graph.build_complete(cfg.nodes or agent_count)
    if cfg.topology_name is not None:
        raise ConfigError(f"unknown topology name {cfg.topology_name!r}")
    return graph.from_edges(cfg.nodes or agent_count, cfg.edges)


def resolve_parameters(cfg: RunConfig, problem, g, solution) -> params.ParameterSet:
    """ParameterSet for the run: pass-through in manual mode, full derivation
    (including magnitude bounds from x0 and the centralized solution) in
    derived mode."""
    if cfg.mode == "manual":
        return params.manual_mode(
            T=cfg.T, l0=cfg.l0, step_decay=cfg.step_decay, L=cfg.L,
            alpha=cfg.alpha, N=g.node_count, n=problem.dimension,
            m_f=problem.m_f, sigma2=g.sigma2, sigmaN=g.sigma_max,
        )
    x0 = cfg.x0 if cfg.x0 is not None else np.zeros(g.node_count * problem.dimension)
    lam0 = graph.apply_laplacian(g, x0, problem.dimension)
    z0_inf = float(max(np.max(np.abs(x0)), np.max(np.abs(lam0))))
    # 1' lambda(0) = 0 exactly since lambda(0) lies in the Laplacian's range.
    return params.derive_parameters(
        kappa=cfg.kappa, beta=cfg.beta, c1=cfg.c1, c2=cfg.c2, rho0=cfg.rho0,
        alpha=cfg.alpha, m_f=problem.m_f, sigma2=g.sigma2, sigmaN=g.sigma_max,
        N=g.node_count, n=problem.dimension, z0_inf=z0_inf, lambda0_sum=0.0,
        M1=solution.M1, M2=solution.M2, T=cfg.T,
    )


def _f17(v) -> str:
    return format(float(v), ".17g")


def build_manifest(cfg: RunConfig, pset: params.ParameterSet, solution,
                   exit_status: int = 0) -> dict:
    from . import __version__

    p = {
        k: (v if not isinstance(v, float) else _f17(v))
        for k, v in dataclasses.asdict(pset).items()
        if v is not None
    }
    return {
        "version": __version__,
        "config_sha256": hashlib.sha256(cfg.source_text.encode()).hexdigest(),
        "config": cfg.source_text,
        "parameters": p,
        "x_star": [_f17(v) for v in np.atleast_1d(solution.x_star)],
        "solution_interval": [_f17(solution.interval_lo), _f17(solution.interval_hi)],
        "exit_status": exit_status,
    }


def run_experiment(cfg: RunConfig):
    """Execute one configured run; returns (trajectory, diagnostics, manifest).

    Saturation, divergence, and infeasibility raise with step/agent context;
    the CLI maps them to a nonzero exit.
    """
    problem = build_problem(cfg)
    g = build_graph(cfg, problem.agent_count)
    if cfg.x0 is not None and cfg.x0.size != g.node_count * problem.dimension:
        raise ConfigError(
            f"x0 has {cfg.x0.size} entries, expected {g.node_count * problem.dimension}"
        )
    solution = objective.solve_centralized(problem)
    pset = resolve_parameters(cfg, problem, g, solution)
    x0 = cfg.x0 if cfg.x0 is not None else np.zeros(g.node_count * problem.dimension)
    spec = QuantizerSpec(pset.L)
    schedule = pset.schedule()
    icfg = dynamics.IntegratorConfig(
        substeps_per_period=cfg.substeps, gain=cfg.alpha
    )
    traj = dynamics.run(
        problem, g, spec, schedule, icfg, cfg.horizon_periods, x0,
        bits_mode=cfg.bits_mode,
    )
    diagnostics = analysis.diagnose(problem, g, traj, solution)
    manifest = build_manifest(cfg, pset, solution)
    return traj, diagnostics, manifest


def run_exact_experiment(cfg: RunConfig):
    """Companion run with exact (unquantized) communication."""
    problem = build_problem(cfg)
    g = build_graph(cfg, problem.agent_count)
    solution = objective.solve_centralized(problem)
    x0 = cfg.x0 if cfg.x0 is not None else np.zeros(g.node_count * problem.dimension)
    T = cfg.T
    if T is None:
        pset = resolve_parameters(cfg, problem, g, solution)
        T = pset.T
    icfg = dynamics.IntegratorConfig(
        substeps_per_period=cfg.substeps, gain=cfg.alpha
    )
    return dynamics.run_exact(problem, g, icfg, cfg.horizon_periods, x0, T)


def output_dir(cfg: RunConfig) -> str:
    return os.environ.get("QDPD_OUT", cfg.output)


def export(traj: dynamics.TrajectoryRecord, diagnostics, manifest: dict,
           out_dir: str):
    """Write trajectory.csv, diagnostics.csv, and manifest.json to out_dir.

    All floats are serialized with 17 significant digits so a replay can be
    compared byte for byte.
    """
    os.makedirs(out_dir, exist_ok=True)
    steps = len(traj.times)
    width = traj.x.shape[1] * traj.x.shape[2]

    cols = (
        ["t"]
        + [f"x_{i + 1}" for i in range(width)]
        + [f"lambda_{i + 1}" for i in range(width)]
        + [f"qx_{i + 1}" for i in range(width)]
        + [f"qlambda_{i + 1}" for i in range(width)]
        + ["e_norm", "bits_cum"]
    )
    traj_path = os.path.join(out_dir, "trajectory.csv")
    with open(traj_path, "w") as fh:
        fh.write(",".join(cols) + "\n")
        for k in range(steps):
            row = (
                [traj.times[k]]
                + list(traj.x[k].reshape(-1))
                + list(traj.lam[k].reshape(-1))
                + list(traj.q_x[k].reshape(-1))
                + list(traj.q_lam[k].reshape(-1))
                + [traj.e_norm[k], traj.bits_cum[k]]
            )
            fh.write(",".join(_f17(v) for v in row) + "\n")

    diag_path = os.path.join(out_dir, "diagnostics.csv")
    with open(diag_path, "w") as fh:
        fh.write("t,F_norm,V,consensus_residual,dual_sum,tracking_error,J\n")
        for s in diagnostics:
            fh.write(",".join(_f17(v) for v in (
                s.t, s.F_norm, s.V, s.consensus_residual, s.dual_sum,
                s.tracking_error, s.J,
            )) + "\n")

    manifest_path = os.path.join(out_dir, "manifest.json")
    with open(manifest_path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return traj_path, diag_path, manifest_path
