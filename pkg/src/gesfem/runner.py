"""Experiment driver: builds the problem from a config, runs it, writes artifacts.

A run produces, inside its output directory:
  monitor.csv    one MonitorRow per output step (written incrementally)
  monitor.png    the qualitative-property panels
  snap_*.vtk     POLYDATA snapshots with fields u, V, H_proxy, |n|
A convergence study produces errors.csv, eoc.csv, and convergence.png.

Set the environment variable GESFEM_OUTPUT_ROOT to relocate all output
directories without touching configs.
"""

import os
from dataclasses import dataclass, field

import numpy as np

from .config import ExperimentConfig
from .diagnostics import MonitorRow, eoc, error_norms, mean_radius, monitor
from .errors import UnsupportedConfigError, ValidationError
from .fileio import write_vtk
from .geometry import build_initial_data, make_u0
from .mesh import icosphere, project_to_surface, promote_to_quadratic
from .model import make_model
from .plots import convergence_figure, monitor_figure
from .stepper import FlowState, bootstrap, step
from .surfaces import make_surface

ERROR_VARS = ("x", "v", "n", "V", "u")


def resolve_output_dir(config_dir):
    root = os.environ.get("GESFEM_OUTPUT_ROOT")
    return os.path.join(root, config_dir) if root else config_dir


def build_mesh(config, surface, level=None):
    """Icosphere projected onto the surface; promoted when degree 2."""
    level = config.mesh_level if level is None else level
    radius = surface.params.get("radius", 1.0) if surface.kind == "sphere" else 1.0
    base = icosphere(level, radius, jiggle=config.mesh_jiggle)
    if surface.kind != "sphere":
        base = project_to_surface(base, surface)
    if config.degree == 2:
        return promote_to_quadratic(base, surface)
    return base


def build_problem(config, level=None):
    surface = make_surface(config.surface["kind"], **config.surface.get("params", {}))
    mesh = build_mesh(config, surface, level)
    model = make_model(config.model["name"], **config.model.get("params", {}))
    u0 = make_u0(config.u0["preset"], **config.u0.get("params", {}))
    return mesh, surface, model, u0


def initial_flow_state(mesh, surface, model, u0):
    data = build_initial_data(mesh, surface, model, u0)
    return FlowState(t=0.0, x=data.x, v=data.v, n=data.n, V=data.V, u=data.u,
                     H=data.H)


@dataclass
class RunResult:
    """In-memory record of one run; files live in output_dir."""

    config: ExperimentConfig
    output_dir: str | None
    rows: list = field(default_factory=list)
    errors_max: dict = field(default_factory=dict)
    error_times: list = field(default_factory=list)
    error_rows: list = field(default_factory=list)
    final_state: FlowState | None = None
    mesh: object = None
    mesh_size: float = 0.0
    states: list | None = None

    @property
    def final_mean_radius(self):
        return mean_radius(self.final_state)


def _h_proxy(state, model):
    if state.H is not None:
        return state.H
    return -np.asarray(model.K(state.u, state.V))


def run(config, quiet=False, keep_history=False):
    """Execute a 'run'-mode experiment; returns a RunResult.

    With config.track_errors (radial setups only) the result carries the
    running maximum of the per-variable H1-type errors against the exact
    solution, sampled at the output cadence.
    """
    config.validate()
    mesh, surface, model, u0 = build_problem(config)
    radial = config.radial_solution()
    if config.track_errors and radial is None:
        raise UnsupportedConfigError("error tracking requires the radial setup")

    q, tau = config.bdf_order, config.tau
    n_steps = int(round(config.t_end / tau))
    if abs(n_steps * tau - config.t_end) > 1e-9 * max(config.t_end, 1.0):
        raise ValidationError("t_end must be an integer multiple of tau")
    if n_steps < q:
        raise ValidationError(
            f"t_end must cover at least bdf_order steps ({q} * tau)"
        )

    out_dir = None
    csv_file = None
    if config.output_dir:
        out_dir = resolve_output_dir(config.output_dir)
        os.makedirs(out_dir, exist_ok=True)
        csv_file = open(os.path.join(out_dir, "monitor.csv"), "w", encoding="utf-8")
        csv_file.write(MonitorRow.HEADER + "\n")

    result = RunResult(config=config, output_dir=out_dir, mesh=mesh,
                       mesh_size=mesh.mesh_size())

    def emit(state, step_index):
        row = monitor(state, mesh, model)
        result.rows.append(row)
        if csv_file:
            csv_file.write(row.as_csv() + "\n")
            csv_file.flush()
        if out_dir and config.write_vtk:
            fields = {
                "u": state.u,
                "V": state.V,
                "H_proxy": _h_proxy(state, model),
                "nu_norm": np.linalg.norm(state.n, axis=1),
            }
            write_vtk(os.path.join(out_dir, f"snap_{step_index:06d}.vtk"),
                      mesh, fields, x=state.x)
        if config.track_errors:
            errs = error_norms(state, radial, mesh)
            result.error_times.append(state.t)
            result.error_rows.append(errs)
            for key, val in errs.items():
                result.errors_max[key] = max(result.errors_max.get(key, 0.0), val)

    state0 = initial_flow_state(mesh, surface, model, u0)
    boot_mode = config.bootstrap
    if boot_mode == "auto":
        boot_mode = "exact" if radial is not None else "substep"
    if boot_mode == "exact":
        if radial is None:
            raise UnsupportedConfigError(
                "bootstrap mode 'exact' needs the radial exact solution"
            )
        from .diagnostics import radial_state

        history = bootstrap(mesh, model, state0, q, tau, mode="exact",
                            exact_states=lambda t: radial_state(radial, mesh, t),
                            scheme_name=config.scheme, cg_tol=config.cg_tol)
    else:
        history = bootstrap(mesh, model, state0, q, tau, mode="substep",
                            scheme_name=config.scheme, cg_tol=config.cg_tol)

    states = [lev.state for lev in history.levels]
    try:
        for i, st in enumerate(states[: min(q, n_steps + 1)]):
            if i % config.output_every == 0 or i == n_steps:
                emit(st, i)
        state = states[-1]
        kept = list(states) if keep_history else None
        for i in range(q, n_steps + 1):
            state = step(history, mesh, model, config.scheme, cg_tol=config.cg_tol)
            if keep_history:
                kept.append(state)
            if i % config.output_every == 0 or i == n_steps:
                emit(state, i)
    finally:
        if csv_file:
            csv_file.close()

    result.final_state = state
    if keep_history:
        result.states = kept
    if out_dir:
        monitor_figure(result.rows, os.path.join(out_dir, "monitor.png"),
                       title=f"{config.surface['kind']} / {config.scheme}")
    if not quiet:
        row = result.rows[-1]
        print(
            f"final t = {state.t:.6g}  mean radius = {mean_radius(state):.9g}  "
            f"mass = {row.mass:.9g}  energy = {row.energy:.9g}  "
            f"min u = {row.u_min:.6g}"
        )
    return result


@dataclass
class ConvergeResult:
    """Error ladder of a convergence study."""

    parameter: str  # "h" or "tau"
    values: list
    errors: dict  # var -> list of errors, one per ladder rung
    orders: dict  # var -> list of EOCs between rungs


def _converge_ladder(config, rungs, runner, parameter, quiet):
    errors = {var: [] for var in ERROR_VARS}
    values = []
    for rung in rungs:
        res = runner(rung)
        values.append(res[0])
        for var in ERROR_VARS:
            errors[var].append(res[1][var])
    orders = {var: eoc(errors[var], values) for var in ERROR_VARS}

    out_dir = resolve_output_dir(config.output_dir) if config.output_dir else None
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "errors.csv"), "w", encoding="utf-8") as fh:
            fh.write(parameter + "," + ",".join(f"err_{v}" for v in ERROR_VARS) + "\n")
            for i, val in enumerate(values):
                cells = [f"{val:.17g}"] + [
                    f"{errors[v][i]:.17g}" for v in ERROR_VARS
                ]
                fh.write(",".join(cells) + "\n")
        with open(os.path.join(out_dir, "eoc.csv"), "w", encoding="utf-8") as fh:
            fh.write("pair," + ",".join(f"eoc_{v}" for v in ERROR_VARS) + "\n")
            for i in range(len(values) - 1):
                cells = [f"{i}"] + [f"{orders[v][i]:.17g}" for v in ERROR_VARS]
                fh.write(",".join(cells) + "\n")
        convergence_figure(
            values, errors, os.path.join(out_dir, "convergence.png"),
            xlabel=parameter, title=f"{config.scheme} convergence in {parameter}",
        )

    if not quiet:
        head = f"{parameter:>10} " + " ".join(f"{v:>12}" for v in ERROR_VARS)
        print(head)
        for i, val in enumerate(values):
            print(f"{val:10.5g} " + " ".join(
                f"{errors[v][i]:12.5g}" for v in ERROR_VARS))
            if i < len(values) - 1:
                print("       EOC " + " ".join(
                    f"{orders[v][i]:12.3g}" for v in ERROR_VARS))
    return ConvergeResult(parameter, values, errors, orders)


def converge(config, quiet=False):
    """Run the h- or tau-refinement ladder of a convergence study."""
    config.validate()
    if config.mode == "converge-space":
        def runner(level):
            cfg = ExperimentConfig.from_dict(
                {**_cfg_dict(config), "mode": "run", "mesh_level": level,
                 "track_errors": True, "write_vtk": False, "output_dir": ""}
            )
            res = run(cfg, quiet=True)
            return res.mesh_size, res.errors_max

        return _converge_ladder(config, config.levels, runner, "h", quiet)

    if config.mode == "converge-time":
        def runner(tau):
            cfg = ExperimentConfig.from_dict(
                {**_cfg_dict(config), "mode": "run", "tau": tau,
                 "track_errors": True, "write_vtk": False, "output_dir": ""}
            )
            res = run(cfg, quiet=True)
            return tau, res.errors_max

        return _converge_ladder(config, config.taus, runner, "tau", quiet)

    raise ValidationError(f"converge() cannot handle mode {config.mode!r}")


def _cfg_dict(config):
    from dataclasses import asdict

    return asdict(config)
