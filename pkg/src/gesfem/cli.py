"""Command line entry points: gesfem run / converge / meshgen.

Exit codes: 0 on success, 1 on numerical failure (solver, model domain,
geometry degeneration), 2 on usage or configuration errors.
"""

import argparse
import json
import sys

from .config import ExperimentConfig
from .errors import GesfemError, ParseError, ValidationError
from .fileio import write_off, write_vtk, write_vtk_quadratic
from .mesh import icosphere, project_to_surface, promote_to_quadratic
from .surfaces import make_surface


def _cmd_run(args):
    from .runner import run

    config = ExperimentConfig.load(args.config)
    run(config)
    return 0


def _cmd_converge(args):
    from .runner import converge

    config = ExperimentConfig.load(args.config)
    converge(config)
    return 0


def _cmd_meshgen(args):
    try:
        params = json.loads(args.params) if args.params else {}
    except json.JSONDecodeError as err:
        raise ValidationError(f"--params must be a JSON object: {err}") from None
    surface = make_surface(args.kind, **params)
    radius = params.get("radius", 1.0) if args.kind == "sphere" else 1.0
    mesh = icosphere(args.level, radius)
    if args.kind != "sphere":
        mesh = project_to_surface(mesh, surface)
    if args.degree == 2:
        mesh = promote_to_quadratic(mesh, surface)
        if not args.out.endswith(".vtk"):
            raise ValidationError("degree-2 meshes are written as .vtk files")
        write_vtk_quadratic(args.out, mesh, title=f"{args.kind} level {args.level}")
    elif args.out.endswith(".off"):
        write_off(args.out, mesh)
    elif args.out.endswith(".vtk"):
        write_vtk(args.out, mesh, title=f"{args.kind} level {args.level}")
    else:
        raise ValidationError("output must end in .off or .vtk")
    print(f"wrote {args.out}: {mesh.n_nodes} nodes, {mesh.n_elements} elements")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="gesfem",
        description="Evolving-surface FEM simulator for coupled "
        "mean-curvature-flow/diffusion systems",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment from a JSON config")
    p_run.add_argument("config", help="path to the experiment config (JSON)")
    p_run.set_defaults(func=_cmd_run)

    p_conv = sub.add_parser(
        "converge", help="run an h- or tau-refinement convergence study"
    )
    p_conv.add_argument("config", help="path to the experiment config (JSON)")
    p_conv.set_defaults(func=_cmd_converge)

    p_mesh = sub.add_parser("meshgen", help="write an initial surface mesh")
    p_mesh.add_argument("--kind", required=True,
                        choices=["sphere", "ellipsoid", "dumbbell", "cup"])
    p_mesh.add_argument("--level", type=int, default=2,
                        help="icosphere subdivision level")
    p_mesh.add_argument("--degree", type=int, default=1, choices=[1, 2])
    p_mesh.add_argument("--params", default="",
                        help='surface parameters as JSON, e.g. \'{"a": 2}\'')
    p_mesh.add_argument("--out", required=True, help="output path (.off or .vtk)")
    p_mesh.set_defaults(func=_cmd_meshgen)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return 2 if err.code not in (0, None) else 0
    try:
        return args.func(args)
    except (ValidationError, ParseError, FileNotFoundError) as err:
        print(f"gesfem: config error: {err}", file=sys.stderr)
        return 2
    except GesfemError as err:
        print(f"gesfem: numerical failure: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
