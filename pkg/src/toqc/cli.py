"""Command-line interface.

Subcommands: classify, evolve, solve, glc, zermelo, scenario.  Structured
results are printed as JSON (or written with --out); time series go to CSV.
Exit codes: 0 success, 2 validation error, 3 numeric non-convergence.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import brachistochrone as brach
from .arc_analysis import boundary_closure_study, derive_singular_structure
from .constraint_model import ConstraintSet, Typical, classify
from .dynamics import conservation_report, evolve_costate, evolve_unitary
from .errors import (
    DegenerateProblemError,
    NotConvergedError,
    ToqcError,
    ValidationError,
)
from .io_formats import (
    constraint_from_json,
    dump_json,
    export_plotdata,
    matrix_from_json,
    matrix_to_json,
    protocol_from_json,
)
from .scenarios import get_scenario, SCENARIOS
from .singular_glc import ControlChart, glc_test
from .sun_algebra import exp_op, generalized_gellmann, hs_norm
from .tolerances import DEFAULT_TOL

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERIC = 3


@dataclass
class RunConfig:
    """Validated invocation: one command plus its inputs and options."""

    command: str
    scenario: Optional[str] = None
    constraint_path: Optional[str] = None
    target_path: Optional[str] = None
    protocol_path: Optional[str] = None
    omega0: Optional[float] = None
    Omega: Optional[float] = None
    alpha: Optional[float] = None
    grid: int = 128
    multistarts: int = 32
    seed: int = 0
    tol: Optional[float] = None
    out: Optional[str] = None
    fmt: str = "json"
    arc: str = "interior"
    m_max: int = 4
    action: Optional[str] = None
    name: Optional[str] = None

    def __post_init__(self):
        if self.command not in {"classify", "evolve", "solve", "glc",
                                "zermelo", "scenario"}:
            raise ValidationError(f"unknown command {self.command!r}")
        if self.grid < 16:
            raise ValidationError("--grid must be at least 16")
        if self.multistarts < 1:
            raise ValidationError("--multistarts must be at least 1")
        if self.fmt not in {"json", "csv"}:
            raise ValidationError("--format must be json or csv")


def _load_json(path: str, what: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise ValidationError(f"{what}: file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{what}: malformed JSON in {path}: {exc}") from exc


def _emit(payload: dict, config: RunConfig) -> None:
    text = dump_json(payload, config.out)
    if config.out is None:
        sys.stdout.write(text)


def _scenario_from_config(config: RunConfig):
    return get_scenario(config.scenario, omega0=config.omega0,
                        Omega=config.Omega)


def _target_from_config(config: RunConfig, constraint: ConstraintSet,
                        omega0: Optional[float]) -> np.ndarray:
    if config.target_path is not None:
        data = _load_json(config.target_path, "target")
        if isinstance(data, dict) and "target" in data:
            data = data["target"]
        return matrix_from_json(data, "target")
    if config.alpha is not None:
        if omega0 is None or omega0 == 0:
            raise ValidationError("--alpha needs a scenario with a drift scale")
        axis = constraint.drift / omega0
        return exp_op(axis, config.alpha)
    raise ValidationError("provide --target FILE or --alpha")


def _cmd_classify(config: RunConfig) -> int:
    if config.scenario is not None:
        constraint = _scenario_from_config(config).constraint
    elif config.constraint_path is not None:
        constraint = constraint_from_json(
            _load_json(config.constraint_path, "constraint"))
    else:
        raise ValidationError("classify needs --constraint or --scenario")
    _emit(classify(constraint).as_dict(), config)
    return EXIT_OK


def _cmd_evolve(config: RunConfig) -> int:
    if config.protocol_path is None:
        raise ValidationError("evolve needs --protocol FILE")
    protocol, f0 = protocol_from_json(
        _load_json(config.protocol_path, "protocol"))
    traj = evolve_unitary(protocol)
    if f0 is not None:
        traj = evolve_costate(f0, traj)
        report = conservation_report(traj).as_dict()
    else:
        from .sun_algebra import dagger
        eye = np.eye(protocol.constraint.dim)
        report = {"unitarity_drift": float(max(
            np.max(np.abs(dagger(u) @ u - eye)) for u in traj.unitaries))}
    payload = {
        "conservation": report,
        "final_unitary": matrix_to_json(traj.final_unitary),
    }
    if config.out is not None and config.fmt == "csv":
        export_plotdata(traj, config.out)
        sys.stdout.write(dump_json(payload))
    else:
        _emit(payload, config)
    return EXIT_OK


def _solve_options(config: RunConfig) -> brach.ShootingOptions:
    kwargs = {"grid_points": config.grid, "multistarts": config.multistarts,
              "seed": config.seed}
    if config.tol is not None:
        kwargs["residual_tol"] = config.tol
    return brach.ShootingOptions(**kwargs)


def _cmd_solve(config: RunConfig) -> int:
    omega0 = None
    target = None
    if config.scenario is not None:
        sc = _scenario_from_config(config)
        constraint = sc.constraint
        omega0 = sc.parameters.get("omega0")
    elif config.constraint_path is not None:
        data = _load_json(config.constraint_path, "constraint")
        if "constraint" in data:
            # a full shooting-problem artifact: constraint + target (+ options)
            constraint = constraint_from_json(data["constraint"],
                                              "problem.constraint")
            if "target" in data:
                target = matrix_from_json(data["target"], "problem.target")
        else:
            constraint = constraint_from_json(data)
    else:
        raise ValidationError("solve needs --scenario or --constraint")
    if target is None:
        target = _target_from_config(config, constraint, omega0)
    if target.shape != (constraint.dim, constraint.dim):
        raise ValidationError("target dimension does not match the constraint")
    result = brach.solve_shooting(
        brach.ShootingProblem(constraint, target, _solve_options(config)))
    _emit(result.as_dict(), config)
    return EXIT_OK if result.converged else EXIT_NUMERIC


def _cmd_zermelo(config: RunConfig) -> int:
    if config.constraint_path is None:
        raise ValidationError("zermelo needs --constraint FILE")
    constraint = constraint_from_json(
        _load_json(config.constraint_path, "constraint"))
    if not isinstance(constraint.kind, Typical):
        raise ValidationError("zermelo needs a typical (Hilbert-Schmidt ball) bound")
    if constraint.n_controls != constraint.dim ** 2 - 1:
        raise ValidationError("zermelo needs the full control subspace")
    target = _target_from_config(config, constraint, None)
    options = _solve_options(config)
    tol = DEFAULT_TOL if config.tol is None else DEFAULT_TOL.with_(residual=config.tol)
    result = brach.zermelo_solve(constraint.drift, constraint.kind.omega,
                                 target, options, tol)
    _emit(result.as_dict(), config)
    return EXIT_OK if result.converged else EXIT_NUMERIC


def _cmd_glc(config: RunConfig) -> int:
    if config.scenario is not None:
        sc = _scenario_from_config(config)
        if config.arc == "interior":
            report = derive_singular_structure(sc.arc_model(), m_max=config.m_max)
        else:
            wanted = config.arc.removeprefix("boundary-")
            cases = {c.name: c for c in sc.boundary_cases}
            if wanted not in cases:
                raise ValidationError(
                    f"scenario {sc.name} has no boundary case {wanted!r}; "
                    f"available: interior, "
                    + ", ".join(f"boundary-{n}" for n in cases))
            report = boundary_closure_study(sc.constraint, cases[wanted],
                                            seed=config.seed, m_max=config.m_max)
    elif config.constraint_path is not None:
        data = _load_json(config.constraint_path, "glc input")
        if "constraint" not in data or "costate" not in data:
            raise ValidationError(
                "glc input file needs keys 'constraint' and 'costate' "
                "(optionally 'controls')")
        constraint = constraint_from_json(data["constraint"], "glc.constraint")
        f = matrix_from_json(data["costate"], "glc.costate")
        u = np.asarray(data.get("controls", np.zeros(constraint.n_controls)), float)
        chart = ControlChart(tuple(constraint.control_basis), u=u,
                             names=constraint.control_names)
        h = constraint.hamiltonian(u)
        report = glc_test(chart, h, f, m_max=config.m_max)
    else:
        raise ValidationError("glc needs --scenario or --constraint")
    _emit(report.as_dict(), config)
    return EXIT_OK


def _cmd_scenario(config: RunConfig) -> int:
    if config.action == "list":
        _emit({"scenarios": sorted(SCENARIOS)}, config)
        return EXIT_OK
    if config.action == "show":
        if config.name is None:
            raise ValidationError("scenario show needs a name")
        sc = get_scenario(config.name, omega0=config.omega0, Omega=config.Omega)
        payload = sc.as_dict()
        payload["classification"] = classify(sc.constraint).as_dict()
        if config.alpha is not None:
            omega0 = sc.parameters["omega0"]
            axis = sc.constraint.drift / omega0
            payload["canonical_target"] = matrix_to_json(exp_op(axis, config.alpha))
            payload["singular_time_cost"] = config.alpha / omega0
        _emit(payload, config)
        return EXIT_OK
    raise ValidationError("scenario needs an action: list | show NAME")


_DISPATCH = {
    "classify": _cmd_classify,
    "evolve": _cmd_evolve,
    "solve": _cmd_solve,
    "glc": _cmd_glc,
    "zermelo": _cmd_zermelo,
    "scenario": _cmd_scenario,
}


def run(config: RunConfig) -> int:
    """Dispatch a validated configuration; returns the process exit code."""
    try:
        return _DISPATCH[config.command](config)
    except (DegenerateProblemError, NotConvergedError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_NUMERIC
    except ToqcError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_VALIDATION


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scenario", help="built-in scenario name")
    p.add_argument("--constraint", dest="constraint_path",
                   help="constraint (or glc input) JSON file")
    p.add_argument("--target", dest="target_path", help="target unitary JSON file")
    p.add_argument("--protocol", dest="protocol_path", help="protocol JSON file")
    p.add_argument("--omega0", type=float, help="drift scale override")
    p.add_argument("--Omega", type=float, help="control bound override")
    p.add_argument("--alpha", type=float,
                   help="build the drift-axis target exp(-i alpha D)")
    p.add_argument("--grid", type=int, default=128, help="solver grid cells (>= 16)")
    p.add_argument("--multistarts", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, help="residual tolerance")
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--format", dest="fmt", choices=("json", "csv"), default="json")
    p.add_argument("--arc", default="interior",
                   help="glc arc: interior | boundary-<name>")
    p.add_argument("--m-max", dest="m_max", type=int, default=4)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="toqc",
        description="Time-optimal unitary control: classification, "
                    "propagation, shooting, navigation and singular-arc audits.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, blurb in (
        ("classify", "classify a constraint set"),
        ("evolve", "propagate a protocol and report conserved quantities"),
        ("solve", "multistart shooting for a target unitary"),
        ("glc", "Legendre-Clebsch audit of a singular arc"),
        ("zermelo", "navigation solve (full control subspace)"),
    ):
        _add_common(sub.add_parser(name, help=blurb))
    sp = sub.add_parser("scenario", help="list or show built-in scenarios")
    sp.add_argument("action", choices=("list", "show"))
    sp.add_argument("name", nargs="?")
    _add_common(sp)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    fields = {f: getattr(args, f) for f in RunConfig.__dataclass_fields__
              if hasattr(args, f)}
    try:
        config = RunConfig(**fields)
    except ToqcError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_VALIDATION
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
