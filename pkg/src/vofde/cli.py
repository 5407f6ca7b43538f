"""Command-line front end.

Three subcommands: ``list`` prints the scenario registry, ``scenario`` runs
one registered benchmark, and ``run`` executes a JSON run configuration
(either a registry reference or an inline problem built from a small
catalog of coefficient forms). Exit codes: 0 success, 2 configuration or
usage error, 3 solver failure, 4 success but with a stability check that is
only conditional on the solved trajectory (state-dependent order).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import explicit_solver, implicit_solver
from .errors import (
    ConvergenceError,
    DegenerateProblemError,
    OrderDomainError,
    StepFailureError,
)
from .model import AlphaKind, AlphaSpec, OscillatorProblem, SolutionTrace
from .reference import Scenario, list_scenarios, scenario
from .stability import (
    StabilityReport,
    report_from_rho,
    stability_report,
    stability_report_along_trace,
)
from .vo_core import vo_derivative_series

__all__ = [
    "ConfigError",
    "RunConfig",
    "parse_config",
    "solve_problem",
    "convergence_study",
    "write_trace_csv",
    "write_convergence_csv",
    "write_stability_json",
    "main",
]

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_SOLVER = 3
EXIT_CONDITIONAL_STABILITY = 4

_OUTPUT_KINDS = ("trace", "stability", "convergence")


class ConfigError(ValueError):
    """Invalid run configuration or command usage."""


@dataclass
class RunConfig:
    """Validated run request, shared by the run and scenario subcommands."""

    h: float
    outputs: tuple[str, ...]
    out_path: Optional[str]
    scenario_name: Optional[str] = None
    problem_spec: Optional[dict] = None
    T: Optional[float] = None
    convergence_steps: tuple[float, ...] = ()
    stability_tol: float = 1e-12


# inline problem catalog ------------------------------------------------------

def _require_number(value, what: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{what} must be a number, got {value!r}")
    v = float(value)
    if not math.isfinite(v):
        raise ConfigError(f"{what} must be finite, got {value!r}")
    return v


def _form_and_params(spec, what: str) -> tuple[str, dict]:
    if not isinstance(spec, dict):
        raise ConfigError(f"{what} must be a number or a form object, got {spec!r}")
    unknown = set(spec) - {"form", "params"}
    if unknown:
        raise ConfigError(f"{what} has unknown keys {sorted(unknown)}")
    form = spec.get("form")
    params = spec.get("params", {})
    if not isinstance(form, str):
        raise ConfigError(f"{what} needs a string 'form', got {form!r}")
    if not isinstance(params, dict):
        raise ConfigError(f"{what} 'params' must be an object, got {params!r}")
    return form, dict(params)


def _check_params(params: dict, required: dict, what: str) -> dict:
    """Validate parameter presence against a {name: default-or-None} table."""
    unknown = set(params) - set(required)
    if unknown:
        raise ConfigError(f"{what} has unknown parameters {sorted(unknown)}")
    out = {}
    for name, default in required.items():
        if name in params:
            out[name] = params[name]
        elif default is None:
            raise ConfigError(f"{what} is missing required parameter {name!r}")
        else:
            out[name] = default
    return out


def _time_function(spec, what: str) -> Callable[[float], float]:
    """Build a function of time from a number or a form object."""
    if isinstance(spec, (int, float)) and not isinstance(spec, bool):
        value = _require_number(spec, what)
        return lambda t: value
    form, params = _form_and_params(spec, what)
    if form == "constant":
        p = _check_params(params, {"value": None}, what)
        value = _require_number(p["value"], f"{what}.value")
        return lambda t: value
    if form == "polynomial":
        p = _check_params(params, {"coeffs": None}, what)
        coeffs = p["coeffs"]
        if not isinstance(coeffs, list) or not coeffs:
            raise ConfigError(f"{what}.coeffs must be a nonempty list")
        cs = [_require_number(c, f"{what}.coeffs[{i}]") for i, c in enumerate(coeffs)]

        def poly(t: float) -> float:
            acc = 0.0
            for c in reversed(cs):
                acc = acc * t + c
            return acc

        return poly
    if form == "exp_decay":
        p = _check_params(params, {"offset": None, "scale": None, "rate": 1.0}, what)
        offset = _require_number(p["offset"], f"{what}.offset")
        scale = _require_number(p["scale"], f"{what}.scale")
        rate = _require_number(p["rate"], f"{what}.rate")
        return lambda t: offset + scale * math.exp(-rate * t)
    if form == "power":
        p = _check_params(params, {"coeff": None, "exponent": None}, what)
        coeff = _require_number(p["coeff"], f"{what}.coeff")
        expo = _require_number(p["exponent"], f"{what}.exponent")
        if expo < 0.0:
            raise ConfigError(f"{what}.exponent must be >= 0 so values stay finite at t = 0")
        return lambda t: coeff * t ** expo
    raise ConfigError(
        f"{what} has unknown form {form!r}; time forms are constant, polynomial, "
        "exp_decay, power"
    )


def _alpha_from_spec(spec, what: str = "alpha") -> AlphaSpec:
    if isinstance(spec, (int, float)) and not isinstance(spec, bool):
        value = _require_number(spec, what)
        if not 0.0 < value < 1.0:
            raise ConfigError(f"{what} constant must lie in (0, 1), got {value}")
        return AlphaSpec.constant(value)
    form, params = _form_and_params(spec, what)
    if form == "tanh_abs_velocity":
        p = _check_params(params, {"d": None, "k": None}, what)
        d = _require_number(p["d"], f"{what}.d")
        k = _require_number(p["k"], f"{what}.k")
        return AlphaSpec.of_state(lambda t, u, udot: d - k * math.tanh(abs(udot)))
    if form == "constant":
        p = _check_params(params, {"value": None}, what)
        value = _require_number(p["value"], f"{what}.value")
        if not 0.0 < value < 1.0:
            raise ConfigError(f"{what} constant must lie in (0, 1), got {value}")
        return AlphaSpec.constant(value)
    fn = _time_function(spec, what)
    return AlphaSpec.of_time(fn)


def _nonlinear_from_spec(spec, what: str = "nonlinear"):
    form, params = _form_and_params(spec, what)
    if form == "cubic":
        p = _check_params(params, {"coeff": 1.0}, what)
        coeff = _require_number(p["coeff"], f"{what}.coeff")
        return lambda u, udot: coeff * u ** 3
    raise ConfigError(f"{what} has unknown form {form!r}; known forms: cubic")


def _build_problem(spec: dict, h: float, T: Optional[float]) -> OscillatorProblem:
    if not isinstance(spec, dict):
        raise ConfigError(f"problem must be an object, got {spec!r}")
    allowed = {"a1", "a2", "a3", "p", "alpha", "u0", "v0", "nonlinear"}
    unknown = set(spec) - allowed
    if unknown:
        raise ConfigError(f"problem has unknown keys {sorted(unknown)}")
    missing = {"a1", "a2", "a3", "p", "alpha", "u0", "v0"} - set(spec)
    if missing:
        raise ConfigError(f"problem is missing keys {sorted(missing)}")
    if T is None:
        raise ConfigError("inline problems need a top-level horizon T")
    f_nl = _nonlinear_from_spec(spec["nonlinear"]) if "nonlinear" in spec else None
    return OscillatorProblem.build(
        a1=_time_function(spec["a1"], "a1"),
        a2=_time_function(spec["a2"], "a2"),
        a3=_time_function(spec["a3"], "a3"),
        p=_time_function(spec["p"], "p"),
        alpha=_alpha_from_spec(spec["alpha"]),
        u0=_require_number(spec["u0"], "u0"),
        v0=_require_number(spec["v0"], "v0"),
        T=T,
        h=h,
        f_nl=f_nl,
    )


# config parsing --------------------------------------------------------------

def parse_config(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("run configuration must be a JSON object")
    allowed = {
        "scenario", "problem", "h", "T", "outputs",
        "convergence_steps", "out_path", "stability_tol",
    }
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"configuration has unknown keys {sorted(unknown)}")

    has_scn = "scenario" in data
    has_prob = "problem" in data
    if has_scn == has_prob:
        raise ConfigError("configuration needs exactly one of 'scenario' or 'problem'")
    if has_scn and not isinstance(data["scenario"], str):
        raise ConfigError(f"scenario must be a string, got {data['scenario']!r}")

    if "h" not in data:
        raise ConfigError("configuration is missing the step size h")
    h = _require_number(data["h"], "h")
    if h <= 0.0:
        raise ConfigError(f"h must be positive, got {h}")

    T = None
    if "T" in data:
        T = _require_number(data["T"], "T")
        if T <= 0.0:
            raise ConfigError(f"T must be positive, got {T}")

    outputs = data.get("outputs", ["trace"])
    if not isinstance(outputs, list) or not outputs:
        raise ConfigError("outputs must be a nonempty list")
    for o in outputs:
        if o not in _OUTPUT_KINDS:
            raise ConfigError(f"unknown output kind {o!r}; known kinds: {_OUTPUT_KINDS}")
    outputs = tuple(dict.fromkeys(outputs))  # dedupe, keep order

    steps: tuple[float, ...] = ()
    if "convergence" in outputs:
        raw = data.get("convergence_steps")
        if not isinstance(raw, list) or len(raw) < 2:
            raise ConfigError("convergence output needs convergence_steps, a list of >= 2 step sizes")
        steps = tuple(_require_number(s, f"convergence_steps[{i}]") for i, s in enumerate(raw))
        if any(s <= 0.0 for s in steps):
            raise ConfigError("convergence_steps must all be positive")
    elif "convergence_steps" in data:
        raise ConfigError("convergence_steps given but 'convergence' is not in outputs")

    out_path = data.get("out_path")
    if out_path is not None and not isinstance(out_path, str):
        raise ConfigError(f"out_path must be a string, got {out_path!r}")
    if out_path is None:
        raise ConfigError("configuration is missing out_path")

    tol = 1e-12
    if "stability_tol" in data:
        tol = _require_number(data["stability_tol"], "stability_tol")
        if tol < 0.0:
            raise ConfigError("stability_tol must be nonnegative")

    return RunConfig(
        h=h,
        outputs=outputs,
        out_path=out_path,
        scenario_name=data.get("scenario"),
        problem_spec=data.get("problem"),
        T=T,
        convergence_steps=steps,
        stability_tol=tol,
    )


# execution -------------------------------------------------------------------

def solve_problem(
    problem: OscillatorProblem, record_spectral_radius: bool = False
) -> SolutionTrace:
    """Dispatch to the right solver for the problem's structure."""
    if problem.alpha.kind is AlphaKind.TIME_ONLY and problem.f_nl is None:
        return explicit_solver.solve(problem, record_spectral_radius=record_spectral_radius)
    return implicit_solver.solve(problem)


def _scenario_error(scn: Scenario) -> float:
    """Worst node error against the scenario's reference solution."""
    if scn.problem is not None and scn.exact_u is not None:
        trace = solve_problem(scn.problem)
        exact = np.array([scn.exact_u(float(t)) for t in trace.t])
        return float(np.max(np.abs(trace.u - exact)))
    if scn.problem is None and scn.exact_vofd is not None and scn.exact_udot is not None:
        grid = scn.grid
        samples = np.array([scn.exact_udot(float(t)) for t in grid.times()])
        approx = vo_derivative_series(
            samples, lambda t: scn.alpha.eval(t, math.nan, math.nan), grid
        )
        exact = np.array(
            [scn.exact_vofd(n * grid.h) for n in range(1, grid.N + 1)]
        )
        return float(np.max(np.abs(approx - exact)))
    raise ConfigError(
        f"scenario {scn.name!r} has no reference solution; convergence study not possible"
    )


def convergence_study(
    name: str, steps, T: Optional[float] = None
) -> list[tuple[float, int, float, float]]:
    """Worst-node error per step size, with the error ratio between rows."""
    steps = tuple(float(s) for s in steps)
    if len(steps) < 2:
        raise ConfigError("a convergence study needs at least two step sizes")
    rows = []
    prev = None
    for h in steps:
        scn = _load_scenario(name, h, T)
        err = _scenario_error(scn)
        ratio = math.nan if prev is None else prev / err
        rows.append((h, scn.grid.N, err, ratio))
        prev = err
    return rows


def _load_scenario(name: str, h: float, T: Optional[float]) -> Scenario:
    try:
        return scenario(name, h, T)
    except KeyError as exc:
        raise ConfigError(exc.args[0]) from exc


def _plan_paths(outputs: tuple[str, ...], out_path: str) -> dict[str, str]:
    if len(outputs) == 1:
        return {outputs[0]: out_path}
    plan = {}
    for kind in outputs:
        if kind == "trace":
            plan[kind] = out_path
        elif kind == "stability":
            plan[kind] = out_path + ".stability.json"
        else:
            plan[kind] = out_path + ".convergence.csv"
    return plan


def _fmt(v: float) -> str:
    if math.isnan(v):
        return "nan"
    return format(float(v), ".17g")


def write_trace_csv(path: str, trace: SolutionTrace, rho=None) -> None:
    """Node-wise trace as CSV; rho, when given, holds per-step radii (node 0 nan)."""
    cols = "t,u,udot,uddot,alpha" + (",rho" if rho is not None else "")
    with open(path, "w", encoding="utf-8") as f:
        f.write(cols + "\n")
        for n in range(trace.t.size):
            row = [
                _fmt(trace.t[n]),
                _fmt(trace.u[n]),
                _fmt(trace.udot[n]),
                _fmt(trace.uddot[n]),
                _fmt(trace.alpha_used[n]),
            ]
            if rho is not None:
                row.append(_fmt(math.nan) if n == 0 else _fmt(rho[n - 1]))
            f.write(",".join(row) + "\n")


def write_convergence_csv(path: str, rows) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write("h,N,max_abs_error,ratio\n")
        for h, N, err, ratio in rows:
            f.write(f"{_fmt(h)},{N},{_fmt(err)},{_fmt(ratio)}\n")


def write_stability_json(path: str, report: StabilityReport) -> None:
    payload = {
        "max_rho": report.max_rho,
        "satisfied": report.satisfied,
        "tol": report.tol,
        "trace_conditional": report.trace_conditional,
        "rho": [float(r) for r in report.rho],
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2)
        f.write("\n")


def _execute(cfg: RunConfig) -> int:
    scn: Optional[Scenario] = None
    if cfg.scenario_name is not None:
        scn = _load_scenario(cfg.scenario_name, cfg.h, cfg.T)
        problem = scn.problem
    else:
        problem = _build_problem(cfg.problem_spec, cfg.h, cfg.T)

    exit_code = EXIT_OK
    trace: Optional[SolutionTrace] = None
    report: Optional[StabilityReport] = None

    needs_solve = "trace" in cfg.outputs or "stability" in cfg.outputs
    if needs_solve:
        if problem is None:
            raise ConfigError(
                f"scenario {cfg.scenario_name!r} is a bare derivative benchmark; "
                "it supports only the convergence output"
            )
        want_stability = "stability" in cfg.outputs
        time_only = problem.alpha.kind is AlphaKind.TIME_ONLY
        if time_only and problem.f_nl is None:
            trace = explicit_solver.solve(problem, record_spectral_radius=want_stability)
            if want_stability:
                report = report_from_rho(trace.rho, tol=cfg.stability_tol)
        else:
            trace = implicit_solver.solve(problem)
            if want_stability:
                if time_only:
                    report = stability_report(problem, tol=cfg.stability_tol)
                else:
                    report = stability_report_along_trace(
                        problem, trace, tol=cfg.stability_tol
                    )
                    print(
                        "warning: order depends on the state, so the stability "
                        "check holds only along the solved trajectory",
                        file=sys.stderr,
                    )
                    exit_code = EXIT_CONDITIONAL_STABILITY

    rows = None
    if "convergence" in cfg.outputs:
        if scn is None:
            raise ConfigError(
                "convergence studies need a named scenario with a reference solution"
            )
        rows = convergence_study(cfg.scenario_name, cfg.convergence_steps, cfg.T)

    plan = _plan_paths(cfg.outputs, cfg.out_path)
    for kind, path in plan.items():
        if kind == "trace":
            write_trace_csv(path, trace, rho=report.rho if report is not None else None)
        elif kind == "stability":
            write_stability_json(path, report)
        else:
            write_convergence_csv(path, rows)
    return exit_code


# argument parsing ------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vofde",
        description="Time-stepping solvers for oscillators with a "
        "variable-order fractional damping term.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("list", help="print the registered benchmark scenarios")

    run = sub.add_parser("run", help="execute a JSON run configuration")
    run.add_argument("--config", required=True, help="path to the JSON file")

    scn = sub.add_parser("scenario", help="run one registered scenario")
    scn.add_argument("--name", required=True, help="scenario name (see 'vofde list')")
    scn.add_argument("--h", required=True, type=float, help="step size")
    scn.add_argument("--T", type=float, default=None, help="horizon override")
    scn.add_argument(
        "--stability",
        action="store_true",
        help="also emit the spectral-radius stability report",
    )
    scn.add_argument(
        "--convergence",
        default=None,
        metavar="H1,H2,...",
        help="run a convergence study over these step sizes instead of "
        "(or in addition to) the trace",
    )
    scn.add_argument("--out", required=True, help="output path (see docs for multi-output naming)")
    return parser


def _scenario_args_to_config(args) -> RunConfig:
    outputs: list[str] = []
    steps: tuple[float, ...] = ()
    if args.convergence is not None:
        parts = [p for p in args.convergence.split(",") if p.strip()]
        try:
            steps = tuple(float(p) for p in parts)
        except ValueError as exc:
            raise ConfigError(f"bad --convergence list {args.convergence!r}") from exc
        if len(steps) < 2:
            raise ConfigError("--convergence needs at least two comma-separated step sizes")
        if any(s <= 0.0 for s in steps):
            raise ConfigError("--convergence step sizes must be positive")
        outputs.append("convergence")
    else:
        outputs.append("trace")
        if args.stability:
            outputs.append("stability")
    if args.convergence is not None and args.stability:
        raise ConfigError("--stability cannot be combined with --convergence")
    if not (args.h > 0.0 and math.isfinite(args.h)):
        raise ConfigError(f"--h must be positive, got {args.h}")
    if args.T is not None and not (args.T > 0.0 and math.isfinite(args.T)):
        raise ConfigError(f"--T must be positive, got {args.T}")
    return RunConfig(
        h=args.h,
        outputs=tuple(outputs),
        out_path=args.out,
        scenario_name=args.name,
        T=args.T,
        convergence_steps=steps,
    )


def _cmd_list() -> int:
    for name, desc in list_scenarios():
        print(f"{name:10s} {desc}")
    return EXIT_OK


def _cmd_run(args) -> int:
    try:
        with open(args.config, "r", encoding="utf-8") as f:
            data = json.load(f)
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}") from exc
    return _execute(parse_config(data))


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "list":
            return _cmd_list()
        if args.command == "run":
            return _cmd_run(args)
        return _execute(_scenario_args_to_config(args))
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (
        StepFailureError,
        OrderDomainError,
        DegenerateProblemError,
        ConvergenceError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
