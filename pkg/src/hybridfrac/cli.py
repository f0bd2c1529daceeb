"""Command-line entry point.

Config files are JSON; any flag given on the command line overrides the
corresponding config value. A config names either a built-in ``model`` or an
inline ``system``::

    {"system": {"states": [{"name": "y", "order": 0.5, "init": [0], "rhs": "1"}],
                "params": {}},
     "T": 1, "h": 0.001, "solver": {"tol": 1e-12, "mode": "marching"}}

Exit codes: 0 ok, 1 config error, 2 solver failure, 3 table bound failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .basis import Grid, hf_from_function
from .expr import ExprSyntaxError, UnboundVariableError, compile_rhs, evaluate, parse, variables
from .models import get_model, list_models, model_entry
from .opmatrix import build_generalized, frac_integrate
from .oracles import OracleError, error_report, exact_solutions, pece_solve, rk4_solve
from .solver import FractionalSystem, ModelError, SolveConfig, SolverError, solve_hf
from . import tables as tables_mod

log = logging.getLogger("hybridfrac")

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_BOUNDS = 0, 1, 2, 3

BUILTIN_FUNCTIONS = {"ramp": "t", "unit": "1", "sine": "sin(t)", "exp": "exp(t)"}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    model: str | None = None
    system: dict | None = None
    params: dict = field(default_factory=dict)
    orders: list | None = None
    T: float = 1.0
    h: float | None = None
    m: int | None = None
    tol: float = 1e-12
    max_iters: int = 50
    mode: str = "marching"
    lipschitz: float | None = None
    out: str | None = None


def format_number(v: float) -> str:
    return f"{v:.15g}"


def write_csv(path: str | None, header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format_number(float(v)) for v in row])
    text = buf.getvalue()
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)
    return text


def read_csv(path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


def sidecar_path(out: str | None) -> Path | None:
    if out is None or out == "-":
        return None
    p = Path(out)
    return p.with_suffix(".json") if p.suffix else p.with_name(p.name + ".json")


def _orders_from_flags(args) -> list | float | None:
    given = [args.alpha, args.beta, args.gamma]
    if all(v is None for v in given):
        return None
    if args.beta is None and args.gamma is None:
        return args.alpha
    if any(v is None for v in given[: max(i for i, v in enumerate(given) if v is not None) + 1]):
        raise ConfigError("--beta/--gamma need every earlier order flag as well")
    return [v for v in given if v is not None]


def load_run_config(args) -> RunConfig:
    raw: dict[str, Any] = {}
    if getattr(args, "config", None):
        try:
            raw = json.loads(Path(args.config).read_text())
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {args.config}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError("config root must be a JSON object")
    solver = raw.get("solver", {})
    cfg = RunConfig(
        model=raw.get("model"),
        system=raw.get("system"),
        params=dict(raw.get("params", {})),
        orders=raw.get("orders"),
        T=float(raw.get("T", 1.0)),
        h=raw.get("h"),
        m=raw.get("m"),
        tol=float(solver.get("tol", 1e-12)),
        max_iters=int(solver.get("max_iters", 50)),
        mode=solver.get("mode", "marching"),
        lipschitz=solver.get("lipschitz"),
        out=raw.get("out"),
    )
    # flags win over the file
    if getattr(args, "model", None):
        cfg.model, cfg.system = args.model, None
    for kv in getattr(args, "param", None) or []:
        key, sep, val = kv.partition("=")
        if not sep:
            raise ConfigError(f"--param expects key=value, got {kv!r}")
        try:
            cfg.params[key] = float(val)
        except ValueError:
            raise ConfigError(f"--param {key}: {val!r} is not a number") from None
    flag_orders = _orders_from_flags(args) if hasattr(args, "alpha") else None
    if flag_orders is not None:
        cfg.orders = flag_orders
    if getattr(args, "T", None) is not None:
        cfg.T = args.T
    if getattr(args, "h", None) is not None:
        cfg.h, cfg.m = args.h, None
    if getattr(args, "m", None) is not None:
        cfg.m, cfg.h = args.m, None
    if getattr(args, "tol", None) is not None:
        cfg.tol = args.tol
    if getattr(args, "mode", None) is not None:
        cfg.mode = args.mode
    if getattr(args, "out", None) is not None:
        cfg.out = args.out

    if (cfg.model is None) == (cfg.system is None):
        raise ConfigError("give exactly one of a model name or an inline system")
    if cfg.h is not None and not float(cfg.h) > 0:
        raise ConfigError(f"step h must be positive, got {cfg.h}")
    if cfg.m is not None and (int(cfg.m) != cfg.m or cfg.m < 1):
        raise ConfigError(f"m must be a positive integer, got {cfg.m}")
    if cfg.h is None and cfg.m is None:
        raise ConfigError("give a step with --h or a subinterval count with --m")
    if not cfg.T > 0:
        raise ConfigError(f"horizon T must be positive, got {cfg.T}")
    return cfg


def build_system(cfg: RunConfig) -> FractionalSystem:
    if cfg.model is not None:
        try:
            return get_model(cfg.model, cfg.params, cfg.orders, T=cfg.T)
        except KeyError as exc:
            raise ConfigError(exc.args[0]) from None
    spec = cfg.system
    states = spec.get("states")
    if not states:
        raise ConfigError("inline system needs a non-empty 'states' list")
    names, orders, inits, texts = [], [], [], []
    for k, st in enumerate(states):
        name = st.get("name", f"y{k + 1}")
        if "order" not in st:
            raise ConfigError(f"state {name!r} is missing its order")
        if "rhs" not in st:
            raise ConfigError(f"state {name!r} is missing its rhs expression")
        names.append(name)
        orders.append(float(st["order"]))
        init = st.get("init", [])
        inits.append(list(init) if isinstance(init, (list, tuple)) else [init])
        texts.append(st["rhs"])
    if cfg.orders is not None:
        orders = [float(cfg.orders)] * len(names) if np.isscalar(cfg.orders) else list(cfg.orders)
    params = {**spec.get("params", {}), **cfg.params}
    try:
        rhs = compile_rhs(texts, names, params)
    except UnboundVariableError as exc:
        raise ConfigError(f"unbound expression variable {exc.name!r}") from None
    except ExprSyntaxError as exc:
        raise ConfigError(f"expression syntax error: {exc}") from None
    return FractionalSystem(orders, inits, rhs, T=cfg.T, name=spec.get("name", "inline"),
                            state_names=names)


def solve_config(cfg: RunConfig) -> SolveConfig:
    return SolveConfig(
        m=cfg.m, h=cfg.h, newton_tol=cfg.tol, max_newton_iters=cfg.max_iters,
        mode=cfg.mode, lipschitz=cfg.lipschitz,
    )


def cmd_solve(args) -> int:
    cfg = load_run_config(args)
    system = build_system(cfg)
    res = solve_hf(system, solve_config(cfg))
    rows = np.column_stack([res.t, res.nodes])
    write_csv(cfg.out, ["t", *res.state_names], rows)
    side = sidecar_path(cfg.out)
    if side is not None:
        side.write_text(json.dumps({"system": system.name, "orders": system.orders.tolist(),
                                    "h": res.grid.h, "m": res.grid.m,
                                    **res.diagnostics.to_dict()}, indent=2))
    return EXIT_OK


def cmd_integrate(args) -> int:
    if args.h is None and args.m is None:
        raise ConfigError("give --h or --m")
    if args.alpha is None or not args.alpha > 0:
        raise ConfigError("--alpha must be a positive integration order")
    grid = Grid.from_T(args.T if args.T is not None else 1.0, m=args.m, h=args.h)
    text = BUILTIN_FUNCTIONS.get(args.f, args.f)
    try:
        ast = parse(text)
    except ExprSyntaxError as exc:
        raise ConfigError(f"expression syntax error: {exc}") from None
    extra = variables(ast) - {"t"}
    if extra:
        raise ConfigError(f"unbound expression variable {sorted(extra)[0]!r}")
    samples = np.array([evaluate(ast, {"t": tj}) for tj in grid.nodes])
    series = hf_from_function(lambda t: samples, grid)
    out = frac_integrate(series, build_generalized(args.alpha, grid))
    write_csv(args.out, ["t", f"J{args.alpha:g}_f"], np.column_stack([grid.nodes, out.node_values]))
    return EXIT_OK


def _oracle_nodes(name: str, system: FractionalSystem, cfg: RunConfig, grid: Grid) -> np.ndarray:
    if name == "rk4":
        return rk4_solve(system, grid).nodes
    if name == "pece":
        return pece_solve(system, grid).nodes
    if name == "exact":
        if cfg.model != "example-6.2" or not np.all(system.orders == 1.0):
            raise ConfigError("the exact oracle exists only for example-6.2 with unit orders")
        return exact_solutions("example-6.2")(grid.nodes)
    if name == "hf":
        return solve_hf(system, solve_config(cfg)).nodes
    raise ConfigError(f"unknown oracle {name!r}")


def cmd_compare(args) -> int:
    cfg = load_run_config(args)
    system = build_system(cfg)
    if args.oracle == "rk4" and not np.all(system.orders == 1.0):
        raise ConfigError("rk4 oracle requires every order to be 1")
    res = solve_hf(system, solve_config(cfg))
    ref = _oracle_nodes(args.oracle, system, cfg, res.grid)
    rep = error_report(res.nodes, ref)
    scale = np.abs(ref).max(axis=0)
    rel = np.where(scale > 0, rep.inf_norm / np.where(scale > 0, scale, 1), rep.inf_norm)
    write_csv(cfg.out, ["t", *(f"abs_err_{s}" for s in res.state_names)],
              np.column_stack([res.t, rep.abs_error]))
    summary = {
        "oracle": args.oracle,
        "states": res.state_names,
        "inf_norm": rep.inf_norm.tolist(),
        "max_relative_deviation": rel.tolist(),
        "pct_error_final": rep.pct_final.tolist(),
    }
    side = sidecar_path(cfg.out)
    if side is not None:
        side.write_text(json.dumps(summary, indent=2))
    print(json.dumps(summary), file=sys.stderr if cfg.out in (None, "-") else sys.stdout)
    return EXIT_OK


def cmd_tables(args) -> int:
    outdir = Path(args.out or ".")
    outdir.mkdir(parents=True, exist_ok=True)
    failures = []
    for tab in tables_mod.all_tables():
        write_csv(str(outdir / f"{tab.name}.csv"), tab.header, tab.rows)
        failures.extend(tab.failures)
        print(f"{tab.name}: {'ok' if tab.ok else 'FAILED'}")
    for f in failures:
        print(f, file=sys.stderr)
    return EXIT_BOUNDS if failures else EXIT_OK


def cmd_models(args) -> int:
    for name in list_models():
        e = model_entry(name)
        print(f"{name}  (states: {', '.join(e.states)}; default orders: "
              f"{', '.join(f'{a:g}' for a in e.default_orders)})")
        print(f"    {e.doc}")
        for k, v in e.defaults.items():
            print(f"    {k} = {v:g}")
    return EXIT_OK


def _add_common(p: argparse.ArgumentParser, orders=True):
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--model", help="built-in model name (see `models`)")
    p.add_argument("--param", action="append", metavar="KEY=VALUE", help="override a model parameter")
    step = p.add_mutually_exclusive_group()
    step.add_argument("--h", type=float, help="step size")
    step.add_argument("--m", type=int, help="number of subintervals")
    p.add_argument("--T", type=float, help="horizon (default 1)")
    if orders:
        p.add_argument("--alpha", type=float, help="order of state 1 (all states if alone)")
        p.add_argument("--beta", type=float, help="order of state 2")
        p.add_argument("--gamma", type=float, help="order of state 3")
    p.add_argument("--mode", choices=["marching", "global"])
    p.add_argument("--tol", type=float, help="Newton residual tolerance")
    p.add_argument("--out", help="output CSV path (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hybridfrac", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve a model or inline system")
    _add_common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("integrate", help="HF estimate of J^alpha f on a grid")
    p.add_argument("--f", default="t", help=f"expression in t or one of {sorted(BUILTIN_FUNCTIONS)}")
    p.add_argument("--alpha", type=float, required=True)
    step = p.add_mutually_exclusive_group()
    step.add_argument("--h", type=float)
    step.add_argument("--m", type=int)
    p.add_argument("--T", type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_integrate)

    p = sub.add_parser("compare", help="error table against an oracle")
    _add_common(p)
    p.add_argument("--oracle", choices=["rk4", "pece", "exact", "hf"], default="rk4")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("tables", help="reproduce the accuracy tables as CSV")
    p.add_argument("--out", help="output directory (default .)")
    p.set_defaults(func=cmd_tables)

    p = sub.add_parser("models", help="list built-in models")
    p.set_defaults(func=cmd_models)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ValueError, KeyError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"config error: {msg}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverError, ModelError, OracleError, ZeroDivisionError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
