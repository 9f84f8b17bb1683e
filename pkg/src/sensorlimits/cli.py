"""Command-line experiment runner.

Every experiment reads an optional YAML config (flat ``key: value``
mapping) and then applies ``--key value`` flag overrides.  Results are
written as CSV (stdout, or ``PREFIX.csv``) plus a JSON report
(``PREFIX.json``) when ``--out PREFIX`` is given.  Output bytes depend only
on the config; timing goes to stderr.

Exit codes: 0 success, 2 config error, 3 invariant violation, 4 resource cap.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

import numpy as np
import yaml

from .baselines import (
    heuristic_clearance_policy,
    mpc_kalman_rollout,
    solve_pomdp_exact,
)
from .bounds import (
    BOUND_CSV_HEADER,
    bound_csv_rows,
    generalized_fano_bound,
    horizon_sweep,
    optimize_f,
    single_step_bound,
)
from .divergence import GENERATOR_NAMES, get_generator
from .environments import ball_catching, lava_pomdp, load_pomdp, obstacle_world
from .environments.pomdp_io import PomdpFormatError
from .finverse import f_inverse, f_inverse_right
from .tasks import DiscreteTask, GaussianTask, ResourceCapError, SampledTask

__all__ = ["main", "ConfigError", "InvariantViolation", "load_config"]

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT, EXIT_CAP = 0, 2, 3, 4
INVARIANT_SLACK = 1e-9


class ConfigError(ValueError):
    pass


class InvariantViolation(RuntimeError):
    pass


# -- config schema -----------------------------------------------------------

def _float(v) -> float:
    if isinstance(v, bool):
        raise ValueError("expected a number")
    return float(v)


def _int(v) -> int:
    if isinstance(v, bool) or (isinstance(v, float) and not v.is_integer()):
        raise ValueError("expected an integer")
    return int(v)


def _bool(v) -> bool:
    if isinstance(v, bool):
        return v
    if isinstance(v, str) and v.lower() in ("true", "yes", "1", "false", "no", "0"):
        return v.lower() in ("true", "yes", "1")
    raise ValueError("expected true or false")


def _str(v) -> str:
    if not isinstance(v, str):
        raise ValueError("expected a string")
    return v


def _list_of(item: Callable) -> Callable:
    def parse(v):
        if isinstance(v, str):
            v = [tok for tok in v.split(",") if tok.strip()]
        elif not isinstance(v, (list, tuple)):
            v = [v]
        out = [item(x) for x in v]
        if not out:
            raise ValueError("list must be nonempty")
        return out
    return parse


def _f_selection(v):
    names = _list_of(lambda x: str(x).strip())(v)
    if names == ["all"]:
        return list(GENERATOR_NAMES)
    for n in names:
        if n not in GENERATOR_NAMES and n != "optimize":
            raise ValueError(f"unknown generator {n!r}; choose from {', '.join(GENERATOR_NAMES)}, all, optimize")
    return names


def _num_from_flag(parse):
    # flags arrive as strings; YAML scalars already carry their type
    def inner(v):
        if isinstance(v, str):
            try:
                v = yaml.safe_load(v)
            except yaml.YAMLError:
                raise ValueError("could not parse value") from None
        return parse(v)
    return inner


@dataclass(frozen=True)
class Key:
    parse: Callable
    default: Any
    check: Callable | None = None


def _in_unit(v):
    vals = v if isinstance(v, list) else [v]
    return all(0.0 <= x <= 1.0 for x in vals) or "values must lie in [0, 1]"


def _open_unit(v):
    return 0.0 < v < 1.0 or "must lie in (0, 1)"


def _nonneg(v):
    vals = v if isinstance(v, list) else [v]
    return all(x >= 0 for x in vals) or "values must be nonnegative"


def _positive(v):
    vals = v if isinstance(v, list) else [v]
    return all(x > 0 for x in vals) or "values must be positive"


SCHEMAS: dict[str, dict[str, Key]] = {
    "lava-sweep": {
        "p_correct": Key(_list_of(_num_from_flag(_float)), [round(0.2 + 0.1 * i, 10) for i in range(9)], _in_unit),
        "f": Key(_f_selection, ["kl"]),
        "horizon": Key(_num_from_flag(_int), 5, _positive),
        "fano": Key(_bool, True),
        "restarts": Key(_num_from_flag(_int), 8, _positive),
        "n_pieces": Key(_num_from_flag(_int), 10, lambda v: v >= 2 or "must be at least 2"),
        "maxfev": Key(_num_from_flag(_int), 400, _positive),
        "seed": Key(_num_from_flag(_int), 0, _nonneg),
    },
    "catch-sweep": {
        "eta": Key(_list_of(_num_from_flag(_float)), [0.0, 0.25, 0.5, 1.0, 2.0, 4.0], _nonneg),
        "f": Key(_f_selection, ["kl"]),
        "horizon": Key(_num_from_flag(_int), 5, _positive),
        "episodes": Key(_num_from_flag(_int), 100, lambda v: v >= 2 or "must be at least 2"),
        "eta_scaling": Key(_str, "covariance", lambda v: v in ("covariance", "std") or "must be covariance or std"),
        "seed": Key(_num_from_flag(_int), 0, _nonneg),
    },
    "obstacle-bound": {
        "n_rays": Key(_list_of(_num_from_flag(_int)), [5], _positive),
        "eta": Key(_num_from_flag(_float), 0.3, _positive),
        "p_miss": Key(_num_from_flag(_float), 0.05, lambda v: 0.0 <= v < 1.0 or "must lie in [0, 1)"),
        "max_range": Key(_num_from_flag(_float), 1.5, _positive),
        "radius": Key(_num_from_flag(_float), 0.25, _positive),
        "delta": Key(_num_from_flag(_float), 0.05, _open_unit),
        "reward_samples": Key(_num_from_flag(_int), 2000, _positive),
        "batch_size": Key(_num_from_flag(_int), 200, lambda v: v >= 2 or "must be at least 2"),
        "num_batches": Key(_num_from_flag(_int), 2000, _positive),
        "episodes": Key(_num_from_flag(_int), 1000, lambda v: v >= 2 or "must be at least 2"),
        "seed": Key(_num_from_flag(_int), 0, _nonneg),
    },
    "optimize-f": {
        "p_correct": Key(_num_from_flag(_float), 0.2, _in_unit),
        "horizon": Key(_num_from_flag(_int), 5, _positive),
        "n_pieces": Key(_num_from_flag(_int), 10, lambda v: v >= 2 or "must be at least 2"),
        "restarts": Key(_num_from_flag(_int), 8, _positive),
        "maxfev": Key(_num_from_flag(_int), 400, _positive),
        "seed": Key(_num_from_flag(_int), 0, _nonneg),
    },
    "pomdp-bound": {
        "f": Key(_f_selection, ["kl"]),
        "horizon": Key(_num_from_flag(_int), None, _positive),
        "solve": Key(_bool, True),
    },
}


def load_config(path) -> tuple[dict, dict]:
    """Parse a flat YAML mapping; returns ``(values, line_numbers)``."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from None
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{path}:{mark.line + 1}" if mark is not None else str(path)
        raise ConfigError(f"{where}: invalid YAML: {getattr(exc, 'problem', exc)}") from None
    if data is None:
        return {}, {}
    if not isinstance(data, dict) or not isinstance(node, yaml.MappingNode):
        raise ConfigError(f"{path}:1: config must be a mapping of key: value entries")
    lines = {}
    for key_node, _ in node.value:
        lines[key_node.value] = key_node.start_mark.line + 1
    return data, lines


def resolve_config(command: str, path=None, overrides: dict | None = None) -> dict:
    schema = SCHEMAS[command]
    raw, lines = load_config(path) if path else ({}, {})
    if "experiment" in raw:
        if raw.pop("experiment") != command:
            raise ConfigError(f"{path}:{lines.get('experiment', 1)}: config is for a different experiment")
    values = {}
    sources = {}
    for key, value in raw.items():
        if key not in schema:
            raise ConfigError(f"{path}:{lines.get(key, 1)}: unknown key {key!r} for {command}")
        values[key] = value
        sources[key] = f"{path}:{lines.get(key, 1)}"
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value
            sources[key] = f"--{key.replace('_', '-')}"
    out = {}
    for key, spec in schema.items():
        if key not in values:
            out[key] = spec.default
            continue
        try:
            parsed = spec.parse(values[key])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{sources[key]}: {key}: {exc}") from None
        if spec.check is not None:
            ok = spec.check(parsed)
            if ok is not True:
                raise ConfigError(f"{sources[key]}: {key}: {ok}")
        out[key] = parsed
    return out


# -- output helpers ---------------------------------------------------------------

def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


BASELINE_HEADER = ("param", "policy", "mean", "stderr", "episodes", "seed")


def _emit(args, header, rows, report: dict, horizon_rows=None, baseline_rows=None) -> None:
    text = _csv_text(header, rows)
    payload = json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n"
    if args.out:
        prefix = Path(args.out)
        prefix.parent.mkdir(parents=True, exist_ok=True)
        Path(f"{prefix}.csv").write_text(text, encoding="utf-8")
        Path(f"{prefix}.json").write_text(payload, encoding="utf-8")
        if horizon_rows is not None:
            Path(f"{prefix}.horizons.csv").write_text(_csv_text(BOUND_CSV_HEADER, horizon_rows), encoding="utf-8")
        if baseline_rows is not None:
            Path(f"{prefix}.baselines.csv").write_text(_csv_text(BASELINE_HEADER, baseline_rows), encoding="utf-8")
    else:
        sys.stdout.write(text)


def _check(baseline: float, bound: float, label: str, slack: float = INVARIANT_SLACK) -> None:
    if not baseline <= bound + slack:
        raise InvariantViolation(f"{label}: baseline {baseline!r} exceeds bound {bound!r}")


def _map(fn, items, workers: int):
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# -- experiments --------------------------------------------------------------------

LAVA_HEADER = ("p_correct", "f", "H", "bound", "confidence", "optimum", "one_step_bound", "fano_bound")


def _lava_point(job):
    p, cfg = job
    model = lava_pomdp(p, horizon=cfg["horizon"])
    task = DiscreteTask(model)
    _, optimum = solve_pomdp_exact(model)
    kl = get_generator("kl")
    one_step_task = DiscreteTask(model.with_horizon(1))
    r_perp = float(one_step_task.expected_rewards(0).max())
    mi = float(one_step_task.informativity(0, kl)[0])
    rows, details, hrows = [], {}, []
    for name in cfg["f"]:
        if name == "optimize":
            res = optimize_f(task, n_pieces=cfg["n_pieces"], restarts=cfg["restarts"], rng_seed=cfg["seed"],
                             maxfev=cfg["maxfev"])
            f = res.generator
            report = horizon_sweep(task, f)
            label = "optimize"
            extra = {"slopes": f.slopes, "initial_bound": res.initial_bound}
        else:
            f = get_generator(name)
            report = horizon_sweep(task, f)
            label = name
            extra = {}
        one_step = fano = ""
        if cfg["fano"]:
            info_f = float(one_step_task.informativity(0, f)[0])
            one_step = single_step_bound(f, r_perp, info_f)
            fano = generalized_fano_bound(mi, r_perp) if 0.0 < r_perp < 1.0 else ""
        rows.append((p, label, report.best_horizon, report.best_bound, report.confidence, optimum, one_step, fano))
        details[label] = dict(report.to_dict(), **extra)
        report.f_name = label
        hrows.extend(bound_csv_rows(p, report))
        _check(optimum, report.best_bound, f"lava p_correct={p} f={label}")
    return p, rows, details, hrows


def _collect(results):
    results = sorted(results, key=lambda x: x[0])
    rows = sorted((r for _, rs, _, _ in results for r in rs), key=lambda r: (r[0], r[1]))
    hrows = sorted((r for _, _, _, hs in results for r in hs), key=lambda r: (r[0], r[1], r[2]))
    points = {repr(k): d for k, _, d, _ in results}
    return rows, hrows, points


def run_lava_sweep(cfg: dict, workers: int = 1):
    results = _map(_lava_point, [(p, cfg) for p in cfg["p_correct"]], workers)
    rows, hrows, points = _collect(results)
    report = {"experiment": "lava-sweep", "config": cfg, "points": points}
    # exact optimum: no sampling, so no episodes or seed
    brows = sorted({(r[0], "pomdp-exact", r[5], 0.0, "", "") for r in rows})
    return LAVA_HEADER, rows, report, hrows, brows


CATCH_HEADER = ("eta", "f", "H", "bound", "mpc_mean", "mpc_stderr")


def _catch_point(job):
    eta, cfg = job
    system = ball_catching(eta, horizon=cfg["horizon"], eta_scaling=cfg["eta_scaling"])
    task = GaussianTask(system)
    mean, stderr = mpc_kalman_rollout(system, cfg["episodes"], cfg["seed"])
    rows, details, hrows = [], {}, []
    for name in cfg["f"]:
        report = horizon_sweep(task, get_generator(name))
        rows.append((eta, name, report.best_horizon, report.best_bound, mean, stderr))
        details[name] = dict(report.to_dict(), mpc_mean=mean, mpc_stderr=stderr)
        hrows.extend(bound_csv_rows(eta, report))
        _check(mean, report.best_bound, f"catch eta={eta} f={name}")
    return eta, rows, details, hrows


def run_catch_sweep(cfg: dict, workers: int = 1):
    for name in cfg["f"]:
        if name != "kl":
            raise ConfigError(f"--f: catch-sweep supports only the kl generator, got {name!r}")
    results = _map(_catch_point, [(eta, cfg) for eta in cfg["eta"]], workers)
    rows, hrows, points = _collect(results)
    report = {"experiment": "catch-sweep", "config": cfg, "points": points}
    brows = sorted({(r[0], "mpc-kalman", r[4], r[5], cfg["episodes"], cfg["seed"]) for r in rows})
    return CATCH_HEADER, rows, report, hrows, brows


OBSTACLE_HEADER = ("n_rays", "eta", "p_miss", "bound", "confidence", "r_perp", "informativity",
                   "heuristic_mean", "heuristic_stderr")


def _obstacle_point(job):
    n_rays, cfg = job
    env = obstacle_world(n_rays, cfg["eta"], cfg["p_miss"], max_range=cfg["max_range"], rng_seed=cfg["seed"],
                         radius=cfg["radius"])
    task = SampledTask(env, delta=cfg["delta"], reward_samples=cfg["reward_samples"],
                       batch_size=cfg["batch_size"], num_batches=cfg["num_batches"], rng_seed=cfg["seed"])
    report = horizon_sweep(task, get_generator("kl"))
    r_perp = float(task.expected_rewards(0).max())
    info = float(task.informativity(0, get_generator("kl"))[0])
    mean, stderr = heuristic_clearance_policy(env, cfg["episodes"], cfg["seed"])
    _check(mean, report.best_bound, f"obstacle n_rays={n_rays}", slack=0.0)
    row = (n_rays, cfg["eta"], cfg["p_miss"], report.best_bound, report.confidence, r_perp, info, mean, stderr)
    details = dict(report.to_dict(), heuristic_mean=mean, heuristic_stderr=stderr,
                   diagnostics=task.diagnostics, per_action_reward_bounds=task.expected_rewards(0)[0])
    return n_rays, [row], details, bound_csv_rows(n_rays, report)


def run_obstacle_bound(cfg: dict, workers: int = 1):
    results = _map(_obstacle_point, [(n, cfg) for n in cfg["n_rays"]], workers)
    rows, hrows, points = _collect(results)
    report = {"experiment": "obstacle-bound", "config": cfg, "points": points}
    brows = [(r[0], "clearance-heuristic", r[7], r[8], cfg["episodes"], cfg["seed"]) for r in rows]
    return OBSTACLE_HEADER, rows, report, hrows, brows


def run_optimize_f(cfg: dict):
    model = lava_pomdp(cfg["p_correct"], horizon=cfg["horizon"])
    task = DiscreteTask(model)
    res = optimize_f(task, n_pieces=cfg["n_pieces"], restarts=cfg["restarts"], rng_seed=cfg["seed"],
                     maxfev=cfg["maxfev"])
    _, optimum = solve_pomdp_exact(model)
    _check(optimum, res.bound, "optimize-f")
    return {"experiment": "optimize-f", "config": cfg, "bound": res.bound, "initial_bound": res.initial_bound,
            "optimum": optimum, "slopes": res.generator.slopes, "params": res.params,
            "evaluations": res.evaluations}


POMDP_HEADER = ("f", "H", "bound", "confidence", "optimum")


def run_pomdp_bound(cfg: dict, path):
    try:
        model = load_pomdp(path)
    except PomdpFormatError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    horizon = cfg["horizon"] or model.horizon
    model = model.with_horizon(horizon)
    task = DiscreteTask(model)
    optimum = solve_pomdp_exact(model)[1] if cfg["solve"] else None
    rows, details, hrows = [], {}, []
    for name in cfg["f"]:
        if name == "optimize":
            res = optimize_f(task)
            report = horizon_sweep(task, res.generator)
            report.f_name = name
        else:
            report = horizon_sweep(task, get_generator(name))
        if optimum is not None:
            _check(optimum, report.best_bound, f"pomdp f={name}")
        rows.append((name, report.best_horizon, report.best_bound, report.confidence,
                     "" if optimum is None else optimum))
        details[name] = report.to_dict()
        hrows.extend(bound_csv_rows(model.name, report))
    rows.sort(key=lambda r: r[0])
    hrows.sort(key=lambda r: (r[1], r[2]))
    report = {"experiment": "pomdp-bound", "config": cfg, "model": model.name, "bounds": details,
              "optimum": optimum}
    brows = None if optimum is None else [(model.name, "pomdp-exact", optimum, 0.0, "", "")]
    return POMDP_HEADER, rows, report, hrows, brows


# -- argument parsing -----------------------------------------------------------------

def _add_schema_flags(parser, command):
    for key in SCHEMAS[command]:
        parser.add_argument(f"--{key.replace('_', '-')}", dest=f"opt_{key}", default=None, metavar="VALUE")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sensorlimits",
                                     description="Upper bounds on achievable reward under sensor limits.")
    sub = parser.add_subparsers(dest="command", required=True)
    for command, helptext in (("lava-sweep", "bounds and exact optima on the lava POMDP"),
                              ("catch-sweep", "ball-catching bounds and MPC baseline over noise scales"),
                              ("obstacle-bound", "sampled bound and heuristic baseline for obstacle avoidance"),
                              ("optimize-f", "minimize the lava bound over piecewise-linear generators"),
                              ("pomdp-bound", "bound a POMDP loaded from a text file")):
        p = sub.add_parser(command, help=helptext)
        if command == "pomdp-bound":
            p.add_argument("file", help="POMDP description file")
        p.add_argument("--config", help="YAML config file")
        p.add_argument("--out", help="write PREFIX.csv and PREFIX.json")
        if command in ("lava-sweep", "catch-sweep", "obstacle-bound"):
            p.add_argument("--workers", type=int, default=1, help="worker processes for grid points")
        _add_schema_flags(p, command)

    p = sub.add_parser("finverse", help="solve a Bernoulli f-inverse")
    p.add_argument("--f", required=True, choices=GENERATOR_NAMES)
    p.add_argument("--q", required=True, type=float, help="reference mean (left) or empirical mean (right)")
    p.add_argument("--c", required=True, type=float, help="divergence budget")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--right", action="store_true", help="solve the right inverse instead")
    return parser


def _overrides(args, command):
    return {key: getattr(args, f"opt_{key}") for key in SCHEMAS[command]}


def _dispatch(args) -> int:
    if args.command == "finverse":
        if not (0.0 <= args.q <= 1.0) or not args.c >= 0.0 or not args.tol > 0.0:
            raise ConfigError("--q must lie in [0, 1], --c must be nonnegative and --tol positive")
        solver = f_inverse_right if args.right else f_inverse
        sol = solver(get_generator(args.f), args.q, args.c, tol=args.tol)
        out = {"f": args.f, "q": args.q, "c": args.c, "side": "right" if args.right else "left",
               "value": sol.value, "residual": sol.residual, "iterations": sol.iterations,
               "tolerance": sol.tolerance}
        sys.stdout.write(json.dumps(_jsonable(out), sort_keys=True) + "\n")
        return EXIT_OK

    cfg = resolve_config(args.command, args.config, _overrides(args, args.command))
    start = time.perf_counter()
    if args.command == "optimize-f":
        report = run_optimize_f(cfg)
        payload = json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n"
        if args.out:
            Path(f"{args.out}.json").parent.mkdir(parents=True, exist_ok=True)
            Path(f"{args.out}.json").write_text(payload, encoding="utf-8")
        else:
            sys.stdout.write(payload)
    else:
        if args.command == "lava-sweep":
            result = run_lava_sweep(cfg, args.workers)
        elif args.command == "catch-sweep":
            result = run_catch_sweep(cfg, args.workers)
        elif args.command == "obstacle-bound":
            result = run_obstacle_bound(cfg, args.workers)
        else:
            result = run_pomdp_bound(cfg, args.file)
        _emit(args, *result)
    print(f"[{args.command}] finished in {time.perf_counter() - start:.2f} s", file=sys.stderr)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except ResourceCapError as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return EXIT_CAP


if __name__ == "__main__":
    sys.exit(main())
