"""Command line: `hwg list`, `hwg run <scenario>`, `hwg verify <check>`.

Exit status: 0 all verdicts pass, 1 a check failed (failing verdicts are
printed as JSON), 2 bad configuration or arguments, 3 capacity exceeded.
"""
from __future__ import annotations

import argparse
import json
import sys

from .errors import CapacityError, HWGError, InvalidArgument, PreconditionError
from .io import ConfigError, load_config, render, to_json, write_all

OK, CHECK_FAILED, BAD_CONFIG, CAPACITY = 0, 1, 2, 3

CONFIG_KEYS = {"scenario", "tau", "steps", "horizon", "seed", "out", "format", "params"}
EXTRA_FLAGS = ("eta", "t_tau", "loss", "alpha", "lr", "draws", "declared_L", "grid_k")


def _parser():
    ap = argparse.ArgumentParser(prog="hwg", description="Hebbian-Wasserstein dynamics lab")
    sub = ap.add_subparsers(dest="cmd", required=True)
    sub.add_parser("list", help="list scenarios")

    run = sub.add_parser("run", help="run a scenario and export its tables")
    run.add_argument("scenario", nargs="?")
    run.add_argument("--config")
    run.add_argument("--tau", type=float)
    run.add_argument("--steps", type=int)
    run.add_argument("--horizon", type=float)
    run.add_argument("--seed", type=int)
    run.add_argument("--out")
    run.add_argument("--format", choices=("csv", "json"))
    run.add_argument("--eta", type=float)
    run.add_argument("--t-tau", dest="t_tau", type=float)
    run.add_argument("--loss", choices=("linear", "quadratic"))
    run.add_argument("--alpha", type=float)
    run.add_argument("--lr", type=float)
    run.add_argument("--draws", type=int)
    run.add_argument("--declared-L", dest="declared_L", type=float)
    run.add_argument("--grid-k", dest="grid_k", type=int)

    ver = sub.add_parser("verify", help="run one family of inequality checks")
    ver.add_argument("check", choices=("edi", "freezing", "groenwall", "stability", "tau-refine",
                                       "spectral"))
    ver.add_argument("--seed", type=int, default=0)
    ver.add_argument("--tau", type=float)
    ver.add_argument("--declared-L", dest="declared_L", type=float)
    ver.add_argument("--strong", action="store_true",
                     help="use the strongly coupled sleep-mode variant")
    ver.add_argument("--out")
    return ap


def _check_seed(seed):
    if not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed < 2 ** 64:
        raise ConfigError("seed must be an integer in [0, 2^64)")
    return seed


def build_run(args):
    """Merge config file and flags (flags win) and validate before any work."""
    from .scenarios import SCENARIOS, RunParams
    cfg = load_config(args.config) if args.config else {}
    unknown = set(cfg) - CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    params = cfg.get("params", {})
    if not isinstance(params, dict):
        raise ConfigError("params must be an object")
    name = args.scenario or cfg.get("scenario")
    if name not in SCENARIOS:
        raise ConfigError(f"unknown scenario {name!r}")
    pick = lambda key: getattr(args, key) if getattr(args, key) is not None else cfg.get(key)
    tau, steps, horizon = pick("tau"), pick("steps"), pick("horizon")
    if tau is not None and not (isinstance(tau, (int, float)) and not isinstance(tau, bool) and tau > 0):
        raise ConfigError("tau must be a positive number")
    if steps is not None and not (isinstance(steps, int) and not isinstance(steps, bool) and steps >= 0):
        raise ConfigError("steps must be a non-negative integer")
    if horizon is not None and not (isinstance(horizon, (int, float)) and horizon >= 0):
        raise ConfigError("horizon must be a non-negative number")
    seed = _check_seed(pick("seed") if pick("seed") is not None else 0)
    fmt = pick("format") or "csv"
    if fmt not in ("csv", "json"):
        raise ConfigError(f"unknown format {fmt!r}")
    out = pick("out")
    if out is not None and not isinstance(out, str):
        raise ConfigError("out must be a path string")
    extra = dict(params)
    for key in EXTRA_FLAGS:
        if getattr(args, key, None) is not None:
            extra[key] = getattr(args, key)
    rp = RunParams(float(tau) if tau is not None else None, steps,
                   float(horizon) if horizon is not None else None, seed, extra)
    return name, rp, out, fmt


def _report(verdicts, out_stream):
    failed = [v for v in verdicts if not v["pass"]]
    if failed:
        out_stream.write(to_json(failed))
        return CHECK_FAILED
    return OK


def cmd_list(_args):
    from .scenarios import SCENARIOS
    for s in SCENARIOS.values():
        print(f"{s.name}\t{s.description}")
    return OK


def cmd_run(args):
    from .scenarios import run_scenario
    name, rp, out, fmt = build_run(args)
    tables, verdicts = run_scenario(name, rp)
    if out:
        files = render(name, tables, verdicts, fmt)
        for path in write_all(out, files):
            print(path)
    else:
        sys.stdout.write(to_json(verdicts))
    return _report(verdicts, sys.stdout if out else sys.stderr)


def cmd_verify(args):
    from .scenarios import VERIFIERS
    kw = {"seed": _check_seed(args.seed), "declared_L": args.declared_L, "strong": args.strong}
    if args.tau is not None:
        if not args.tau > 0:
            raise ConfigError("tau must be positive")
        kw["tau"] = args.tau
    verdicts = VERIFIERS[args.check](**kw)
    if args.out:
        write_all(args.out, {f"verify-{args.check}.json": to_json(verdicts)})
    code = _report(verdicts, sys.stdout)
    if code == OK:
        print(json.dumps({"check": args.check, "verdicts": len(verdicts), "pass": True}))
    return code


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    handler = {"list": cmd_list, "run": cmd_run, "verify": cmd_verify}[args.cmd]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"hwg: {exc}", file=sys.stderr)
        return BAD_CONFIG
    except CapacityError as exc:
        print(f"hwg: capacity exceeded: {exc}", file=sys.stderr)
        return CAPACITY
    except PreconditionError as exc:
        print(f"hwg: precondition failed: {exc}", file=sys.stderr)
        return CHECK_FAILED
    except InvalidArgument as exc:
        print(f"hwg: invalid argument: {exc}", file=sys.stderr)
        return BAD_CONFIG
    except HWGError as exc:
        print(f"hwg: {exc}", file=sys.stderr)
        return CHECK_FAILED


if __name__ == "__main__":
    sys.exit(main())
