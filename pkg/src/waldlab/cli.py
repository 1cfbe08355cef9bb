"""Command-line front end: ``waldlab run | suite | list``.

Exit codes: 0 every claim passed, 1 some claim failed, 2 invalid
configuration, 3 some divergence verdict came out INCONCLUSIVE (takes
precedence over 1), 4 input/output failure.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

from .experiments import REGISTRY, SUITE, ConfigError, ExperimentReport, run_experiment
from .parallel import WORKERS_ENV, default_workers

EXIT_OK, EXIT_FAILED, EXIT_CONFIG, EXIT_INCONCLUSIVE, EXIT_IO = 0, 1, 2, 3, 4
SEED_MAX = 2**64 - 1
DEFAULT_SEED = 1

# flag name -> parameter key it overrides
PARAM_FLAGS = {"alpha": "alpha", "c": "c", "epsilon": "epsilon", "t": "t", "r": "r", "mu": "mu"}
CONFIG_KEYS = {"experimentId", "seed", "parameters"}


class IOFailure(Exception):
    """Reading a config or writing outputs failed."""


def _no_duplicates(pairs):
    out = {}
    for key, value in pairs:
        if key in out:
            raise ConfigError(f"duplicate key {key!r} in config file")
        out[key] = value
    return out


def load_config(path: str | os.PathLike) -> dict:
    """Parse a JSON config; duplicate or unknown top-level keys are errors."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IOFailure(f"cannot read config {path}: {exc}") from None
    try:
        cfg = json.loads(text, object_pairs_hook=_no_duplicates)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(cfg) - CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(sorted(unknown))}")
    if "parameters" in cfg and not isinstance(cfg["parameters"], dict):
        raise ConfigError("parameters must be an object")
    return cfg


def _check_seed(seed) -> int:
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed <= SEED_MAX:
        raise ConfigError(f"seed must be an integer in [0, 2^64), got {seed!r}")
    return seed


def build_run_config(args) -> dict:
    """Merge defaults, config file and flags (flags win) into {experimentId, seed, parameters}."""
    cfg = load_config(args.config) if args.config else {}
    exp_id = args.experiment or cfg.get("experimentId")
    if exp_id is None:
        raise ConfigError("experiment id missing: pass --experiment or set experimentId in the config")
    if cfg.get("experimentId") not in (None, exp_id):
        raise ConfigError(f"experimentId {cfg['experimentId']!r} in config conflicts with --experiment {exp_id!r}")
    if exp_id not in REGISTRY:
        raise ConfigError(f"experimentId: unknown experiment {exp_id!r}; run 'waldlab list'")
    spec = REGISTRY[exp_id]
    params = dict(cfg.get("parameters", {}))
    seed = _check_seed(args.seed if args.seed is not None else cfg.get("seed", DEFAULT_SEED))
    if args.samples is not None:
        params[spec.samples_key] = args.samples
    for flag, key in PARAM_FLAGS.items():
        value = getattr(args, flag)
        if value is None:
            continue
        if key not in spec.defaults:
            raise ConfigError(f"--{flag} does not apply to experiment {exp_id}")
        params[key] = value
    return {"experimentId": exp_id, "seed": seed, "parameters": params}


def report_text(report: ExperimentReport) -> str:
    """Deterministic JSON: fixed key order, runtime kept in a sidecar file."""
    body = report.to_dict()
    body["runtimeSeconds"] = f"{report.experiment_id}.runtime"
    return json.dumps(body, indent=2, allow_nan=False) + "\n"


def curve_text(curve) -> str:
    lines = ["x,value,ciHalfWidth"]
    lines += [f"{float(x)!r},{float(v)!r},{float(h)!r}" for x, v, h in zip(curve.x, curve.value, curve.ci_half_width)]
    return "\n".join(lines) + "\n"


def write_outputs(report: ExperimentReport, out: str | os.PathLike) -> list[Path]:
    out = Path(out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        written = []
        target = out / f"{report.experiment_id}.report"
        target.write_text(report_text(report), encoding="utf-8")
        written.append(target)
        for curve in report.curves:
            path = out / f"{report.experiment_id}.{curve.name}.csv"
            path.write_text(curve_text(curve), encoding="utf-8")
            written.append(path)
        rt = out / f"{report.experiment_id}.runtime"
        rt.write_text(f"{report.runtime_seconds:.3f}\n", encoding="utf-8")
        written.append(rt)
    except OSError as exc:
        raise IOFailure(f"cannot write outputs to {out}: {exc}") from None
    return written


def status_of(report: ExperimentReport) -> int:
    if report.inconclusive:
        return EXIT_INCONCLUSIVE
    return EXIT_OK if report.passed else EXIT_FAILED


def _summary_line(report: ExperimentReport) -> str:
    ok = sum(c.passed for c in report.claims)
    return f"{report.experiment_id}: {ok}/{len(report.claims)} claims passed ({report.runtime_seconds:.1f} s)"


def _execute(run_cfg: dict, out, workers: int) -> int:
    report = run_experiment(run_cfg["experimentId"], run_cfg["parameters"], run_cfg["seed"], workers)
    write_outputs(report, out)
    print(_summary_line(report))
    for claim in report.failed_claims():
        print(f"  FAILED: {claim.description} (expected {claim.expected}, observed {claim.observed})")
    return status_of(report)


def _workers(args) -> int:
    if args.workers is not None:
        if args.workers < 1:
            raise ConfigError("workers must be >= 1")
        return args.workers
    try:
        return default_workers()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def cmd_run(args) -> int:
    return _execute(build_run_config(args), args.out, _workers(args))


def cmd_suite(args) -> int:
    workers = _workers(args)
    codes = []
    for exp_id in SUITE:
        cfg = {"experimentId": exp_id, "seed": _check_seed(args.seed if args.seed is not None else DEFAULT_SEED), "parameters": {}}
        codes.append(_execute(cfg, args.out, workers))
    if EXIT_INCONCLUSIVE in codes:
        return EXIT_INCONCLUSIVE
    return EXIT_FAILED if EXIT_FAILED in codes else EXIT_OK


def _show(value) -> str:
    if isinstance(value, float) and math.isfinite(value) and value == int(value) and abs(value) >= 1e4:
        return f"{int(value)}"
    return json.dumps(value)


def cmd_list(args) -> int:
    for exp_id in SUITE:
        spec = REGISTRY[exp_id]
        print(f"{exp_id}: {spec.summary}")
        for key, doc in spec.schema.items():
            print(f"    {key} = {_show(spec.defaults[key])}  ({doc})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="waldlab", description="Random-sum and last-exit experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment")
    run.add_argument("--experiment", help="experiment id (see 'waldlab list')")
    run.add_argument("--config", help="JSON file with keys experimentId, seed, parameters")
    run.add_argument("--seed", type=int, help=f"64-bit seed (default {DEFAULT_SEED})")
    run.add_argument("--samples", type=int, help="Monte Carlo sample size (paths per n for the probes)")
    run.add_argument("--alpha", type=float, help="moment order in (1, 2]")
    run.add_argument("--c", type=float, help="threshold or exponential rate")
    run.add_argument("--epsilon", type=float, help="deviation scale for the probes")
    run.add_argument("--t", type=float, help="moment order for the weighted probe")
    run.add_argument("--r", type=float, help="summability exponent for the weighted probe")
    run.add_argument("--mu", type=float, help="index budget for prophet-gap")
    run.add_argument("--workers", type=int, help=f"worker processes (default ${WORKERS_ENV} or CPU count)")
    run.add_argument("--out", required=True, help="output directory")
    run.set_defaults(func=cmd_run)

    suite = sub.add_parser("suite", help="run every experiment with defaults")
    suite.add_argument("--out", required=True, help="output directory")
    suite.add_argument("--seed", type=int, help=f"64-bit seed (default {DEFAULT_SEED})")
    suite.add_argument("--workers", type=int, help=f"worker processes (default ${WORKERS_ENV} or CPU count)")
    suite.set_defaults(func=cmd_suite)

    lst = sub.add_parser("list", help="list experiment ids and parameters")
    lst.set_defaults(func=cmd_list)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (IOFailure, OSError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
