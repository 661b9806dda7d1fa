"""Command-line entry point: ``swipt-harq <subcommand> [flags]``.

Values resolve as command-line flag, then the ``--config`` INI file (the
subcommand's section, then an ``experiment`` section for ``reproduce``, then
``[defaults]``), then built-in defaults.  ``SWIPT_HARQ_OUT`` sets the default
output directory.

Exit codes: 0 success, 1 configuration error, 2 acceptance deviation,
3 runtime failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import logging
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import experiments, solver_corr, solver_iid
from .errors import ConfigError, SwiptHarqError
from .experiments import ExperimentSpec, build_params
from .model import ReceiverState
from .policies import make_policy
from .simulate import DEFAULT_EPISODES, EstimateReport, estimate

log = logging.getLogger("swipt_harq")

EXIT_OK, EXIT_CONFIG, EXIT_DEVIATION, EXIT_RUNTIME = 0, 1, 2, 3
OUT_ENV = "SWIPT_HARQ_OUT"

# flag dest -> (config key, type)
_FIELDS = {
    "Ed": ("Ed", int), "e": ("e", int), "R0": ("R0", float), "R1": ("R1", float),
    "lam": ("lambda", float), "lam0": ("lambda0", float), "lam1": ("lambda1", float),
    "policy": ("policy", str), "p": ("p", float), "episodes": ("episodes", int),
    "seed": ("seed", int), "workers": ("workers", int), "out": ("out", str),
    "format": ("format", str), "axis": ("axis", str), "values": ("values", str),
}
_BUILTIN = {"p": 0.1, "episodes": DEFAULT_EPISODES, "seed": 0,
            "workers": 1, "format": "csv"}


def _add_param_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("system parameters")
    g.add_argument("--Ed", type=int, help="energy units per decode attempt")
    g.add_argument("--e", type=int, help="energy units harvested per GOOD slot")
    g.add_argument("--R0", type=float, help="rate of a BAD slot")
    g.add_argument("--R1", type=float, help="encoding rate")
    g.add_argument("--lambda", dest="lam", type=float, help="i.i.d. GOOD probability")
    g.add_argument("--lambda0", dest="lam0", type=float, help="BAD to GOOD probability")
    g.add_argument("--lambda1", dest="lam1", type=float, help="GOOD to GOOD probability")


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--episodes", type=int, help=f"Monte Carlo episodes (default {DEFAULT_EPISODES})")
    p.add_argument("--seed", type=int, help="master seed (default 0)")
    p.add_argument("--workers", type=int, help="worker processes (default 1)")
    p.add_argument("--p", type=float, help="Bernoulli harvest probability (default 0.1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="swipt-harq",
                                     description="Optimal harvest/decode scheduling for SWIPT HARQ receivers.")
    parser.add_argument("--config", type=Path, help="INI file with [defaults] and per-command sections")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    for name, helptext in (("solve-iid", "solve the i.i.d. channel table"),
                           ("solve-corr", "solve the correlated channel table")):
        p = sub.add_parser(name, help=helptext)
        _add_param_flags(p)
        p.add_argument("--out", help="CSV path (default stdout)")

    p = sub.add_parser("simulate", help="Monte Carlo estimate for one policy")
    _add_param_flags(p)
    _add_run_flags(p)
    p.add_argument("--policy", help="optimal, bf, if, ct, bernoulli or arq")
    p.add_argument("--out", help="CSV path (default stdout)")

    p = sub.add_parser("reproduce", help="reproduce a table or figure sweep")
    p.add_argument("experiment", choices=sorted(experiments.EXPERIMENTS))
    _add_param_flags(p)
    _add_run_flags(p)
    p.add_argument("--policy", help="comma-separated policy list")
    p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./results)")
    p.add_argument("--format", choices=("csv", "svg"))

    p = sub.add_parser("sweep", help="custom one-parameter sweep")
    _add_param_flags(p)
    _add_run_flags(p)
    p.add_argument("--axis", choices=experiments.PARAM_KEYS, help="parameter to sweep")
    p.add_argument("--values", help="comma-separated values of the swept parameter")
    p.add_argument("--policy", help="comma-separated policy list")
    p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./results)")
    p.add_argument("--format", choices=("csv", "svg"))
    return parser


def _load_config(path: Optional[Path]) -> configparser.ConfigParser:
    cfg = configparser.ConfigParser()
    cfg.optionxform = str  # keep R0/Ed case
    if path is not None:
        if not path.is_file():
            raise ConfigError(f"config file {path} not found")
        try:
            cfg.read(path)
        except configparser.Error as exc:
            raise ConfigError(f"bad config file {path}: {exc}") from exc
    return cfg


def resolve(args: argparse.Namespace, cfg: configparser.ConfigParser,
            sections: Sequence[str]) -> dict:
    """Merged settings keyed by config name; missing keys are absent."""
    out = {}
    for dest, (key, typ) in _FIELDS.items():
        value = getattr(args, dest, None)
        if value is None:
            for section in list(sections) + ["defaults"]:
                if cfg.has_option(section, key):
                    raw = cfg.get(section, key)
                    try:
                        value = typ(float(raw)) if typ is int else typ(raw)
                    except ValueError as exc:
                        raise ConfigError(f"[{section}] {key} = {raw!r}: {exc}") from exc
                    break
        if value is None and key in _BUILTIN:
            value = _BUILTIN[key]
        if value is not None:
            out[key] = value
    return out


def _param_values(settings: dict) -> dict:
    return {k: settings[k] for k in experiments.PARAM_KEYS if k in settings}


def _out_dir(settings: dict) -> Path:
    return Path(settings.get("out") or os.environ.get(OUT_ENV) or "results")


def _policies(settings: dict) -> Optional[tuple[str, ...]]:
    raw = settings.get("policy")
    if raw is None:
        return None
    return tuple(s.strip().lower() for s in raw.split(",") if s.strip())


def _open_out(path: Optional[str]):
    if path is None:
        return sys.stdout, False
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    return open(path, "w", newline=""), True


def cmd_solve(args, settings: dict, correlated: bool) -> int:
    values = _param_values(settings)
    if correlated and "lambda0" not in values and "lambda1" not in values and "lambda" in values:
        values["lambda0"] = values["lambda1"] = values["lambda"]
    if not correlated and ("lambda0" in values or "lambda1" in values):
        raise ConfigError("solve-iid takes --lambda, not --lambda0/--lambda1")
    params = build_params(values)
    table = (solver_corr if correlated else solver_iid).solve(params)
    fh, close = _open_out(settings.get("out"))
    try:
        table.write_csv(fh)
    finally:
        if close:
            fh.close()
    print(f"k*(0,0) = {table.initial_value():.4f}", file=sys.stderr if not close else sys.stdout)
    return EXIT_OK


def cmd_simulate(args, settings: dict) -> int:
    params = build_params(_param_values(settings))
    name = settings.get("policy", "optimal").lower()
    policy = make_policy(name, params, p=settings["p"])
    report = estimate(policy, params, settings["episodes"], settings["seed"],
                      initial=ReceiverState(0, 0.0), workers=settings["workers"])
    fh, close = _open_out(settings.get("out"))
    try:
        w = csv.writer(fh, lineterminator="\n")
        ch = params.channel
        w.writerow(["policy", "Ed", "e", "R0", "R1", "lambda0", "lambda1", *EstimateReport.CSV_FIELDS])
        w.writerow([name, params.E_d, params.e, params.R0, params.R1, ch.lam0, ch.lam1,
                    *report.csv_values()])
    finally:
        if close:
            fh.close()
    if close:
        print(f"{name}: {report.mean:.4f} +- {report.stderr:.4f}")
    return EXIT_OK


def _run_spec(spec: ExperimentSpec) -> int:
    result = experiments.reproduce(spec)
    for c in result.checks:
        status = "PASS" if c.passed else ("FAIL" if c.gating else "note")
        print(f"{status:4s}  {c.name} [{c.x}]: {c.detail}")
    for path in result.files:
        print(f"wrote {path}")
    return EXIT_OK if result.ok else EXIT_DEVIATION


def cmd_reproduce(args, settings: dict) -> int:
    spec = ExperimentSpec(args.experiment, _param_values(settings), _policies(settings),
                          settings["episodes"], settings["seed"], _out_dir(settings),
                          settings["p"], settings["workers"], settings["format"])
    return _run_spec(spec)


def cmd_sweep(args, settings: dict) -> int:
    axis, raw = settings.get("axis"), settings.get("values")
    if axis is None or raw is None:
        raise ConfigError("sweep needs --axis and --values")
    try:
        values = tuple(float(v) for v in raw.split(",") if v.strip())
    except ValueError as exc:
        raise ConfigError(f"bad --values {raw!r}") from exc
    values = tuple(int(v) if v == int(v) and axis in ("Ed", "e") else v for v in values)
    spec = ExperimentSpec("custom", _param_values(settings), _policies(settings),
                          settings["episodes"], settings["seed"], _out_dir(settings),
                          settings["p"], settings["workers"], settings["format"],
                          axis=axis, values=values)
    return _run_spec(spec)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _load_config(args.config)
        sections = [args.command]
        if args.command == "reproduce":
            sections.append(args.experiment)
        settings = resolve(args, cfg, sections)
        if args.command == "solve-iid":
            return cmd_solve(args, settings, correlated=False)
        if args.command == "solve-corr":
            return cmd_solve(args, settings, correlated=True)
        if args.command == "simulate":
            return cmd_simulate(args, settings)
        if args.command == "reproduce":
            return cmd_reproduce(args, settings)
        return cmd_sweep(args, settings)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SwiptHarqError, ArithmeticError, OSError, AssertionError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
