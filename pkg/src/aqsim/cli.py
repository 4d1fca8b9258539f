"""Command-line entry point: ``aqsim run`` and ``aqsim list``.

Exit status of ``run``: 0 when the scenario behaves as expected, 1 when an
expectation fails, 2 on usage or configuration errors.
"""
from __future__ import annotations

import argparse
import dataclasses
import os
import sys
from pathlib import Path

import yaml

from .protocol import ConfigError
from .scenarios import PROTOCOLS, SCENARIOS, ScenarioConfig, list_scenarios, run_scenario

OUTPUT_DIR_ENV = "AQSIM_OUTPUT_DIR"

_FIELDS = {f.name for f in dataclasses.fields(ScenarioConfig)}
_ALIASES = {"out": "output_path", "compare-mode": "compare_mode", "swap-trials": "swap_trials"}


def load_config_file(path: Path) -> dict:
    data = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: config must be a flat mapping")
    out = {}
    for key, value in data.items():
        key = _ALIASES.get(key, key)
        if key not in _FIELDS:
            raise ConfigError(f"{path}: unknown config key {key!r}")
        if isinstance(value, dict):
            raise ConfigError(f"{path}: config must be flat, {key!r} is nested")
        out[key] = value
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aqsim", description="Arbitrated quantum signature scenarios")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one scenario and write its report")
    run.add_argument("--config", type=Path, help="flat YAML config file; flags override it")
    run.add_argument("--scenario", choices=sorted(SCENARIOS))
    run.add_argument("--protocol", choices=PROTOCOLS)
    run.add_argument("--n", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--compare-mode", dest="compare_mode", choices=("exact", "swap_test"))
    run.add_argument("--swap-trials", dest="swap_trials", type=int)
    run.add_argument("--out", dest="output_path", help=f"report path (default: ${OUTPUT_DIR_ENV} or cwd)")

    ls = sub.add_parser("list", help="list scenario names")
    ls.add_argument("filter", nargs="?", default="", help="substring filter")
    return parser


def _output_path(cfg: ScenarioConfig) -> Path:
    if cfg.output_path:
        return Path(cfg.output_path)
    base = Path(os.environ.get(OUTPUT_DIR_ENV, "."))
    return base / f"{cfg.scenario}-{cfg.protocol}-n{cfg.n}-s{cfg.seed}.yaml"


def _cmd_run(args: argparse.Namespace) -> int:
    values = load_config_file(args.config) if args.config else {}
    for name in ("scenario", "protocol", "n", "seed", "compare_mode", "swap_trials", "output_path"):
        v = getattr(args, name)
        if v is not None:
            values[name] = v
    cfg = ScenarioConfig(**values)
    out = _output_path(cfg)
    result = run_scenario(cfg, out)
    print(result.summary_line())
    for f in result.failures:
        print(f"unexpected: {f}", file=sys.stderr)
    return 0 if result.ok else 1


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list":
        for name, desc in list_scenarios(args.filter):
            print(f"{name}\t{desc}")
        return 0
    try:
        return _cmd_run(args)
    except (ConfigError, OSError, TypeError) as exc:
        print(f"aqsim: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
