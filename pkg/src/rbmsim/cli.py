"""Experiment runner.

    rbmsim run CONFIG.toml [--set key=value ...] [--output-dir DIR]
    rbmsim validate CONFIG.toml [--set key=value ...]
    rbmsim list-experiments

Config is TOML: top-level keys experiment, base_seed, replicas, output_dir,
and a [params] table whose schema depends on the experiment.  Precedence is
--set flag > file > built-in default.  The output directory resolves as
--output-dir, then output_dir in the file, then $RBMSIM_OUTPUT_ROOT/<name>,
then ./runs/<name>.

Exit codes: 0 success, 2 configuration/validation error, 3 numerical failure
(a diagnostic failure.json is written alongside any partial artifacts).
"""
from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import tomli

from . import __version__
from .errors import ConfigError, RbmsimError
from .experiments import REGISTRY, ExperimentContext, merge_params
from .io import write_json

_TOP_LEVEL_KEYS = {"experiment", "base_seed", "replicas", "output_dir", "params"}
_SEED_RULE = "seed_i = base_seed + i, i = 0, 1, ... in manifest seed order"


def load_config(path: str) -> Dict[str, Any]:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(p, "rb") as fh:
            return tomli.load(fh)
    except tomli.TOMLDecodeError as e:
        raise ConfigError(f"{path}: {e}") from None


def parse_override(text: str) -> Tuple[List[str], Any]:
    if "=" not in text:
        raise ConfigError(f"--set needs key=value, got {text!r}")
    key, raw = text.split("=", 1)
    keys = [k for k in key.strip().split(".") if k]
    if not keys:
        raise ConfigError(f"--set needs a nonempty key, got {text!r}")
    try:
        value = tomli.loads(f"v = {raw}")["v"]
    except tomli.TOMLDecodeError:
        value = raw  # bare words act as strings
    return keys, value


def apply_overrides(cfg: Dict[str, Any], sets: List[str]) -> None:
    for text in sets:
        keys, value = parse_override(text)
        node = cfg
        for k in keys[:-1]:
            nxt = node.get(k)
            if not isinstance(nxt, dict):
                nxt = {}
                node[k] = nxt
            node = nxt
        node[keys[-1]] = value


class ValidatedConfig:
    def __init__(self, cfg: Dict[str, Any]) -> None:
        unknown = sorted(set(cfg) - _TOP_LEVEL_KEYS)
        if unknown:
            raise ConfigError(f"unknown top-level key(s): {', '.join(unknown)}")
        name = cfg.get("experiment")
        if not isinstance(name, str) or not name:
            raise ConfigError("config needs experiment = \"<name>\"")
        if name not in REGISTRY:
            known = ", ".join(sorted(REGISTRY))
            raise ConfigError(f"unknown experiment {name!r}; known: {known}")
        self.experiment = REGISTRY[name]
        self.base_seed = int(cfg.get("base_seed", 0))
        self.replicas = int(cfg.get("replicas", self.experiment.default_replicas))
        if self.replicas < 1:
            raise ConfigError(f"replicas must be >= 1, got {self.replicas}")
        self.output_dir: Optional[str] = cfg.get("output_dir")
        raw_params = cfg.get("params", {})
        if not isinstance(raw_params, dict):
            raise ConfigError("params must be a table")
        self.params = merge_params(self.experiment.defaults, raw_params)
        self.experiment.validate(self.params)

    def echo(self) -> Dict[str, Any]:
        return {
            "experiment": self.experiment.name,
            "base_seed": self.base_seed,
            "replicas": self.replicas,
            "params": self.params,
        }


def resolve_outdir(vc: ValidatedConfig, flag: Optional[str]) -> Path:
    if flag:
        return Path(flag)
    if vc.output_dir:
        return Path(vc.output_dir)
    root = os.environ.get("RBMSIM_OUTPUT_ROOT")
    base = Path(root) if root else Path("runs")
    return base / vc.experiment.name


def _validated(args) -> ValidatedConfig:
    cfg = load_config(args.config)
    apply_overrides(cfg, args.set or [])
    return ValidatedConfig(cfg)


def cmd_validate(args) -> int:
    try:
        _validated(args)
    except RbmsimError as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return 2
    return 0


def cmd_run(args) -> int:
    try:
        vc = _validated(args)
    except RbmsimError as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return 2
    outdir = resolve_outdir(vc, args.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    ctx = ExperimentContext(params=vc.params, base_seed=vc.base_seed,
                            replicas=vc.replicas, outdir=outdir)
    started = time.monotonic()
    try:
        summary = vc.experiment.run(ctx)
    except RbmsimError as e:
        write_json(outdir / "failure.json", {
            "experiment": vc.experiment.name,
            "error_type": type(e).__name__,
            "message": str(e),
        })
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return 3
    manifest = {
        "experiment": vc.experiment.name,
        "config": vc.echo(),
        "code_version": __version__,
        "seed_rule": _SEED_RULE,
        "seeds": ctx.seeds,
        "wall_clock_seconds": time.monotonic() - started,
        "artifacts": sorted(ctx.artifacts),
        "summary": summary,
    }
    write_json(outdir / "run_manifest.json", manifest)
    print(outdir / "run_manifest.json")
    return 0


def cmd_list(_args) -> int:
    width = max(len(name) for name in REGISTRY)
    for name in sorted(REGISTRY):
        print(f"{name:<{width}}  {REGISTRY[name].description}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rbmsim", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute an experiment config")
    run.add_argument("config")
    run.add_argument("--set", action="append", metavar="KEY=VALUE",
                     help="override a config entry (dotted keys reach [params])")
    run.add_argument("--output-dir", help="artifact directory (overrides config and env)")
    run.set_defaults(func=cmd_run)

    val = sub.add_parser("validate", help="check a config without running it")
    val.add_argument("config")
    val.add_argument("--set", action="append", metavar="KEY=VALUE")
    val.set_defaults(func=cmd_validate)

    lst = sub.add_parser("list-experiments", help="show registered experiments")
    lst.set_defaults(func=cmd_list)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
