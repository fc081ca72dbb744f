"""Command-line entry point: ``frogsim <experiment> --config <path> [--seed N] [--replicas N] [--out DIR]``.

Exit codes: 0 success, 2 invalid configuration or arguments, 1 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .harness import EXPERIMENTS, ConfigError, ExperimentConfig, run_experiment

EXIT_OK, EXIT_RUNTIME, EXIT_INVALID = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_INVALID)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="frogsim", description="Frog-model experiments on Z^d.")
    p.add_argument("--version", action="version", version=f"frogsim {__version__}")
    p.add_argument("experiment", choices=EXPERIMENTS)
    p.add_argument("--config", type=Path, help="JSON experiment config (defaults are used when omitted)")
    p.add_argument("--seed", type=int)
    p.add_argument("--replicas", type=int)
    p.add_argument("--out", help="output directory (overrides the config)")
    p.add_argument("--workers", type=int, help="worker processes for replicas")
    p.add_argument("--print-config", action="store_true", help="print the resolved config and exit")
    return p


def load_config(args) -> ExperimentConfig:
    if args.config is None:
        cfg = ExperimentConfig.default(args.experiment)
    else:
        try:
            text = args.config.read_text()
        except OSError as e:
            raise ConfigError(f"cannot read config: {e}") from None
        data = json.loads(text) if text.strip() else {}
        if isinstance(data, dict):
            data.setdefault("experiment", args.experiment)
        cfg = ExperimentConfig.from_dict(data)
        if cfg.experiment != args.experiment:
            raise ConfigError(f"config is for {cfg.experiment!r}, not {args.experiment!r}")
    overrides = {k: getattr(args, k) for k in ("seed", "replicas", "out", "workers")
                 if getattr(args, k) is not None}
    return replace(cfg, **overrides).validate()


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
    except (ConfigError, json.JSONDecodeError) as e:
        print(f"frogsim: invalid configuration: {e}", file=sys.stderr)
        return EXIT_INVALID
    if args.print_config:
        sys.stdout.write(cfg.emit())
        return EXIT_OK
    try:
        manifest = run_experiment(cfg)
    except ConfigError as e:
        print(f"frogsim: invalid configuration: {e}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as e:  # runtime failure: outputs already cleaned up
        print(f"frogsim: run failed: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"wrote {', '.join(sorted(manifest.files))}, manifest.json to {cfg.out} "
          f"({manifest.wall_clock_seconds:.2f} s)")
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
