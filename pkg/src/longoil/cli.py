"""Command-line entry point: ``sim <config> [--out DIR] [--seed N] [--trials N]``."""
from __future__ import annotations

import argparse
import sys

from .config import parse_config
from .errors import ConfigError, SimulationError

EXIT_OK, EXIT_CONFIG, EXIT_SIMULATION, EXIT_IO = 0, 2, 3, 4


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sim", description="Run a long-distance injection-locking HOM scenario.")
    p.add_argument("config", help="scenario file (key = value with units)")
    p.add_argument("--out", help="output directory (overrides 'out' in the file)")
    p.add_argument("--seed", type=int, help="master RNG seed (overrides 'seed')")
    p.add_argument("--trials", type=int, help="number of independent trials (overrides 'trials')")
    p.add_argument("--workers", type=int, help="worker processes for HOM trials")
    p.add_argument("--quiet", action="store_true", help="do not print the summary")
    return p


def _overrides(args) -> dict:
    out = {}
    if args.out is not None:
        out["out"] = args.out
    for key in ("seed", "trials", "workers"):
        value = getattr(args, key)
        if value is not None:
            minimum = 0 if key == "seed" else 1
            if value < minimum:
                raise ConfigError(f"must be >= {minimum}, got {value}", key)
            out[key] = value
    return out


def format_summary(summary) -> str:
    lines = [f"scenario: {summary.scenario}", f"seed: {summary.seed}"]
    for k, v in summary.metrics.items():
        lines.append(f"{k}: {v:.6g}" if isinstance(v, float) else f"{k}: {v}")
    lines.append(f"wall_time_s: {summary.wall_time:.1f}")
    lines.append("files:")
    lines.extend(f"  {f}" for f in summary.files)
    return "\n".join(lines)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    from .scenarios import run_scenario

    try:
        cfg = parse_config(args.config)
        overrides = _overrides(args)
        if overrides:
            sweeps = cfg.sweeps
            cfg = cfg.with_overrides(overrides)
            cfg.sweeps = sweeps
        summary = run_scenario(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SimulationError as exc:
        print(f"simulation error: {exc}", file=sys.stderr)
        return EXIT_SIMULATION
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    if not args.quiet:
        print(format_summary(summary))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
