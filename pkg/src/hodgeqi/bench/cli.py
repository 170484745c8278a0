"""``hodgeqi <command> --config <path> [--out <dir>]``.

Exit status: 0 on success, 2 when a validation suite fails, 1 on any error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import EXPERIMENTS, ConfigError, load_config
from .plot import emit_plot
from .report import ConvergenceReport
from . import runners

EXIT_OK, EXIT_ERROR, EXIT_VALIDATION = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hodgeqi", description="Helmholtz-Hodge quasi-interpolation benchmarks")
    sub = p.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        s = sub.add_parser(name)
        s.add_argument("--config", required=True, type=Path, help="experiment JSON")
        s.add_argument("--out", type=Path, default=Path("."), help="output directory (default: .)")
    return p


def _run(command: str, cfg, out: Path) -> int:
    if command == "wholespace":
        rep = runners.run_wholespace(cfg)
        _summary(rep, runners.write_report(rep, cfg, out))
    elif command == "bounded":
        rep = runners.run_bounded(cfg)
        _summary(rep, runners.write_report(rep, cfg, out))
    elif command == "validate":
        rep = runners.run_validate(cfg)
        path = out / cfg.output("validation", "validation.csv")
        rep.write_csv(path)
        for c in rep.checks:
            print(f"{'PASS' if c.passed else 'FAIL'} {c.suite}: {c.name} = {c.value:.3e} (<= {c.threshold:.3e})")
        return EXIT_OK if rep.passed else EXIT_VALIDATION
    elif command == "decompose":
        for name, path in runners.run_decompose(cfg, out).items():
            print(f"{name}: {path}")
    elif command == "plot":
        rep = ConvergenceReport.read_csv(cfg.report)
        path = out / cfg.output("plot", "plot.svg")
        emit_plot(rep, path, title=Path(cfg.report).stem)
        print(path)
    elif command == "kernel-dump":
        print(runners.run_kernel_dump(cfg, out))
    return EXIT_OK


def _summary(rep: ConvergenceReport, paths) -> None:
    slopes = rep.slopes()
    print("  ".join(f"{k} slope {v:.3f}" for k, v in slopes.items()))
    for p in paths:
        print(p)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if cfg.experiment != args.command:
            raise ConfigError(f"config is for {cfg.experiment!r}, not {args.command!r}")
        args.out.mkdir(parents=True, exist_ok=True)
        return _run(args.command, cfg, args.out)
    except (ConfigError, OSError, ValueError, KeyError, ArithmeticError) as exc:
        print(f"hodgeqi: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
