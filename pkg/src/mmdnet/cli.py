"""Command-line entry point: ``mmdnet {synth,toy-rotation,translate,sweep}``.

Exit codes: 0 success, 1 configuration error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import experiments as ex
from .config import ConfigError, RunConfig
from .data import ParseError
from .model import save_checkpoint
from .reports import write_csv
from .train import HISTORY_COLUMNS

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3

log = logging.getLogger("mmdnet")


def _header(command: str, cfg: RunConfig) -> str:
    return f"command = {command}\n" + cfg.to_text()


def _write_history(out: Path, command: str, cfg: RunConfig, history) -> None:
    rows = [(r.epoch, r.phase, r.alignment_loss, r.mmd_loss, r.blended_loss, r.validation_metric)
            for r in history]
    write_csv(out / "history.csv", HISTORY_COLUMNS, rows, _header(command, cfg))


def cmd_synth(cfg: RunConfig, out: Path) -> int:
    result = ex.run_synth(cfg)
    write_csv(out / "metrics.csv", ex.SYNTH_COLUMNS, result.rows, _header("synth", cfg))
    _write_history(out, "synth", cfg, result.history)
    for row in result.rows:
        log.info("%-14s alpha=%-6s test_mse=%.5f", row[0], row[4], row[3])
    return EXIT_OK


def cmd_toy_rotation(cfg: RunConfig, out: Path) -> int:
    result = ex.run_toy_rotation(cfg)
    header = _header("toy-rotation", cfg)
    write_csv(out / "landscape.csv", ex.TOY_COLUMNS, result.rows(), header)
    write_csv(out / "points.csv", ex.POINT_COLUMNS, result.point_rows(), header)
    best = result.thetas[result.mmd.argmin()]
    minima = [float(result.thetas[i]) for i in ex.circular_local_minima(result.mmd)]
    log.info("MMD minimum at %.1f deg; local minima at %s", best, minima)
    return EXIT_OK


def cmd_translate(cfg: RunConfig, out: Path) -> int:
    result = ex.run_translate(cfg)
    header = _header("translate", cfg)
    write_csv(out / "evaluation.csv", ex.EVAL_COLUMNS, result.rows, header)
    _write_history(out, "translate", cfg, result.history)
    save_checkpoint(result.params, out / "checkpoint.json")
    for row in result.rows:
        log.info("%-6s %-10s %-2s P@%-3d %.3f (%d pairs)", row[5], row[0], row[1], row[2], row[3], row[4])
    return EXIT_OK


def cmd_sweep(cfg: RunConfig, out: Path) -> int:
    result = ex.run_sweep(cfg)
    columns = ("cell", *result.keys, "validation_metric", "test_metric", "selected")
    write_csv(out / "sweep.csv", columns, result.rows(), _header("sweep", cfg))
    chosen = dict(zip(result.keys, result.cells[result.selected]))
    log.info("selected cell %d: %s", result.selected, chosen)
    return EXIT_OK


COMMANDS = {
    "synth": cmd_synth,
    "toy-rotation": cmd_toy_rotation,
    "translate": cmd_translate,
    "sweep": cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mmdnet", description="Semi-supervised MMD translation networks.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="key = value configuration file")
        p.add_argument("--seed", type=int, help="overrides run.seed")
        p.add_argument("--out", type=Path, default=Path("out"), help="report directory (default: ./out)")
        p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                       help="override one configuration key; repeatable")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def load_config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    for item in args.overrides:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"override {item!r} is not KEY=VALUE")
        cfg.set(key.strip(), value)
    if args.seed is not None:
        cfg.set("run.seed", str(args.seed))
    cfg.validate()
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args)
    except ConfigError as exc:
        print(f"mmdnet: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return COMMANDS[args.command](cfg, args.out)
    except ConfigError as exc:
        print(f"mmdnet: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FloatingPointError as exc:
        print(f"mmdnet: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ParseError, OSError, ValueError) as exc:
        print(f"mmdnet: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
