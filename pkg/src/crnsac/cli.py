"""Command-line entry point: ``crnsac train|sense-study|eval|oracle``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, load_config
from .nn import DivergenceError

OUTPUT_ROOT_ENV = "CRNSAC_OUTPUT_ROOT"


def _floats(text: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc
    if not values:
        raise argparse.ArgumentTypeError("grid must not be empty")
    return values


def _load(args):
    cfg = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        cfg.run.seed = args.seed
    return cfg


def _out_dir(cfg, args) -> Path:
    if getattr(args, "out", None):
        return Path(args.out)
    root = os.environ.get(OUTPUT_ROOT_ENV)
    out = Path(cfg.run.output_dir)
    return Path(root) / out if root and not out.is_absolute() else out


def cmd_train(args) -> int:
    from .experiment import run_train

    cfg = _load(args)
    out = _out_dir(cfg, args)
    try:
        result = run_train(cfg, out)
    except DivergenceError as exc:
        print(f"training diverged: {exc}; last good checkpoint in {out / 'checkpoint_last_good'}", file=sys.stderr)
        return 2
    print(json.dumps(result["summary"]["trailing_1000"], indent=2, sort_keys=True))
    print(f"wrote {out}")
    return 0


def cmd_sense_study(args) -> int:
    from .study import run_sensing_study, write_study

    cfg = _load(args)
    e = cfg.env
    snr_grid = args.snr_grid if args.snr_grid is not None else [float(cfg.pu_snr[0, 0])]
    rows = run_sensing_study(
        args.tau_grid, args.tc_grid,
        sample_rate=e.sample_rate, n_sensed=cfg.n_sensed, noise_var=e.noise_var,
        snr_grid=snr_grid, trials=args.trials, mean_power=e.gain_pu, signal=e.pu_signal,
        rng=np.random.default_rng(cfg.run.seed),
    )
    path = write_study(rows, _out_dir(cfg, args) / "sensing_study.csv")
    print(f"wrote {path}")
    return 0


def cmd_eval(args) -> int:
    from .experiment import run_eval

    cfg = _load(args)
    summary = run_eval(cfg, args.checkpoint, args.steps, _out_dir(cfg, args))
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


def cmd_oracle(args) -> int:
    from .experiment import run_oracle

    cfg = _load(args)
    result = run_oracle(cfg, cfg.run.seed, args.snapshots, args.checkpoint, _out_dir(cfg, args))
    print(json.dumps(result, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="crnsac", description="CRN sensing + multi-agent hybrid SAC experiments")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("config", help="YAML experiment config")
        sp.add_argument("--seed", type=int, help="override run.seed")
        sp.add_argument("--out", help=f"output directory (default: run.output_dir under ${OUTPUT_ROOT_ENV})")

    t = sub.add_parser("train", help="train agents and write metrics, summary and checkpoint")
    common(t)
    t.set_defaults(func=cmd_train)

    s = sub.add_parser("sense-study", help="empirical vs closed-form detection over tau and t_c grids")
    common(s)
    s.add_argument("--tau-grid", type=_floats, required=True, help="comma-separated sensing windows [s]")
    s.add_argument("--tc-grid", type=_floats, required=True, help="comma-separated coherence times [s]")
    s.add_argument("--snr-grid", type=_floats, help="comma-separated linear PU SNRs (default: config)")
    s.add_argument("--trials", type=int, default=1000)
    s.set_defaults(func=cmd_sense_study)

    e = sub.add_parser("eval", help="roll out a checkpoint's deterministic policy")
    e.add_argument("checkpoint", help="checkpoint directory")
    common(e)
    e.add_argument("--steps", type=int, default=1000)
    e.set_defaults(func=cmd_eval)

    o = sub.add_parser("oracle", help="exhaustive best joint assignment on frozen snapshots")
    common(o)
    o.add_argument("--snapshots", type=int, default=1)
    o.add_argument("--checkpoint", help="also score this checkpoint's policy against the oracle")
    o.set_defaults(func=cmd_oracle)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
