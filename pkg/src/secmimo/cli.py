"""Command-line interface.

Subcommands:

* ``run CONFIG`` executes a sweep described by a config file,
* ``preset NAME`` runs one of the shipped scenarios (fig1..fig4),
* ``xi-opt CONFIG`` prints the optimal power allocation per DAC model,
* ``crossover CONFIG`` prints the correlation level where the two DAC
  models' secrecy bounds cross.

Exit code 0 on success; on failure a single JSON error line goes to stderr
and the exit code is nonzero.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import experiments
from .dac import DacModel
from .rates import BoundUndefinedError, SystemConfig, optimal_xi, secrecy_bound


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, help="override the master seed")
    parser.add_argument("--realizations", type=int,
                        help="override the Monte-Carlo realization count")
    parser.add_argument("--bounds-only", action="store_true",
                        help="skip Monte-Carlo, emit closed-form columns only")
    parser.add_argument("--out", type=Path, help="output directory")
    parser.add_argument("--workers", type=int, default=1,
                        help="worker threads for the Monte-Carlo loop")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="secmimo",
        description="Secrecy-rate sweeps for quantized massive MIMO downlinks")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a sweep from a config file")
    p_run.add_argument("config", type=Path)
    _add_common(p_run)

    p_preset = sub.add_parser("preset", help="run a shipped scenario preset")
    p_preset.add_argument("name", choices=experiments.PRESET_NAMES)
    _add_common(p_preset)

    p_xi = sub.add_parser("xi-opt", help="optimal power allocation factor")
    p_xi.add_argument("config", type=Path)

    p_cross = sub.add_parser("crossover",
                             help="correlation level where DAC bounds cross")
    p_cross.add_argument("config", type=Path)
    return parser


def _apply_overrides(cfg: experiments.ExperimentConfig, args):
    updates = {}
    if args.seed is not None:
        updates["master_seed"] = args.seed
    if args.realizations is not None:
        updates["n_realizations"] = args.realizations
    if args.out is not None:
        updates["out_dir"] = str(args.out)
    return replace(cfg, **updates) if updates else cfg


def _run(cfg: experiments.ExperimentConfig, args) -> int:
    cfg = _apply_overrides(cfg, args)
    out_dir = Path(cfg.out_dir) if cfg.out_dir else Path.cwd()
    out_dir.mkdir(parents=True, exist_ok=True)
    tables = experiments.run_experiment(cfg, workers=args.workers,
                                        bounds_only=args.bounds_only)
    for table in tables:
        suffix = f"_{table.case_label}" if table.case_label else ""
        csv_path = out_dir / f"{cfg.scenario}{suffix}.csv"
        svg_path = out_dir / f"{cfg.scenario}{suffix}.svg"
        experiments.emit_csv(table, csv_path)
        experiments.emit_plot(table, svg_path)
        failed = sum(1 for row in table.rows if row.error)
        note = f", {failed} failed points" if failed else ""
        print(f"wrote {csv_path} ({len(table.rows)} rows{note}) and {svg_path}")
    return 0


def _case_system_config(case_cfg: experiments.ExperimentConfig,
                        bits: float) -> SystemConfig:
    fading = experiments._fading_for(case_cfg)
    spec = experiments._corr_spec_for(case_cfg)
    return SystemConfig(
        N=case_cfg.N, K=case_cfg.K, M=case_cfg.M,
        dac=DacModel.for_bits(bits), fading=fading, corr=spec,
        P=10.0 ** (case_cfg.snr_db / 10.0), sigma_n2=1.0,
        sigma_e2=case_cfg.sigma_e2, xi=case_cfg.xi)


def _xi_opt(cfg: experiments.ExperimentConfig) -> int:
    cases_out = []
    for label, case_cfg in experiments.expand_cases(cfg):
        for bits in case_cfg.bits:
            config = _case_system_config(case_cfg, bits)
            opt = optimal_xi(config, case_cfg.user_index)
            at_opt = secrecy_bound(config.with_updates(xi=opt.xi),
                                   case_cfg.user_index)
            cases_out.append({
                "case": label or None,
                "bits": DacModel.for_bits(bits).label,
                "xi_opt": opt.xi,
                "closed_form": opt.closed_form,
                "secrecy_bound": at_opt,
            })
    print(json.dumps({"scenario": cfg.scenario, "results": cases_out}))
    return 0


def _crossover(cfg: experiments.ExperimentConfig) -> int:
    cases_out = []
    for label, case_cfg in experiments.expand_cases(cfg):
        z = experiments.find_crossover_zeta(case_cfg)
        cases_out.append({"case": label or None, "zeta_crossover": z})
    print(json.dumps({"scenario": cfg.scenario, "results": cases_out}))
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _run(experiments.parse_config(args.config), args)
        if args.command == "preset":
            return _run(experiments.load_preset(args.name), args)
        if args.command == "xi-opt":
            return _xi_opt(experiments.parse_config(args.config))
        return _crossover(experiments.parse_config(args.config))
    except (OSError, ValueError, BoundUndefinedError) as exc:
        print(json.dumps({"error": str(exc), "type": type(exc).__name__}),
              file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
