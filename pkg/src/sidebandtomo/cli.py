"""Command-line front end: ``sideband <verb> [options]``.

Verbs: prepare, scan, fit, reconstruct, compare, wigner.
Exit codes: 0 success, 2 config error, 3 missing/invalid input file,
4 numerical failure (rank deficiency, unphysical state, extinguished carrier).
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
import warnings
import zlib
from pathlib import Path

import numpy as np

from . import fileio
from .config import ConfigError, RunConfig, load_config
from .detection import hd_scan, rd_locked_scan, rd_scan
from .errors import (
    CarrierExtinguishedError,
    IllConditionedWarning,
    NonPhysicalStateError,
    ParseError,
    RankDeficiencyError,
)
from .preparation import prepare
from .reconstruct import (
    compare_states,
    fit_hd_curve,
    fit_rd_power_curve,
    reconstruct_covariance,
)
from .cavity import valid_detunings
from .state import ModeIndex, canonical_hd_state, energy_summary, hd_coefficients, single_mode_marginal, wigner_eval

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INPUT = 3
EXIT_NUMERIC = 4


class InputFileError(Exception):
    pass


class Console:
    def __init__(self, quiet: bool):
        self.quiet = quiet

    def __call__(self, msg: str = ""):
        if not self.quiet:
            print(msg)


def _stream_id(label: str) -> int:
    return zlib.crc32(label.encode())


def _input(path) -> Path:
    path = Path(path)
    if not path.is_file():
        raise InputFileError(f"input file {path} not found")
    return path


def _config(args) -> RunConfig:
    cfg = load_config(args.config)
    changes = {}
    if args.out is not None:
        changes["output_dir"] = Path(args.out)
    if args.seed is not None:
        if cfg.noise is None:
            raise ConfigError("--seed given but the config has no noise.samples_per_point")
        if not 0 <= args.seed < 2**64:
            raise ConfigError("--seed must be an unsigned 64-bit integer")
        changes["noise"] = dataclasses.replace(cfg.noise, seed=args.seed)
    if args.workers is not None:
        if args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        changes["workers"] = args.workers
    return dataclasses.replace(cfg, **changes) if changes else cfg


def cmd_prepare(cfg: RunConfig, args, say: Console) -> int:
    out = cfg.output_dir
    state = prepare(cfg.preparation)
    mimic = canonical_hd_state(hd_coefficients(state))
    for name, st in (("state", state), ("mimic", mimic)):
        fileio.write_state(out / f"{name}.json", st)
        fileio.write_json(out / f"{name}_energy.json", fileio.energy_to_dict(energy_summary(st)))
    e = energy_summary(state)
    say(f"prepared {cfg.experiment}: E_up={e.e_upper:.6g} E_low={e.e_lower:.6g} ratio={e.ratio:.4g}")
    say(f"wrote {out / 'state.json'} and its homodyne mimic {out / 'mimic.json'}")
    return EXIT_OK


def cmd_scan(cfg: RunConfig, args, say: Console) -> int:
    path = _input(args.state or cfg.output_dir / "state.json")
    try:
        state = fileio.read_state(path)
    except ParseError as exc:
        raise InputFileError(str(exc)) from None
    noise = cfg.noise
    if noise is not None:
        noise = dataclasses.replace(noise, stream=_stream_id(f"{path.stem}:{args.technique}"))
    w = cfg.omega_over_gamma
    stem = cfg.output_dir / f"{path.stem}_{args.technique}"
    if args.technique == "hd":
        curve = hd_scan(state, cfg.phase_grid.values(), cfg.visibility, noise, cfg.workers)
    else:
        grid = valid_detunings(cfg.cavity, cfg.detuning_grid.values())
        if args.technique == "rd-locked":
            locked = rd_locked_scan(state, cfg.cavity, grid, w, noise, cfg.workers)
            fileio.write_locked(stem.with_suffix(".csv"), locked)
            say(f"wrote {len(locked)} locked points to {stem.with_suffix('.csv')}")
            return EXIT_OK
        curve = rd_scan(state, cfg.cavity, grid, w, noise, cfg.workers)
    fileio.write_scan(stem.with_suffix(".csv"), curve)
    k_min, k_max = int(np.argmin(curve.values)), int(np.argmax(curve.values))
    summary = {
        "technique": args.technique,
        "kind": curve.kind.value,
        "points": len(curve),
        "sql_level": 1.0,
        "min_value": curve.values[k_min],
        "argmin": curve.abscissa[k_min],
        "max_value": curve.values[k_max],
        "argmax": curve.abscissa[k_max],
        "omega_over_gamma": w if args.technique != "hd" else None,
        "samples_per_point": None if noise is None else noise.samples_per_point,
        "seed": None if noise is None else noise.seed,
    }
    fileio.write_json(stem.with_suffix(".json"), summary)
    say(f"wrote {len(curve)} points to {stem.with_suffix('.csv')} (min {curve.values[k_min]:.6g} at {curve.abscissa[k_min]:.4g})")
    return EXIT_OK


def _read_curve(path):
    try:
        return fileio.read_scan(_input(path))
    except ParseError as exc:
        raise InputFileError(str(exc)) from None


def cmd_fit(cfg: RunConfig, args, say: Console) -> int:
    curve = _read_curve(args.curve)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", IllConditionedWarning)
        if args.model == "hd":
            report = fit_hd_curve(curve, cfg.visibility)
        else:
            report = fit_rd_power_curve(curve, cfg.cavity, cfg.omega_over_gamma)
    for wmsg in caught:
        print(f"warning: {wmsg.message}", file=sys.stderr)
    out = cfg.output_dir / f"{Path(args.curve).stem}_fit.json"
    fileio.write_json(out, fileio.report_to_dict(report))
    err = report.stderr()
    for name, value in report.coefficients.items():
        say(f"{name:>18} = {value:.8g} +/- {err[name]:.3g}")
    say(f"residual_rms = {report.residual_rms:.3g}, rank {report.design_rank}, cond {report.condition_number:.3g}")
    return EXIT_OK


def cmd_reconstruct(cfg: RunConfig, args, say: Console) -> int:
    path = _input(args.locked)
    try:
        locked = fileio.read_locked(path)
    except ParseError as exc:
        raise InputFileError(str(exc)) from None
    result = reconstruct_covariance(locked, cfg.cavity, cfg.omega_over_gamma, project=args.project)
    out = cfg.output_dir / f"{path.stem}_reconstruction.json"
    fileio.write_json(out, fileio.result_to_dict(result))
    e = result.energies
    say(f"rank {result.report.design_rank}, residual_rms {result.report.residual_rms:.3g}")
    say(f"purity {result.purity:.6g}, E_up {e.e_upper:.6g}, E_low {e.e_lower:.6g}")
    return EXIT_OK


def cmd_compare(cfg: RunConfig, args, say: Console) -> int:
    a, b = _read_curve(args.curve_a), _read_curve(args.curve_b)
    try:
        cmp = compare_states(a, b)
    except ValueError as exc:
        raise InputFileError(str(exc)) from None
    out = cfg.output_dir / f"compare_{Path(args.curve_a).stem}_vs_{Path(args.curve_b).stem}.json"
    fileio.write_json(out, fileio.comparison_to_dict(cmp))
    say(f"chi2/dof = {cmp.chi2_per_dof:.4g} over {cmp.dof} points: {cmp.verdict}")
    return EXIT_OK


def _grid_spec(text: str):
    try:
        start, stop, count = text.split(",")
        return float(start), float(stop), int(count)
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must be 'start,stop,count', got {text!r}") from None


def cmd_wigner(cfg: RunConfig, args, say: Console) -> int:
    path = _input(args.state)
    try:
        state = fileio.read_state(path)
    except ParseError as exc:
        raise InputFileError(str(exc)) from None
    mode = ModeIndex.parse(args.mode)
    start, stop, count = args.grid
    axis = np.linspace(start, stop, count)
    P, Q = np.meshgrid(axis, axis, indexing="ij")
    W = wigner_eval(single_mode_marginal(state, mode), (P, Q))
    lines = ["p,q,w"]
    lines += [f"{fileio.fmt(p)},{fileio.fmt(q)},{fileio.fmt(v)}" for p, q, v in zip(P.ravel(), Q.ravel(), W.ravel())]
    out = cfg.output_dir / f"{path.stem}_wigner_{mode.value}.csv"
    fileio.write_atomic(out, "\n".join(lines) + "\n")
    say(f"wrote {W.size} Wigner samples of the {mode.value} sideband to {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None, help="YAML run configuration")
    common.add_argument("--out", type=Path, default=None, help="output directory (overrides config)")
    common.add_argument("--seed", type=int, default=None, help="noise seed (overrides config)")
    common.add_argument("--workers", type=int, default=None, help="threads for scan evaluation")
    common.add_argument("--quiet", action="store_true", help="suppress the summary on stdout")

    parser = argparse.ArgumentParser(prog="sideband", description=__doc__.splitlines()[0], parents=[common])
    sub = parser.add_subparsers(dest="verb", required=True)

    sub.add_parser("prepare", parents=[common], help="write the configured state and its homodyne mimic")

    p = sub.add_parser("scan", parents=[common], help="simulate a detection scan")
    p.add_argument("technique", choices=["hd", "rd", "rd-locked"])
    p.add_argument("--state", type=Path, default=None, help="state file (default OUT/state.json)")

    p = sub.add_parser("fit", parents=[common], help="fit a scan curve")
    p.add_argument("curve", type=Path)
    p.add_argument("--model", choices=["hd", "rd-power"], required=True)

    p = sub.add_parser("reconstruct", parents=[common], help="full covariance from a locked scan")
    p.add_argument("locked", type=Path)
    p.add_argument("--project", action="store_true", help="project the estimate onto physical states")

    p = sub.add_parser("compare", parents=[common], help="chi-square comparison of two scans")
    p.add_argument("curve_a", type=Path)
    p.add_argument("curve_b", type=Path)

    p = sub.add_parser("wigner", parents=[common], help="single-mode Wigner function on a grid")
    p.add_argument("state", type=Path)
    p.add_argument("--mode", choices=["upper", "lower"], default="upper")
    p.add_argument("--grid", type=_grid_spec, default=(-10.0, 10.0, 101), help="start,stop,count (write --grid=-5,5,51 for a negative start)")
    return parser


COMMANDS = {
    "prepare": cmd_prepare,
    "scan": cmd_scan,
    "fit": cmd_fit,
    "reconstruct": cmd_reconstruct,
    "compare": cmd_compare,
    "wigner": cmd_wigner,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    say = Console(args.quiet)
    try:
        cfg = _config(args)
        return COMMANDS[args.verb](cfg, args, say)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InputFileError, ParseError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (RankDeficiencyError, NonPhysicalStateError, CarrierExtinguishedError, np.linalg.LinAlgError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
