"""Command-line experiment runner writing self-describing CSV files.

    mcast-handover handover --config exp.cfg --seed 7 --out loss.csv
    mcast-handover mobility --trials 20000 --out -
    mcast-handover analytic --out tables.csv

``--seed``, ``--trials`` and ``--out`` override the config file; the seed can
also come from ``MCAST_HANDOVER_SEED`` (the flag wins).  Output starts with
``#`` comment lines holding the tool version, seed, config hash and the full
resolved config.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .analytic import (
    HandoverKind,
    MobilityParams,
    Scheme,
    SingularityError,
    expected_handovers,
    handover_probability,
    map_residence_scaling,
    predictive_window,
    scheme_window,
    signalling_overhead,
)
from .config import HEADER_PREFIX, ConfigError, ExperimentConfig, load_config, parse_config
from .engine import StreamConfig, TrialConfig, sweep
from .mobility import CellGrid, count_handovers, measure_residence_time, simulate_prediction_outcomes

SEED_ENV = "MCAST_HANDOVER_SEED"

HANDOVER_COLUMNS = (
    "distance_ms", "scheme", "mean_loss_packets", "mean_loss_window_ms",
    "mean_delay_ms", "completion_prob", "ci_halfwidth", "trials",
)
MOBILITY_COLUMNS = (
    "rho", "k", "correct_rate", "wrong_cell_rate", "terminated_rate",
    "empirical_E_HO", "analytic_E_HO",
)
FREQUENCY_COLUMNS = ("rho", "k", "P_HO", "P_HO_MAP", "eta_MAP_over_eta_AR", "analytic_E_HO")
WINDOW_COLUMNS = (
    "distance_ms", "scheme", "loss_window_ms", "loss_packets", "added_delay_ms",
    "delta_plus_ms", "delta_minus_ms",
)
SIGNALLING_COLUMNS = ("scheme", "handover_kind", "messages")


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value) if math.isfinite(value) else ("inf" if value > 0 else "nan")
    if isinstance(value, Scheme):
        return value.value
    return str(value)


def header_lines(cfg: ExperimentConfig) -> list[str]:
    return [
        f"# mcast-handover {__version__}",
        f"# experiment: {cfg.experiment}",
        f"# seed: {cfg.master_seed}",
        f"# config-sha256: {cfg.digest()}",
        *(f"{HEADER_PREFIX}{k} = {v}" for k, v in cfg.items()),
    ]


def render_table(columns, rows, header: list[str] | None = None) -> str:
    buf = io.StringIO()
    for line in header or ():
        buf.write(line + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def handover_rows(cfg: ExperimentConfig) -> list[tuple]:
    template = TrialConfig(timers=cfg.timers, stream=StreamConfig(cfg.packet_period))
    rows = sweep(template, cfg.sweep.values(), cfg.trials, cfg.master_seed, cfg.schemes, workers=cfg.workers)
    return [
        (r.distance, r.scheme, r.mean_loss_packets, r.mean_loss_window, r.mean_added_delay,
         r.completion_probability, r.ci_halfwidth, r.trials)
        for r in rows
    ]


def _analytic_E(rho: float, k: float) -> float:
    try:
        return expected_handovers(MobilityParams.from_rho(rho, k=k))
    except SingularityError:
        return math.inf


def mobility_rows(cfg: ExperimentConfig) -> list[tuple]:
    if any(r <= 0 for r in cfg.rho):
        raise ConfigError("mobility experiment needs rho > 0 (E_HO is singular at 0)", "mobility.rho")
    grid = CellGrid(cfg.radius)
    residence = measure_residence_time(grid, cfg.speed, cfg.residence_crossings, seed=cfg.master_seed)
    rows = []
    for rho in cfg.rho:
        rates = simulate_prediction_outcomes(
            MobilityParams.from_rho(rho), grid, cfg.speed, cfg.trials,
            seed=cfg.master_seed, mean_residence=residence,
        )
        for k in cfg.k:
            p = MobilityParams.from_rho(rho, k=k)
            rows.append((
                rho, k, rates.correct_rate, rates.wrong_cell_rate, rates.terminated_rate,
                count_handovers(p, cfg.race_trials, seed=cfg.master_seed),
                _analytic_E(rho, k),
            ))
    return rows


def analytic_tables(cfg: ExperimentConfig) -> dict[str, tuple[tuple, list[tuple]]]:
    frequency = []
    for rho in cfg.rho:
        for k in cfg.k:
            p = MobilityParams.from_rho(rho, k=k)
            frequency.append((
                rho, k, handover_probability(p), handover_probability(p, use_map=True),
                map_residence_scaling(1.0, k), _analytic_E(rho, k),
            ))
    windows = []
    for d in cfg.sweep.values():
        g = replace(cfg.timers.means(), t_l3=d)
        entries = [(s.value, scheme_window(s, g)) for s in (Scheme.BT, Scheme.REACTIVE, Scheme.PREDICTIVE)]
        entries.append(("predictive_erroneous", predictive_window(g, prediction_correct=False)))
        for name, w in entries:
            windows.append((d, name, w.loss_window, w.loss_window / cfg.packet_period,
                            w.added_delay, w.delta_plus, w.delta_minus))
    signalling = [
        ("reactive", HandoverKind.INTRA_MAP.value, signalling_overhead(Scheme.REACTIVE, HandoverKind.INTRA_MAP)),
        ("reactive", HandoverKind.INTER_MAP.value, signalling_overhead(Scheme.REACTIVE, HandoverKind.INTER_MAP)),
        ("predictive", HandoverKind.ANY.value, signalling_overhead(Scheme.PREDICTIVE, HandoverKind.ANY)),
    ]
    return {
        "frequency": (FREQUENCY_COLUMNS, frequency),
        "windows": (WINDOW_COLUMNS, windows),
        "signalling": (SIGNALLING_COLUMNS, signalling),
    }


def render_experiment(cfg: ExperimentConfig) -> dict[str, str]:
    """CSV text per table name; the first table is the primary output."""
    header = header_lines(cfg)
    if cfg.experiment == "handover":
        return {"": render_table(HANDOVER_COLUMNS, handover_rows(cfg), header)}
    if cfg.experiment == "mobility":
        return {"": render_table(MOBILITY_COLUMNS, mobility_rows(cfg), header)}
    if cfg.experiment == "analytic":
        tables = analytic_tables(cfg)
        out = {}
        for i, (name, (cols, rows)) in enumerate(tables.items()):
            out["" if i == 0 else name] = render_table(cols, rows, header + [f"# table: {name}"])
        return out
    raise ConfigError(f"unknown experiment {cfg.experiment!r}", "experiment")


def output_paths(out: str, names) -> dict[str, Path]:
    base = Path(out)
    stem = base.name[: -len(base.suffix)] if base.suffix else base.name
    return {name: base if not name else base.with_name(f"{stem}_{name}{base.suffix or '.csv'}") for name in names}


def write_outputs(texts: dict[str, str], out: str, stdout=None) -> list[Path]:
    """Write every table atomically; on failure no partial file is left behind."""
    if out == "-":
        stream = stdout or sys.stdout
        stream.write("\n".join(texts.values()))
        return []
    paths = output_paths(out, texts)
    temps: list[Path] = []
    try:
        for name, text in texts.items():
            tmp = paths[name].with_name(paths[name].name + ".part")
            temps.append(tmp)
            tmp.write_text(text)
        for name, tmp in zip(texts, temps):
            os.replace(tmp, paths[name])
    except BaseException:
        for tmp in temps:
            tmp.unlink(missing_ok=True)
        raise
    return list(paths.values())


def run_experiment(cfg: ExperimentConfig, stdout=None) -> int:
    write_outputs(render_experiment(cfg), cfg.output, stdout)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mcast-handover", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="experiment", required=True)
    helps = {
        "analytic": "closed-form windows, handover probabilities/expectations and signalling counts",
        "handover": "stochastic single-handover sweep over router distance",
        "mobility": "honeycomb prediction-outcome simulation and handover counts",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", help="key = value config file (or a previous results CSV)")
        p.add_argument("--seed", type=lambda s: int(s, 0), help=f"master seed (overrides ${SEED_ENV})")
        p.add_argument("--trials", type=int, help="trials per sweep point / rho value")
        p.add_argument("--out", help="output CSV path, '-' for stdout")
        p.add_argument("--workers", type=int, help="worker processes for handover sweeps")
    return parser


def resolve_config(args: argparse.Namespace, environ=os.environ) -> ExperimentConfig:
    if args.config:
        cfg = load_config(args.config, args.experiment)
    else:
        cfg = parse_config("", args.experiment)
    entries = []
    if args.seed is None and environ.get(SEED_ENV):
        entries.append(("seed", environ[SEED_ENV]))
    for key, value in (("seed", args.seed), ("trials", args.trials), ("output", args.out), ("workers", args.workers)):
        if value is not None:
            entries.append((key, str(value)))
    if not entries:
        return cfg
    # overrides go through the same validation as file values
    text = cfg.canonical_text() + f"output = {cfg.output}\nworkers = {cfg.workers}\n"
    merged = dict(line.split(" = ", 1) for line in text.splitlines())
    merged.update(entries)
    return parse_config("".join(f"{k} = {v}\n" for k, v in merged.items()), args.experiment)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        return run_experiment(cfg)
    except ConfigError as exc:
        print(f"mcast-handover: config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"mcast-handover: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
