"""Experiment configuration: a line-oriented ``key = value`` format.

Keys use dotted sections, e.g. ``timers.anticipation.mean = 50``.  Blank
lines and lines starting with ``#`` are ignored.  Durations are plain
decimal milliseconds.  Every key is optional; defaults reproduce the
standard setup (anticipation 50±30, L2 handoff 50±10, access links 2±1,
router distance ξ 2.5, one packet per 10 ms).

A results CSV is itself a valid config file: its ``# config:`` header lines
are read back, so re-running with ``--config results.csv`` reproduces it.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .analytic import Scheme
from .engine import TimerSet
from .stochastic import MASK64

EXPERIMENTS = ("analytic", "handover", "mobility")
TIMER_NAMES = tuple(f.name for f in fields(TimerSet))
HEADER_PREFIX = "# config: "


class ConfigError(ValueError):
    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        self.key = key
        self.line = line
        where = f"line {line}: " if line is not None else ""
        what = f"{key}: " if key is not None else ""
        super().__init__(f"{where}{what}{message}")


@dataclass(frozen=True)
class SweepSpec:
    variable: str = "router_distance"
    start: float = 0.0
    stop: float = 40.0
    step: float = 5.0

    def values(self) -> list[float]:
        n = math.floor((self.stop - self.start) / self.step + 1e-9) + 1
        return [self.start + i * self.step for i in range(n)]


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str | None = None
    master_seed: int = 1
    trials: int = 10_000
    sweep: SweepSpec = field(default_factory=SweepSpec)
    timers: TimerSet = field(default_factory=TimerSet)
    packet_period: float = 10.0
    schemes: tuple[Scheme, ...] = (Scheme.REACTIVE, Scheme.PREDICTIVE)
    rho: tuple[float, ...] = (0.1, 0.5, 1.0, 2.0, 5.0)
    k: tuple[float, ...] = (1.0, 4.0, 9.0)
    radius: float = 1.0
    speed: float = 1.0
    residence_crossings: int = 100_000
    race_trials: int = 100_000
    output: str = "-"
    workers: int = 1

    def items(self) -> list[tuple[str, str]]:
        """Canonical ``(key, value)`` pairs of everything that shapes the results.

        ``output`` and ``workers`` are left out: they never change the numbers.
        """
        out = [
            ("experiment", self.experiment or ""),
            ("seed", str(self.master_seed)),
            ("trials", str(self.trials)),
            ("sweep.variable", self.sweep.variable),
            ("sweep.start", _fmt(self.sweep.start)),
            ("sweep.stop", _fmt(self.sweep.stop)),
            ("sweep.step", _fmt(self.sweep.step)),
            ("stream.period", _fmt(self.packet_period)),
            ("handover.schemes", ", ".join(s.value for s in self.schemes)),
            ("mobility.rho", ", ".join(_fmt(v) for v in self.rho)),
            ("mobility.k", ", ".join(_fmt(v) for v in self.k)),
            ("mobility.radius", _fmt(self.radius)),
            ("mobility.speed", _fmt(self.speed)),
            ("mobility.residence_crossings", str(self.residence_crossings)),
            ("mobility.race_trials", str(self.race_trials)),
        ]
        for name in TIMER_NAMES:
            t = getattr(self.timers, name)
            out.append((f"timers.{name}.mean", _fmt(t.mean)))
            out.append((f"timers.{name}.perturbation", _fmt(t.perturbation)))
        return out

    def canonical_text(self) -> str:
        return "".join(f"{k} = {v}\n" for k, v in self.items())

    def digest(self) -> str:
        return hashlib.sha256(self.canonical_text().encode()).hexdigest()


def _fmt(x: float) -> str:
    return repr(float(x))


def _number(raw: str, key: str, line: int) -> float:
    try:
        value = float(raw)
    except ValueError:
        raise ConfigError(f"expected a number, got {raw!r}", key, line) from None
    if not math.isfinite(value):
        raise ConfigError(f"expected a finite number, got {raw!r}", key, line)
    return value


def _integer(raw: str, key: str, line: int) -> int:
    try:
        return int(raw, 0)
    except ValueError:
        raise ConfigError(f"expected an integer, got {raw!r}", key, line) from None


def _numbers(raw: str, key: str, line: int) -> tuple[float, ...]:
    parts = [p.strip() for p in raw.split(",") if p.strip()]
    if not parts:
        raise ConfigError("expected a comma-separated list of numbers", key, line)
    return tuple(_number(p, key, line) for p in parts)


def parse_lines(lines: list[tuple[int, str]]) -> dict[str, tuple[str, int]]:
    """``{key: (raw value, line number)}`` from numbered text lines."""
    entries: dict[str, tuple[str, int]] = {}
    for lineno, text in lines:
        text = text.strip()
        if not text or text.startswith("#"):
            continue
        if "=" not in text:
            raise ConfigError(f"expected 'key = value', got {text!r}", None, lineno)
        key, raw = (part.strip() for part in text.split("=", 1))
        if not key:
            raise ConfigError("empty key", None, lineno)
        if key in entries:
            raise ConfigError(f"duplicate key (first set on line {entries[key][1]})", key, lineno)
        entries[key] = (raw, lineno)
    return entries


def _config_lines(text: str) -> list[tuple[int, str]]:
    lines = list(enumerate(text.splitlines(), start=1))
    header = [(n, t[len(HEADER_PREFIX):]) for n, t in lines if t.startswith(HEADER_PREFIX)]
    return header if header else lines


def build_config(entries: dict[str, tuple[str, int]], experiment: str | None = None) -> ExperimentConfig:
    cfg = ExperimentConfig()
    sweep = cfg.sweep
    timers = {name: getattr(cfg.timers, name) for name in TIMER_NAMES}
    updates: dict = {}
    file_experiment = None

    for key, (raw, line) in entries.items():
        parts = key.split(".")
        if key == "experiment":
            if raw:
                if raw not in EXPERIMENTS:
                    raise ConfigError(f"unknown experiment {raw!r} (choose from {', '.join(EXPERIMENTS)})", key, line)
                file_experiment = raw
        elif key in ("seed", "master_seed"):
            seed = _integer(raw, key, line)
            if not 0 <= seed <= MASK64:
                raise ConfigError("seed must be a 64-bit unsigned integer", key, line)
            updates["master_seed"] = seed
        elif key in ("trials", "workers", "mobility.residence_crossings", "mobility.race_trials"):
            n = _integer(raw, key, line)
            if n < 1:
                raise ConfigError("must be >= 1", key, line)
            updates[parts[-1]] = n
        elif key == "output":
            updates["output"] = raw
        elif key == "sweep.variable":
            name = {"t_l3": "router_distance"}.get(raw, raw)
            if name not in TIMER_NAMES:
                raise ConfigError(f"unknown timer {raw!r}", key, line)
            if name != "router_distance":
                raise ConfigError("only the router distance can be swept", key, line)
            sweep = replace(sweep, variable=name)
        elif parts[0] == "sweep" and len(parts) == 2 and parts[1] in ("start", "stop", "step"):
            sweep = replace(sweep, **{parts[1]: _number(raw, key, line)})
        elif parts[0] == "timers" and len(parts) == 3 and parts[2] in ("mean", "perturbation"):
            if parts[1] not in TIMER_NAMES:
                raise ConfigError(f"unknown timer {parts[1]!r} (known: {', '.join(TIMER_NAMES)})", key, line)
            value = _number(raw, key, line)
            if value < 0:
                raise ConfigError(f"must be >= 0, got {raw}", key, line)
            timers[parts[1]] = replace(timers[parts[1]], **{parts[2]: value})
        elif key == "stream.period":
            period = _number(raw, key, line)
            if period <= 0:
                raise ConfigError("must be > 0", key, line)
            updates["packet_period"] = period
        elif key == "handover.schemes":
            try:
                schemes = tuple(Scheme.parse(s) for s in raw.split(",") if s.strip())
            except ValueError as exc:
                raise ConfigError(str(exc), key, line) from None
            if not schemes:
                raise ConfigError("needs at least one scheme", key, line)
            updates["schemes"] = schemes
        elif key == "mobility.rho":
            values = _numbers(raw, key, line)
            if any(v < 0 for v in values):
                raise ConfigError("rho values must be >= 0", key, line)
            updates["rho"] = values
        elif key == "mobility.k":
            values = _numbers(raw, key, line)
            if any(v < 1 for v in values):
                raise ConfigError("k values must be >= 1", key, line)
            updates["k"] = values
        elif key in ("mobility.radius", "mobility.speed"):
            value = _number(raw, key, line)
            if value <= 0:
                raise ConfigError("must be > 0", key, line)
            updates[parts[1]] = value
        else:
            raise ConfigError("unknown key", key, line)

    if sweep.step <= 0:
        raise ConfigError("must be > 0", "sweep.step", entries.get("sweep.step", (None, None))[1])
    if sweep.stop < sweep.start:
        raise ConfigError("sweep range is empty (stop < start)", "sweep.stop", entries.get("sweep.stop", (None, None))[1])

    if experiment is not None and file_experiment is not None and experiment != file_experiment:
        raise ConfigError(
            f"config is for experiment {file_experiment!r}, not {experiment!r}",
            "experiment",
            entries["experiment"][1],
        )
    chosen = experiment or file_experiment
    if chosen is None:
        raise ConfigError("missing required key", "experiment")
    return replace(cfg, experiment=chosen, sweep=sweep, timers=TimerSet(**timers), **updates)


def parse_config(text: str, experiment: str | None = None) -> ExperimentConfig:
    return build_config(parse_lines(_config_lines(text)), experiment)


def load_config(path: str | Path, experiment: str | None = None) -> ExperimentConfig:
    """Read and validate a config file (or a results CSV's header)."""
    return parse_config(Path(path).read_text(), experiment)

