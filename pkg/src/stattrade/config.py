"""Run configuration: INI-style sections, overridable from the command line."""
from __future__ import annotations

import configparser
import os
import re
from dataclasses import dataclass, field, replace
from datetime import date
from pathlib import Path

from .backtest import BacktestConfig, CostSchedule
from .ingest import SessionCalendar
from .snooping import DEFAULT_B, DEFAULT_Q, OMEGA_METHODS
from .strategy import FAMILIES, FREQUENCIES

OUTPUT_ENV = "STATTRADE_OUTPUT_DIR"
COST_MODES = ("on", "off", "both")


class ConfigError(ValueError):
    pass


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.replace(";", ",").split(",") if x.strip())


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.replace(";", ",").split(",") if x.strip())


@dataclass(frozen=True)
class RunConfig:
    data: dict = field(default_factory=dict)  # frequency -> path
    frequencies: tuple[int, ...] = FREQUENCIES
    timestamp_format: str = "auto"
    missing: str = "reject"
    calendar: SessionCalendar = field(default_factory=SessionCalendar.default)
    costs: CostSchedule = field(default_factory=CostSchedule.default)
    cost_mode: str = "both"
    capital: float = 1_000_000.0
    multiplier: float = 300.0
    cross_day_windows: bool = False
    grid: str = "all"  # all | MA | KDJ | BOLL | comma-separated strategy names
    B: int = DEFAULT_B
    Q: float = DEFAULT_Q
    seed: int = 0
    omega: str = "nw"  # studentising scale for SPA: nw | bootstrap | kernel
    alphas: tuple[float, ...] = (0.05, 0.10)
    adf_lags: tuple[int, ...] = (0, 1, 2)
    adf_variant: str = "ct"
    selector: bool = True
    pool_threshold: float = 1.5
    output: Path = Path("out")
    top_n: int = 3
    jobs: int = 0  # 0: all cores

    def __post_init__(self):
        if self.cost_mode not in COST_MODES:
            raise ConfigError(f"costs must be one of {COST_MODES}, got {self.cost_mode!r}")
        if self.omega not in OMEGA_METHODS:
            raise ConfigError(f"omega must be one of {OMEGA_METHODS}, got {self.omega!r}")
        if any(not 0 < a < 1 for a in self.alphas):
            raise ConfigError("alphas must lie in (0, 1)")
        if self.capital <= 0 or self.multiplier <= 0:
            raise ConfigError("capital and multiplier must be positive")
        for f, p in self.data.items():
            if not Path(p).exists():
                raise ConfigError(f"data file for {f}s does not exist: {p}")

    @property
    def families(self) -> tuple[str, ...]:
        g = self.grid.strip().upper()
        if g == "ALL":
            return FAMILIES
        if g in FAMILIES:
            return (g,)
        return ()

    @property
    def explicit(self) -> tuple[str, ...]:
        if self.families:
            return ()
        # names carry commas inside their parentheses, so split only outside them
        return tuple(x.strip() for x in re.split(r",(?![^()]*\))", self.grid) if x.strip())

    def backtest(self, include_costs: bool) -> BacktestConfig:
        return BacktestConfig(self.capital, self.multiplier, self.costs, include_costs)

    @property
    def output_dir(self) -> Path:
        env = os.environ.get(OUTPUT_ENV)
        return Path(env) if env else Path(self.output)

    def with_overrides(self, **kw) -> "RunConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


def load_config(path: str | Path | None = None, **overrides) -> RunConfig:
    """Read an INI file (relative data paths resolve against its directory)."""
    kw: dict = {}
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
        cp.optionxform = str
        cp.read(path)
        base = path.parent
        if cp.has_section("data"):
            sec = cp["data"]
            data = {}
            for key, value in sec.items():
                if key.startswith("path_") and value.strip():
                    p = Path(value.strip())
                    data[int(key[5:])] = p if p.is_absolute() else base / p
            kw["data"] = data
            if "frequencies" in sec:
                kw["frequencies"] = _ints(sec["frequencies"])
            if "timestamp_format" in sec:
                kw["timestamp_format"] = sec["timestamp_format"].strip()
            if "missing" in sec:
                kw["missing"] = sec["missing"].strip()
        if cp.has_section("calendar") and len(cp["calendar"]):
            kw["calendar"] = SessionCalendar.parse(dict(cp["calendar"]))
        if cp.has_section("costs") and len(cp["costs"]):
            entries = sorted((date.fromisoformat(k), float(v)) for k, v in cp["costs"].items())
            kw["costs"] = CostSchedule(tuple(entries))
        sections = {
            "backtest": {"costs": ("cost_mode", str), "capital": ("capital", float),
                         "multiplier": ("multiplier", float),
                         "cross_day_windows": ("cross_day_windows", "bool")},
            "grid": {"select": ("grid", str)},
            "bootstrap": {"B": ("B", int), "Q": ("Q", float), "seed": ("seed", int), "omega": ("omega", str)},
            "tests": {"alphas": ("alphas", _floats), "adf_lags": ("adf_lags", _ints),
                      "adf_variant": ("adf_variant", str)},
            "selector": {"enabled": ("selector", "bool"), "pool_threshold": ("pool_threshold", float)},
            "output": {"dir": ("output", Path), "top_n": ("top_n", int), "jobs": ("jobs", int)},
        }
        for name, keys in sections.items():
            if not cp.has_section(name):
                continue
            sec = cp[name]
            for key, (attr, conv) in keys.items():
                if key not in sec:
                    continue
                if conv == "bool":
                    kw[attr] = sec.getboolean(key)
                elif conv is Path:
                    p = Path(sec[key].strip())
                    kw[attr] = p if p.is_absolute() else base / p
                else:
                    kw[attr] = conv(sec[key].strip())
    kw.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return RunConfig(**kw)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
