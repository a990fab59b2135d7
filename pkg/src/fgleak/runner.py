"""Run (k, mode) backtests over one shared panel and write plot-ready series."""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _accel
from .engine import StrategyRun, run_strategy
from .errors import ConfigError, FGLeakError
from .genfn import GenFnSpec
from .leakage import MODES
from .market_data import MarketPanel, SynthConfig, load_panel, synthesize_panel

logger = logging.getLogger(__name__)

CSV_COLUMNS = ("date", "V", "logV", "G", "Gamma", "L", "absL", "list_changed", "turnover")


@dataclass(frozen=True)
class RunConfig:
    k_values: tuple
    modes: tuple = ("multiplicative",)
    genfn: str = "entropy"
    data_path: str | None = None
    synth: SynthConfig | None = None
    start: str | None = None
    end: str | None = None
    output_dir: str | None = None
    jobs: int = 1

    def __post_init__(self):
        object.__setattr__(self, "k_values", tuple(int(k) for k in self.k_values))
        object.__setattr__(self, "modes", tuple(self.modes))
        if (self.data_path is None) == (self.synth is None):
            raise ConfigError("give exactly one of a data path or a synthetic config")
        if not self.k_values:
            raise ConfigError("k_values is empty")
        if len(set(self.k_values)) != len(self.k_values):
            raise ConfigError(f"duplicate k in {self.k_values}")
        if min(self.k_values) < 2:
            raise ConfigError(f"every k must be >= 2, got {self.k_values}")
        if not self.modes or any(m not in MODES for m in self.modes):
            raise ConfigError(f"modes must be drawn from {MODES}, got {self.modes}")
        GenFnSpec(self.genfn)
        if self.start and self.end and np.datetime64(self.start) > np.datetime64(self.end):
            raise ConfigError(f"start {self.start} after end {self.end}")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")

    def echo(self) -> dict:
        out = {
            "k_values": list(self.k_values),
            "modes": list(self.modes),
            "genfn": self.genfn,
            "start": self.start,
            "end": self.end,
        }
        if self.data_path is not None:
            out["data"] = str(self.data_path)
        else:
            s = self.synth
            out["synth"] = {
                "d": s.d,
                "n_days": s.n_days,
                "seed": s.seed,
                "drift_by_rank": s.drift_by_rank.tolist(),
                "vol_by_rank": s.vol_by_rank.tolist(),
                "initial_caps": s.initial_caps.tolist(),
                "start_date": s.start_date,
            }
        return out


@dataclass
class RunOutput:
    config: RunConfig
    panel: MarketPanel
    runs: dict = field(default_factory=dict)  # (k, mode) -> StrategyRun
    wall_time: float = 0.0

    def summary(self) -> dict:
        runs = []
        for (k, mode), run in self.runs.items():
            entry = {"k": k, "mode": mode, "n_days": len(run), "n_change_days": int(run.list_changed.sum())}
            if len(run):
                v = float(run.wealth[-1])
                entry["final"] = {
                    "V": v,
                    "logV": math.log(v) if v > 0 else None,
                    "G": float(run.G[-1]),
                    "Gamma": float(run.gamma[-1]),
                    "L": float(run.leakage[-1]),
                    "absL": abs(float(run.leakage[-1])),
                }
                entry["normalization_constant"] = run.spec.normalization_constant
            runs.append(entry)
        panel = self.panel
        return {
            "config": self.config.echo(),
            "panel": {
                "d": panel.d,
                "n_days": len(panel),
                "first_date": str(panel.dates[0]) if len(panel) else None,
                "last_date": str(panel.dates[-1]) if len(panel) else None,
                "consistent": panel.consistent,
            },
            "accelerated": _accel.NUMBA_ENABLED,
            "runs": runs,
            "wall_time_s": self.wall_time,
        }


def csv_name(k: int, mode: str) -> str:
    return f"k{k}_{mode}.csv"


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def series_csv(run: StrategyRun) -> bytes:
    """Render one run as CSV bytes; floats carry 17 significant digits."""
    lines = [",".join(CSV_COLUMNS)]
    logv = run.log_wealth
    for l in range(len(run)):
        leak = run.leakage[l]
        lines.append(
            ",".join(
                (
                    str(run.dates[l]),
                    _fmt(run.wealth[l]),
                    _fmt(logv[l]),
                    _fmt(run.G[l]),
                    _fmt(run.gamma[l]),
                    _fmt(leak),
                    _fmt(abs(leak)),
                    "1" if run.list_changed[l] else "0",
                    _fmt(run.turnover[l]),
                )
            )
        )
    return ("\n".join(lines) + "\n").encode("utf-8")


def _write_atomic(path: Path, data: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def emit_series(out: RunOutput, directory) -> list[Path]:
    """Write one CSV per (k, mode) and ``summary.json``; returns the paths.

    The summary carries the config echo and a sha256 of every CSV. Files
    already written are removed if a later write fails.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    summary = out.summary()
    try:
        for entry, ((k, mode), run) in zip(summary["runs"], out.runs.items()):
            data = series_csv(run)
            path = directory / csv_name(k, mode)
            _write_atomic(path, data)
            written.append(path)
            entry["file"] = path.name
            entry["sha256"] = hashlib.sha256(data).hexdigest()
        path = directory / "summary.json"
        _write_atomic(path, (json.dumps(summary, indent=2, allow_nan=False) + "\n").encode("utf-8"))
        written.append(path)
    except BaseException:
        for p in written:
            p.unlink(missing_ok=True)
        raise
    return written


def load_run_panel(cfg: RunConfig) -> MarketPanel:
    if cfg.data_path is not None:
        return load_panel(cfg.data_path, start=cfg.start, end=cfg.end)
    return synthesize_panel(cfg.synth).window(cfg.start, cfg.end)


def _run_one(panel, k, mode, genfn) -> StrategyRun:
    try:
        return run_strategy(panel, k, mode, GenFnSpec(genfn))
    except FGLeakError as exc:
        raise type(exc)(f"k={k} {mode}: {exc}") from exc


def run_backtest(cfg: RunConfig) -> RunOutput:
    """Run every (k, mode) pair of ``cfg``; writes files when ``output_dir`` is set."""
    t0 = time.perf_counter()
    panel = load_run_panel(cfg)
    too_big = [k for k in cfg.k_values if k > panel.d]
    if too_big:
        raise ConfigError(f"k={too_big} exceeds the universe size d={panel.d}")
    pairs = [(k, m) for k in cfg.k_values for m in cfg.modes]
    logger.info("panel d=%d days=%d; %d runs", panel.d, len(panel), len(pairs))
    if cfg.jobs > 1 and len(pairs) > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(lambda km: _run_one(panel, km[0], km[1], cfg.genfn), pairs))
    else:
        results = [_run_one(panel, k, m, cfg.genfn) for k, m in pairs]
    out = RunOutput(cfg, panel, dict(zip(pairs, results)))
    out.wall_time = time.perf_counter() - t0
    if cfg.output_dir is not None:
        emit_series(out, cfg.output_dir)
    return out
