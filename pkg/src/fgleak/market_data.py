"""Daily panels of market capitalizations and simple returns.

Panels come either from a CRSP-shaped CSV (``date,id,cap,ret``) or from a
seeded rank-based synthetic market.
"""

from __future__ import annotations

import csv
import datetime as dt
import logging
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _accel
from .errors import ConfigError, DataError, ParseError, UniverseError, ValidationError
from .ranking import rank_names

logger = logging.getLogger(__name__)

CSV_HEADER = ("date", "id", "cap", "ret")
CONSISTENCY_RTOL = 1e-6


class ConsistencyWarning(UserWarning):
    """Caps and returns disagree beyond tolerance (splits, dividends, ...)."""


@dataclass(frozen=True, eq=False)
class MarketDay:
    date: np.datetime64
    caps: np.ndarray
    returns: np.ndarray


def _readonly(a) -> np.ndarray:
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class MarketPanel:
    """Immutable (n_days, d) panel; safe to share between concurrent runs."""

    dates: np.ndarray
    names: tuple
    caps: np.ndarray
    returns: np.ndarray
    consistent: bool = field(init=False)

    def __post_init__(self):
        dates = np.array(self.dates, dtype="datetime64[D]")
        dates.setflags(write=False)
        caps, rets = _readonly(self.caps), _readonly(self.returns)
        n, d = len(dates), len(self.names)
        caps, rets = caps.reshape(n, d), rets.reshape(n, d)
        if d < 2:
            raise UniverseError(f"need at least 2 names, got {d}")
        if n > 1 and not np.all(dates[1:] > dates[:-1]):
            raise ValidationError("dates must be strictly increasing")
        if not (np.all(np.isfinite(caps)) and np.all(caps > 0)):
            l, j = np.argwhere(~(np.isfinite(caps) & (caps > 0)))[0]
            raise ValidationError(f"non-positive cap on {dates[l]} for {self.names[j]}")
        if not (np.all(np.isfinite(rets)) and np.all(rets > -1)):
            l, j = np.argwhere(~(np.isfinite(rets) & (rets > -1)))[0]
            raise ValidationError(f"return <= -1 on {dates[l]} for {self.names[j]}")
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "caps", caps)
        object.__setattr__(self, "returns", rets)
        object.__setattr__(self, "consistent", check_consistency(caps, rets))

    @property
    def d(self) -> int:
        return len(self.names)

    def __len__(self) -> int:
        return len(self.dates)

    def __getitem__(self, l: int) -> MarketDay:
        return MarketDay(self.dates[l], self.caps[l], self.returns[l])

    @property
    def days(self) -> list[MarketDay]:
        return [self[l] for l in range(len(self))]

    def window(self, start=None, end=None) -> "MarketPanel":
        """Sub-panel with ``start <= date <= end`` (either bound optional)."""
        mask = np.ones(len(self), dtype=bool)
        if start is not None:
            mask &= self.dates >= np.datetime64(start, "D")
        if end is not None:
            mask &= self.dates <= np.datetime64(end, "D")
        return MarketPanel(self.dates[mask], self.names, self.caps[mask], self.returns[mask])


def check_consistency(caps: np.ndarray, returns: np.ndarray, rtol=CONSISTENCY_RTOL) -> bool:
    """Whether ``caps[l] ~= caps[l-1] * (1 + returns[l])`` on every day."""
    if len(caps) < 2:
        return True
    implied = caps[:-1] * (1.0 + returns[1:])
    return bool(np.all(np.abs(caps[1:] - implied) <= rtol * caps[1:]))


def load_panel(path, format: str = "crsp_csv", start=None, end=None) -> MarketPanel:
    """Read a CRSP-shaped CSV into a validated panel.

    Every row is validated. Only names present on every day of the
    ``[start, end]`` window survive; a name missing on any day (delisted or
    listed mid-sample) is dropped. Row order in the file does not matter.
    """
    if format != "crsp_csv":
        raise ConfigError(f"unsupported panel format {format!r}")
    lo = None if start is None else np.datetime64(start, "D")
    hi = None if end is None else np.datetime64(end, "D")
    rows: dict[np.datetime64, dict[str, tuple[float, float]]] = {}
    all_names: set[str] = set()
    try:
        fh = open(Path(path), newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != CSV_HEADER:
            raise ParseError(f"expected header {','.join(CSV_HEADER)}, got {header}", 1)
        for row in reader:
            line = reader.line_num
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 4:
                raise ParseError(f"expected 4 fields, got {len(row)}", line)
            date_s, name, cap_s, ret_s = (f.strip() for f in row)
            try:
                date = np.datetime64(dt.date.fromisoformat(date_s), "D")
            except ValueError:
                raise ParseError(f"bad date {date_s!r}", line) from None
            try:
                cap, ret = float(cap_s), float(ret_s)
            except ValueError:
                raise ParseError(f"bad number in {row}", line) from None
            if not name:
                raise ParseError("empty id", line)
            if not (math.isfinite(cap) and cap > 0):
                raise ValidationError(f"line {line}: cap {cap_s} <= 0 on {date_s} for {name}")
            if not (math.isfinite(ret) and ret > -1):
                raise ValidationError(f"line {line}: return {ret_s} <= -1 on {date_s} for {name}")
            all_names.add(name)
            if (lo is not None and date < lo) or (hi is not None and date > hi):
                continue
            day = rows.setdefault(date, {})
            if name in day:
                raise ParseError(f"duplicate row for {name} on {date_s}", line)
            day[name] = (cap, ret)

    dates = sorted(rows)
    survivors = set(all_names)
    for date in dates:
        survivors &= rows[date].keys()
    names = tuple(sorted(survivors))
    if len(names) < 2:
        raise UniverseError(f"only {len(names)} names present on every day of the window")
    dropped = len(all_names) - len(names)
    if dropped:
        logger.info("dropped %d names not present on every day", dropped)
    caps = np.array([[rows[t][nm][0] for nm in names] for t in dates]).reshape(len(dates), len(names))
    rets = np.array([[rows[t][nm][1] for nm in names] for t in dates]).reshape(len(dates), len(names))
    panel = MarketPanel(np.array(dates, dtype="datetime64[D]"), names, caps, rets)
    if not panel.consistent:
        warnings.warn(
            f"{path}: caps and returns disagree beyond rtol={CONSISTENCY_RTOL}; using returns as given",
            ConsistencyWarning,
            stacklevel=2,
        )
    return panel


def write_panel_csv(panel: MarketPanel, path) -> None:
    """Write ``panel`` in the CRSP-shaped CSV layout read by :func:`load_panel`."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for l, date in enumerate(panel.dates):
            for j, name in enumerate(panel.names):
                w.writerow((str(date), name, repr(float(panel.caps[l, j])), repr(float(panel.returns[l, j]))))


@dataclass(frozen=True, eq=False)
class SynthConfig:
    """Rank-based geometric random walk.

    Each day a name's log-cap moves by ``drift_by_rank[r] + vol_by_rank[r] * Z``
    where ``r`` is the name's rank at the start of the day. The panel has
    ``n_days + 1`` rows: the start day followed by ``n_days`` trading days.
    """

    d: int
    n_days: int
    drift_by_rank: np.ndarray
    vol_by_rank: np.ndarray
    seed: int
    initial_caps: np.ndarray
    start_date: str = "2000-01-03"

    def __post_init__(self):
        for name in ("drift_by_rank", "vol_by_rank", "initial_caps"):
            object.__setattr__(self, name, _readonly(getattr(self, name)))
        if self.d < 2:
            raise ConfigError(f"d must be >= 2, got {self.d}")
        if self.n_days < 0:
            raise ConfigError(f"n_days must be >= 0, got {self.n_days}")
        for name in ("drift_by_rank", "vol_by_rank", "initial_caps"):
            arr = getattr(self, name)
            if arr.shape != (self.d,) or not np.all(np.isfinite(arr)):
                raise ConfigError(f"{name} must be {self.d} finite values")
        if np.any(self.vol_by_rank < 0):
            raise ConfigError("volatilities must be non-negative")
        if np.any(self.initial_caps <= 0):
            raise ConfigError("initial caps must be positive")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must fit in 64 unsigned bits")


def atlas_config(
    d: int,
    n_days: int,
    seed: int = 0,
    *,
    gamma: float | None = None,
    vol_top: float = 0.008,
    vol_bottom: float = 0.016,
    zipf_exponent: float = 1.0,
    start_date: str = "2000-01-03",
) -> SynthConfig:
    """Atlas-style stable ranked market with volatility increasing in rank.

    Every rank drifts down by ``gamma`` except the bottom one, which drifts up
    by ``(d - 1) * gamma``; the ranked cap curve is then stationary and
    ranks keep crossing. Rank-``i`` log-gaps average roughly
    ``sigma**2 / (4 * i * gamma)``, so the default ``gamma`` is picked to make
    the stationary curve close to ``cap ~ rank**-zipf_exponent``, which is
    also the starting curve.
    """
    vol = np.linspace(vol_top, vol_bottom, d)
    if gamma is None:
        gamma = float(np.mean(vol)) ** 2 / (4.0 * zipf_exponent)
    drift = np.full(d, -gamma)
    drift[-1] = (d - 1) * gamma
    caps0 = np.arange(1, d + 1, dtype=np.float64) ** -zipf_exponent
    return SynthConfig(d, n_days, drift, vol, seed, caps0, start_date)


def _synth_caps_numpy(caps0, drift, vol, shocks):
    n, d = shocks.shape
    caps = np.empty((n + 1, d))
    caps[0] = caps0
    rank_of = np.empty(d, dtype=np.int64)
    for l in range(1, n + 1):
        rank_of[rank_names(caps[l - 1])] = np.arange(d)
        caps[l] = caps[l - 1] * np.exp(drift[rank_of] + vol[rank_of] * shocks[l - 1])
    return caps


def synthesize_panel(cfg: SynthConfig, accelerate: bool | None = None) -> MarketPanel:
    """Generate a panel from ``cfg``; same seed and path give identical bits.

    ``accelerate`` picks the numba kernel (default when numba is enabled) or
    the numpy loop. The two agree to rounding, not bit for bit.
    """
    if accelerate is None:
        accelerate = _accel.NUMBA_ENABLED
    rng = np.random.default_rng(cfg.seed)
    shocks = rng.standard_normal((cfg.n_days, cfg.d))
    if accelerate:
        from ._kernels import synth_caps

        caps = synth_caps(cfg.initial_caps, cfg.drift_by_rank, cfg.vol_by_rank, shocks)
    else:
        caps = _synth_caps_numpy(cfg.initial_caps, cfg.drift_by_rank, cfg.vol_by_rank, shocks)
    rets = np.zeros_like(caps)
    rets[1:] = caps[1:] / caps[:-1] - 1.0
    start = np.datetime64(cfg.start_date, "D")
    dates = np.busday_offset(start, np.arange(cfg.n_days + 1), roll="forward")
    names = tuple(f"S{j:04d}" for j in range(cfg.d))
    return MarketPanel(dates, names, caps, rets)
