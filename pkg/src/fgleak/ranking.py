"""Rank operator, top-k constituent lists, and renormalized sub-market weights."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DelistingError, DomainError


@dataclass(frozen=True, eq=False)
class ConstituentList:
    """Top-k names at a rebalance time, rank 1 first.

    ``caps`` holds the capitalizations of the listed names at ``as_of`` in
    list order; the next day's old-list weights grow them by the day's
    returns.
    """

    names: np.ndarray
    caps: np.ndarray
    as_of: np.datetime64 | None = None

    def __len__(self) -> int:
        return len(self.names)

    def same_members(self, other: "ConstituentList") -> bool:
        """True when both lists hold the same set of names (order ignored)."""
        if len(self) != len(other):
            return False
        return bool(np.array_equal(np.sort(self.names), np.sort(other.names)))


@dataclass(frozen=True, eq=False)
class SubMarketWeights:
    weights: np.ndarray
    multiplier: float
    list: ConstituentList


def _as_caps(caps) -> np.ndarray:
    caps = np.asarray(caps, dtype=np.float64)
    if caps.ndim != 1:
        raise DomainError(f"caps must be a vector, got shape {caps.shape}")
    if not np.all(np.isfinite(caps)) or np.any(caps <= 0.0):
        raise DomainError("capitalizations must be positive and finite")
    return caps


def rank_names(caps) -> np.ndarray:
    """Return name indices ordered from largest to smallest cap (0-based).

    Exact ties go to the smaller name index first.
    """
    caps = _as_caps(caps)
    # lexsort: last key is primary
    return np.lexsort((np.arange(caps.size), -caps))


def top_k_weights(caps, k: int, as_of=None) -> SubMarketWeights:
    caps = _as_caps(caps)
    d = caps.size
    if not 2 <= k <= d:
        raise DomainError(f"k={k} outside [2, {d}]")
    order = rank_names(caps)[:k]
    top = caps[order]
    top_sum = top.sum()
    lst = ConstituentList(order, top, as_of)
    return SubMarketWeights(top / top_sum, float(caps.sum() / top_sum), lst)


def grown_caps(prev_list: ConstituentList, day) -> np.ndarray:
    """Old-list caps carried forward by the day's returns, in list order."""
    d = day.caps.size
    bad = prev_list.names[(prev_list.names < 0) | (prev_list.names >= d)]
    if bad.size:
        raise DelistingError(f"name index {int(bad[0])} missing on {day.date}")
    return prev_list.caps * (1.0 + day.returns[prev_list.names])


def old_list_weights(prev_list: ConstituentList, day) -> SubMarketWeights:
    """Weights of yesterday's constituents after today's returns.

    Ordered like ``prev_list``; not necessarily monotone since ranks may
    have crossed overnight.
    """
    grown = grown_caps(prev_list, day)
    total = grown.sum()
    lst = ConstituentList(prev_list.names, grown, day.date)
    return SubMarketWeights(grown / total, float(day.caps.sum() / total), lst)
