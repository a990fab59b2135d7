"""Leakage estimation from constituent renewals.

On a day when the top-k membership changes, the strategy's generating
function is evaluated twice: on yesterday's constituents carried forward by
today's returns (``eval_hat``) and on today's new constituents
(``eval_new``). The gap between the two is the day's leakage increment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, SequencingError

MODES = ("multiplicative", "additive")


def leakage_increment_multiplicative(eval_hat, eval_new) -> float:
    g_hat, g_new = eval_hat.value, eval_new.value
    if not (g_hat > 0 and g_new > 0):
        raise DomainError(f"log-leakage needs positive G, got {g_hat}, {g_new}")
    return math.log(g_hat) - math.log(g_new)


def leakage_increment_additive(eval_hat, eval_new) -> float:
    return eval_hat.value - eval_new.value


def leakage_increment(mode: str, eval_hat, eval_new) -> float:
    if mode == "multiplicative":
        return leakage_increment_multiplicative(eval_hat, eval_new)
    if mode == "additive":
        return leakage_increment_additive(eval_hat, eval_new)
    raise ValueError(f"unknown mode {mode!r}")


@dataclass
class LeakageLedger:
    """Dated leakage increments of one run.

    Units are log relative wealth in multiplicative mode and relative wealth
    in additive mode. Owned by a single run; appends are sequential.
    """

    mode: str
    cumulative: float = 0.0
    dates: list = field(default_factory=list)
    increments: list = field(default_factory=list)
    changed: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.dates)

    def as_arrays(self):
        return (
            np.array(self.dates, dtype="datetime64[D]"),
            np.array(self.increments, dtype=np.float64),
            np.array(self.changed, dtype=bool),
        )


def apply_leakage(ledger: LeakageLedger, date, list_changed: bool, delta: float) -> LeakageLedger:
    """Append one day to ``ledger`` in place and return it.

    Days without a membership change contribute exactly zero whatever
    ``delta`` says.
    """
    date = np.datetime64(date, "D")
    if ledger.dates and not date > ledger.dates[-1]:
        raise SequencingError(f"ledger date {date} not after {ledger.dates[-1]}")
    inc = float(delta) if list_changed else 0.0
    ledger.dates.append(date)
    ledger.increments.append(inc)
    ledger.changed.append(bool(list_changed))
    ledger.cumulative += inc
    return ledger
