"""Daily rebalance loop for functionally generated top-k strategies.

Wealth is always obtained from share accounting; the generating function
only decides the target weights. ``step`` is the reference implementation
built from the individual operations below. ``run_strategy`` drives a whole
panel either through ``step`` or through the fused numba kernel in
:mod:`fgleak._kernels`.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import _accel
from .errors import AlignmentError, ConfigError, GenerationError, WealthError
from .genfn import GenFnEval, GenFnSpec, calibrate_normalization, evaluate
from .leakage import MODES, LeakageLedger, apply_leakage, leakage_increment
from .ranking import ConstituentList, SubMarketWeights, old_list_weights, top_k_weights


@dataclass(frozen=True, eq=False)
class StrategyState:
    """Holdings right after the rebalance at ``date``.

    ``shares`` is aligned with ``weights.list``; ``eval`` is the generating
    function at ``weights.weights`` and supplies next step's gradient.
    """

    shares: np.ndarray
    wealth: float
    gamma: float
    mode: str
    date: np.datetime64
    weights: SubMarketWeights
    eval: GenFnEval
    leakage: float = 0.0

    @property
    def list(self) -> ConstituentList:
        return self.weights.list


@dataclass(frozen=True, eq=False)
class RebalanceRecord:
    date: np.datetime64
    wealth_before_rebalance: float
    old_list_wealth: float
    old_cap_sum: float
    new_cap_sum: float
    target_weights: np.ndarray
    gamma_increment: float
    leakage_increment: float
    list_changed: bool
    turnover: float


def holdings_value(shares, grown_caps) -> float:
    """Currency value of yesterday's shares at today's grown caps."""
    return float(np.dot(shares, grown_caps))


def wealth_update(prev: StrategyState, prev_list: ConstituentList, day, new_list: ConstituentList) -> float:
    """Relative wealth at ``day``: old holdings valued against the new top-k total."""
    mu_hat = old_list_weights(prev_list, day)
    return holdings_value(prev.shares, mu_hat.list.caps) / float(new_list.caps.sum())


def target_weights_multiplicative(ev: GenFnEval, mu: SubMarketWeights) -> np.ndarray:
    if not ev.value > 0:
        raise GenerationError(f"multiplicative generation needs G > 0, got {ev.value}")
    x = mu.weights
    return x / ev.value * (ev.grad + ev.value - np.dot(ev.grad, x))


def target_weights_additive(ev: GenFnEval, mu: SubMarketWeights, wealth: float) -> np.ndarray:
    if not wealth > 0:
        raise WealthError(f"additive weights undefined for wealth {wealth}")
    x = mu.weights
    return x / wealth * (ev.grad + wealth - np.dot(ev.grad, x))


def target_weights(mode: str, ev: GenFnEval, mu: SubMarketWeights, wealth: float) -> np.ndarray:
    if mode == "multiplicative":
        return target_weights_multiplicative(ev, mu)
    return target_weights_additive(ev, mu, wealth)


def weights_to_shares(pi, wealth_numerator: float, caps) -> np.ndarray:
    return np.asarray(pi) * wealth_numerator / np.asarray(caps)


def gamma_increment(
    eval_prev: GenFnEval, eval_hat: GenFnEval, mu_prev: SubMarketWeights, mu_hat: SubMarketWeights
) -> float:
    """Residual of a first-order expansion of G along the old list."""
    if not np.array_equal(mu_prev.list.names, mu_hat.list.names):
        raise AlignmentError("gamma increment needs both weight vectors on the same list")
    move = mu_hat.weights - mu_prev.weights
    return eval_prev.value - eval_hat.value + float(np.dot(eval_prev.grad, move))


def _turnover(d, old_names, old_weights, new_names, new_weights) -> float:
    diff = np.zeros(d)
    diff[old_names] += old_weights
    diff[new_names] -= new_weights
    return 0.5 * float(np.abs(diff).sum())


def _check_mode(mode: str) -> None:
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")


def init_state(day, k: int, spec: GenFnSpec, mode: str) -> StrategyState:
    """Start with ``V(0) = G(mu(0))`` and the mode's target weights."""
    _check_mode(mode)
    mu = top_k_weights(day.caps, k, day.date)
    ev = evaluate(spec, mu.weights)
    wealth = ev.value
    pi = target_weights(mode, ev, mu, wealth)
    numerator = wealth * float(mu.list.caps.sum())
    shares = weights_to_shares(pi, numerator, mu.list.caps)
    return StrategyState(shares, wealth, 0.0, mode, day.date, mu, ev)


def step(prev: StrategyState, day, k: int, spec: GenFnSpec, ledger: LeakageLedger | None = None):
    """Advance one trading day; returns ``(state, record)``.

    ``ledger``, when given, receives the day's leakage entry.
    """
    try:
        new = top_k_weights(day.caps, k, day.date)
        mu_hat = old_list_weights(prev.list, day)
        grown = mu_hat.list.caps
        numerator = holdings_value(prev.shares, grown)
        old_sum, new_sum = float(grown.sum()), float(new.list.caps.sum())
        wealth = numerator / new_sum

        eval_hat = evaluate(spec, mu_hat.weights)
        d_gamma = gamma_increment(prev.eval, eval_hat, prev.weights, mu_hat)

        eval_new = evaluate(spec, new.weights)
        changed = not prev.list.same_members(new.list)
        d_leak = leakage_increment(prev.mode, eval_hat, eval_new) if changed else 0.0
        if ledger is not None:
            apply_leakage(ledger, day.date, changed, d_leak)

        if prev.mode == "multiplicative" and not wealth > 0:
            raise WealthError(f"wealth {wealth} not positive")
        pi = target_weights(prev.mode, eval_new, new, wealth)
        shares = weights_to_shares(pi, numerator, new.list.caps)
        turnover = _turnover(day.caps.size, prev.list.names, prev.shares * grown / numerator, new.list.names, pi)
    except WealthError as exc:
        if exc.date is None:
            raise WealthError(str(exc), day.date) from None
        raise

    state = StrategyState(
        shares, wealth, prev.gamma + d_gamma, prev.mode, day.date, new, eval_new, prev.leakage + d_leak
    )
    record = RebalanceRecord(
        day.date, wealth, numerator / old_sum, old_sum, new_sum, pi, d_gamma, d_leak, changed, turnover
    )
    return state, record


@dataclass(frozen=True, eq=False)
class StrategyRun:
    """Per-day series of one backtest, start day included."""

    k: int
    mode: str
    spec: GenFnSpec
    dates: np.ndarray
    wealth: np.ndarray
    G: np.ndarray
    gamma: np.ndarray
    leakage: np.ndarray
    list_changed: np.ndarray
    turnover: np.ndarray
    old_list_wealth: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return len(self.dates)

    @property
    def log_wealth(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.log(self.wealth)


def _run_numpy(panel, k, mode, spec) -> dict:
    n = len(panel)
    out = {name: np.zeros(n) for name in ("wealth", "G", "gamma", "leakage", "turnover", "old_list_wealth")}
    out["list_changed"] = np.zeros(n, dtype=bool)
    state = init_state(panel[0], k, spec, mode)
    out["wealth"][0] = out["old_list_wealth"][0] = state.wealth
    out["G"][0] = state.eval.value
    for l in range(1, n):
        state, rec = step(state, panel[l], k, spec)
        out["wealth"][l] = state.wealth
        out["G"][l] = state.eval.value
        out["gamma"][l] = state.gamma
        out["leakage"][l] = state.leakage
        out["turnover"][l] = rec.turnover
        out["list_changed"][l] = rec.list_changed
        out["old_list_wealth"][l] = rec.old_list_wealth
    return out


def _run_numba(panel, k, mode, spec) -> dict:
    from ._kernels import STATUS_OK, run_strategy_kernel

    n = len(panel)
    out = {name: np.zeros(n) for name in ("wealth", "G", "gamma", "leakage", "turnover", "old_list_wealth")}
    out["list_changed"] = np.zeros(n, dtype=bool)
    status, where = run_strategy_kernel(
        panel.caps,
        panel.returns,
        k,
        mode == "additive",
        spec.kernel_code,
        spec.normalization_constant,
        out["wealth"],
        out["G"],
        out["gamma"],
        out["leakage"],
        out["list_changed"],
        out["turnover"],
        out["old_list_wealth"],
    )
    if status != STATUS_OK:
        raise WealthError(f"wealth {out['wealth'][where]} not positive ({mode})", panel.dates[where])
    return out


def run_strategy(
    panel,
    k: int,
    mode: str = "multiplicative",
    spec: GenFnSpec | None = None,
    *,
    calibrate: bool = True,
    accelerate: bool | None = None,
) -> StrategyRun:
    """Backtest one (k, mode, generating function) over every day of ``panel``.

    With ``calibrate`` the generating function is rescaled to equal one at
    the first day's weights, and that constant is kept for the whole run.
    ``accelerate`` selects the numba kernel; it defaults to on when numba is
    available and ``FGLEAK_DISABLE_NUMBA`` is unset. Custom generating
    functions always use the numpy path.
    """
    _check_mode(mode)
    spec = spec or GenFnSpec()
    if not 2 <= k <= panel.d:
        raise ConfigError(f"k={k} outside [2, {panel.d}]")
    if len(panel) == 0:
        empty = np.zeros(0)
        return StrategyRun(k, mode, spec, panel.dates, empty, empty, empty, empty, np.zeros(0, bool), empty, empty)
    if accelerate is None:
        accelerate = _accel.NUMBA_ENABLED
    accelerate = accelerate and spec.kernel_code >= 0
    if calibrate:
        x0 = top_k_weights(panel.caps[0], k).weights
        spec = calibrate_normalization(spec, x0)
        if accelerate:
            from ._kernels import genfn_raw

            # same summation order as the kernel, so G(mu(0)) == 1 exactly there too
            spec = replace(spec, normalization_constant=float(genfn_raw(spec.kernel_code, x0)))
    if accelerate:
        out = _run_numba(panel, k, mode, spec)
    else:
        out = _run_numpy(panel, k, mode, spec)
    return StrategyRun(k, mode, spec, panel.dates, **out)
