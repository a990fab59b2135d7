"""Backtests of rank-dependent functionally generated trading strategies on
the top-k sub-market, with leakage estimates for constituent renewals."""

from .engine import StrategyRun, StrategyState, init_state, run_strategy, step
from .genfn import GenFnEval, GenFnSpec, calibrate_normalization, evaluate
from .leakage import LeakageLedger, apply_leakage
from .market_data import MarketDay, MarketPanel, SynthConfig, atlas_config, load_panel, synthesize_panel
from .ranking import ConstituentList, SubMarketWeights, old_list_weights, rank_names, top_k_weights
from .runner import RunConfig, RunOutput, emit_series, run_backtest

__version__ = "0.1.0"

__all__ = [
    "ConstituentList",
    "GenFnEval",
    "GenFnSpec",
    "LeakageLedger",
    "MarketDay",
    "MarketPanel",
    "RunConfig",
    "RunOutput",
    "StrategyRun",
    "StrategyState",
    "SubMarketWeights",
    "SynthConfig",
    "apply_leakage",
    "atlas_config",
    "calibrate_normalization",
    "emit_series",
    "evaluate",
    "init_state",
    "load_panel",
    "old_list_weights",
    "rank_names",
    "run_backtest",
    "run_strategy",
    "step",
    "synthesize_panel",
    "top_k_weights",
]
