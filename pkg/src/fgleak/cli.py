"""``backtest`` command line.

Exit codes: 0 success, 2 config error, 3 data error, 4 numerical error.

Options may also come from a flat ``key = value`` file given with
``--config``; keys are the long option names without dashes
(``k = 100,300``). Command-line flags win over file values.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .errors import ConfigError, DataError, FGLeakError
from .market_data import atlas_config
from .runner import RunConfig, run_backtest

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERICAL = 0, 2, 3, 4

_MODE_ALIASES = {
    "mult": "multiplicative",
    "multiplicative": "multiplicative",
    "add": "additive",
    "additive": "additive",
}


def _k_list(text: str) -> tuple:
    try:
        ks = tuple(int(tok) for tok in text.split(",") if tok.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad k list {text!r}") from None
    if not ks:
        raise argparse.ArgumentTypeError("empty k list")
    return ks


def _modes(text: str) -> tuple:
    out = []
    for tok in text.split(","):
        tok = tok.strip().lower()
        if tok == "both":
            out += ["multiplicative", "additive"]
        elif tok in _MODE_ALIASES:
            out.append(_MODE_ALIASES[tok])
        else:
            raise argparse.ArgumentTypeError(f"unknown mode {tok!r} (use mult, add or both)")
    return tuple(dict.fromkeys(out))


def _seed(text: str) -> int:
    seed = int(text, 0)
    if not 0 <= seed < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return seed


def read_config_file(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, value = (part.strip() for part in line.split("=", 1))
            values[key.lstrip("-").replace("-", "_")] = value
    return values


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="backtest",
        description="Backtest functionally generated top-k strategies and estimate their leakage.",
    )
    p.add_argument("--config", help="flat key = value file with defaults for any option")
    p.add_argument("--data", help="CRSP-shaped CSV with header date,id,cap,ret")
    p.add_argument("--synth-seed", type=_seed, help="use a seeded synthetic rank-based market instead of --data")
    p.add_argument("--synth-d", type=int, default=30, help="synthetic universe size (default 30)")
    p.add_argument("--synth-days", type=int, default=2520, help="synthetic trading days (default 2520)")
    p.add_argument("--k", type=_k_list, help="comma-separated constituent list sizes, e.g. 100,300,500")
    p.add_argument("--mode", type=_modes, default="mult", help="mult, add, both, or a comma list")
    p.add_argument("--genfn", default="entropy", help="entropy or quadratic")
    p.add_argument("--start", help="first date YYYY-MM-DD (default: panel start)")
    p.add_argument("--end", help="last date YYYY-MM-DD (default: panel end)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--jobs", type=int, default=1, help="run (k, mode) pairs on this many threads")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def parse_config(argv=None) -> tuple[RunConfig, argparse.Namespace]:
    parser = build_parser()
    pre, _ = parser.parse_known_args(argv)
    if pre.config:
        try:
            file_values = read_config_file(pre.config)
        except OSError as exc:
            raise ConfigError(f"cannot read config {pre.config}: {exc.strerror}") from exc
        known = {a.dest for a in parser._actions}
        unknown = sorted(set(file_values) - known)
        if unknown:
            raise ConfigError(f"unknown keys in {pre.config}: {unknown}")
        # string defaults go through each option's type converter
        parser.set_defaults(**file_values)
    args = parser.parse_args(argv)

    if (args.data is None) == (args.synth_seed is None):
        raise ConfigError("give exactly one of --data or --synth-seed")
    if args.k is None:
        raise ConfigError("--k is required")
    if args.out is None:
        raise ConfigError("--out is required")
    synth = None
    if args.synth_seed is not None:
        synth = atlas_config(args.synth_d, args.synth_days, args.synth_seed)
    cfg = RunConfig(
        k_values=args.k,
        modes=args.mode,
        genfn=args.genfn,
        data_path=args.data,
        synth=synth,
        start=args.start,
        end=args.end,
        output_dir=args.out,
        jobs=args.jobs,
    )
    return cfg, args


def main(argv=None) -> int:
    try:
        cfg, args = parse_config(argv)
    except ConfigError as exc:
        print(f"backtest: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        out = run_backtest(cfg)
    except ConfigError as exc:
        print(f"backtest: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"backtest: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FGLeakError as exc:
        print(f"backtest: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"backtest: cannot write {cfg.output_dir}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for (k, mode), run in out.runs.items():
        if len(run):
            print(
                f"k={k:<5d} {mode:<14s} V={run.wealth[-1]:.6g} L={run.leakage[-1]:.6g} "
                f"change_days={int(run.list_changed.sum())}"
            )
    print(f"wrote {cfg.output_dir} in {out.wall_time:.2f}s")
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
