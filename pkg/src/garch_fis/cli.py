"""Command line entry point: ``garch-fis {train,forecast,backtest,gridsearch}``.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.
Settings resolve as command-line flags, then ``--config`` file, then defaults.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import fields

from .errors import DataError, NumericalError
from .evaluation import PAPER_WINDOW_GRID
from .pipeline import (
    DatasetSpec,
    RunConfig,
    TrainedModel,
    ingest,
    read_config_file,
    run_backtest,
    run_forecast,
    run_gridsearch,
    run_train,
)

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4

log = logging.getLogger("garch_fis")


class UsageError(Exception):
    pass


def _common(p: argparse.ArgumentParser) -> None:
    # defaults are None so that unset flags fall through to the config file
    p.add_argument("--data", required=True, help="CSV file with a header row")
    p.add_argument("--config", help="flat key=value file mirroring the flags")
    p.add_argument("--close-col", dest="close_col")
    p.add_argument("--date-col", dest="date_col")
    p.add_argument("--delimiter")
    p.add_argument("--decimal", choices=[".", ","])
    p.add_argument("--window", type=int)
    p.add_argument("--horizon", type=int)
    p.add_argument("--split", type=float)
    p.add_argument("--normalize", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--garch-fallback", dest="garch_fallback", choices=["expanding", "window-std", "strict"])
    p.add_argument("--vol-scaling", dest="vol_scaling", choices=["eq6", "alg3"])
    p.add_argument("--seed", type=int)
    p.add_argument("--model", help="model JSON path (written by train, read by the others)")
    p.add_argument("--out-dir", dest="out_dir", help="directory for report files")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="garch-fis", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("train", "learn the rule base on the training partition and save the model"),
        ("forecast", "recursive forecast beyond the last row of the data"),
        ("backtest", "rolling backtest on the test partition with baselines"),
        ("gridsearch", "select the window length on a validation split of the training data"),
    ]:
        p = sub.add_parser(name, help=help_text)
        _common(p)
        if name == "backtest":
            p.add_argument("--max-origins", dest="max_origins", type=int)
        if name == "gridsearch":
            p.add_argument("--candidates", default=",".join(map(str, PAPER_WINDOW_GRID)))
            p.add_argument("--metric", choices=["mae", "mape", "r2"], default="mae")
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    merged: dict[str, object] = {}
    if args.config:
        merged.update({k.replace("-", "_"): v for k, v in read_config_file(args.config).items()})
    config_keys = {f.name for f in fields(RunConfig)}
    unknown = set(merged) - config_keys - {"data", "model", "out_dir"}
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    for key in config_keys:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    for key in ("model", "out_dir"):
        if getattr(args, key, None) is None and key in merged:
            setattr(args, key, merged[key])
    try:
        return RunConfig.from_mapping({k: v for k, v in merged.items() if k in config_keys})
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _load_model(args: argparse.Namespace, config: RunConfig) -> TrainedModel | None:
    if not args.model:
        return None
    model = TrainedModel.load(args.model)
    for key in ("window", "normalize", "split"):
        if getattr(model.config, key) != getattr(config, key):
            raise UsageError(
                f"model was trained with {key}={getattr(model.config, key)!r} but the run uses {getattr(config, key)!r}"
            )
    return model


def _dispatch(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    log.info("resolved config: %s", json.dumps(config.to_dict(), sort_keys=True))
    prices = ingest(DatasetSpec(args.data, config.date_col, config.close_col, config.delimiter, config.decimal))

    if args.command == "train":
        if not args.model:
            raise UsageError("train requires --model")
        model = run_train(config, prices, args.model)
        print(f"trained {len(model.rules)} rules on {model.train_size} rows -> {args.model}")
    elif args.command == "forecast":
        model = _load_model(args, config) or run_train(config, prices)
        path = run_forecast(config, prices, model, args.out_dir)
        for i, y in enumerate(path.predictions, start=1):
            print(f"{i}\t{float(y)!r}")
    elif args.command == "backtest":
        model = _load_model(args, config)
        results = run_backtest(config, prices, model, args.out_dir, max_origins=args.max_origins)
        for name, res in results.items():
            m = res.metrics
            print(f"{name:15s} MAE={m.mae:.6g} MAPE={m.mape:.6g} R2={m.r2:.6g} N={m.n_samples}")
    elif args.command == "gridsearch":
        try:
            candidates = [int(c) for c in args.candidates.split(",") if c.strip()]
        except ValueError as exc:
            raise UsageError(f"bad --candidates: {exc}") from exc
        result = run_gridsearch(config, prices, candidates, args.out_dir, args.metric)
        for row in result.table():
            mape, r2 = ("n/a" if row[k] is None else f"{row[k]:.6g}" for k in ("mape", "r2"))
            print(f"W={row['window']:<3d} MAE={row['mae']:.6g} MAPE={mape} R2={r2}")
        print(f"best window: {result.best_window}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return _dispatch(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
