"""Data ingestion, model persistence and the train / forecast / backtest /
grid-search workflows behind the command line.

All report files are written deterministically: JSON with sorted keys and
round-trip float formatting, CSV with a single header row and ``.`` as the
decimal separator.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from .errors import DataError, EmptyFile, NonPositivePrice, ParseError, SeriesTooShort
from .evaluation import PAPER_WINDOW_GRID, BaselineForecaster, BaselineKind, grid_search_window
from .fis import ParamSet, RuleBase, wm_train
from .forecaster import (
    BacktestResult,
    ForecastConfig,
    ForecastPath,
    GarchFisForecaster,
    rolling_backtest,
    split_point,
)
from .garch import fit_garch
from .timeseries import NormalizationStats, PriceSeries, compute_returns, fit_normalization, zscore

__all__ = [
    "DatasetSpec",
    "IngestReport",
    "RunConfig",
    "TrainedModel",
    "ingest",
    "ingest_with_report",
    "read_config_file",
    "run_train",
    "run_forecast",
    "run_backtest",
    "run_gridsearch",
    "MODEL_FORMAT",
]

log = logging.getLogger(__name__)

MODEL_FORMAT = "garch-fis-model/1"


@dataclass(frozen=True)
class DatasetSpec:
    path: str | Path
    date_col: str = "date"
    close_col: str = "close"
    delimiter: str = ","
    decimal: str = "."


@dataclass(frozen=True)
class IngestReport:
    rows_read: int
    rows_used: int
    rows_dropped: int
    dropped_lines: tuple[int, ...] = ()


@dataclass(frozen=True)
class RunConfig:
    window: int = 10
    split: float = 0.8
    horizon: int = 20
    normalize: bool = False
    garch_fallback: str = "expanding"
    vol_scaling: str = "eq6"
    seed: int = 0
    close_col: str = "close"
    date_col: str = "date"
    delimiter: str = ","
    decimal: str = "."

    def __post_init__(self) -> None:
        if not 0 < self.split < 1:
            raise ValueError(f"split must lie in (0, 1), got {self.split}")
        self.forecast_config()  # validates the remaining fields

    def forecast_config(self) -> ForecastConfig:
        return ForecastConfig(
            window_length=self.window,
            horizon=self.horizon,
            garch_fallback=self.garch_fallback,
            vol_scaling=self.vol_scaling,
            normalize=self.normalize,
            seed=self.seed,
        )

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> RunConfig:
        """Build from string or typed values; keys may use ``-`` or ``_``."""
        types = {f.name: f.type for f in fields(cls)}
        kwargs: dict[str, Any] = {}
        for key, value in data.items():
            name = key.replace("-", "_")
            if name not in types:
                raise ValueError(f"unknown configuration key {key!r}")
            kwargs[name] = _coerce(types[name], value)
        return cls(**kwargs)


def _coerce(type_name: Any, value: Any) -> Any:
    kind = str(type_name)
    if kind in ("bool", "<class 'bool'>"):
        if isinstance(value, bool):
            return value
        text = str(value).strip().lower()
        if text in ("1", "true", "yes", "on"):
            return True
        if text in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {value!r}")
    if kind in ("int", "<class 'int'>"):
        return int(value)
    if kind in ("float", "<class 'float'>"):
        return float(value)
    return str(value)


def read_config_file(path: str | Path) -> dict[str, str]:
    """Parse a flat ``key=value`` file; ``#`` starts a comment."""
    out: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        out[key.lstrip("-")] = value
    return out


# -- ingestion ----------------------------------------------------------------


def _parse_number(text: str, decimal: str) -> float:
    t = text.strip()
    if decimal != ".":
        t = t.replace(".", "").replace(decimal, ".")
    return float(t)


def ingest_with_report(spec: DatasetSpec) -> tuple[PriceSeries, IngestReport]:
    """Read a delimited file into a gapless :class:`PriceSeries`.

    Rows keep file order. Blank lines are dropped and reported; every other
    row must carry a finite, strictly positive close. Data rows are numbered
    from 1, excluding the header.
    """
    path = Path(spec.path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh, delimiter=spec.delimiter)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise EmptyFile(f"{path} is empty") from None
        if spec.close_col not in header:
            raise ParseError(f"column {spec.close_col!r} not found in header {header}", column=spec.close_col)
        ci = header.index(spec.close_col)
        di = header.index(spec.date_col) if spec.date_col in header else None

        values: list[float] = []
        dates: list[str] = []
        dropped: list[int] = []
        row_no = 0
        for line in reader:
            row_no += 1
            if not line or all(not cell.strip() for cell in line):
                dropped.append(row_no)
                continue
            if ci >= len(line):
                raise ParseError(f"row {row_no}: missing column {spec.close_col!r}", row_no, spec.close_col)
            cell = line[ci]
            try:
                v = _parse_number(cell, spec.decimal)
            except ValueError:
                raise ParseError(
                    f"row {row_no}, column {spec.close_col!r}: cannot parse {cell!r} as a number",
                    row_no,
                    spec.close_col,
                ) from None
            if not math.isfinite(v):
                raise ParseError(f"row {row_no}, column {spec.close_col!r}: non-finite value {cell!r}", row_no, spec.close_col)
            if v <= 0:
                raise NonPositivePrice(f"row {row_no}, column {spec.close_col!r}: price {cell.strip()} is not > 0")
            values.append(v)
            dates.append(line[di].strip() if di is not None and di < len(line) else str(len(values) - 1))
    if not values:
        raise EmptyFile(f"{path} contains no data rows")
    report = IngestReport(row_no, len(values), len(dropped), tuple(dropped))
    log.info("ingested %s: %d rows used, %d dropped", path, report.rows_used, report.rows_dropped)
    return PriceSeries(np.array(values), 0, tuple(dates)), report


def ingest(spec: DatasetSpec) -> PriceSeries:
    return ingest_with_report(spec)[0]


# -- model ----------------------------------------------------------------------


@dataclass(frozen=True)
class TrainedModel:
    rules: RuleBase
    theta_last: ParamSet
    config: RunConfig
    train_size: int
    stats: NormalizationStats | None = None
    garch: dict | None = None

    def forecaster(self) -> GarchFisForecaster:
        return GarchFisForecaster(self.rules, self.config.forecast_config(), self.stats)

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "config": self.config.to_dict(),
            "train_size": self.train_size,
            "normalization": None if self.stats is None else self.stats.to_dict(),
            "garch": self.garch,
            "rule_base": self.rules.to_dict(),
            "theta_last": self.theta_last.to_dict(),
        }

    def to_json(self) -> str:
        return _dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: Mapping) -> TrainedModel:
        if data.get("format") != MODEL_FORMAT:
            raise DataError(f"unsupported model format {data.get('format')!r}")
        stats = data.get("normalization")
        return cls(
            rules=RuleBase.from_dict(data["rule_base"]),
            theta_last=ParamSet.from_dict(data["theta_last"]),
            config=RunConfig.from_mapping(data["config"]),
            train_size=int(data["train_size"]),
            stats=None if stats is None else NormalizationStats.from_dict(stats),
            garch=data.get("garch"),
        )

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_json())
        return path

    @classmethod
    def load(cls, path: str | Path) -> TrainedModel:
        return cls.from_dict(json.loads(Path(path).read_text()))


def _dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def _values(prices: PriceSeries | np.ndarray) -> np.ndarray:
    return prices.values if isinstance(prices, PriceSeries) else np.asarray(prices, dtype=np.float64)


def run_train(config: RunConfig, prices: PriceSeries | np.ndarray, model_path: str | Path | None = None) -> TrainedModel:
    """Train on the leading ``config.split`` fraction of ``prices``."""
    raw = _values(prices)
    cut = split_point(raw.size, config.split)
    train = raw[:cut]
    if train.size < config.window + 1:
        raise SeriesTooShort(f"training partition has {train.size} rows, need >= W + 1 = {config.window + 1}")
    stats = fit_normalization(train) if config.normalize else None
    series = zscore(train, stats) if stats is not None else train
    rules, theta_last = wm_train(series, config.window, 1)
    try:
        garch = fit_garch(compute_returns(train), seed=config.seed).to_dict()
    except (ArithmeticError, ValueError) as exc:
        log.warning("GARCH fit on the training partition failed: %s", exc)
        garch = None
    model = TrainedModel(rules, theta_last, config, cut, stats, garch)
    if model_path is not None:
        model.save(model_path)
    return model


# -- reports --------------------------------------------------------------------


def _num(v: float) -> str:
    return repr(float(v))


def _write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _write_config(out_dir: Path, config: RunConfig, command: str) -> None:
    (out_dir / "run_config.json").write_text(_dumps({"command": command, "config": config.to_dict()}))


def run_forecast(
    config: RunConfig, prices: PriceSeries | np.ndarray, model: TrainedModel, out_dir: str | Path | None = None
) -> ForecastPath:
    """Forecast ``config.horizon`` steps beyond the last row of ``prices``."""
    raw = _values(prices)
    path = model.forecaster()(raw, config.horizon)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        _write_config(out, config, "forecast")
        rows = [
            [i + 1, raw.size + i, _num(p), _num(v), d.volatility_source, int(d.fis_fired)]
            for i, (p, v, d) in enumerate(zip(path.predictions, path.step_volatility, path.diagnostics))
        ]
        _write_csv(out / "forecast.csv", ["step", "index", "predicted", "sigma_hat", "volatility_source", "fis_fired"], rows)
    return path


def run_backtest(
    config: RunConfig,
    prices: PriceSeries | np.ndarray,
    model: TrainedModel | None = None,
    out_dir: str | Path | None = None,
    *,
    forecaster: Callable[[np.ndarray, int], Any] | None = None,
    max_origins: int | None = None,
) -> dict[str, BacktestResult]:
    """Backtest GARCH-FIS and both baselines on the test partition.

    Writes ``metrics.json``, ``mae_by_step.csv`` and ``forecasts.csv`` when
    ``out_dir`` is given. ``forecaster`` overrides the GARCH-FIS model.
    """
    raw = _values(prices)
    if forecaster is None:
        model = model or run_train(config, raw)
        forecaster = model.forecaster()
    W, n = config.window, config.horizon
    results = {
        "garch_fis": rolling_backtest(raw, config.split, W, n, config.forecast_config(), forecaster=forecaster, max_origins=max_origins),
        "persistence": rolling_backtest(
            raw, config.split, W, n, forecaster=BaselineForecaster(BaselineKind.PERSISTENCE, W), max_origins=max_origins
        ),
        "moving_average": rolling_backtest(
            raw, config.split, W, n, forecaster=BaselineForecaster(BaselineKind.MOVING_AVERAGE, W), max_origins=max_origins
        ),
    }
    if out_dir is not None:
        _write_backtest(Path(out_dir), config, prices, results)
    return results


def _diagnostic_summary(result: BacktestResult) -> dict[str, Any]:
    diags = [d for p in result.paths for d in p.diagnostics]
    if not diags:
        return {}
    sources: dict[str, int] = {}
    for d in diags:
        sources[d.volatility_source] = sources.get(d.volatility_source, 0) + 1
    return {
        "steps": len(diags),
        "fis_fired_fraction": sum(d.fis_fired for d in diags) / len(diags),
        "width_fallback_fraction": sum(d.width_fallback for d in diags) / len(diags),
        "volatility_sources": sources,
    }


def _write_backtest(out: Path, config: RunConfig, prices, results: dict[str, BacktestResult]) -> None:
    out.mkdir(parents=True, exist_ok=True)
    main = results["garch_fis"]
    labels = prices.labels if isinstance(prices, PriceSeries) and prices.labels else None
    metrics = {
        "config": config.to_dict(),
        "n_origins": int(main.origins.size),
        "horizon": main.horizon,
        "models": {name: res.metrics.to_dict() for name, res in results.items()},
        "diagnostics": _diagnostic_summary(main),
    }
    (out / "metrics.json").write_text(_dumps(metrics))
    _write_config(out, config, "backtest")

    names = list(results)
    rows = [[i + 1, *(_num(results[k].mae_by_step[i]) for k in names)] for i in range(main.horizon)]
    _write_csv(out / "mae_by_step.csv", ["step", *names], rows)

    rows = []
    for o_idx, origin in enumerate(main.origins):
        origin_label = labels[origin] if labels else str(int(origin))
        for s in range(main.horizon):
            rows.append(
                [
                    int(origin),
                    origin_label,
                    s + 1,
                    _num(main.predictions[o_idx, s]),
                    _num(main.actuals[o_idx, s]),
                    _num(main.volatility[o_idx, s]),
                ]
            )
    _write_csv(out / "forecasts.csv", ["origin", "origin_date", "step", "predicted", "actual", "sigma_hat"], rows)


def run_gridsearch(
    config: RunConfig,
    prices: PriceSeries | np.ndarray,
    candidates: Sequence[int] = PAPER_WINDOW_GRID,
    out_dir: str | Path | None = None,
    metric: str = "mae",
    *,
    forecaster_factory: Callable[[int, np.ndarray], Any] | None = None,
):
    """Grid search over window lengths using the training partition only."""
    raw = _values(prices)
    train = raw[: split_point(raw.size, config.split)]
    result = grid_search_window(
        train, candidates, config.horizon, metric, config.forecast_config(), forecaster_factory=forecaster_factory
    )
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        _write_config(out, config, "gridsearch")
        payload = {"config": config.to_dict(), "metric": metric, "best_window": result.best_window, "candidates": result.table()}
        (out / "gridsearch.json").write_text(_dumps(payload))
        rows = [[r["window"], _num(r["mae"]), _opt(r["mape"]), _opt(r["r2"]), r["n_samples"]] for r in result.table()]
        _write_csv(out / "gridsearch.csv", ["window", "mae", "mape", "r2", "n_samples"], rows)
    return result


def _opt(v: float | None) -> str:
    return "" if v is None else _num(v)
