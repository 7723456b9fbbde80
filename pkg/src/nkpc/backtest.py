"""Phillips-curve feature construction and the expanding-window horse race.

At every forecast origin the trend, gap and expectations regressors are
re-estimated from data up to that origin only, designs are rebuilt, and
every (model, specification) pair is refit. Direct multi-horizon
forecasting is used for design-based models; AR/VAR/random-walk baselines
forecast recursively.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientHistory, MissingColumn
from .models import DesignMatrix, fit_ar, fit_var, random_walk_forecast
from .models import registry
from .quarters import Dataset, QuarterIndex, Series
from .trendcycle import expected_inflation, output_gap, trend_of

GAP_COLUMN = "output_gap"
EXPECTATION_COLUMN = "expected_inflation"
TREND_COLUMN = "trend_inflation"


@dataclass(frozen=True)
class PhillipsSpec:
    """One of the three feature-set regimes for the inflation equation."""

    kind: str                                  # backward | forward | hybrid
    gap_lags: tuple[int, ...] = (1, 2, 3, 4)
    control_lags: tuple[int, ...] = (0, 1, 2, 3, 4)
    controls: tuple[str, ...] = ("fx_growth", "crude_growth", "rain_dev")

    def __post_init__(self):
        if self.kind not in ("backward", "forward", "hybrid"):
            raise ValueError(f"unknown spec kind {self.kind!r}")

    @property
    def uses_lagged_inflation(self) -> bool:
        return self.kind in ("backward", "hybrid")

    @property
    def uses_expectations(self) -> bool:
        return self.kind in ("forward", "hybrid")


@dataclass(frozen=True)
class ModelConfig:
    """A horse-race entrant: model family plus its hyperparameters."""

    model_id: str
    kind: str                      # ols|ridge|lasso|rf|gbt|ar|var|rw
    params: dict = field(default_factory=dict)
    tune: bool = False
    grid: list | None = None


@dataclass(frozen=True)
class ForecastRecord:
    origin: QuarterIndex
    horizon: int
    model_id: str
    spec_id: str
    prediction: float
    actual: float
    train_n: int
    features: tuple[float, ...] = ()      # forecast-row regressors, for conformal scale models

    @property
    def target(self) -> QuarterIndex:
        return self.origin + self.horizon


@dataclass(frozen=True)
class FailedFit:
    origin: QuarterIndex
    horizon: int
    model_id: str
    spec_id: str
    error: str


@dataclass(frozen=True)
class HorseRaceResult:
    records: tuple[ForecastRecord, ...]
    failures: tuple[FailedFit, ...] = ()


def spec_feature_names(spec: PhillipsSpec, inflation: str = "inflation") -> list[str]:
    names = []
    if spec.uses_lagged_inflation:
        names.append(f"{inflation}.L1")
    if spec.uses_expectations:
        names.append(EXPECTATION_COLUMN)
    names.extend(f"{GAP_COLUMN}.L{k}" for k in spec.gap_lags)
    for c in spec.controls:
        names.extend(f"{c}.L{k}" for k in spec.control_lags)
    return names


def _required_columns(spec: PhillipsSpec, inflation: str) -> list[str]:
    return [inflation, GAP_COLUMN, EXPECTATION_COLUMN, *spec.controls]


def build_design(d: Dataset, spec: PhillipsSpec, horizon: int,
                 inflation: str = "inflation") -> DesignMatrix:
    """Design rows for direct h-step forecasting.

    Row t carries the regressors dated for predicting inflation at t, and
    the target column holds inflation at t + horizon - 1, so all horizons
    share identical regressor rows over their common index.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    for name in _required_columns(spec, inflation):
        d.column(name)

    pi = d.column(inflation)
    pos = {q: i for i, q in enumerate(d.index)}

    def value_at(col: str, t: QuarterIndex):
        i = pos.get(t)
        return None if i is None else float(d.column(col).values[i])

    rows, targets, times = [], [], []
    for t in d.index:
        feats = _feature_row(d, spec, t, pos, inflation, clamp_to=None)
        if feats is None:
            continue
        y = value_at(inflation, t + (horizon - 1))
        if y is None:
            continue
        rows.append(feats)
        targets.append(y)
        times.append(t)
    if not rows:
        raise InsufficientHistory("no complete design rows after lag trimming")
    return DesignMatrix(spec_feature_names(spec, inflation), np.array(rows),
                        np.array(targets), tuple(times))


def _feature_row(d: Dataset, spec: PhillipsSpec, t: QuarterIndex, pos,
                 inflation: str, clamp_to: QuarterIndex | None):
    """Regressor vector dated t, or None if any entry is undefined.

    With clamp_to set (forecast-row construction), entries dated after
    clamp_to fall back to their latest available value instead of failing;
    this is the same no-peek extrapolation rule the expectations column
    uses at the sample boundary.
    """
    def value(col: str, when: QuarterIndex):
        if clamp_to is not None and when > clamp_to:
            when = clamp_to
        i = pos.get(when)
        return None if i is None else float(d.column(col).values[i])

    feats = []
    if spec.uses_lagged_inflation:
        feats.append(value(inflation, t + (-1)))
    if spec.uses_expectations:
        feats.append(value(EXPECTATION_COLUMN, t))
    for k in spec.gap_lags:
        feats.append(value(GAP_COLUMN, t + (-k)))
    for c in spec.controls:
        for k in spec.control_lags:
            feats.append(value(c, t + (-k)))
    if any(v is None for v in feats):
        return None
    return feats


def forecast_row(d: Dataset, spec: PhillipsSpec, origin: QuarterIndex,
                 inflation: str = "inflation") -> np.ndarray:
    """Regressor vector for predicting quarters after `origin`, built from
    data up to `origin` only."""
    pos = {q: i for i, q in enumerate(d.index)}
    feats = _feature_row(d, spec, origin + 1, pos, inflation, clamp_to=origin)
    if feats is None:
        raise InsufficientHistory(f"cannot build forecast row at origin {origin}")
    return np.array(feats)


def augment_with_latents(d: Dataset, inflation: str = "inflation",
                         gdp: str = "gdp", trend_method: str = "UCM",
                         hp_lambda: float = 1600.0) -> Dataset:
    """Attach trend inflation, expectations and the output gap, estimated
    from the dataset as given (callers truncate to the origin first)."""
    decomp = trend_of(d.column(inflation), trend_method, hp_lambda)
    trend = decomp.trend.rename(TREND_COLUMN)
    expect = expected_inflation(trend, EXPECTATION_COLUMN)
    gap = output_gap(d.column(gdp), trend_method, hp_lambda).rename(GAP_COLUMN)
    return d.with_columns(trend, expect, gap)


@dataclass(frozen=True)
class RaceSettings:
    inflation: str = "inflation"
    gdp: str = "gdp"
    trend_method: str = "UCM"
    hp_lambda: float = 1600.0
    var_columns: tuple[str, ...] = ()     # extra series joining inflation in the VAR
    tune_every_origin: bool = True
    threads: int = 1


def _origin_results(d: Dataset, origin: QuarterIndex, specs, models, horizons,
                    settings: RaceSettings, tuned_params: dict) -> tuple[list, list]:
    records: list[ForecastRecord] = []
    failures: list[FailedFit] = []
    data_q = d.slice_upto(origin)
    pi_full = d.column(settings.inflation)
    pos_full = {q: i for i, q in enumerate(d.index)}

    def actual(h):
        i = pos_full.get(origin + h)
        return None if i is None else float(pi_full.values[i])

    try:
        aug = augment_with_latents(data_q, settings.inflation, settings.gdp,
                                   settings.trend_method, settings.hp_lambda)
    except Exception as exc:  # every cell at this origin fails together
        for m in models:
            for s in specs:
                for h in horizons:
                    failures.append(FailedFit(origin, h, m.model_id, _spec_id(m, s), str(exc)))
        return records, failures

    design_models = [m for m in models if m.kind in registry.DESIGN_MODELS]
    recursive_models = [m for m in models if m.kind in registry.RECURSIVE_MODELS]

    for spec in specs:
        if not design_models:
            break
        try:
            xrow = forecast_row(aug, spec, origin, settings.inflation)
        except Exception as exc:
            for m in design_models:
                for h in horizons:
                    failures.append(FailedFit(origin, h, m.model_id, spec.kind, str(exc)))
            continue
        for h in horizons:
            if actual(h) is None:
                continue
            try:
                design = build_design(aug, spec, h, settings.inflation)
            except Exception as exc:
                for m in design_models:
                    failures.append(FailedFit(origin, h, m.model_id, spec.kind, str(exc)))
                continue
            for m in design_models:
                try:
                    params = dict(m.params)
                    if m.tune:
                        key = (m.model_id, spec.kind, h)
                        if settings.tune_every_origin or key not in tuned_params:
                            tuned_params[key] = registry.tune(m.kind, design, m.grid)
                        params.update(tuned_params[key])
                    fitted = registry.fit(m.kind, design, params)
                    pred = float(fitted.predict(xrow[None, :])[0])
                    records.append(ForecastRecord(
                        origin, h, m.model_id, spec.kind, pred, actual(h),
                        design.n, tuple(xrow.tolist())))
                except Exception as exc:
                    failures.append(FailedFit(origin, h, m.model_id, spec.kind, str(exc)))

    pi_q = data_q.column(settings.inflation)
    for m in recursive_models:
        try:
            preds = _recursive_predictions(m, data_q, pi_q, max(horizons), settings)
        except Exception as exc:
            for h in horizons:
                failures.append(FailedFit(origin, h, m.model_id, "baseline", str(exc)))
            continue
        for h in horizons:
            if actual(h) is None:
                continue
            records.append(ForecastRecord(
                origin, h, m.model_id, "baseline", float(preds[h - 1]), actual(h),
                len(pi_q)))
    return records, failures


def _recursive_predictions(m: ModelConfig, data_q: Dataset, pi_q: Series,
                           max_h: int, settings: RaceSettings) -> np.ndarray:
    if m.kind == "rw":
        return np.full(max_h, pi_q.values[-1])
    if m.kind == "ar":
        p = int(m.params.get("p", 1))
        fit = fit_ar(pi_q, p)
        return fit.predict_recursive(pi_q.values, max_h)
    if m.kind == "var":
        names = list(m.params.get("columns", settings.var_columns))
        cols = [pi_q] + [data_q.column(c) for c in names]
        if len(cols) < 2:
            raise MissingColumn("VAR needs at least one companion column")
        p = int(m.params.get("p", 1))
        fit = fit_var(cols, p)
        path = fit.predict_recursive(np.column_stack([s.values for s in cols]), max_h)
        return path[:, 0]
    raise ValueError(f"unknown recursive model {m.kind!r}")


def _spec_id(m: ModelConfig, spec: PhillipsSpec) -> str:
    return "baseline" if m.kind in registry.RECURSIVE_MODELS else spec.kind


def horse_race(d: Dataset, specs: list[PhillipsSpec], models: list[ModelConfig],
               horizons: list[int], test_quarters: int,
               settings: RaceSettings | None = None) -> HorseRaceResult:
    """Expanding-window pseudo out-of-sample ledger over all cells.

    Origins run over the last `test_quarters` quarters; origin q forecasts
    q+1 .. q+max(horizon) using data up to q only. Records per
    (model, spec, horizon) number test_quarters - (horizon - 1).
    """
    settings = settings or RaceSettings()
    if test_quarters < 8:
        raise InsufficientHistory("test_quarters must be >= 8")
    last = d.index[-1]
    first_origin = last + (-test_quarters)
    if len(d.slice_upto(first_origin)) < 40:
        raise InsufficientHistory("first training window must have >= 40 rows")
    origins = [first_origin + k for k in range(test_quarters)]

    tuned_params: dict = {}
    if not settings.tune_every_origin:
        # warm the cache on the first window so later origins reuse it
        _origin_results(d, origins[0], specs, models, horizons, settings, tuned_params)

    def run(origin):
        return _origin_results(d, origin, specs, models, horizons, settings,
                               dict(tuned_params) if settings.tune_every_origin else tuned_params)

    if settings.threads > 1:
        with ThreadPoolExecutor(max_workers=settings.threads) as pool:
            chunks = list(pool.map(run, origins))
    else:
        chunks = [run(o) for o in origins]

    records: list[ForecastRecord] = []
    failures: list[FailedFit] = []
    for recs, fails in chunks:
        records.extend(recs)
        failures.extend(fails)
    records.sort(key=lambda r: (r.origin, r.model_id, r.spec_id, r.horizon))
    failures.sort(key=lambda f: (f.origin, f.model_id, f.spec_id, f.horizon))
    return HorseRaceResult(tuple(records), tuple(failures))


# re-exported baseline helper
__all__ = [
    "PhillipsSpec", "ModelConfig", "ForecastRecord", "FailedFit",
    "HorseRaceResult", "RaceSettings", "build_design", "forecast_row",
    "augment_with_latents", "horse_race", "random_walk_forecast",
    "spec_feature_names",
]
