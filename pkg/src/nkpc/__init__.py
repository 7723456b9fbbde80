"""Phillips-curve inflation forecasting toolkit.

Quarterly data handling, trend/cycle decomposition, a model zoo under one
fit/predict contract, expanding-window backtesting, formal forecast
comparison, model explanation and conformal prediction intervals, with a
config-driven ``nkpc`` command-line front end.
"""
from .backtest import (
    ForecastRecord,
    HorseRaceResult,
    ModelConfig,
    PhillipsSpec,
    RaceSettings,
    augment_with_latents,
    build_design,
    forecast_row,
    horse_race,
)
from .comparison import gr_fluctuation_test, mcb_test
from .config import RunConfig, load_config, parse_config
from .conformal import ConformalConfig, conformalize, coverage_report
from .explain import (
    pdp,
    pdp2,
    permutation_importance,
    shapley_exact,
    shapley_regression,
    shapley_sampled,
)
from .metrics import mdrae, rmse, smape, theil_u
from .quarters import Dataset, QuarterIndex, Series, load_csv, write_csv
from .report import score_ledger, split_eval
from .synth import synth_dgp
from .trendcycle import hp_filter, output_gap, ucm_smooth

__version__ = "0.1.0"

__all__ = [
    "ForecastRecord", "HorseRaceResult", "ModelConfig", "PhillipsSpec",
    "RaceSettings", "augment_with_latents", "build_design", "forecast_row",
    "horse_race", "gr_fluctuation_test", "mcb_test", "RunConfig",
    "load_config", "parse_config", "ConformalConfig", "conformalize",
    "coverage_report", "pdp", "pdp2", "permutation_importance",
    "shapley_exact", "shapley_regression", "shapley_sampled", "mdrae",
    "rmse", "smape", "theil_u", "Dataset", "QuarterIndex", "Series",
    "load_csv", "write_csv", "score_ledger", "split_eval", "synth_dgp",
    "hp_filter", "output_gap", "ucm_smooth", "__version__",
]
