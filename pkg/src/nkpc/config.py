"""Run configuration: a sectioned TOML file parsed into a RunConfig.

Unknown keys anywhere in the file are hard errors — a silently ignored
typo in a hyperparameter name is the main operational risk. The same
structure is documented as a JSON schema in ``CONFIG_SCHEMA``.
"""
from __future__ import annotations

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field

from .backtest import ModelConfig, PhillipsSpec, RaceSettings
from .conformal import ConformalConfig
from .errors import ConfigError

_DATA_KEYS = {"path", "synth_seed", "synth_n", "inflation", "gdp"}
_RACE_KEYS = {"specs", "horizons", "test_quarters", "trend_method",
              "hp_lambda", "var_columns"}
_MODEL_KEYS = {"id", "kind", "tune", "params", "grid"}
_CONFORMAL_KEYS = {"kappa", "alpha", "uncertainty", "slices"}
_EXPLAIN_KEYS = {"model", "spec", "horizon", "method", "samples",
                 "background_cap", "top", "grid_resolution",
                 "pdp_features", "pdp2_pairs", "importance_repeats"}
_COMPARISON_KEYS = {"mcb_alpha", "gr_mu", "gr_alpha", "gr_baseline",
                    "gr_horizon", "gr_critical_values"}
_RUN_KEYS = {"seed", "threads", "out"}
_SECTIONS = {"data", "race", "models", "conformal", "explain",
             "comparison", "run"}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "data": {"type": "object", "additionalProperties": False,
                 "properties": {k: {} for k in _DATA_KEYS}},
        "race": {"type": "object", "additionalProperties": False,
                 "properties": {k: {} for k in _RACE_KEYS}},
        "models": {"type": "array", "items": {
            "type": "object", "additionalProperties": False,
            "properties": {k: {} for k in _MODEL_KEYS},
            "required": ["id", "kind"]}},
        "conformal": {"type": "object", "additionalProperties": False,
                      "properties": {k: {} for k in _CONFORMAL_KEYS}},
        "explain": {"type": "object", "additionalProperties": False,
                    "properties": {k: {} for k in _EXPLAIN_KEYS}},
        "comparison": {"type": "object", "additionalProperties": False,
                       "properties": {k: {} for k in _COMPARISON_KEYS}},
        "run": {"type": "object", "additionalProperties": False,
                "properties": {k: {} for k in _RUN_KEYS}},
    },
}

_MODEL_KINDS = ("ols", "ridge", "lasso", "rf", "gbt", "ar", "var", "rw")


@dataclass(frozen=True)
class ExplainConfig:
    model: str = ""
    spec: str = "hybrid"
    horizon: int = 1
    method: str = "exact"                # exact | sampled | both
    samples: int = 1000
    background_cap: int = 200
    top: int = 10
    grid_resolution: int = 10
    pdp_features: tuple[str, ...] = ()
    pdp2_pairs: tuple[tuple[str, str], ...] = ()
    importance_repeats: int = 10


@dataclass(frozen=True)
class ComparisonConfig:
    mcb_alpha: float = 0.05
    gr_mu: float = 0.3
    gr_alpha: float = 0.05
    gr_baseline: str = "rw"
    gr_horizon: int = 1
    gr_critical_values: str = ""         # optional path overriding the bundled table


@dataclass(frozen=True)
class RunConfig:
    data_path: str = ""                  # empty -> synthetic data
    synth_seed: int = 42
    synth_n: int = 120
    inflation: str = "inflation"
    gdp: str = "gdp"
    specs: tuple[PhillipsSpec, ...] = (PhillipsSpec("backward"),
                                       PhillipsSpec("forward"),
                                       PhillipsSpec("hybrid"))
    models: tuple[ModelConfig, ...] = ()
    horizons: tuple[int, ...] = (1, 2, 3, 4)
    test_quarters: int = 24
    trend_method: str = "UCM"
    hp_lambda: float = 1600.0
    var_columns: tuple[str, ...] = ()
    conformal: ConformalConfig = field(default_factory=ConformalConfig)
    conformal_slices: tuple = ()         # (model, spec, horizon) triples; empty -> all
    explain: ExplainConfig = field(default_factory=ExplainConfig)
    comparison: ComparisonConfig = field(default_factory=ComparisonConfig)
    seed: int = 0
    threads: int = 1
    out: str = "out"

    def race_settings(self, threads: int | None = None,
                      fast: bool = False) -> RaceSettings:
        return RaceSettings(
            inflation=self.inflation, gdp=self.gdp,
            trend_method=self.trend_method, hp_lambda=self.hp_lambda,
            var_columns=self.var_columns,
            tune_every_origin=not fast,
            threads=self.threads if threads is None else threads,
        )


def _check_keys(section: str, mapping: dict, allowed: set) -> None:
    unknown = set(mapping) - allowed
    if unknown:
        raise ConfigError(
            f"unknown key(s) in [{section}]: {', '.join(sorted(unknown))}; "
            f"allowed: {', '.join(sorted(allowed))}")


def _parse_models(raw: list) -> tuple[ModelConfig, ...]:
    models = []
    seen = set()
    for i, m in enumerate(raw):
        if not isinstance(m, dict):
            raise ConfigError(f"models[{i}] must be a table")
        _check_keys(f"models[{i}]", m, _MODEL_KEYS)
        for key in ("id", "kind"):
            if key not in m:
                raise ConfigError(f"models[{i}] missing required key {key!r}")
        if m["kind"] not in _MODEL_KINDS:
            raise ConfigError(f"models[{i}]: unknown kind {m['kind']!r}; "
                              f"one of {', '.join(_MODEL_KINDS)}")
        if m["id"] in seen:
            raise ConfigError(f"duplicate model id {m['id']!r}")
        seen.add(m["id"])
        models.append(ModelConfig(m["id"], m["kind"],
                                  dict(m.get("params", {})),
                                  bool(m.get("tune", False)),
                                  m.get("grid")))
    return tuple(models)


def _parse_specs(names: list) -> tuple[PhillipsSpec, ...]:
    specs = []
    for name in names:
        try:
            specs.append(PhillipsSpec(name))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    if not specs:
        raise ConfigError("race.specs must name at least one specification")
    return tuple(specs)


def parse_config(text: str) -> RunConfig:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config is not valid TOML: {exc}") from exc
    _check_keys("<top level>", raw, _SECTIONS)

    data = raw.get("data", {})
    _check_keys("data", data, _DATA_KEYS)
    race = raw.get("race", {})
    _check_keys("race", race, _RACE_KEYS)
    conf = raw.get("conformal", {})
    _check_keys("conformal", conf, _CONFORMAL_KEYS)
    expl = raw.get("explain", {})
    _check_keys("explain", expl, _EXPLAIN_KEYS)
    comp = raw.get("comparison", {})
    _check_keys("comparison", comp, _COMPARISON_KEYS)
    run = raw.get("run", {})
    _check_keys("run", run, _RUN_KEYS)

    defaults = RunConfig()
    models = _parse_models(raw.get("models", []))
    if not models:
        raise ConfigError("at least one [[models]] entry is required")
    specs = (_parse_specs(race["specs"]) if "specs" in race else defaults.specs)

    horizons = tuple(int(h) for h in race.get("horizons", defaults.horizons))
    if not horizons or any(h < 1 for h in horizons):
        raise ConfigError("race.horizons must be nonempty positive integers")

    trend_method = race.get("trend_method", defaults.trend_method)
    if trend_method not in ("UCM", "HP"):
        raise ConfigError(f"race.trend_method must be UCM or HP, got {trend_method!r}")

    try:
        conformal = ConformalConfig(
            kappa=int(conf.get("kappa", 20)),
            alpha=float(conf.get("alpha", 0.1)),
            uncertainty=conf.get("uncertainty", "constant"),
        )
    except ValueError as exc:
        raise ConfigError(f"[conformal]: {exc}") from exc

    explain = ExplainConfig(
        model=expl.get("model", models[0].model_id),
        spec=expl.get("spec", "hybrid"),
        horizon=int(expl.get("horizon", 1)),
        method=expl.get("method", "exact"),
        samples=int(expl.get("samples", 1000)),
        background_cap=int(expl.get("background_cap", 200)),
        top=int(expl.get("top", 10)),
        grid_resolution=int(expl.get("grid_resolution", 10)),
        pdp_features=tuple(expl.get("pdp_features", ())),
        pdp2_pairs=tuple(tuple(p) for p in expl.get("pdp2_pairs", ())),
        importance_repeats=int(expl.get("importance_repeats", 10)),
    )
    if explain.method not in ("exact", "sampled", "both"):
        raise ConfigError(f"explain.method must be exact, sampled or both, "
                          f"got {explain.method!r}")
    for pair in explain.pdp2_pairs:
        if len(pair) != 2:
            raise ConfigError("explain.pdp2_pairs entries must be 2-element lists")

    comparison = ComparisonConfig(
        mcb_alpha=float(comp.get("mcb_alpha", 0.05)),
        gr_mu=float(comp.get("gr_mu", 0.3)),
        gr_alpha=float(comp.get("gr_alpha", 0.05)),
        gr_baseline=comp.get("gr_baseline", "rw"),
        gr_horizon=int(comp.get("gr_horizon", 1)),
        gr_critical_values=comp.get("gr_critical_values", ""),
    )

    return RunConfig(
        data_path=data.get("path", ""),
        synth_seed=int(data.get("synth_seed", defaults.synth_seed)),
        synth_n=int(data.get("synth_n", defaults.synth_n)),
        inflation=data.get("inflation", defaults.inflation),
        gdp=data.get("gdp", defaults.gdp),
        specs=specs,
        models=models,
        horizons=horizons,
        test_quarters=int(race.get("test_quarters", defaults.test_quarters)),
        trend_method=trend_method,
        hp_lambda=float(race.get("hp_lambda", defaults.hp_lambda)),
        var_columns=tuple(race.get("var_columns", ())),
        conformal=conformal,
        conformal_slices=tuple(tuple(s) for s in conf.get("slices", ())),
        explain=explain,
        comparison=comparison,
        seed=int(run.get("seed", defaults.seed)),
        threads=int(run.get("threads", defaults.threads)),
        out=run.get("out", defaults.out),
    )


def load_config(path: str) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return parse_config(text)
