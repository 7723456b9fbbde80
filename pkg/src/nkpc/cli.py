"""Command-line front end: synth, backtest, explain, conformal, report.

Every command reads a TOML run configuration, writes its outputs
atomically into the run directory, and exits 0 on success, 2 on
configuration or data errors, and 1 on internal errors. Failures emit a
machine-readable JSON object on stderr.
"""
from __future__ import annotations

import csv
import functools
import json
import os
import sys
import tempfile
from dataclasses import replace
from pathlib import Path

import click
import numpy as np

from . import comparison, explain as explain_mod, report as report_mod
from .backtest import augment_with_latents, build_design, horse_race
from .config import RunConfig, load_config
from .conformal import conformalize, coverage_report
from .errors import (
    ConfigError,
    DuplicateIndex,
    MissingColumn,
    NkpcError,
    ParseError,
    UnsortedIndex,
)
from .models import registry
from .quarters import load_csv, write_csv
from .synth import synth_dgp

_CONFIG_ERRORS = (ConfigError, MissingColumn, ParseError, DuplicateIndex,
                  UnsortedIndex, FileNotFoundError)


# --- plumbing -----------------------------------------------------------

def _fail(exc: Exception, code: int) -> None:
    payload = {"error": type(exc).__name__, "message": str(exc)}
    click.echo(json.dumps(payload), err=True)
    sys.exit(code)


def _guard(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except click.exceptions.Exit:
            raise
        except _CONFIG_ERRORS as exc:
            _fail(exc, 2)
        except Exception as exc:
            _fail(exc, 1)
    return wrapper


def _common(fn):
    fn = click.option("--config", "config_path", type=click.Path(), default=None,
                      help="TOML run configuration file.")(fn)
    fn = click.option("--out", "out_dir", type=click.Path(), default=None,
                      help="Output directory (overrides run.out).")(fn)
    fn = click.option("--seed", type=int, default=None,
                      help="Seed override for every stochastic component.")(fn)
    fn = click.option("--threads", type=int, default=None,
                      help="Worker threads for the backtest.")(fn)
    fn = click.option("--fast", is_flag=True, default=False,
                      help="Tune hyperparameters once on the first window "
                           "instead of at every origin (non-replicating).")(fn)
    return fn


def _effective(config_path, out_dir, seed, threads) -> RunConfig:
    if config_path is None:
        raise ConfigError("--config is required for this command")
    cfg = load_config(config_path)
    if out_dir is not None:
        cfg = replace(cfg, out=out_dir)
    if seed is not None:
        cfg = replace(cfg, seed=seed)
    if threads is not None:
        cfg = replace(cfg, threads=threads)
    # stochastic model families inherit the run seed unless pinned
    models = []
    for m in cfg.models:
        if m.kind in ("rf", "gbt") and "seed" not in m.params:
            m = replace(m, params={**m.params, "seed": cfg.seed})
        models.append(m)
    return replace(cfg, models=tuple(models))


def _outdir(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _atomic_write(path: Path, writer) -> None:
    """Write via a sibling temp file and rename, so re-runs are atomic."""
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    os.close(fd)
    try:
        writer(tmp)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def _write_text(path: Path, text: str) -> None:
    def writer(tmp):
        with open(tmp, "w", encoding="utf-8") as fh:
            fh.write(text)
    _atomic_write(path, writer)


def _write_rows(path: Path, header: list, rows: list) -> None:
    def writer(tmp):
        with open(tmp, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            w.writerows(rows)
    _atomic_write(path, writer)


def _load_dataset(cfg: RunConfig):
    if cfg.data_path:
        if not os.path.exists(cfg.data_path):
            raise FileNotFoundError(f"data file not found: {cfg.data_path}")
        return load_csv(cfg.data_path)
    return synth_dgp(cfg.synth_seed, cfg.synth_n)


def _num(x: float) -> str:
    return repr(float(x))


# --- commands -----------------------------------------------------------

@click.group()
def main() -> None:
    """Phillips-curve inflation forecasting toolkit."""


@main.command()
@click.option("--seed", type=int, default=42, show_default=True)
@click.option("--n", type=int, default=120, show_default=True,
              help="Number of quarters to simulate.")
@click.option("--out", "out_path", type=click.Path(), default="synth.csv",
              show_default=True)
@_guard
def synth(seed: int, n: int, out_path: str) -> None:
    """Write a seeded synthetic macro dataset as CSV."""
    d = synth_dgp(seed, n)
    path = Path(out_path)
    if path.parent != Path("."):
        path.parent.mkdir(parents=True, exist_ok=True)
    _atomic_write(path, lambda tmp: write_csv(d, tmp))
    click.echo(f"wrote {path} ({len(d)} quarters, seed {seed})")


@main.command()
@_common
@_guard
def backtest(config_path, out_dir, seed, threads, fast) -> None:
    """Run the expanding-window horse race and write ledger, metric
    tables and formal comparison reports."""
    cfg = _effective(config_path, out_dir, seed, threads)
    out = _outdir(cfg)
    d = _load_dataset(cfg)
    settings = cfg.race_settings(fast=fast)
    result = horse_race(d, list(cfg.specs), list(cfg.models),
                        list(cfg.horizons), cfg.test_quarters, settings)

    _atomic_write(out / "ledger.csv",
                  lambda tmp: report_mod.write_ledger_csv(result.records, tmp))
    _write_text(out / "ledger.json", report_mod.ledger_to_json(result.records))
    _write_text(out / "failures.json", json.dumps(
        [{"origin": str(f.origin), "horizon": f.horizon, "model": f.model_id,
          "spec": f.spec_id, "error": f.error} for f in result.failures],
        indent=2))

    reports = report_mod.score_ledger(result.records)
    _atomic_write(out / "metrics.csv",
                  lambda tmp: report_mod.write_metric_csv(reports, tmp))
    _write_text(out / "metrics.json", report_mod.reports_to_json(reports))

    _write_text(out / "mcb.json", json.dumps(_mcb_report(reports, cfg), indent=2))
    gr_summary, gr_rows = _gr_reports(result.records, cfg)
    _write_text(out / "gr.json", json.dumps(gr_summary, indent=2))
    _write_rows(out / "gr_rolling.csv",
                ["model", "spec", "horizon", "t", "stat", "critical_value"], gr_rows)

    click.echo(f"backtest complete: {len(result.records)} records, "
               f"{len(result.failures)} failed cells -> {out}")


def _mcb_report(reports, cfg: RunConfig) -> dict:
    """MCB over rows = (spec, horizon) cells, columns = models; recursive
    baselines contribute their single 'baseline' cell to every spec row."""
    by_cell = {(r.model_id, r.spec_id, r.horizon): r.rmse for r in reports}
    model_ids = [m.model_id for m in cfg.models]
    baseline_ids = {m.model_id for m in cfg.models
                    if m.kind in registry.RECURSIVE_MODELS}
    table: dict[str, list[float]] = {m: [] for m in model_ids}
    rows = []
    for spec in cfg.specs:
        for h in cfg.horizons:
            cell = {}
            for m in model_ids:
                key = (m, "baseline" if m in baseline_ids else spec.kind, h)
                if key in by_cell:
                    cell[m] = by_cell[key]
            if len(cell) == len(model_ids):
                rows.append(f"{spec.kind}/h{h}")
                for m in model_ids:
                    table[m].append(cell[m])
    if len(model_ids) < 2 or len(rows) < 2:
        return {"skipped": "need at least 2 models and 2 complete rows"}
    res = comparison.mcb_test(table, cfg.comparison.mcb_alpha)
    return {"rows": rows, "mean_ranks": res.mean_ranks,
            "critical_distance": res.critical_distance, "best": res.best,
            "alpha": res.alpha, "indistinguishable": list(res.indistinguishable),
            "ties_flagged": res.ties_flagged}


def _gr_reports(records, cfg: RunConfig):
    """Rolling fluctuation test of each model against the configured
    baseline at one horizon, on squared loss."""
    comp = cfg.comparison
    table = None
    if comp.gr_critical_values:
        with open(comp.gr_critical_values, encoding="utf-8") as fh:
            table = json.load(fh)
    groups = report_mod.group_records(records)
    base_key = next((k for k in groups
                     if k[0] == comp.gr_baseline and k[2] == comp.gr_horizon), None)
    if base_key is None:
        return {"skipped": f"baseline {comp.gr_baseline!r} not in ledger "
                           f"at horizon {comp.gr_horizon}"}, []
    base = {r.target: r for r in groups[base_key]}
    summary, rows = [], []
    for (model_id, spec_id, h), recs in sorted(groups.items()):
        if (model_id, spec_id, h) == base_key or h != comp.gr_horizon:
            continue
        paired = [(r, base[r.target]) for r in recs if r.target in base]
        if len(paired) < 8:
            continue
        loss_a = [(r.actual - r.prediction) ** 2 for r, _ in paired]
        loss_b = [(b.actual - b.prediction) ** 2 for _, b in paired]
        idx = [str(r.target) for r, _ in paired]
        try:
            res = comparison.gr_fluctuation_test(
                loss_a, loss_b, comp.gr_mu, comp.gr_alpha, idx, table)
        except NkpcError as exc:
            summary.append({"model": model_id, "spec": spec_id, "horizon": h,
                            "skipped": str(exc)})
            continue
        summary.append({
            "model": model_id, "spec": spec_id, "horizon": h,
            "baseline": comp.gr_baseline, "mu": comp.gr_mu,
            "window_size": res.window_size,
            "critical_value": res.critical_value,
            "max_abs_stat": float(np.max(np.abs(res.rolling_stats))),
            "rejections": list(res.rejections)})
        rows.extend([model_id, spec_id, h, t, _num(s), _num(res.critical_value)]
                    for t, s in zip(res.stat_index, res.rolling_stats))
    return {"baseline": comp.gr_baseline, "horizon": comp.gr_horizon,
            "loss": "squared", "pairs": summary}, rows


@main.command(name="explain")
@_common
@_guard
def explain_cmd(config_path, out_dir, seed, threads, fast) -> None:
    """Fit the selected model on the full sample and write permutation
    importance, PDP/ICE grids and Shapley attribution tables."""
    cfg = _effective(config_path, out_dir, seed, threads)
    out = _outdir(cfg)
    ecfg = cfg.explain
    model = next((m for m in cfg.models if m.model_id == ecfg.model), None)
    if model is None:
        raise ConfigError(f"explain.model {ecfg.model!r} is not a configured model")
    if model.kind in registry.RECURSIVE_MODELS:
        raise ConfigError(f"model kind {model.kind!r} has no feature design to explain")
    spec = next((s for s in cfg.specs if s.kind == ecfg.spec), None)
    if spec is None:
        raise ConfigError(f"explain.spec {ecfg.spec!r} is not a configured spec")

    d = _load_dataset(cfg)
    aug = augment_with_latents(d, cfg.inflation, cfg.gdp,
                               cfg.trend_method, cfg.hp_lambda)
    design = build_design(aug, spec, ecfg.horizon, cfg.inflation)
    params = dict(model.params)
    if model.tune:
        params.update(registry.tune(model.kind, design, model.grid))
    fitted = registry.fit(model.kind, design, params)

    imp = explain_mod.permutation_importance(fitted, design,
                                             ecfg.importance_repeats, cfg.seed)
    _write_rows(out / "importance.csv", ["feature", "importance", "sd"],
                [[nm, _num(m), _num(s)] for nm, (m, s) in imp.items()])

    pdp_features = ecfg.pdp_features or tuple(design.feature_names)
    pdp_rows, ice_rows = [], []
    for feat in pdp_features:
        curve = explain_mod.pdp(fitted, design, feat, ecfg.grid_resolution)
        grid = curve.grid[0]
        pdp_rows.extend([feat, _num(g), _num(v)]
                        for g, v in zip(grid, curve.mean_response))
        for i in range(curve.ice.shape[0]):
            ice_rows.extend([feat, i, _num(g), _num(v)]
                            for g, v in zip(grid, curve.ice[i]))
    _write_rows(out / "pdp.csv", ["feature", "grid", "mean_response"], pdp_rows)
    _write_rows(out / "ice.csv", ["feature", "row", "grid", "response"], ice_rows)

    pdp2_rows = []
    for f1, f2 in ecfg.pdp2_pairs:
        curve = explain_mod.pdp2(fitted, design, f1, f2, max(2, ecfg.grid_resolution // 2))
        g1, g2 = curve.grid
        for a, ga in enumerate(g1):
            pdp2_rows.extend([f1, f2, _num(ga), _num(gb), _num(curve.mean_response[a, b])]
                             for b, gb in enumerate(g2))
    _write_rows(out / "pdp2.csv",
                ["feature_1", "feature_2", "grid_1", "grid_2", "mean_response"],
                pdp2_rows)

    background = explain_mod.background_sample(design.rows, ecfg.background_cap,
                                               cfg.seed)
    method = ("exact" if ecfg.method in ("exact", "both")
              and design.p <= explain_mod.EXACT_FEATURE_LIMIT else "sampled")
    attrs = explain_mod.attribute_all(fitted, design, method, ecfg.samples,
                                      cfg.seed, background)
    attr_rows = []
    for a in attrs:
        for nm, phi in a.phi.items():
            attr_rows.append([a.row_id, nm, _num(phi),
                              _num(a.stderr.get(nm, 0.0)),
                              _num(a.base_value), _num(a.prediction), a.method])
    _write_rows(out / "attributions.csv",
                ["row", "feature", "phi", "stderr", "base_value", "prediction",
                 "method"], attr_rows)

    if ecfg.method == "both":
        sampled = explain_mod.attribute_all(fitted, design, "sampled",
                                            ecfg.samples, cfg.seed, background)
        agree_rows = []
        for a, s in zip(attrs, sampled):
            for nm in a.phi:
                se = s.stderr[nm]
                gap = abs(a.phi[nm] - s.phi[nm])
                ok = se > 0 and gap <= 3.0 * se
                agree_rows.append([a.row_id, nm, _num(a.phi[nm]), _num(s.phi[nm]),
                                   _num(se), int(ok)])
        _write_rows(out / "agreement.csv",
                    ["row", "feature", "phi_exact", "phi_sampled", "stderr",
                     "within_3se"], agree_rows)

    reg = explain_mod.shapley_regression(design.target, attrs, design)
    reg_rows = [[nm, _num(reg.beta_s[nm]), _num(reg.p_one_sided[nm]),
                 reg.stars[nm], _num(reg.gamma[nm])] for nm in reg.beta_s]
    reg_rows.append(["intercept", _num(reg.intercept), "", "",
                     _num(reg.gamma["intercept"])])
    _write_rows(out / "shapley_regression.csv",
                ["feature", "beta_s", "p_one_sided", "stars", "gamma"], reg_rows)

    summary = explain_mod.shapley_summary(attrs, design, ecfg.top)
    _write_text(out / "shapley_summary.json", json.dumps(summary, indent=2))
    click.echo(f"explain complete: {model.model_id}/{spec.kind}/h{ecfg.horizon} -> {out}")


@main.command()
@_common
@_guard
def conformal(config_path, out_dir, seed, threads, fast) -> None:
    """Wrap conformal intervals around a completed backtest ledger."""
    cfg = _effective(config_path, out_dir, seed, threads)
    out = _outdir(cfg)
    ledger_path = out / "ledger.json"
    if not ledger_path.exists():
        raise ConfigError(f"{ledger_path} not found; run `nkpc backtest` first")
    records = report_mod.ledger_from_json(ledger_path.read_text(encoding="utf-8"))
    groups = report_mod.group_records(records)
    wanted = set(tuple(s) for s in cfg.conformal_slices)

    interval_rows, summaries = [], []
    for key, recs in sorted(groups.items()):
        model_id, spec_id, h = key
        if wanted and (model_id, spec_id, h) not in wanted:
            continue
        recs = sorted(recs, key=lambda r: r.origin)
        intervals = conformalize(recs, cfg.conformal)
        actuals = [r.actual for r in recs]
        for iv, a in zip(intervals, actuals):
            interval_rows.append([model_id, spec_id, h, str(iv.t),
                                  _num(iv.center), _num(iv.lower), _num(iv.upper),
                                  _num(iv.quantile), _num(iv.scale),
                                  int(iv.covers(a))])
        rep = coverage_report(intervals, actuals)
        summaries.append({"model": model_id, "spec": spec_id, "horizon": h, **rep})
    if not summaries:
        raise ConfigError("conformal.slices matched no ledger slice")
    _write_rows(out / "intervals.csv",
                ["model", "spec", "horizon", "t", "center", "lower", "upper",
                 "quantile", "scale", "covered"], interval_rows)
    _write_text(out / "conformal_summary.json", json.dumps(
        {"kappa": cfg.conformal.kappa, "alpha": cfg.conformal.alpha,
         "uncertainty": cfg.conformal.uncertainty, "slices": summaries}, indent=2))
    click.echo(f"conformal complete: {len(summaries)} slices -> {out}")


@main.command()
@_common
@_guard
def report(config_path, out_dir, seed, threads, fast) -> None:
    """Aggregate a run directory into one summary plus plot-ready CSVs."""
    cfg = _effective(config_path, out_dir, seed, threads)
    out = _outdir(cfg)
    warnings = []

    records = []
    ledger_path = out / "ledger.json"
    if ledger_path.exists():
        records = report_mod.ledger_from_json(ledger_path.read_text(encoding="utf-8"))
    else:
        warnings.append("ledger.json missing; run `nkpc backtest` first")
    groups = report_mod.group_records(records)

    reports = {(r.model_id, r.spec_id, r.horizon): r
               for r in report_mod.score_ledger(records)} if records else {}
    baseline_ids = {m.model_id for m in cfg.models
                    if m.kind in registry.RECURSIVE_MODELS}
    cells = []
    for m in cfg.models:
        spec_ids = (["baseline"] if m.model_id in baseline_ids
                    else [s.kind for s in cfg.specs])
        for spec_id in spec_ids:
            for h in cfg.horizons:
                key = (m.model_id, spec_id, h)
                if key in reports:
                    r = reports[key]
                    cells.append({"model": m.model_id, "spec": spec_id,
                                  "horizon": h, "status": "ok", "n": r.n,
                                  "rmse": r.rmse, "mdrae": r.mdrae,
                                  "smape": r.smape, "theil_u": r.theil_u})
                else:
                    cells.append({"model": m.model_id, "spec": spec_id,
                                  "horizon": h, "status": "missing"})
    missing = [c for c in cells if c["status"] == "missing"]
    if missing:
        warnings.append(f"{len(missing)} of {len(cells)} cells missing from ledger")

    fva_rows = [[m, s, h, str(r.target), _num(r.actual), _num(r.prediction)]
                for (m, s, h), recs in sorted(groups.items()) for r in recs]
    _write_rows(out / "plot_forecast_vs_actual.csv",
                ["model", "spec", "horizon", "t", "actual", "prediction"], fva_rows)

    extras = {}
    for name in ("mcb.json", "gr.json", "conformal_summary.json"):
        path = out / name
        if path.exists():
            extras[name.removesuffix(".json")] = json.loads(
                path.read_text(encoding="utf-8"))
        else:
            warnings.append(f"{name} missing")

    beeswarm_path = out / "shapley_summary.json"
    if beeswarm_path.exists():
        rows = [[e["feature"], p["row"], _num(p["phi"]), _num(p["value"])]
                for e in json.loads(beeswarm_path.read_text(encoding="utf-8"))
                for p in e["points"]]
        _write_rows(out / "plot_beeswarm.csv",
                    ["feature", "row", "phi", "value"], rows)
    else:
        warnings.append("shapley_summary.json missing; run `nkpc explain` for beeswarm data")

    intervals_path = out / "intervals.csv"
    if intervals_path.exists():
        with open(intervals_path, encoding="utf-8", newline="") as fh:
            band_rows = list(csv.reader(fh))[1:]
        _write_rows(out / "plot_interval_bands.csv",
                    ["model", "spec", "horizon", "t", "center", "lower", "upper"],
                    [[r[0], r[1], r[2], r[3], r[4], r[5], r[6]] for r in band_rows])
    else:
        warnings.append("intervals.csv missing; run `nkpc conformal` for interval bands")

    summary = {"cells": cells, "warnings": warnings, **extras}
    _write_text(out / "summary.json", json.dumps(summary, indent=2))

    lines = ["run summary", "==========="]
    for c in cells:
        if c["status"] == "ok":
            lines.append(f"{c['model']:>10s} {c['spec']:>9s} h{c['horizon']}  "
                         f"n={c['n']:>2d}  rmse={c['rmse']:.4f}  "
                         f"mdrae={c['mdrae']:.4f}  smape={c['smape']:.3f}  "
                         f"theil_u={c['theil_u']:.4f}")
        else:
            lines.append(f"{c['model']:>10s} {c['spec']:>9s} h{c['horizon']}  MISSING")
    for w in warnings:
        lines.append(f"warning: {w}")
    _write_text(out / "summary.txt", "\n".join(lines) + "\n")
    for w in warnings:
        click.echo(f"warning: {w}", err=True)
    click.echo(f"report complete -> {out / 'summary.txt'}")


if __name__ == "__main__":
    main()
